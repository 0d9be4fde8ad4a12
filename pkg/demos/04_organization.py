"""Hierarchical organization: clustering, heading proposal, unit assignment,
and the recursive outline build.

Run from the repository root:  python3 demos/04_organization.py
"""

import numpy as np

from wikiforge.gateway import MockChatBackend, MockEmbedBackend, ModelGateway, cosine
from wikiforge.organization import (
    OrganizeConfig,
    assign_embedding,
    cluster_kmeans,
    dump_tree,
    organize,
)
from wikiforge.store import MemoryStore, MemoryUnit

gateway = ModelGateway(MockChatBackend(), MockEmbedBackend(dimension=128, seed=0))

# K-Means on raw vectors: two obvious groups.
units = [
    MemoryUnit(f"u{i}", f"p{i}", np.array(v, dtype=float), "T", "d", i)
    for i, v in enumerate([(0, 0), (0, 1), (10, 10), (10, 11)])
]
clusters = cluster_kmeans(units, k=2, seed=0)
print("clusters:", clusters.clusters)

# Units go to the heading with the highest cosine similarity; ties break to
# the first heading in outline order, and scaling never changes the answer.
headings = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
vec = np.array([0.9, 0.3])
print("assigned to heading", assign_embedding(vec, headings),
      "| scaled x7 ->", assign_embedding(7 * vec, headings))

# Full organize() on a store with two thematic groups of factoids.
texts = [
    "Kestrel Quarry granite stone built town bridges.",
    "Kestrel Quarry granite stone lined harbor walls.",
    "Kestrel Quarry granite stone paid miner wages.",
    "Kestrel Quarry granite stone filled deep shafts.",
    "Kestrel Quarry granite stone survived river floods.",
    "Kestrel Quarry granite stone rode railway wagons.",
    "Lantern Parade festival lights filled autumn evenings.",
    "Lantern Parade festival lights glow without electricity.",
    "Lantern Parade festival lights guide paper boats.",
    "Lantern Parade festival lights inspire winter songs.",
    "Lantern Parade festival lights honor harvest customs.",
    "Lantern Parade festival lights drew huge crowds.",
]
store = MemoryStore(dimension=128, topic="Stonewick")
for text, vec in zip(texts, gateway.embed(texts)):
    store.save(text, "Stonewick", vec, "d0")

in_group = cosine(*gateway.embed(texts[:2]))
cross = cosine(*gateway.embed([texts[0], texts[-1]]))
print(f"\nin-group cosine {in_group:.2f} vs cross-group {cross:.2f}")

root = organize(store, gateway, OrganizeConfig(recursion_threshold=8, fixed_k=2))
print("\noutline (units live only at leaves, labels become paths):")
print(dump_tree(root, store))
print("\na relabeled unit:", store.units()[0].label)
