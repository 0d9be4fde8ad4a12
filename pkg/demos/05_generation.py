"""Article generation: section writing, sentence segmentation, post-hoc
citations, reference numbering, and rendering.

Run from the repository root:  python3 demos/05_generation.py
"""

from wikiforge.gateway import MockChatBackend, MockEmbedBackend, ModelGateway
from wikiforge.generation import assemble_and_cite, render, sidecar_payload
from wikiforge.organization import OutlineNode
from wikiforge.store import MemoryStore
from wikiforge.textutil import segment_sentences

gateway = ModelGateway(MockChatBackend(), MockEmbedBackend(dimension=32))

# Sentence segmentation is rule-based with an abbreviation exception list.
print(segment_sentences("Dr. Smith arrived at 9. He left by noon."))

# A small organized store: two leaves under the root.
store = MemoryStore(dimension=32, topic="Dockside")
facts = {
    "d1": ["Harbor Mills opened the grain wharf in 1870.",
           "Harbor Mills shipped flour to nine ports."],
    "d2": ["Union Hall hosted the dockers meetings.",
           "Union Hall burned down twice before 1900."],
}
ids = {}
for doc, texts in facts.items():
    for text, vec in zip(texts, gateway.embed(texts)):
        ids.setdefault(doc, []).append(store.save(text, "Dockside", vec, doc))

root = OutlineNode(heading="Dockside", depth=0,
                   cluster_summaries=["the mills", "the hall"])
root.children = [
    OutlineNode(heading="Mills", depth=1, assigned_unit_ids=ids["d1"]),
    OutlineNode(heading="Hall", depth=1, assigned_unit_ids=ids["d2"]),
]

doc_urls = {"d1": "http://example.test/mills", "d2": "http://example.test/hall"}
article = assemble_and_cite(root, store, gateway, doc_urls)

# Reference numbers are per source document, dense, in order of first
# citation; each sentence renders its numbers ascending right after the
# terminal punctuation.
print("\n--- rendered article ---")
print(render(article, store))

# The sidecar carries unit-level citation links for the evaluator.
payload = sidecar_payload(article, store, doc_urls, pages_collected=["d1", "d2"])
first = payload["sentences"][0]
print("--- first sidecar sentence ---")
print(first["text"], "->", [c["unit_id"] for c in first["citations"]])
