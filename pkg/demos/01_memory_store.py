"""Memory store basics: save factoids under labels, recall, relabel, persist.

Run from the repository root:  python3 demos/01_memory_store.py
"""

import tempfile
from pathlib import Path

import numpy as np

from wikiforge.store import MemoryStore

# A store is topic-scoped and fixes its embedding dimension up front.
store = MemoryStore(dimension=4, topic="2023 SEA Games")

# save() tags a factoid with a section-heading label and keeps its embedding.
rng = np.random.default_rng(0)
u1 = store.save("Cambodia hosted the 2023 SEA Games.", "History", rng.normal(size=4), "d1")
u2 = store.save("The games ran from May 5 to May 17, 2023.", "History", rng.normal(size=4), "d1")
u3 = store.save("The Morodok Techo National Stadium seats 60,000.", "Venues", rng.normal(size=4), "d2")

print(f"{len(store)} units stored")
print("History ->", [u.text for u in store.recall("History")])

# Saving the same (normalized text, source) again is a no-op: same id back.
again = store.save("  Cambodia hosted  the 2023 SEA Games. ", "History", rng.normal(size=4), "d1")
print("dedup returns the same id:", again == u1, "| store size still", len(store))

# relabel moves a unit between labels; recall follows immediately.
store.relabel(u2, "Venues")
print("after relabel, Venues holds", len(store.recall("Venues")), "units")

# Persistence is a newline-delimited file: a header line, then one unit per
# line with fields in fixed order (id, seq, label, source, text, embedding).
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "games.store"
    store.persist(path)
    print("\nfirst two lines on disk:")
    for line in path.read_text().splitlines()[:2]:
        print(" ", line[:100], "...")
    loaded = MemoryStore.load(path)
    print("roundtrip identical:", loaded.same_as(store))
