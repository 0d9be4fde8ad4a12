"""Memory construction: search, fetch, extract, and budgeted exploration
over the bundled fixture corpus.

Run from the repository root:  python3 demos/03_acquisition.py
"""

from pathlib import Path

from wikiforge.acquisition import (
    ExplorationBudget,
    FixtureFetcher,
    FixtureSearch,
    explore,
    html_to_text,
    make_queries,
)
from wikiforge.gateway import MockChatBackend, MockEmbedBackend, ModelGateway
from wikiforge.store import MemoryStore

CORPUS = Path(__file__).resolve().parent.parent / "fixtures" / "corpus"
TOPIC = "Calder Valley Music Festival"

gateway = ModelGateway(MockChatBackend(), MockEmbedBackend(dimension=64, seed=7))

# The topic itself is always the first query; the rest come from the model.
print("queries:", make_queries(gateway, TOPIC, 2))

# Search and fetch are pluggable; fixtures make runs deterministic.
search = FixtureSearch(CORPUS / "search")
fetcher = FixtureFetcher(CORPUS / "page_map.json")
urls = search.search(TOPIC, 3)
print("search hits:", urls)

doc = fetcher.fetch(urls[0])
print(f"\nfetched {doc.url!r} (title {doc.title!r}):")
print(doc.text[:200], "...")

# The tag stripper drops scripts/styles/nav and turns blocks into paragraphs.
text, _ = html_to_text("<p>A</p><script>x()</script><nav>menu</nav><p>B</p>")
print("\nhtml_to_text('<p>A</p><script>..</script><p>B</p>') ->", repr(text))

# explore() walks subtopic levels breadth-first inside the budget and saves
# every extracted factoid into the store under the root topic label.
store = MemoryStore(dimension=64, topic=TOPIC)
report = explore(gateway, search, fetcher, TOPIC, ExplorationBudget(), store)
print(f"\npages fetched: {report.pages_fetched}, units saved: {report.units_saved}")
print(f"subtopic rounds: {report.subtopic_rounds}")
for level in report.per_depth:
    print(f"  depth {level['depth']}: {level['subtopics']} -> {level['units_saved']} units")
