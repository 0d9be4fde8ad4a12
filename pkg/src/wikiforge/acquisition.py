"""Dynamic memory construction: queries, webpage fetching, factoid extraction,
and budgeted breadth-first subtopic exploration.

The explorer walks one subtopic level at a time: every (sub)topic is turned
into queries, result pages are fetched and reduced to plain text, factoids
are extracted per window and saved into the store under the root topic label
(the outline stage repartitions labels later). After each level the new units
are summarized and the summaries seed the next level's subtopics, until the
depth budget runs out or a subtopic stops producing enough new units.

Search and fetch are pluggable: live HTTP clients or fixture directories
(query slug -> URL list files, URL -> local file map) for deterministic runs.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path

from .errors import (
    EmptyText,
    FetchFailure,
    InsufficientData,
    ParseFailure,
    SearchFailure,
    WikiforgeError,
)
from .gateway import ChatRequest, ModelGateway
from .store import MemoryStore, normalize_text
from .textutil import slugify


@dataclass
class SourceDocument:
    """One fetched webpage, reduced to plain text."""

    id: str
    url: str
    title: str
    text: str
    fetched_at: float = 0.0
    query: str = ""
    subtopic_depth: int = 0

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "url": self.url,
            "title": self.title,
            "text": self.text,
            "fetched_at": self.fetched_at,
            "query": self.query,
            "subtopic_depth": self.subtopic_depth,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SourceDocument":
        return cls(**data)


@dataclass
class ExplorationBudget:
    """Caps on construction-stage effort. Defaults: 2 queries per topic,
    3 webpages per query, subtopic depth 2."""

    max_queries_per_topic: int = 2
    max_webpages_per_query: int = 3
    max_subtopic_depth: int = 2
    min_new_units_to_continue: int = 3

    def __post_init__(self):
        if min(self.max_queries_per_topic, self.max_webpages_per_query) < 1:
            raise WikiforgeError("query and webpage budgets must be positive")
        if self.max_subtopic_depth < 0 or self.min_new_units_to_continue < 0:
            raise WikiforgeError("depth and unit-threshold budgets must be >= 0")


@dataclass
class ExtractionConfig:
    window_chars: int = 4000
    overlap_chars: int = 200
    fetch_char_cap: int = 20000


# ---------------------------------------------------------------------------
# HTML -> text
# ---------------------------------------------------------------------------

_SKIP_TAGS = {"script", "style", "nav", "noscript", "template", "head", "iframe", "svg"}
_BLOCK_TAGS = {
    "p", "div", "br", "hr", "li", "ul", "ol", "dl", "dt", "dd", "tr", "table",
    "h1", "h2", "h3", "h4", "h5", "h6", "section", "article", "header", "footer",
    "blockquote", "pre", "figure", "figcaption", "aside", "main", "form",
}
_BREAK = "\x00"


class _TextExtractor(HTMLParser):
    """Minimal tag stripper: drops script/style/nav subtrees, turns block
    elements into paragraph breaks. Deliberately not a readability engine."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self.title_parts: list[str] = []
        self._skip_depth = 0
        self._in_title = False

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag == "title":
            self._in_title = True
        elif tag in _BLOCK_TAGS:
            self.parts.append(_BREAK)

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self._skip_depth = max(0, self._skip_depth - 1)
        elif tag == "title":
            self._in_title = False
        elif tag in _BLOCK_TAGS:
            self.parts.append(_BREAK)

    def handle_data(self, data):
        if self._in_title:
            self.title_parts.append(data)
        elif not self._skip_depth:
            self.parts.append(data)


def html_to_text(html: str) -> tuple[str, str]:
    """Reduce HTML to plain text; returns (text, title).

    Scripts, styles and navigation are removed; block elements become
    paragraph breaks; whitespace inside a paragraph is collapsed.
    """
    parser = _TextExtractor()
    parser.feed(html)
    parser.close()
    paragraphs = []
    for chunk in "".join(parser.parts).split(_BREAK):
        chunk = re.sub(r"\s+", " ", chunk).strip()
        if chunk:
            paragraphs.append(chunk)
    title = re.sub(r"\s+", " ", "".join(parser.title_parts)).strip()
    return "\n\n".join(paragraphs), title


# ---------------------------------------------------------------------------
# search backends
# ---------------------------------------------------------------------------


class FixtureSearch:
    """Directory of per-query files. search(q, k) reads `<slug(q)>.txt` and
    returns its first k non-empty lines; an absent file means no results."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def search(self, query: str, k: int) -> list[str]:
        if k < 1:
            raise WikiforgeError("k must be >= 1")
        path = self.directory / f"{slugify(query)}.txt"
        if not path.exists():
            return []
        urls = [l.strip() for l in path.read_text(encoding="utf-8").splitlines()]
        return [u for u in urls if u and not u.startswith("#")][:k]


class HttpSearch:
    """Live search API client: GET endpoint?q=...&k=..., expects a JSON body
    with a `results` list of {url} objects (or a bare list of URL strings)."""

    def __init__(self, endpoint: str, api_key_env: str = "WIKIFORGE_SEARCH_KEY",
                 timeout: float = 30.0, get=None):
        import requests

        self._requests = requests
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.timeout = timeout
        self._get = get or requests.get

    def search(self, query: str, k: int) -> list[str]:
        if k < 1:
            raise WikiforgeError("k must be >= 1")
        import os

        headers = {}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = self._get(
                self.endpoint, params={"q": query, "k": k}, headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            body = response.json()
        except (self._requests.exceptions.RequestException, OSError, ValueError) as exc:
            raise SearchFailure(f"search for {query!r} failed: {exc}") from exc
        rows = body.get("results", body) if isinstance(body, dict) else body
        urls = []
        for row in rows:
            url = row.get("url") if isinstance(row, dict) else row
            if isinstance(url, str) and url:
                urls.append(url)
        return urls[:k]


# ---------------------------------------------------------------------------
# fetch backends
# ---------------------------------------------------------------------------


class FixtureFetcher:
    """URL -> local file map (JSON, paths relative to the map file). `.html`
    files go through the tag stripper; anything else is passed through."""

    def __init__(self, page_map_path, char_cap: int = 20000):
        self.page_map_path = Path(page_map_path)
        with open(self.page_map_path, "r", encoding="utf-8") as fh:
            self.page_map: dict[str, str] = json.load(fh)
        self.char_cap = char_cap

    def fetch(self, url: str) -> SourceDocument:
        rel = self.page_map.get(url)
        if rel is None:
            raise FetchFailure(f"no fixture page for {url}")
        path = self.page_map_path.parent / rel
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise FetchFailure(f"cannot read fixture page {path}: {exc}") from exc
        if path.suffix in (".html", ".htm"):
            text, title = html_to_text(raw)
        else:
            text, title = raw, url
        return SourceDocument(
            id="", url=url, title=title or url, text=text[: self.char_cap], fetched_at=0.0
        )


class HttpFetcher:
    """Live page fetcher; HTML responses are reduced by the tag stripper."""

    def __init__(self, char_cap: int = 20000, timeout: float = 30.0, get=None):
        import requests

        self._requests = requests
        self.char_cap = char_cap
        self.timeout = timeout
        self._get = get or requests.get

    def fetch(self, url: str) -> SourceDocument:
        try:
            response = self._get(url, timeout=self.timeout)
            response.raise_for_status()
        except (self._requests.exceptions.RequestException, OSError) as exc:
            raise FetchFailure(f"cannot fetch {url}: {exc}") from exc
        content_type = response.headers.get("Content-Type", "")
        if "html" in content_type or response.text.lstrip()[:1] == "<":
            text, title = html_to_text(response.text)
        else:
            text, title = response.text, url
        return SourceDocument(
            id="", url=url, title=title or url, text=text[: self.char_cap],
            fetched_at=time.time(),
        )


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------

_FENCE = re.compile(r"^```[a-zA-Z]*\n?|\n?```$")


def parse_string_list(completion: str) -> list[str]:
    """Parse a completion as a JSON list of strings; raises ParseFailure."""
    cleaned = _FENCE.sub("", completion.strip()).strip()
    try:
        data = json.loads(cleaned)
    except json.JSONDecodeError as exc:
        raise ParseFailure(f"not a JSON list: {completion[:80]!r}") from exc
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
        raise ParseFailure(f"not a list of strings: {completion[:80]!r}")
    return data


def _windows(text: str, window_chars: int, overlap_chars: int) -> list[str]:
    if len(text) <= window_chars:
        return [text]
    step = max(1, window_chars - overlap_chars)
    return [text[start : start + window_chars] for start in range(0, len(text), step)]


def extract_unit_texts(
    gateway: ModelGateway,
    topic: str,
    doc: SourceDocument,
    extraction: ExtractionConfig | None = None,
) -> tuple[list[str], int]:
    """Run the fact extractor over the document, windowed when it exceeds the
    per-call character budget. Returns (unit texts, parse failure count);
    windows whose completion does not parse are skipped and counted."""
    if not doc.text:
        raise WikiforgeError(f"document {doc.url} has no text to extract from")
    extraction = extraction or ExtractionConfig()
    texts: list[str] = []
    parse_failures = 0
    for window in _windows(doc.text, extraction.window_chars, extraction.overlap_chars):
        completion = gateway.chat(
            ChatRequest("extract", {"topic": topic, "text": window})
        )
        try:
            texts.extend(parse_string_list(completion))
        except ParseFailure:
            parse_failures += 1
    return texts, parse_failures


# ---------------------------------------------------------------------------
# exploration
# ---------------------------------------------------------------------------


def make_queries(gateway: ModelGateway, topic: str, n: int) -> list[str]:
    """First query is the topic verbatim; the rest come from the query maker.
    Duplicates are removed preserving order."""
    if n < 1:
        raise WikiforgeError("n must be >= 1")
    queries = [topic]
    if n > 1:
        completion = gateway.chat(
            ChatRequest("query_maker", {"topic": topic, "count": str(n - 1)})
        )
        try:
            extra = parse_string_list(completion)
        except ParseFailure:
            extra = [l.strip() for l in completion.splitlines() if l.strip()]
        queries.extend(extra[: n - 1])
    seen: set[str] = set()
    out = []
    for q in queries:
        key = normalize_text(q).casefold()
        if key and key not in seen:
            seen.add(key)
            out.append(q)
    return out


@dataclass
class ConstructionReport:
    """Counts and provenance from one exploration run."""

    topic: str
    queries_issued: int = 0
    pages_fetched: int = 0
    pages_with_units: int = 0
    units_saved: int = 0
    subtopic_rounds: int = 0
    parse_failures: int = 0
    per_depth: list[dict] = field(default_factory=list)
    documents: list[SourceDocument] = field(default_factory=list)
    doc_unit_counts: dict[str, int] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def collected_doc_ids(self) -> list[str]:
        """Fetched pages that yielded at least one stored unit."""
        return [d.id for d in self.documents if self.doc_unit_counts.get(d.id, 0) > 0]

    def document_urls(self) -> dict[str, str]:
        return {d.id: d.url for d in self.documents}

    def to_json(self) -> dict:
        return {
            "topic": self.topic,
            "queries_issued": self.queries_issued,
            "pages_fetched": self.pages_fetched,
            "pages_with_units": self.pages_with_units,
            "units_saved": self.units_saved,
            "subtopic_rounds": self.subtopic_rounds,
            "parse_failures": self.parse_failures,
            "per_depth": self.per_depth,
            "documents": [d.to_json() for d in self.documents],
            "doc_unit_counts": self.doc_unit_counts,
            "failures": self.failures,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConstructionReport":
        docs = [SourceDocument.from_json(d) for d in data.get("documents", [])]
        return cls(
            topic=data["topic"],
            queries_issued=data.get("queries_issued", 0),
            pages_fetched=data.get("pages_fetched", 0),
            pages_with_units=data.get("pages_with_units", 0),
            units_saved=data.get("units_saved", 0),
            subtopic_rounds=data.get("subtopic_rounds", 0),
            parse_failures=data.get("parse_failures", 0),
            per_depth=data.get("per_depth", []),
            documents=docs,
            doc_unit_counts=data.get("doc_unit_counts", {}),
            failures=data.get("failures", []),
        )


_SUMMARY_CHAR_CAP = 4000


def explore(
    gateway: ModelGateway,
    search_backend,
    fetcher,
    topic: str,
    budget: ExplorationBudget,
    store: MemoryStore,
    explore_subtopics: bool = True,
    extraction: ExtractionConfig | None = None,
) -> ConstructionReport:
    """Breadth-first construction of the memory for `topic`.

    Every saved unit is labeled with the root topic (organization assigns
    real section labels later) and carries the id of the page it came from.
    Page-level failures are recorded and skipped; the run fails only when it
    ends with an empty store (InsufficientData).
    """
    if store.topic != topic:
        raise WikiforgeError(f"store topic {store.topic!r} != exploration topic {topic!r}")
    report = ConstructionReport(topic=topic)
    fetched_urls: set[str] = set()
    visited = {normalize_text(topic).casefold()}
    frontier = [topic]

    for depth in range(budget.max_subtopic_depth + 1):
        if not frontier:
            break
        level = {
            "depth": depth,
            "subtopics": list(frontier),
            "queries": 0,
            "pages_fetched": 0,
            "units_saved": 0,
        }
        expandable: list[tuple[str, list[str]]] = []
        for subtopic in frontier:
            new_ids = _collect_for_subtopic(
                gateway, search_backend, fetcher, subtopic, depth, budget, store,
                report, level, fetched_urls, extraction,
            )
            if len(new_ids) >= budget.min_new_units_to_continue:
                expandable.append((subtopic, new_ids))
        report.per_depth.append(level)
        if depth > 0:
            report.subtopic_rounds += 1
        if not explore_subtopics or depth == budget.max_subtopic_depth:
            break
        frontier = _derive_subtopics(gateway, store, expandable, visited)

    if report.units_saved == 0:
        raise InsufficientData(f"no memory units saved for topic {topic!r}")
    return report


def _collect_for_subtopic(
    gateway, search_backend, fetcher, subtopic, depth, budget, store,
    report, level, fetched_urls, extraction,
) -> list[str]:
    new_ids: list[str] = []
    root_label = store.topic
    for query in make_queries(gateway, subtopic, budget.max_queries_per_topic):
        level["queries"] += 1
        report.queries_issued += 1
        try:
            urls = search_backend.search(query, budget.max_webpages_per_query)
        except SearchFailure as exc:
            report.failures.append(f"search {query!r}: {exc}")
            continue
        for url in urls:
            if url in fetched_urls:
                continue
            fetched_urls.add(url)
            try:
                doc = fetcher.fetch(url)
            except FetchFailure as exc:
                report.failures.append(f"fetch {url}: {exc}")
                continue
            doc.id = f"d{len(report.documents):04d}"
            doc.query = query
            doc.subtopic_depth = depth
            report.documents.append(doc)
            report.pages_fetched += 1
            level["pages_fetched"] += 1
            if not doc.text:
                continue
            texts, parse_fails = extract_unit_texts(gateway, subtopic, doc, extraction)
            report.parse_failures += parse_fails
            if not texts:
                continue
            vectors = gateway.embed(texts)
            saved_here = 0
            for text, vec in zip(texts, vectors):
                before = len(store)
                try:
                    unit_id = store.save(text, root_label, vec, doc.id)
                except EmptyText:
                    report.failures.append(f"empty fact from {url}")
                    continue
                if len(store) > before:
                    new_ids.append(unit_id)
                    saved_here += 1
            if saved_here:
                report.units_saved += saved_here
                level["units_saved"] += saved_here
                report.doc_unit_counts[doc.id] = (
                    report.doc_unit_counts.get(doc.id, 0) + saved_here
                )
                if report.doc_unit_counts[doc.id] == saved_here:
                    report.pages_with_units += 1
    return new_ids


def _derive_subtopics(gateway, store, expandable, visited) -> list[str]:
    frontier = []
    for subtopic, new_ids in expandable:
        joined = " ".join(store.get(i).text for i in new_ids)[:_SUMMARY_CHAR_CAP]
        summary = gateway.chat(
            ChatRequest("summarizer", {"topic": subtopic, "text": joined})
        )
        completion = gateway.chat(
            ChatRequest("subtopic_maker", {"topic": subtopic, "summary": summary})
        )
        try:
            subs = parse_string_list(completion)
        except ParseFailure:
            subs = [l.strip() for l in completion.splitlines() if l.strip()]
        for sub in subs:
            key = normalize_text(sub).casefold()
            if key and key not in visited:
                visited.add(key)
                frontier.append(sub)
    return frontier
