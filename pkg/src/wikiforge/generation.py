"""Section-by-section article generation with post-hoc per-sentence citations.

Every outline leaf becomes one prose section: written from its own memory
units, polished, segmented into sentences, and then each sentence is linked
to the most relevant units by the citation finder. Prose never changes after
the citation pass, so disabling citations alters brackets only.

Reference numbers are per source document, 1-based and dense, assigned by
first citation appearance in document order (lead first, then sections).
Rendering follows the plain-text conventions: the lead carries no heading,
headings use one '#' per depth level, and citations appear as "[1,2]" right
after each sentence's terminal punctuation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import ParseFailure, WikiforgeError
from .gateway import ChatRequest, ModelGateway
from .organization import OutlineNode, summarize_cluster
from .store import MemoryStore, MemoryUnit
from .textutil import segment_sentences


@dataclass
class Sentence:
    text: str
    citations: list[str] = field(default_factory=list)  # unit ids
    supported: str | None = None  # entailment cache: "yes" / "no" / None


@dataclass
class ArticleNode:
    heading: str
    depth: int
    sentences: list[Sentence] = field(default_factory=list)
    children: list["ArticleNode"] = field(default_factory=list)


@dataclass
class Reference:
    number: int
    url: str
    doc_id: str


@dataclass
class Article:
    topic: str
    lead: list[Sentence]
    body: list[ArticleNode]
    references: list[Reference] = field(default_factory=list)
    citation_parse_failures: int = 0

    def all_sentences(self) -> list[tuple[str, Sentence]]:
        """(section path, sentence) pairs in document order."""
        out = [("lead", s) for s in self.lead]

        def _walk(node: ArticleNode, path: str):
            here = f"{path}/{node.heading}" if path else node.heading
            for s in node.sentences:
                out.append((here, s))
            for child in node.children:
                _walk(child, here)

        for top in self.body:
            _walk(top, "")
        return out


# ---------------------------------------------------------------------------
# single-section operations
# ---------------------------------------------------------------------------


def _strip_heading_line(text: str, heading: str) -> str:
    lines = text.split("\n")
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        bare = line.strip().lstrip("#").strip()
        if bare.casefold() == heading.strip().casefold():
            rest = lines[i + 1 :]
            while rest and not rest[0].strip():
                rest = rest[1:]
            return "\n".join(rest).strip()
        break
    return text.strip()


def write_section(gateway: ModelGateway, topic: str, heading: str,
                  units: list[MemoryUnit]) -> str:
    """Draft one section from its memory units. A leading line repeating the
    heading is stripped (the prompt forbids it, the code enforces it)."""
    if not units:
        raise WikiforgeError(f"section {heading!r} has no units to write from")
    fact_list = json.dumps([u.text for u in units], ensure_ascii=False)
    completion = gateway.chat(
        ChatRequest(
            "section_writer",
            {"topic": topic, "section_name": heading, "fact_list": fact_list},
        )
    )
    return _strip_heading_line(completion, heading)


def refine_section(gateway: ModelGateway, topic: str, heading: str, draft: str) -> str:
    """Polish a drafted section; an empty completion keeps the draft."""
    if not draft.strip():
        raise WikiforgeError("cannot refine an empty draft")
    completion = gateway.chat(
        ChatRequest("section_refiner", {"topic": topic, "text": draft})
    )
    refined = _strip_heading_line(completion, heading)
    return refined if refined.strip() else draft


def write_lead(gateway: ModelGateway, topic: str,
               first_level_summaries: list[str]) -> str:
    """Lead paragraph drafted from the first-level cluster summaries."""
    if not first_level_summaries:
        raise WikiforgeError("lead needs at least one summary")
    fact_list = json.dumps(list(first_level_summaries), ensure_ascii=False)
    completion = gateway.chat(
        ChatRequest(
            "section_writer",
            {"topic": topic, "section_name": "Lead", "fact_list": fact_list},
        )
    )
    return _strip_heading_line(completion, "Lead")


_FENCE = re.compile(r"^```[a-zA-Z]*\n?|\n?```$")
_BRACKET_GROUP = re.compile(r"\[[^\[\]]*\]")


def parse_index_list(completion: str) -> list[int]:
    """Parse a completion into a list of integer indices (ParseFailure on
    anything else). Accepts surrounding text as long as one [...] group is
    present."""
    cleaned = _FENCE.sub("", completion.strip()).strip()
    candidates = [cleaned]
    match = _BRACKET_GROUP.search(cleaned)
    if match:
        candidates.append(match.group(0))
    for candidate in candidates:
        try:
            data = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if isinstance(data, list) and all(
            isinstance(x, int) and not isinstance(x, bool) for x in data
        ):
            return data
    raise ParseFailure(f"not an index list: {completion[:80]!r}")


def find_citations(gateway: ModelGateway, sentence: str,
                   candidate_units: list[MemoryUnit]) -> list[str]:
    """Ask the citation finder which candidates cover the sentence. Indices
    out of range and duplicates are dropped; an empty list is a valid answer
    (the sentence stays uncited)."""
    if not candidate_units:
        return []
    source_list = json.dumps([u.text for u in candidate_units], ensure_ascii=False)
    completion = gateway.chat(
        ChatRequest("citation_finder", {"claim": sentence, "source_list": source_list})
    )
    indices = parse_index_list(completion)
    seen: set[int] = set()
    ids = []
    for idx in indices:
        if 0 <= idx < len(candidate_units) and idx not in seen:
            seen.add(idx)
            ids.append(candidate_units[idx].id)
    return ids


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def _section_sentences(gateway, topic, heading, units, candidates, cite, failures):
    draft = write_section(gateway, topic, heading, units)
    refined = refine_section(gateway, topic, heading, draft)
    sentences = []
    for text in segment_sentences(refined):
        sentence = Sentence(text=text)
        if cite:
            try:
                sentence.citations = find_citations(gateway, text, candidates)
            except ParseFailure:
                failures.append(1)
        sentences.append(sentence)
    return sentences


def assemble_and_cite(
    outline: OutlineNode,
    store: MemoryStore,
    gateway: ModelGateway,
    doc_urls: dict[str, str],
    cite: bool = True,
) -> Article:
    """Generate the full article for an organized outline.

    Leaf sections are written from their own assigned units, and those same
    units are the only citation candidates for their sentences. The lead is
    written from the root's cluster summaries and cited against the whole
    store. Section failures abort with the node path in the message.
    """
    failures: list[int] = []
    topic = outline.heading

    def _build(node: OutlineNode, path: str) -> ArticleNode:
        art = ArticleNode(heading=node.heading, depth=max(1, node.depth))
        node_path = f"{path}/{node.heading}" if path else node.heading
        if node.children:
            art.children = [_build(c, node_path) for c in node.children]
        else:
            units = [store.get(i) for i in node.assigned_unit_ids]
            units.sort(key=lambda u: u.seq)
            try:
                art.sentences = _section_sentences(
                    gateway, topic, node.heading, units, units, cite, failures
                )
            except WikiforgeError as exc:
                raise WikiforgeError(f"section {node_path!r}: {exc}") from exc
        return art

    if outline.children:
        body = [_build(child, outline.heading) for child in outline.children]
    else:
        # degenerate single-leaf outline: one section titled by the root
        body = [_build(outline, "")]

    all_units = store.units()
    summaries = outline.cluster_summaries or [
        summarize_cluster(gateway, topic, [store.get(i) for i in outline.assigned_unit_ids])
    ]
    lead_text = write_lead(gateway, topic, summaries)
    lead = []
    for text in segment_sentences(lead_text):
        sentence = Sentence(text=text)
        if cite:
            try:
                sentence.citations = find_citations(gateway, text, all_units)
            except ParseFailure:
                failures.append(1)
        lead.append(sentence)

    article = Article(topic=topic, lead=lead, body=body,
                      citation_parse_failures=len(failures))
    _number_references(article, store, doc_urls)
    return article


def _number_references(article: Article, store: MemoryStore,
                       doc_urls: dict[str, str]) -> None:
    """Assign dense 1-based reference numbers to source documents by first
    citation appearance in document order."""
    numbers: dict[str, int] = {}
    references: list[Reference] = []
    for _, sentence in article.all_sentences():
        for unit_id in sentence.citations:
            doc_id = store.get(unit_id).source_doc_id
            if doc_id not in numbers:
                numbers[doc_id] = len(numbers) + 1
                references.append(
                    Reference(number=numbers[doc_id], url=doc_urls.get(doc_id, doc_id),
                              doc_id=doc_id)
                )
    article.references = references


# ---------------------------------------------------------------------------
# rendering and parsing
# ---------------------------------------------------------------------------


@dataclass
class ParsedSection:
    depth: int
    heading: str
    sentences: list[tuple[str, list[int]]] = field(default_factory=list)


@dataclass
class ParsedArticle:
    """Render-level view of an article: sentence texts with reference
    numbers, flattened section list, references."""

    lead: list[tuple[str, list[int]]] = field(default_factory=list)
    sections: list[ParsedSection] = field(default_factory=list)
    references: list[tuple[int, str]] = field(default_factory=list)


def _sentence_chunk(text: str, numbers: list[int]) -> str:
    if not numbers:
        return text
    return f"{text}[{','.join(str(n) for n in sorted(set(numbers)))}]"


def render_parsed(parsed: ParsedArticle) -> str:
    blocks: list[str] = []
    if parsed.lead:
        blocks.append(" ".join(_sentence_chunk(t, ns) for t, ns in parsed.lead))
    for section in parsed.sections:
        blocks.append(f"{'#' * section.depth} {section.heading}")
        if section.sentences:
            blocks.append(
                " ".join(_sentence_chunk(t, ns) for t, ns in section.sentences)
            )
    blocks.append("# References")
    if parsed.references:
        blocks.append("\n".join(f"[{n}] {url}" for n, url in parsed.references))
    return "\n\n".join(blocks) + "\n"


def to_parsed(article: Article, store: MemoryStore) -> ParsedArticle:
    doc_number = {r.doc_id: r.number for r in article.references}

    def _numbers(sentence: Sentence) -> list[int]:
        return sorted(
            {doc_number[store.get(u).source_doc_id] for u in sentence.citations
             if store.get(u).source_doc_id in doc_number}
        )

    parsed = ParsedArticle()
    parsed.lead = [(s.text, _numbers(s)) for s in article.lead]

    def _walk(node: ArticleNode):
        section = ParsedSection(depth=node.depth, heading=node.heading)
        section.sentences = [(s.text, _numbers(s)) for s in node.sentences]
        parsed.sections.append(section)
        for child in node.children:
            _walk(child)

    for top in article.body:
        _walk(top)
    parsed.references = [(r.number, r.url) for r in article.references]
    return parsed


def render(article: Article, store: MemoryStore) -> str:
    """Full plain-text rendering; see module docstring for the conventions."""
    return render_parsed(to_parsed(article, store))


_HEADING_LINE = re.compile(r"^(#+) (.*)$")
_CITE_SPLIT = re.compile(r"\[([0-9][0-9,]*)\]")
_REF_LINE = re.compile(r"^\[(\d+)\] (.*)$")


def _parse_prose(paragraph: str) -> list[tuple[str, list[int]]]:
    out: list[tuple[str, list[int]]] = []
    pieces = _CITE_SPLIT.split(paragraph)
    # pieces alternate: text, numbers, text, numbers, ..., trailing text
    for i in range(0, len(pieces) - 1, 2):
        text, numbers = pieces[i], [int(n) for n in pieces[i + 1].split(",")]
        sentences = segment_sentences(text)
        for s in sentences[:-1]:
            out.append((s, []))
        if sentences:
            out.append((sentences[-1], numbers))
    for s in segment_sentences(pieces[-1]):
        out.append((s, []))
    return out


def parse_rendered(text: str) -> ParsedArticle:
    """Inverse of render_parsed for well-formed rendered articles."""
    parsed = ParsedArticle()
    current: ParsedSection | None = None
    in_references = False
    for block in [b for b in text.split("\n\n") if b.strip()]:
        block = block.strip("\n")
        heading = _HEADING_LINE.match(block)
        if heading and "\n" not in block:
            depth, title = len(heading.group(1)), heading.group(2)
            if depth == 1 and title == "References":
                in_references = True
                current = None
                continue
            current = ParsedSection(depth=depth, heading=title)
            parsed.sections.append(current)
            continue
        if in_references:
            for line in block.splitlines():
                ref = _REF_LINE.match(line.strip())
                if ref:
                    parsed.references.append((int(ref.group(1)), ref.group(2)))
            continue
        sentences = _parse_prose(block)
        if current is None:
            parsed.lead.extend(sentences)
        else:
            current.sentences.extend(sentences)
    return parsed


# ---------------------------------------------------------------------------
# sidecar
# ---------------------------------------------------------------------------


def sidecar_payload(article: Article, store: MemoryStore, doc_urls: dict[str, str],
                    pages_collected: list[str]) -> dict:
    """Structured per-sentence citation record consumed by the evaluator."""
    sentences = []
    for path, sentence in article.all_sentences():
        citations = []
        for unit_id in sentence.citations:
            unit = store.get(unit_id)
            citations.append(
                {
                    "unit_id": unit_id,
                    "unit_text": unit.text,
                    "doc_id": unit.source_doc_id,
                    "url": doc_urls.get(unit.source_doc_id, unit.source_doc_id),
                }
            )
        sentences.append({"section": path, "text": sentence.text, "citations": citations})
    return {
        "topic": article.topic,
        "sentences": sentences,
        "references": [
            {"number": r.number, "doc_id": r.doc_id, "url": r.url}
            for r in article.references
        ],
        "pages_collected": list(pages_collected),
        "citation_parse_failures": article.citation_parse_failures,
    }
