"""Automatic metric suite: informativeness counts, entailment-judged citation
quality, reference-based recalls, webpage utilization, and heading-assignment
precision.

Citation metrics follow the sidecar's unit-level links, not the rendered
bracket numbers, so they survive any rendering change. Support judgments run
through the gateway (any backend, including mocks, can judge); no parity with
any particular hosted judge is claimed.

Entity and numeral mentions come from a pluggable recognizer. The built-in
rule-based one is documented below; externally produced mention lists can be
supplied instead for runs that need a real NER system.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import EmptyReference
from .gateway import ChatRequest, ModelGateway
from .generation import ParsedArticle
from .organization import assign_embedding
from .textutil import capitalized_runs, tokenize

# ---------------------------------------------------------------------------
# mention recognition
# ---------------------------------------------------------------------------

_MONTH = (
    "January|February|March|April|May|June|July|August|September|October|November|December"
)
_SCALE = r"(?:thousand|million|billion|trillion)"

# Ordered alternation: a mention is consumed by the first pattern that
# matches at its position, so dates beat currency beats percent beats plain
# numbers, and "$30 million" or "May 5, 2023" each count once.
_NUMERAL = re.compile(
    rf"(?:{_MONTH})\s+\d{{1,2}},\s*\d{{4}}"  # May 5, 2023
    rf"|(?:{_MONTH})\s+\d{{1,2}}\b(?!,\s*\d)"  # May 5
    rf"|\d{{1,2}}\s+(?:{_MONTH})(?:\s+\d{{4}})?"  # 5 May 2023
    rf"|(?:{_MONTH})\s+\d{{4}}"  # May 2023
    rf"|[$€£]\s?\d[\d,]*(?:\.\d+)?(?:\s{_SCALE})?"  # $30 million
    rf"|\d[\d,]*(?:\.\d+)?\s*(?:%|percent\b|per cent\b)"  # 53.1%
    rf"|\d[\d,]*(?:\.\d+)?\s{_SCALE}\b"  # 7,000 athletes -> no; 7 million -> yes
    r"|\d[\d,]*(?:\.\d+)?"  # bare numbers and years
)


def _normalize_mention(mention: str) -> str:
    return re.sub(r"\s+", " ", mention).strip().casefold()


class RuleBasedRecognizer:
    """Deterministic mention extraction.

    Entities: maximal runs of adjacent capitalized words, with leading
    stopword-like capitals trimmed (see textutil.capitalized_runs).
    Numerals: the ordered regex set above — month-name dates, currency
    amounts with optional scale words, percentages, scaled numbers, then
    bare numbers.
    """

    def entities(self, text: str) -> list[str]:
        return capitalized_runs(text)

    def numerals(self, text: str) -> list[str]:
        return [m.group(0) for m in _NUMERAL.finditer(text)]


class FileMentionRecognizer:
    """Serves externally produced mention lists (one mention per line) in
    place of rule-based extraction, for runs that pair with a real NER
    system. Each list applies to whichever text it was produced from; both
    texts being compared must use the same external tooling."""

    def __init__(self, entity_mentions: dict[str, list[str]],
                 numeral_mentions: dict[str, list[str]]):
        # keyed by role: "candidate" / "reference"
        self._entities = entity_mentions
        self._numerals = numeral_mentions
        self._role = "candidate"

    def for_role(self, role: str) -> "FileMentionRecognizer":
        clone = FileMentionRecognizer(self._entities, self._numerals)
        clone._role = role
        return clone

    def entities(self, text: str) -> list[str]:
        return self._entities.get(self._role, [])

    def numerals(self, text: str) -> list[str]:
        return self._numerals.get(self._role, [])


# ---------------------------------------------------------------------------
# informativeness
# ---------------------------------------------------------------------------

_BRACKETS = re.compile(r"\[[0-9][0-9,]*\]")


@dataclass
class InformativenessCounts:
    section_count_total: int = 0
    section_count_first_level: int = 0
    word_count: int = 0
    entity_count: int = 0
    numerical_count: int = 0


def article_prose(parsed: ParsedArticle) -> str:
    """Lead and section sentences with citation brackets stripped; headings
    and references excluded."""
    chunks = [t for t, _ in parsed.lead]
    for section in parsed.sections:
        chunks.extend(t for t, _ in section.sentences)
    return _BRACKETS.sub("", " ".join(chunks))


def informativeness(parsed: ParsedArticle, recognizer=None) -> InformativenessCounts:
    recognizer = recognizer or RuleBasedRecognizer()
    prose = article_prose(parsed)
    return InformativenessCounts(
        section_count_total=len(parsed.sections),
        section_count_first_level=sum(1 for s in parsed.sections if s.depth == 1),
        word_count=len(prose.split()),
        entity_count=len(recognizer.entities(prose)),
        numerical_count=len(recognizer.numerals(prose)),
    )


# ---------------------------------------------------------------------------
# citation quality
# ---------------------------------------------------------------------------


@dataclass
class SentenceJudgment:
    text: str
    citations: list[str]
    fully_supported: bool | None  # None: sentence uncited
    partial: list[bool] = field(default_factory=list)


@dataclass
class CitationMetrics:
    rate: float
    recall: float | None
    precision: float | None
    per_sentence: list[SentenceJudgment] = field(default_factory=list)
    judgment_parse_failures: int = 0


def _judge(gateway: ModelGateway, template: str, source: str, claim: str) -> tuple[bool, bool]:
    """Returns (verdict, parsed_ok); an unparseable judgment counts as No."""
    completion = gateway.chat(ChatRequest(template, {"source": source, "claim": claim}))
    word = completion.strip().split(maxsplit=1)[0].rstrip(".,:;").casefold() if completion.strip() else ""
    if word == "yes":
        return True, True
    if word == "no":
        return False, True
    return False, False


def citation_metrics(sidecar_sentences: list[dict], gateway: ModelGateway) -> CitationMetrics:
    """rate: share of sentences carrying any citation. recall: share of cited
    sentences fully supported by their concatenated cited texts. precision:
    share of (sentence, citation) pairs at least partially supported. recall
    and precision are None when nothing is cited."""
    judgments: list[SentenceJudgment] = []
    parse_failures = 0
    for row in sidecar_sentences:
        text = row["text"]
        citations = row.get("citations", [])
        if not citations:
            judgments.append(SentenceJudgment(text, [], None))
            continue
        source = "\n".join(c["unit_text"] for c in citations)
        full, ok = _judge(gateway, "entailer", source, text)
        if not ok:
            parse_failures += 1
        partial = []
        for c in citations:
            verdict, ok = _judge(gateway, "partial_entailer", c["unit_text"], text)
            if not ok:
                parse_failures += 1
            partial.append(verdict)
        judgments.append(
            SentenceJudgment(text, [c["unit_id"] for c in citations], full, partial)
        )

    total = len(judgments)
    cited = [j for j in judgments if j.fully_supported is not None]
    rate = 100.0 * len(cited) / total if total else 0.0
    recall = (
        100.0 * sum(1 for j in cited if j.fully_supported) / len(cited) if cited else None
    )
    pairs = [p for j in cited for p in j.partial]
    precision = 100.0 * sum(pairs) / len(pairs) if pairs else None
    return CitationMetrics(
        rate=rate,
        recall=recall,
        precision=precision,
        per_sentence=judgments,
        judgment_parse_failures=parse_failures,
    )


# ---------------------------------------------------------------------------
# reference-based recalls
# ---------------------------------------------------------------------------


def _lcs_length(a: list, b: list) -> int:
    if not a or not b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_recall(candidate: str, reference: str) -> tuple[float, float]:
    """(ROUGE-1 recall, ROUGE-L recall) as percents.

    ROUGE-1: clipped unigram matches over reference unigram count.
    ROUGE-L: LCS length over reference token count.
    Tokens: lowercased, split on non-alphanumerics.
    """
    ref_tokens = tokenize(reference)
    if not ref_tokens:
        raise EmptyReference("reference has no tokens")
    cand_tokens = tokenize(candidate)
    ref_counts: dict[str, int] = {}
    for t in ref_tokens:
        ref_counts[t] = ref_counts.get(t, 0) + 1
    cand_counts: dict[str, int] = {}
    for t in cand_tokens:
        cand_counts[t] = cand_counts.get(t, 0) + 1
    matched = sum(min(n, cand_counts.get(t, 0)) for t, n in ref_counts.items())
    rouge1 = 100.0 * matched / len(ref_tokens)
    rougel = 100.0 * _lcs_length(cand_tokens, ref_tokens) / len(ref_tokens)
    return rouge1, rougel


def mention_recall(candidate: str, reference: str, extractor) -> float:
    """Share of the reference's normalized mentions found in the candidate."""
    ref_mentions = {_normalize_mention(m) for m in extractor(reference)}
    ref_mentions.discard("")
    if not ref_mentions:
        raise EmptyReference("reference yields no mentions")
    cand_mentions = {_normalize_mention(m) for m in extractor(candidate)}
    return 100.0 * len(ref_mentions & cand_mentions) / len(ref_mentions)


def reference_recalls(candidate: str, reference: str,
                      recognizer=None) -> tuple[float | None, float | None]:
    """(entity recall, numerical recall); a side with no reference mentions
    reports None instead of a number."""
    recognizer = recognizer or RuleBasedRecognizer()
    cand_rec = recognizer.for_role("candidate") if hasattr(recognizer, "for_role") else recognizer
    ref_rec = recognizer.for_role("reference") if hasattr(recognizer, "for_role") else recognizer
    results: list[float | None] = []
    for extract_cand, extract_ref in (
        (cand_rec.entities, ref_rec.entities),
        (cand_rec.numerals, ref_rec.numerals),
    ):
        ref_mentions = {_normalize_mention(m) for m in extract_ref(reference)}
        ref_mentions.discard("")
        if not ref_mentions:
            results.append(None)
            continue
        cand_mentions = {_normalize_mention(m) for m in extract_cand(candidate)}
        results.append(100.0 * len(ref_mentions & cand_mentions) / len(ref_mentions))
    return results[0], results[1]


# ---------------------------------------------------------------------------
# utilization
# ---------------------------------------------------------------------------


def utilization(collected_doc_ids, cited_doc_ids) -> tuple[int, int, float | None]:
    """(pages collected, pages cited, rate percent). Collected means fetched
    pages that yielded at least one stored unit; the rate is undefined (None)
    when nothing was collected."""
    collected = set(collected_doc_ids)
    cited = set(cited_doc_ids)
    rate = 100.0 * len(cited) / len(collected) if collected else None
    return len(collected), len(cited), rate


def batch_utilization(rates: list[float]) -> float | None:
    """Macro average of per-topic utilization rates. Averaging rates (not
    pooling counts) is why an averaged rate differs from the ratio of
    averaged counts."""
    valid = [r for r in rates if r is not None]
    return sum(valid) / len(valid) if valid else None


# ---------------------------------------------------------------------------
# heading assignment precision
# ---------------------------------------------------------------------------


def heading_assignment_precision(
    gateway: ModelGateway, cases: list[tuple[str, str, list[str]]]
) -> float:
    """Share of cases where cosine argmax over the sibling headings picks the
    gold heading. Each case: (sentence, gold heading, sibling headings
    containing gold)."""
    if not cases:
        raise EmptyReference("no cases supplied")
    hits = 0
    for sentence, gold, headings in cases:
        if len(headings) < 2 or gold not in headings:
            raise ValueError(f"case needs >=2 headings including gold: {gold!r}")
        vectors = gateway.embed([sentence] + list(headings))
        picked = assign_embedding(vectors[0], vectors[1:])
        hits += headings[picked] == gold
    return 100.0 * hits / len(cases)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class EvalReport:
    section_count_total: int = 0
    section_count_first_level: int = 0
    word_count: int = 0
    entity_count: int = 0
    numerical_count: int = 0
    citation_rate: float = 0.0
    citation_recall: float | None = None
    citation_precision: float | None = None
    rouge1_recall: float | None = None
    rougel_recall: float | None = None
    entity_recall: float | None = None
    numerical_recall: float | None = None
    pages_collected: int = 0
    pages_cited: int = 0
    utilization_rate: float | None = None
    judgment_parse_failures: int = 0
    per_sentence: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        data = {
            "section_count_total": self.section_count_total,
            "section_count_first_level": self.section_count_first_level,
            "word_count": self.word_count,
            "entity_count": self.entity_count,
            "numerical_count": self.numerical_count,
            "citation_rate": self.citation_rate,
            "citation_recall": self.citation_recall,
            "citation_precision": self.citation_precision,
            "pages_collected": self.pages_collected,
            "pages_cited": self.pages_cited,
            "utilization_rate": self.utilization_rate,
            "judgment_parse_failures": self.judgment_parse_failures,
            "per_sentence": self.per_sentence,
        }
        for name in ("rouge1_recall", "rougel_recall", "entity_recall", "numerical_recall"):
            value = getattr(self, name)
            if value is not None:
                data[name] = value
        return data


def evaluate_article(
    parsed: ParsedArticle,
    sidecar: dict,
    gateway: ModelGateway,
    recognizer=None,
    reference_text: str | None = None,
) -> EvalReport:
    """Assemble the full report for one article. Reference-based fields are
    present only when a reference article is supplied."""
    recognizer = recognizer or RuleBasedRecognizer()
    counts = informativeness(parsed, recognizer)
    cites = citation_metrics(sidecar["sentences"], gateway)
    cited_docs = {r["doc_id"] for r in sidecar.get("references", [])}
    collected, cited, util_rate = utilization(
        sidecar.get("pages_collected", []), cited_docs
    )
    report = EvalReport(
        section_count_total=counts.section_count_total,
        section_count_first_level=counts.section_count_first_level,
        word_count=counts.word_count,
        entity_count=counts.entity_count,
        numerical_count=counts.numerical_count,
        citation_rate=cites.rate,
        citation_recall=cites.recall,
        citation_precision=cites.precision,
        pages_collected=collected,
        pages_cited=cited,
        utilization_rate=util_rate,
        judgment_parse_failures=cites.judgment_parse_failures,
        per_sentence=[
            {
                "text": j.text,
                "citations": j.citations,
                "fully_supported": j.fully_supported,
                "partial": j.partial,
            }
            for j in cites.per_sentence
        ],
    )
    if reference_text is not None:
        candidate = article_prose(parsed)
        report.rouge1_recall, report.rougel_recall = rouge_recall(candidate, reference_text)
        report.entity_recall, report.numerical_recall = reference_recalls(
            candidate, reference_text, recognizer
        )
    return report
