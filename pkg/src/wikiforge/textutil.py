"""Deterministic text helpers: sentence segmentation, tokenization,
capitalized-run detection.

No model calls and no randomness live here; everything downstream that needs
reproducible text handling (mock backends, rendering, metrics) shares these.
"""

from __future__ import annotations

import re

# Periods after these tokens never end a sentence. Matched case-sensitively
# against the whole whitespace-delimited token ending at the period.
ABBREVIATIONS = frozenset(
    {
        "Dr.",
        "Mr.",
        "Mrs.",
        "Ms.",
        "Prof.",
        "St.",
        "Mt.",
        "No.",
        "Jr.",
        "Sr.",
        "vs.",
        "etc.",
        "e.g.",
        "i.e.",
        "cf.",
        "ca.",
        "approx.",
        "U.S.",
        "U.K.",
        "U.N.",
        "Inc.",
        "Ltd.",
        "Co.",
        "Corp.",
        "Fig.",
        "Vol.",
        "Gen.",
        "Col.",
        "Capt.",
        "Sgt.",
        "Rev.",
        "Hon.",
    }
)

_TERMINALS = ".!?"
_OPENERS = "([{\"'“‘"


def _token_ending_at(text: str, i: int) -> str:
    """Whitespace-delimited token whose last character is text[i]."""
    j = i
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    return text[j : i + 1].lstrip(_OPENERS)


def sentence_segments(text: str) -> list[str]:
    """Raw sentence segments; ``"".join(result) == text`` always holds.

    A boundary sits right after `.`, `!` or `?` when the next non-empty run
    of whitespace is followed by an uppercase letter or a digit, unless the
    period closes a known abbreviation. Inter-sentence whitespace is kept at
    the head of the following segment.
    """
    if not text:
        return []
    boundaries = []
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in _TERMINALS:
            continue
        k = i + 1
        while k < n and text[k].isspace():
            k += 1
        if k == i + 1 or k == n:
            continue  # no whitespace after, or end of text
        if not (text[k].isupper() or text[k].isdigit()):
            continue
        if ch == "." and _token_ending_at(text, i) in ABBREVIATIONS:
            continue
        boundaries.append(i + 1)
    segments = []
    prev = 0
    for b in boundaries:
        segments.append(text[prev:b])
        prev = b
    segments.append(text[prev:])
    return segments


def segment_sentences(text: str) -> list[str]:
    """Rule-based sentence splitting; returns stripped sentences."""
    return [s.strip() for s in sentence_segments(text) if s.strip()]


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split on non-alphanumeric characters."""
    return re.findall(r"[a-z0-9]+", text.lower())


def content_tokens(text: str, min_len: int = 4) -> set[str]:
    """Lowercased tokens of at least `min_len` characters."""
    return {t for t in tokenize(text) if len(t) >= min_len}


# Capitalized words that start runs only as noise (sentence starts, pronouns).
_CAP_STOPWORDS = frozenset(
    {
        "The",
        "A",
        "An",
        "In",
        "On",
        "At",
        "By",
        "Of",
        "For",
        "It",
        "Its",
        "He",
        "She",
        "They",
        "We",
        "I",
        "You",
        "This",
        "That",
        "These",
        "Those",
        "There",
        "After",
        "Before",
        "During",
        "However",
        "Despite",
        "Although",
        "While",
        "When",
        "Since",
        "As",
        "And",
        "But",
        "Or",
        "Not",
        "Both",
        "Each",
        "Here",
    }
)

_CAP_RUN = re.compile(r"\b[A-Z][\w'’-]*(?: [A-Z][\w'’-]*)*")


def capitalized_runs(text: str, min_tokens: int = 1) -> list[str]:
    """Maximal runs of adjacent capitalized words, in order of appearance.

    Leading stopword-like capitals ("The", "After", ...) are trimmed from
    each run; runs shorter than `min_tokens` after trimming are dropped.
    Duplicates are removed, first appearance wins.
    """
    seen = set()
    out = []
    for match in _CAP_RUN.finditer(text):
        words = match.group(0).split(" ")
        while words and words[0] in _CAP_STOPWORDS:
            words = words[1:]
        if len(words) < min_tokens:
            continue
        run = " ".join(words)
        if run and run not in seen:
            seen.add(run)
            out.append(run)
    return out


def slugify(text: str) -> str:
    """Filesystem-safe lowercase slug: alphanumeric runs joined by '_'."""
    return "_".join(re.findall(r"[a-z0-9]+", text.lower()))
