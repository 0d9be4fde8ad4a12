"""Labeled factoid store with embeddings and line-oriented persistence.

Each stored unit is one self-contained factoid tagged with a section-heading
label. The store answers exact-label recall, supports relabeling (used while
the outline tree repartitions units), and persists to a newline-delimited
file so diffs stay readable.

Thread safety: save/recall/relabel are synchronized on one lock and the
insertion counter is assigned under it. persist/load take the same lock, so
they are exclusive with mutations.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptRecord, DimensionMismatch, EmptyText, IoFailure, UnknownUnit

_WS = re.compile(r"\s+")

FORMAT_TAG = "wikiforge-store/1"


def normalize_text(text: str) -> str:
    """Trim and collapse internal whitespace. Case is preserved: casing
    distinguishes entities, so it must survive dedup."""
    return _WS.sub(" ", text).strip()


@dataclass
class MemoryUnit:
    """One factoid: text, embedding, current label, and provenance."""

    id: str
    text: str
    embedding: np.ndarray
    label: str
    source_doc_id: str
    seq: int

    def same_as(self, other: "MemoryUnit") -> bool:
        return (
            self.id == other.id
            and self.text == other.text
            and self.label == other.label
            and self.source_doc_id == other.source_doc_id
            and self.seq == other.seq
            and np.array_equal(self.embedding, other.embedding)
        )


@dataclass
class MemoryStore:
    """In-process unit collection keyed by id, with a label index."""

    dimension: int
    topic: str
    _units: dict[str, MemoryUnit] = field(default_factory=dict)
    _by_label: dict[str, list[str]] = field(default_factory=dict)
    _dedup: dict[tuple[str, str], str] = field(default_factory=dict)
    _next_seq: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def save(self, text: str, label: str, embedding, source_doc_id: str) -> str:
        """Store one factoid under `label` and return its unit id.

        Saving the same (normalized text, source) twice is a no-op that
        returns the existing id.
        """
        norm = normalize_text(text)
        if not norm:
            raise EmptyText("unit text is empty after normalization")
        if not normalize_text(label):
            raise EmptyText("label is empty")
        vec = np.asarray(embedding, dtype=float)
        if vec.shape != (self.dimension,):
            raise DimensionMismatch(
                f"embedding has shape {vec.shape}, store dimension is {self.dimension}"
            )
        key = (norm, source_doc_id)
        with self._lock:
            existing = self._dedup.get(key)
            if existing is not None:
                return existing
            seq = self._next_seq
            self._next_seq += 1
            unit_id = f"u{seq:06d}"
            unit = MemoryUnit(
                id=unit_id,
                text=norm,
                embedding=vec,
                label=label,
                source_doc_id=source_doc_id,
                seq=seq,
            )
            self._units[unit_id] = unit
            self._by_label.setdefault(label, []).append(unit_id)
            self._dedup[key] = unit_id
            return unit_id

    def recall(self, label: str) -> list[MemoryUnit]:
        """All units whose label equals `label` exactly, in insertion order.
        Unknown labels yield an empty list."""
        with self._lock:
            ids = self._by_label.get(label, [])
            units = [self._units[i] for i in ids]
        return sorted(units, key=lambda u: u.seq)

    def relabel(self, unit_id: str, new_label: str) -> None:
        if not normalize_text(new_label):
            raise EmptyText("new label is empty")
        with self._lock:
            unit = self._units.get(unit_id)
            if unit is None:
                raise UnknownUnit(unit_id)
            if unit.label == new_label:
                return
            self._by_label[unit.label].remove(unit_id)
            if not self._by_label[unit.label]:
                del self._by_label[unit.label]
            unit.label = new_label
            self._by_label.setdefault(new_label, []).append(unit_id)

    def get(self, unit_id: str) -> MemoryUnit:
        with self._lock:
            unit = self._units.get(unit_id)
        if unit is None:
            raise UnknownUnit(unit_id)
        return unit

    def units(self) -> list[MemoryUnit]:
        """All units in insertion (seq) order."""
        with self._lock:
            units = list(self._units.values())
        return sorted(units, key=lambda u: u.seq)

    def labels(self) -> dict[str, int]:
        """Label -> unit count, labels sorted."""
        with self._lock:
            return {label: len(ids) for label, ids in sorted(self._by_label.items())}

    def __len__(self) -> int:
        with self._lock:
            return len(self._units)

    def __contains__(self, unit_id: str) -> bool:
        with self._lock:
            return unit_id in self._units

    # -- persistence --------------------------------------------------------
    #
    # Line 1 is a JSON header [format, dimension, topic]; every later line is
    # one unit as a JSON array with fields in fixed order:
    #   [id, seq, label, source_doc_id, text, embedding]

    def persist(self, path) -> None:
        with self._lock:
            units = sorted(self._units.values(), key=lambda u: u.seq)
            try:
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(json.dumps([FORMAT_TAG, self.dimension, self.topic]) + "\n")
                    for u in units:
                        record = [
                            u.id,
                            u.seq,
                            u.label,
                            u.source_doc_id,
                            u.text,
                            [float(x) for x in u.embedding],
                        ]
                        fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            except OSError as exc:
                raise IoFailure(f"cannot write store to {path}: {exc}") from exc

    @classmethod
    def load(cls, path) -> "MemoryStore":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.read().split("\n")
        except OSError as exc:
            raise IoFailure(f"cannot read store from {path}: {exc}") from exc
        if not lines or not lines[0].strip():
            raise CorruptRecord(1, "missing header")
        try:
            header = json.loads(lines[0])
            tag, dimension, topic = header
        except (json.JSONDecodeError, ValueError, TypeError) as exc:
            raise CorruptRecord(1, f"bad header: {exc}") from exc
        if tag != FORMAT_TAG:
            raise CorruptRecord(1, f"unknown format tag {tag!r}")
        store = cls(dimension=int(dimension), topic=str(topic))
        max_seq = -1
        for lineno, line in enumerate(lines[1:], start=2):
            if not line:
                continue  # trailing newline
            try:
                rec = json.loads(line)
                unit_id, seq, label, source_doc_id, text, embedding = rec
                vec = np.asarray(embedding, dtype=float)
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                raise CorruptRecord(lineno, f"bad unit record: {exc}") from exc
            if vec.shape != (store.dimension,):
                raise CorruptRecord(
                    lineno, f"embedding dimension {vec.shape} != {store.dimension}"
                )
            unit = MemoryUnit(
                id=str(unit_id),
                text=str(text),
                embedding=vec,
                label=str(label),
                source_doc_id=str(source_doc_id),
                seq=int(seq),
            )
            if unit.id in store._units:
                raise CorruptRecord(lineno, f"duplicate unit id {unit.id}")
            store._units[unit.id] = unit
            store._by_label.setdefault(unit.label, []).append(unit.id)
            store._dedup[(unit.text, unit.source_doc_id)] = unit.id
            max_seq = max(max_seq, unit.seq)
        store._next_seq = max_seq + 1
        return store

    def same_as(self, other: "MemoryStore") -> bool:
        """Field-for-field equality, used by roundtrip tests."""
        if (self.dimension, self.topic, len(self)) != (
            other.dimension,
            other.topic,
            len(other),
        ):
            return False
        mine, theirs = self.units(), other.units()
        return all(a.same_as(b) for a, b in zip(mine, theirs))
