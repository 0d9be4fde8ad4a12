import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wikiforge.errors import CorruptRecord, DimensionMismatch, EmptyText, UnknownUnit
from wikiforge.store import MemoryStore, normalize_text


def vec(*values):
    return np.asarray(values, dtype=float)


@pytest.fixture
def store():
    return MemoryStore(dimension=3, topic="Topic")


def test_save_recall_roundtrip(store):
    uid = store.save("Cambodia hosted the 2023 SEA Games.", "History", vec(1, 0, 0), "d1")
    recalled = store.recall("History")
    assert [u.id for u in recalled] == [uid]
    assert recalled[0].text == "Cambodia hosted the 2023 SEA Games."


def test_save_empty_text_rejected(store):
    with pytest.raises(EmptyText):
        store.save("", "History", vec(1, 0, 0), "d1")
    with pytest.raises(EmptyText):
        store.save("   \n ", "History", vec(1, 0, 0), "d1")


def test_save_dedup_idempotent(store):
    a = store.save("Same fact.", "History", vec(1, 0, 0), "d1")
    b = store.save("Same fact.", "History", vec(0, 1, 0), "d1")
    assert a == b
    assert len(store) == 1


def test_dedup_normalizes_whitespace_preserves_case(store):
    a = store.save("One  fact\there.", "L", vec(1, 0, 0), "d1")
    b = store.save(" One fact here. ", "L", vec(1, 0, 0), "d1")
    assert a == b
    # same text, different case: a different unit
    c = store.save("one fact here.", "L", vec(1, 0, 0), "d1")
    assert c != a
    # same text, different source: a different unit
    d = store.save("One fact here.", "L", vec(1, 0, 0), "d2")
    assert d != a


def test_dimension_mismatch(store):
    with pytest.raises(DimensionMismatch):
        store.save("A fact.", "L", np.zeros(4), "d1")


def test_recall_by_label(store):
    for i in range(3):
        store.save(f"Venue fact {i}.", "Venues", vec(i, 0, 0), "d1")
    assert len(store.recall("Venues")) == 3
    assert store.recall("NoSuchLabel") == []


def test_relabel_moves_unit(store):
    ids = [store.save(f"Fact {i}.", "Venues", vec(i, 0, 0), "d1") for i in range(3)]
    store.relabel(ids[0], "History")
    assert len(store.recall("Venues")) == 2
    history = store.recall("History")
    assert [u.id for u in history] == [ids[0]]


def test_relabel_identity_is_noop(store):
    uid = store.save("Fact.", "Culture", vec(1, 0, 0), "d1")
    store.relabel(uid, "Culture")
    assert [u.id for u in store.recall("Culture")] == [uid]


def test_relabel_unknown_unit(store):
    with pytest.raises(UnknownUnit):
        store.relabel("u999999", "X")


def test_relabel_empty_label(store):
    uid = store.save("Fact.", "L", vec(1, 0, 0), "d1")
    with pytest.raises(EmptyText):
        store.relabel(uid, "  ")


def test_partition_invariant(store):
    ids = [store.save(f"Fact {i}.", f"L{i % 3}", vec(i, 0, 0), "d1") for i in range(9)]
    store.relabel(ids[0], "L2")
    recalled = [u.id for label in store.labels() for u in store.recall(label)]
    assert sorted(recalled) == sorted(ids)
    assert len(recalled) == len(set(recalled))


def test_persist_load_roundtrip_empty(store, tmp_path):
    path = tmp_path / "empty.store"
    store.persist(path)
    loaded = MemoryStore.load(path)
    assert loaded.same_as(store)
    assert len(loaded) == 0


def test_persist_load_roundtrip_units(store, tmp_path):
    for i in range(5):
        store.save(f"Fact number {i}.", f"Label {i % 2}", vec(i, 0.5, -i), "d1")
    path = tmp_path / "five.store"
    store.persist(path)
    loaded = MemoryStore.load(path)
    assert loaded.same_as(store)
    # seq order and next seq survive
    assert [u.seq for u in loaded.units()] == [u.seq for u in store.units()]
    new_id = loaded.save("A new fact.", "Label 0", vec(9, 9, 9), "d2")
    assert new_id not in {u.id for u in store.units()}


@given(
    st.lists(
        st.tuples(
            st.text(alphabet="abcXYZ ", min_size=1, max_size=12).filter(
                lambda s: s.strip()
            ),
            st.sampled_from(["L1", "L2", "L3"]),
            st.sampled_from(["d1", "d2"]),
        ),
        max_size=12,
    )
)
def test_roundtrip_property(tmp_path_factory, records):
    store = MemoryStore(dimension=2, topic="T")
    rng = np.random.default_rng(0)
    for text, label, doc in records:
        store.save(text, label, rng.normal(size=2), doc)
    path = tmp_path_factory.mktemp("prop") / "s.store"
    store.persist(path)
    assert MemoryStore.load(path).same_as(store)


def test_truncated_file_reports_line(store, tmp_path):
    for i in range(3):
        store.save(f"Fact {i}.", "L", vec(i, 0, 0), "d1")
    path = tmp_path / "trunc.store"
    store.persist(path)
    content = path.read_text(encoding="utf-8")
    path.write_text(content[: len(content) - 20], encoding="utf-8")
    with pytest.raises(CorruptRecord) as err:
        MemoryStore.load(path)
    assert err.value.line_number == 4  # header + 3 units; last unit is cut


def test_corrupt_header(tmp_path):
    path = tmp_path / "bad.store"
    path.write_text("not json\n", encoding="utf-8")
    with pytest.raises(CorruptRecord) as err:
        MemoryStore.load(path)
    assert err.value.line_number == 1


def test_concurrent_saves_unique_seq():
    store = MemoryStore(dimension=1, topic="T")
    errors = []

    def worker(offset):
        try:
            for i in range(50):
                store.save(f"fact {offset} {i}", "T", np.array([1.0]), f"d{offset}")
                store.recall("T")
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=worker, args=(t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len(store) == 200
    seqs = [u.seq for u in store.units()]
    assert len(set(seqs)) == 200


def test_normalize_text():
    assert normalize_text("  a\t b\nc ") == "a b c"
