import itertools
import json

import numpy as np
import pytest

from wikiforge.errors import DimensionMismatch, KTooLarge, ParseFailure
from wikiforge.gateway import (
    ChatRequest,
    MockChatBackend,
    MockEmbedBackend,
    ModelGateway,
    cosine,
    mock_script_key,
)
from wikiforge.organization import (
    OrganizeConfig,
    OutlineNode,
    assign_embedding,
    assign_unit,
    cluster_kmeans,
    dump_tree,
    organize,
    organize_flat,
    parse_heading_lines,
    propose_headings,
    summarize_cluster,
)
from wikiforge.store import MemoryStore, MemoryUnit


def make_gateway(script=None, dimension=16):
    return ModelGateway(MockChatBackend(script=script), MockEmbedBackend(dimension=dimension))


def units_from(vectors):
    return [
        MemoryUnit(id=f"u{i}", text=f"text {i}", embedding=np.asarray(v, dtype=float),
                   label="T", source_doc_id="d0", seq=i)
        for i, v in enumerate(vectors)
    ]


# ---------------------------------------------------------------------------
# K-Means and its brute-force oracle
# ---------------------------------------------------------------------------


def brute_force_partitions(n, k):
    """Every partition of range(n) into exactly k non-empty blocks."""

    def rec(i, blocks):
        if i == n:
            if len(blocks) == k:
                yield [tuple(b) for b in blocks]
            return
        for b in blocks:
            b.append(i)
            yield from rec(i + 1, blocks)
            b.pop()
        if len(blocks) < k:
            blocks.append([i])
            yield from rec(i + 1, blocks)
            blocks.pop()

    yield from rec(0, [])


def wcss(points, blocks):
    total = 0.0
    for block in blocks:
        pts = points[list(block)]
        total += float(((pts - pts.mean(axis=0)) ** 2).sum())
    return total


def best_partition(points, k):
    return min(
        brute_force_partitions(len(points), k), key=lambda b: wcss(points, b)
    )


def as_id_sets(clusters):
    return {frozenset(c) for c in clusters}


def test_kmeans_two_obvious_groups():
    vectors = [(0, 0), (0, 1), (10, 10), (10, 11)]
    result = cluster_kmeans(units_from(vectors), k=2, seed=0)
    assert as_id_sets(result.clusters) == {
        frozenset({"u0", "u1"}),
        frozenset({"u2", "u3"}),
    }
    # brute force agrees
    points = np.asarray(vectors, dtype=float)
    oracle = best_partition(points, 2)
    assert {frozenset(f"u{i}" for i in b) for b in oracle} == as_id_sets(result.clusters)


def test_kmeans_k_equals_n_singletons():
    result = cluster_kmeans(units_from([(0, 0), (5, 5), (9, 0)]), k=3, seed=1)
    assert as_id_sets(result.clusters) == {
        frozenset({"u0"}), frozenset({"u1"}), frozenset({"u2"})
    }


def test_kmeans_k1_everything():
    result = cluster_kmeans(units_from([(0, 0), (5, 5), (9, 0)]), k=1, seed=1)
    assert as_id_sets(result.clusters) == {frozenset({"u0", "u1", "u2"})}


def test_kmeans_k_too_large():
    with pytest.raises(KTooLarge):
        cluster_kmeans(units_from([(0, 0)]), k=2, seed=0)


def test_kmeans_duplicate_points_keep_clusters_nonempty():
    vectors = [(0, 0), (0, 0), (0, 0), (10, 10)]
    result = cluster_kmeans(units_from(vectors), k=3, seed=0)
    assert all(result.clusters)
    assert sorted(i for c in result.clusters for i in c) == ["u0", "u1", "u2", "u3"]


def _separated_fixture(rng, n_points, k):
    """Random fixture with between/within separation ratio >= 4."""
    dim = rng.integers(2, 4)
    while True:
        centers = rng.uniform(-50, 50, size=(k, dim))
        gaps = [
            np.linalg.norm(a - b) for a, b in itertools.combinations(centers, 2)
        ]
        if gaps and min(gaps) < 20:
            continue
        radius = min(gaps) / 8 if gaps else 1.0
        sizes = rng.multinomial(n_points - k, np.ones(k) / k) + 1
        points = np.concatenate(
            [
                c + rng.uniform(-radius / np.sqrt(dim), radius / np.sqrt(dim), size=(s, dim))
                for c, s in zip(centers, sizes)
            ]
        )
        return points


def test_kmeans_matches_brute_force_on_separated_fixtures():
    rng = np.random.default_rng(2024)
    mismatches = 0
    for case in range(60):
        k = int(rng.integers(2, 4))
        n = int(rng.integers(k + 1, 9))
        points = _separated_fixture(rng, n, k)
        result = cluster_kmeans(units_from(points), k=k, seed=int(rng.integers(10_000)))
        oracle = best_partition(points, k)
        oracle_ids = {frozenset(f"u{i}" for i in b) for b in oracle}
        if as_id_sets(result.clusters) != oracle_ids:
            mismatches += 1
    assert mismatches == 0


# ---------------------------------------------------------------------------
# summaries and headings
# ---------------------------------------------------------------------------


def test_summarize_single_unit_short_circuits():
    (unit,) = units_from([(1, 0)])
    unit.text = "X won gold."
    assert summarize_cluster(make_gateway(), "T", [unit]) == "X won gold."


def test_summarize_scripted():
    cluster = units_from([(1, 0), (0, 1), (1, 1)])
    joined = " ".join(u.text for u in cluster)
    script = {
        mock_script_key("summarizer", {"topic": "T", "text": joined}): "A fine summary."
    }
    assert summarize_cluster(make_gateway(script), "T", cluster) == "A fine summary."


def test_summarize_empty_cluster_rejected():
    with pytest.raises(Exception):
        summarize_cluster(make_gateway(), "T", [])


def test_propose_headings_scripted_chain():
    script = {}
    script[mock_script_key("outliner", {"section_title": "T"})] = "History\nVenues"
    info = "1. summary one\n2. summary two"
    script[
        mock_script_key(
            "outline_rewriter",
            {
                "section_title": "T",
                "information_collected": info,
                "current_outline": "History\nVenues",
            },
        )
    ] = "History\nVenues\nvenues"
    script[
        mock_script_key("outline_refiner", {"outline": "History\nVenues\nvenues"})
    ] = "History\nVenues"
    result = propose_headings(
        make_gateway(script), "T", ["summary one", "summary two"]
    )
    assert result == ["History", "Venues"]


def test_propose_headings_dedups_rewriter_duplicates():
    # default refiner drops the duplicate line; parse dedups again
    script = {}
    script[mock_script_key("outliner", {"section_title": "T"})] = "A\nB"
    info = "1. s"
    script[
        mock_script_key(
            "outline_rewriter",
            {"section_title": "T", "information_collected": info, "current_outline": "A\nB"},
        )
    ] = "History\nHistory\nCulture"
    result = propose_headings(make_gateway(script), "T", ["s"])
    assert result == ["History", "Culture"]


def test_propose_headings_empty_refine_is_parse_failure():
    script = {}
    script[mock_script_key("outliner", {"section_title": "T"})] = "A"
    info = "1. s"
    script[
        mock_script_key(
            "outline_rewriter",
            {"section_title": "T", "information_collected": info, "current_outline": "A"},
        )
    ] = "B"
    script[mock_script_key("outline_refiner", {"outline": "B"})] = "\n\n"
    with pytest.raises(ParseFailure):
        propose_headings(make_gateway(script), "T", ["s"])


def test_parse_heading_lines_strips_markers():
    text = "1. History\n- Venues\n* Culture\n2) Impact\n\n"
    assert parse_heading_lines(text) == ["History", "Venues", "Culture", "Impact"]


# ---------------------------------------------------------------------------
# assignment
# ---------------------------------------------------------------------------


def test_assign_identity():
    assert assign_embedding(np.array([1.0, 0.0]),
                            [np.array([1.0, 0.0]), np.array([0.0, 1.0])]) == 0


def test_assign_tie_breaks_to_lowest_index():
    vec = np.array([1.0, 1.0]) / np.sqrt(2)
    assert assign_embedding(vec, [np.array([1.0, 0.0]), np.array([0.0, 1.0])]) == 0


def test_assign_scale_invariant():
    headings = [np.array([1.0, 0.2]), np.array([0.1, 1.0])]
    vec = np.array([0.4, 0.9])
    assert assign_embedding(vec, headings) == assign_embedding(7.0 * vec, headings)


def test_assign_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        assign_embedding(np.array([1.0, 0.0, 0.0]), [np.array([1.0, 0.0])])


def test_assign_unit_wrapper():
    (unit,) = units_from([(1, 0)])
    idx = assign_unit(unit, ["A", "B"], [np.array([1.0, 0.0]), np.array([0.0, 1.0])])
    assert idx == 0


# ---------------------------------------------------------------------------
# organize
# ---------------------------------------------------------------------------

# Each group shares four anchor tokens, so in-group cosine stays above
# cross-group cosine in the token-hash embedding space (verified below).
GROUP_A = [
    "Kestrel Quarry granite stone built town bridges.",
    "Kestrel Quarry granite stone lined harbor walls.",
    "Kestrel Quarry granite stone paid miner wages.",
    "Kestrel Quarry granite stone filled deep shafts.",
    "Kestrel Quarry granite stone survived river floods.",
    "Kestrel Quarry granite stone rode railway wagons.",
    "Kestrel Quarry granite stone draws bold climbers.",
]
GROUP_B = [
    "Lantern Parade festival lights filled autumn evenings.",
    "Lantern Parade festival lights glow without electricity.",
    "Lantern Parade festival lights guide paper boats.",
    "Lantern Parade festival lights inspire winter songs.",
    "Lantern Parade festival lights honor harvest customs.",
    "Lantern Parade festival lights drew huge crowds.",
    "Lantern Parade festival lights endured rainy nights.",
]

TOPIC = "Stonewick"
GROUP_DIM = 128


def _grouped_store(gateway):
    store = MemoryStore(dimension=GROUP_DIM, topic=TOPIC)
    texts = GROUP_A + GROUP_B
    vectors = gateway.embed(texts)
    for text, vec in zip(texts, vectors):
        store.save(text, TOPIC, vec, "d0")
    return store


def test_mock_embedding_groups_are_separated():
    # direct computation backing the two-group expectation: in-group cosine
    # exceeds cross-group cosine for every pair
    gateway = make_gateway(dimension=GROUP_DIM)
    vec_a = gateway.embed(GROUP_A)
    vec_b = gateway.embed(GROUP_B)
    in_a = min(cosine(x, y) for x in vec_a for y in vec_a)
    in_b = min(cosine(x, y) for x in vec_b for y in vec_b)
    cross = max(cosine(x, y) for x in vec_a for y in vec_b)
    assert min(in_a, in_b) > cross


def test_organize_two_groups_two_sections():
    gateway = make_gateway(dimension=GROUP_DIM)
    store = _grouped_store(gateway)
    cfg = OrganizeConfig(recursion_threshold=10, max_outline_depth=2, fixed_k=2)
    root = organize(store, gateway, cfg)
    assert len(root.children) == 2
    leaf_sets = [set(leaf.assigned_unit_ids) for leaf in root.leaves()]
    texts = {u.id: u.text for u in store.units()}
    for leaf_ids in leaf_sets:
        leaf_texts = {texts[i] for i in leaf_ids}
        assert leaf_texts <= set(GROUP_A) or leaf_texts <= set(GROUP_B)
    assert set().union(*leaf_sets) == {u.id for u in store.units()}


def test_organize_below_threshold_is_single_leaf():
    gateway = make_gateway(dimension=GROUP_DIM)
    store = MemoryStore(dimension=GROUP_DIM, topic=TOPIC)
    for i, text in enumerate(GROUP_A[:5]):
        store.save(text, TOPIC, gateway.embed([text])[0], "d0")
    root = organize(store, gateway, OrganizeConfig(recursion_threshold=12))
    assert root.children == []
    assert len(root.assigned_unit_ids) == 5


def test_organize_depth_cap():
    gateway = make_gateway(dimension=GROUP_DIM)
    store = _grouped_store(gateway)
    cfg = OrganizeConfig(recursion_threshold=2, max_outline_depth=1, fixed_k=2)
    root = organize(store, gateway, cfg)

    def max_depth(node):
        return max([node.depth] + [max_depth(c) for c in node.children])

    assert max_depth(root) <= 1


def test_organize_relabels_to_path_labels():
    gateway = make_gateway(dimension=GROUP_DIM)
    store = _grouped_store(gateway)
    cfg = OrganizeConfig(recursion_threshold=10, max_outline_depth=2, fixed_k=2)
    root = organize(store, gateway, cfg)
    for leaf in root.leaves():
        for unit_id in leaf.assigned_unit_ids:
            label = store.get(unit_id).label
            assert label.startswith(f"{TOPIC}/")
            assert label.endswith(leaf.heading)
    # store recall by path label matches leaf assignment
    for leaf in root.leaves():
        label = store.get(leaf.assigned_unit_ids[0]).label
        assert {u.id for u in store.recall(label)} == set(leaf.assigned_unit_ids)


def test_organize_partition_over_random_stores():
    rng = np.random.default_rng(7)
    for case in range(20):
        gateway = make_gateway()
        store = MemoryStore(dimension=16, topic="T")
        n = int(rng.integers(3, 40))
        pool = ["alpha", "bridge", "canyon", "delta", "ember", "forge", "glade"]
        for i in range(n):
            words = rng.choice(pool, size=3, replace=True)
            text = f"Fact {i}: {' '.join(words)} number {rng.integers(100)}."
            store.save(text, "T", gateway.embed([text])[0], f"d{i % 4}")
        cfg = OrganizeConfig(
            recursion_threshold=int(rng.integers(4, 16)),
            max_outline_depth=int(rng.integers(1, 4)),
            kmeans_seed=int(rng.integers(1000)),
        )
        root = organize(store, gateway, cfg)
        leaf_ids = [i for leaf in root.leaves() for i in leaf.assigned_unit_ids]
        assert len(leaf_ids) == len(set(leaf_ids))
        assert set(leaf_ids) == {u.id for u in store.units()}

        def check(node):
            assert bool(node.children) != bool(node.assigned_unit_ids)
            assert node.depth <= cfg.max_outline_depth
            keys = [c.heading.strip().casefold() for c in node.children]
            assert len(keys) == len(set(keys))
            for child in node.children:
                check(child)

        check(root)


def test_organize_deterministic():
    def run():
        gateway = make_gateway(dimension=GROUP_DIM)
        store = _grouped_store(gateway)
        cfg = OrganizeConfig(recursion_threshold=6, max_outline_depth=3, kmeans_seed=3)
        return json.dumps(organize(store, gateway, cfg).to_json(), sort_keys=True)

    assert run() == run()


def test_organize_flat_single_level():
    gateway = make_gateway(dimension=GROUP_DIM)
    store = _grouped_store(gateway)
    root = organize_flat(store, gateway, OrganizeConfig(fixed_k=2))
    assert root.children
    assert all(c.depth == 1 and not c.children for c in root.children)
    leaf_ids = [i for leaf in root.leaves() for i in leaf.assigned_unit_ids]
    assert set(leaf_ids) == {u.id for u in store.units()}


def test_outline_node_json_roundtrip():
    node = OutlineNode(
        heading="T", depth=0,
        children=[OutlineNode(heading="A", depth=1, assigned_unit_ids=["u1"])],
        cluster_summaries=["s"],
    )
    assert OutlineNode.from_json(node.to_json()).to_json() == node.to_json()


def test_dump_tree_lists_counts():
    gateway = make_gateway(dimension=GROUP_DIM)
    store = _grouped_store(gateway)
    cfg = OrganizeConfig(recursion_threshold=10, max_outline_depth=2, fixed_k=2)
    root = organize(store, gateway, cfg)
    dump = dump_tree(root, store)
    assert TOPIC in dump.splitlines()[0]
    assert "units)" in dump
