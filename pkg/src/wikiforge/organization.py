"""Recursive hierarchical organization of the memory into an outline tree.

Each node with enough units is clustered on embeddings (seeded K-Means),
every cluster is condensed to a short summary, an outline chain proposes
child headings from those summaries, and every unit moves to the heading it
is most cosine-similar to. Units relabel to path labels ("Topic/History/
Origins") as they descend, so the store's label index always mirrors the
tree. Nodes below the recursion threshold keep their units as leaves.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, KTooLarge, ParseFailure, WikiforgeError
from .gateway import ChatRequest, ModelGateway, cosine
from .store import MemoryStore, MemoryUnit, normalize_text


@dataclass
class OutlineNode:
    """Section tree node. Units live only at leaves: a node has children or
    assigned units, never both."""

    heading: str
    depth: int
    children: list["OutlineNode"] = field(default_factory=list)
    assigned_unit_ids: list[str] = field(default_factory=list)
    cluster_summaries: list[str] = field(default_factory=list)

    def leaves(self) -> list["OutlineNode"]:
        if not self.children:
            return [self]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def to_json(self) -> dict:
        return {
            "heading": self.heading,
            "depth": self.depth,
            "assigned_unit_ids": list(self.assigned_unit_ids),
            "cluster_summaries": list(self.cluster_summaries),
            "children": [c.to_json() for c in self.children],
        }

    @classmethod
    def from_json(cls, data: dict) -> "OutlineNode":
        return cls(
            heading=data["heading"],
            depth=data["depth"],
            children=[cls.from_json(c) for c in data.get("children", [])],
            assigned_unit_ids=list(data.get("assigned_unit_ids", [])),
            cluster_summaries=list(data.get("cluster_summaries", [])),
        )


@dataclass
class ClusterSet:
    """A partition of unit ids plus the final centroids."""

    clusters: list[list[str]]
    centroids: list[np.ndarray]


@dataclass
class OrganizeConfig:
    recursion_threshold: int = 12
    max_outline_depth: int = 3
    kmeans_seed: int = 0
    kmeans_iterations: int = 100
    fixed_k: int | None = None  # None: k = clamp(round(sqrt(n/2)), 2, 8)

    def choose_k(self, n: int) -> int:
        if self.fixed_k is not None:
            return max(1, min(self.fixed_k, n))
        return min(n, max(2, min(8, round(np.sqrt(n / 2)))))


# ---------------------------------------------------------------------------
# K-Means
# ---------------------------------------------------------------------------


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first centroid uniform, later ones drawn with
    probability proportional to squared distance from the nearest centroid."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a centroid; pick uniformly
            centroids[i] = points[rng.integers(n)]
            continue
        idx = rng.choice(n, p=d2 / total)
        centroids[i] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def _kmeans_once(points: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(points, k, rng)
    n = points.shape[0]
    assignment = np.full(n, -1)
    for _ in range(100):
        dists = np.linalg.norm(points[:, None, :] - centroids[None, :, :], axis=2)
        new_assignment = np.argmin(dists, axis=1)
        own_dist = dists[np.arange(n), new_assignment]
        for cluster_idx in range(k):
            members = new_assignment == cluster_idx
            if members.any():
                centroids[cluster_idx] = points[members].mean(axis=0)
            else:
                # steal the point farthest from its current centroid
                runaway = int(np.argmax(own_dist))
                centroids[cluster_idx] = points[runaway]
                new_assignment[runaway] = cluster_idx
                own_dist[runaway] = 0.0
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
    return assignment, centroids


def _wcss(points: np.ndarray, assignment: np.ndarray, k: int) -> float:
    total = 0.0
    for cluster_idx in range(k):
        members = points[assignment == cluster_idx]
        if len(members):
            total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def cluster_kmeans(units: list[MemoryUnit], k: int, seed: int,
                   restarts: int = 8) -> ClusterSet:
    """Seeded K-Means over unit embeddings.

    Each restart runs k-means++ seeding and at most 100 Lloyd iterations,
    stopping when assignments stabilize; an emptied cluster is reseeded with
    the point lying farthest from its own assigned centroid. Restart seeds
    derive from `seed`, and the lowest within-cluster sum of squares wins
    (first such run on ties), so results are deterministic.
    """
    if k < 1:
        raise WikiforgeError("k must be >= 1")
    if k > len(units):
        raise KTooLarge(f"k={k} exceeds {len(units)} units")
    points = np.stack([np.asarray(u.embedding, dtype=float) for u in units])
    best: tuple[float, np.ndarray, np.ndarray] | None = None
    for r in range(max(1, restarts)):
        assignment, centroids = _kmeans_once(points, k, seed + r)
        score = _wcss(points, assignment, k)
        if best is None or score < best[0] - 1e-12:
            best = (score, assignment, centroids)
    _, assignment, centroids = best
    clusters = [
        [units[i].id for i in np.flatnonzero(assignment == c)] for c in range(k)
    ]
    return ClusterSet(clusters=clusters, centroids=[c.copy() for c in centroids])


# ---------------------------------------------------------------------------
# summaries and headings
# ---------------------------------------------------------------------------


def summarize_cluster(gateway: ModelGateway, topic: str, cluster: list[MemoryUnit]) -> str:
    """Condense a cluster's factoids into short text. A single-unit cluster
    short-circuits to the unit text."""
    if not cluster:
        raise WikiforgeError("cannot summarize an empty cluster")
    if len(cluster) == 1:
        return cluster[0].text
    joined = " ".join(u.text for u in cluster)
    return gateway.chat(ChatRequest("summarizer", {"topic": topic, "text": joined}))


_LIST_MARKER = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")


def parse_heading_lines(completion: str) -> list[str]:
    """One heading per line; list markers stripped, duplicates dropped
    case-insensitively, order preserved."""
    headings = []
    seen: set[str] = set()
    for line in completion.splitlines():
        heading = _LIST_MARKER.sub("", line).strip()
        key = normalize_text(heading).casefold()
        if heading and key not in seen:
            seen.add(key)
            headings.append(heading)
    return headings


def propose_headings(
    gateway: ModelGateway,
    parent_heading: str,
    summaries: list[str],
    prior: list[str] | None = None,
) -> list[str]:
    """Draft -> rewrite-against-summaries -> refine chain; returns at least
    one unique non-empty heading or raises ParseFailure."""
    if not summaries:
        raise WikiforgeError("propose_headings requires at least one summary")
    draft = gateway.chat(ChatRequest("outliner", {"section_title": parent_heading}))
    current = parse_heading_lines(draft) + list(prior or [])
    info = "\n".join(f"{i + 1}. {s}" for i, s in enumerate(summaries))
    rewritten = gateway.chat(
        ChatRequest(
            "outline_rewriter",
            {
                "section_title": parent_heading,
                "information_collected": info,
                "current_outline": "\n".join(current),
            },
        )
    )
    refined = gateway.chat(ChatRequest("outline_refiner", {"outline": rewritten}))
    headings = parse_heading_lines(refined)
    if not headings:
        raise ParseFailure(f"no headings parsed from refiner output: {refined[:80]!r}")
    return headings


# ---------------------------------------------------------------------------
# assignment
# ---------------------------------------------------------------------------


def assign_embedding(embedding: np.ndarray, heading_embeddings: list[np.ndarray]) -> int:
    """Index of the most cosine-similar heading; ties break to the lowest
    index (outline order)."""
    if not heading_embeddings:
        raise WikiforgeError("no headings to assign to")
    vec = np.asarray(embedding, dtype=float)
    dim = heading_embeddings[0].shape
    for h in heading_embeddings:
        if h.shape != dim:
            raise DimensionMismatch("heading embeddings disagree on dimension")
    if vec.shape != dim:
        raise DimensionMismatch(f"unit dim {vec.shape} != heading dim {dim}")
    sims = [cosine(vec, h) for h in heading_embeddings]
    return int(np.argmax(sims))  # argmax returns the first maximum


def assign_unit(
    unit: MemoryUnit, headings: list[str], heading_embeddings: list[np.ndarray]
) -> int:
    if len(headings) != len(heading_embeddings):
        raise WikiforgeError("headings and embeddings differ in length")
    return assign_embedding(unit.embedding, heading_embeddings)


# ---------------------------------------------------------------------------
# recursive organization
# ---------------------------------------------------------------------------


def organize(
    store: MemoryStore, gateway: ModelGateway, cfg: OrganizeConfig | None = None
) -> OutlineNode:
    """Build the outline tree for the whole store and relabel units to their
    leaf path labels. The returned tree partitions the store: every unit id
    sits in exactly one leaf."""
    cfg = cfg or OrganizeConfig()
    if len(store) == 0:
        raise WikiforgeError("cannot organize an empty store")
    root = OutlineNode(heading=store.topic, depth=0)
    unit_ids = [u.id for u in store.units()]
    _organize_node(store, gateway, cfg, root, store.topic, unit_ids)
    return root


def organize_flat(
    store: MemoryStore, gateway: ModelGateway, cfg: OrganizeConfig | None = None
) -> OutlineNode:
    """Single-level variant: one clustering pass over the whole memory, one
    heading proposal, no recursion. Every section is a depth-1 leaf."""
    cfg = cfg or OrganizeConfig()
    if len(store) == 0:
        raise WikiforgeError("cannot organize an empty store")
    root = OutlineNode(heading=store.topic, depth=0)
    unit_ids = [u.id for u in store.units()]
    try:
        _split_node(store, gateway, cfg, root, store.topic, unit_ids, recurse=False)
    except ParseFailure:
        _make_leaf(store, root, store.topic, unit_ids)
    return root


def _organize_node(store, gateway, cfg, node, path, unit_ids):
    if len(unit_ids) < cfg.recursion_threshold or node.depth >= cfg.max_outline_depth:
        _make_leaf(store, node, path, unit_ids)
        return
    try:
        _split_node(store, gateway, cfg, node, path, unit_ids, recurse=True)
    except ParseFailure as exc:
        raise ParseFailure(f"at {path}: {exc}") from exc


def _make_leaf(store, node, path, unit_ids):
    node.assigned_unit_ids = list(unit_ids)
    node.children = []
    for unit_id in unit_ids:
        store.relabel(unit_id, path)


def _split_node(store, gateway, cfg, node, path, unit_ids, recurse):
    units = [store.get(i) for i in unit_ids]
    k = cfg.choose_k(len(units))
    clusters = cluster_kmeans(units, k, cfg.kmeans_seed)
    by_id = {u.id: u for u in units}
    summaries = [
        summarize_cluster(gateway, path, [by_id[i] for i in cluster])
        for cluster in clusters.clusters
    ]
    node.cluster_summaries = summaries
    # the full path is the section title: it carries ancestor context into
    # the outline chain and keeps child headings from repeating ancestors
    headings = propose_headings(gateway, path, summaries)
    topic = store.topic
    heading_vecs = gateway.embed([f"{topic}: {h}" for h in headings])
    buckets: list[list[str]] = [[] for _ in headings]
    for unit in units:
        buckets[assign_embedding(unit.embedding, heading_vecs)].append(unit.id)

    populated = [(h, b) for h, b in zip(headings, buckets) if b]
    if len(populated) < 2:
        # every unit landed under one heading: further splitting adds no
        # structure, keep this node as a leaf
        node.cluster_summaries = summaries
        _make_leaf(store, node, path, unit_ids)
        return
    for heading, bucket in populated:
        child = OutlineNode(heading=heading, depth=node.depth + 1)
        child_path = f"{path}/{heading}"
        for unit_id in bucket:
            store.relabel(unit_id, child_path)
        node.children.append(child)
        if recurse:
            _organize_node(store, gateway, cfg, child, child_path, bucket)
        else:
            _make_leaf(store, child, child_path, bucket)
    node.assigned_unit_ids = []


# ---------------------------------------------------------------------------
# inspection
# ---------------------------------------------------------------------------


def dump_tree(node: OutlineNode, store: MemoryStore | None = None,
              show_units: bool = False) -> str:
    """Indented text rendering of the outline for the inspect command."""
    lines: list[str] = []

    def _walk(n: OutlineNode):
        indent = "  " * n.depth
        count = len(n.assigned_unit_ids)
        suffix = f" ({count} units)" if not n.children else ""
        lines.append(f"{indent}{n.heading}{suffix}")
        if show_units and store is not None:
            for unit_id in n.assigned_unit_ids:
                lines.append(f"{indent}  - {store.get(unit_id).text}")
        for child in n.children:
            _walk(child)

    _walk(node)
    return "\n".join(lines)


def outline_to_file(node: OutlineNode, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(node.to_json(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def outline_from_file(path) -> OutlineNode:
    with open(path, "r", encoding="utf-8") as fh:
        return OutlineNode.from_json(json.load(fh))
