"""Undirected graphs in compressed sparse row form, anchor link sets, and
the edge-dropout generator for aligned benchmark pairs.
"""
from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EdgeListParseError, GraphError

log = logging.getLogger(__name__)

__all__ = [
    "Graph",
    "AnchorLinkSet",
    "AlignedPair",
    "load_edge_list",
    "write_edge_list",
    "filter_min_degree",
    "generate_aligned_pair",
    "save_aligned_pair",
    "load_aligned_pair",
    "read_anchors",
    "write_anchors",
    "barabasi_albert_graph",
    "erdos_renyi_graph",
]


def _frozen(a, dtype=np.int64):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected simple graph over node ids ``0..n-1``.

    ``offsets`` has length ``n + 1`` and ``neighbors[offsets[u]:offsets[u+1]]``
    is the ascending neighbor list of ``u``. Every edge is stored twice.
    """

    offsets: np.ndarray
    neighbors: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "offsets", _frozen(self.offsets))
        object.__setattr__(self, "neighbors", _frozen(self.neighbors))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.node_count:
                raise GraphError("label count does not match node count")
            object.__setattr__(self, "labels", labels)

    @classmethod
    def from_edges(cls, node_count: int, edges, labels=None) -> "Graph":
        """Build a graph from an ``(m, 2)`` edge array.

        Direction is ignored, duplicates collapse and self-loops are dropped.
        """
        n = int(node_count)
        if n < 0:
            raise GraphError("node_count must be non-negative")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError("edge endpoint outside 0..node_count-1")
        e = e[e[:, 0] != e[:, 1]]
        both = np.concatenate([e, e[:, ::-1]])
        if both.size:
            key = np.unique(both[:, 0] * n + both[:, 1])
            src, dst = key // n, key % n
        else:
            src = dst = np.zeros(0, dtype=np.int64)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, src + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(offsets, dst, labels)

    @classmethod
    def empty(cls, node_count: int, labels=None) -> "Graph":
        return cls.from_edges(node_count, np.zeros((0, 2), dtype=np.int64), labels)

    @property
    def node_count(self) -> int:
        return len(self.offsets) - 1

    @property
    def edge_count(self) -> int:
        return len(self.neighbors) // 2

    def degree(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors_of(self, u: int) -> np.ndarray:
        return self.neighbors[self.offsets[u]:self.offsets[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors_of(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def edges(self) -> np.ndarray:
        """Edge array with ``u < v``, sorted lexicographically."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), self.degree())
        keep = src < self.neighbors
        return np.stack([src[keep], self.neighbors[keep]], axis=1)

    def edge_set(self) -> set:
        return {(int(u), int(v)) for u, v in self.edges()}

    def label(self, u: int) -> str:
        return self.labels[u] if self.labels is not None else str(u)

    def node_labels(self) -> tuple:
        if self.labels is not None:
            return self.labels
        return tuple(str(i) for i in range(self.node_count))

    def index(self) -> dict:
        """Map from node label to dense id."""
        return {lab: i for i, lab in enumerate(self.node_labels())}

    def with_edges(self, extra_edges) -> "Graph":
        """Return a new graph with ``extra_edges`` added (same node set)."""
        e = np.concatenate([self.edges(), np.asarray(extra_edges, dtype=np.int64).reshape(-1, 2)])
        return Graph.from_edges(self.node_count, e, self.labels)

    def check(self) -> None:
        """Raise ``GraphError`` if any structural invariant is violated."""
        off, nb, n = self.offsets, self.neighbors, self.node_count
        if len(off) < 1 or off[0] != 0 or off[-1] != len(nb) or np.any(np.diff(off) < 0):
            raise GraphError("bad CSR offsets")
        src = np.repeat(np.arange(n), np.diff(off))
        if np.any(src == nb):
            raise GraphError("self-loop present")
        for u in range(n):
            row = nb[off[u]:off[u + 1]]
            if np.any(np.diff(row) <= 0):
                raise GraphError(f"neighbor list of {u} not strictly ascending")
        fwd = set(zip(src.tolist(), nb.tolist()))
        if any((v, u) not in fwd for u, v in fwd):
            raise GraphError("adjacency not symmetric")

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.neighbors, other.neighbors)
                and self.node_labels() == other.node_labels())

    __hash__ = None

    def __repr__(self):
        return f"Graph(nodes={self.node_count}, edges={self.edge_count})"


@dataclass(frozen=True, eq=False)
class AnchorLinkSet:
    """Point-to-point correspondences between source and target node ids."""

    source: np.ndarray
    target: np.ndarray
    kind: str = "ground-truth"
    scores: np.ndarray | None = None

    def __post_init__(self):
        s = _frozen(self.source)
        t = _frozen(self.target)
        if s.shape != t.shape or s.ndim != 1:
            raise GraphError("anchor source/target must be equal-length vectors")
        if len(np.unique(s)) != len(s) or len(np.unique(t)) != len(t):
            raise GraphError("anchor links are not point-to-point")
        if self.kind not in ("ground-truth", "pseudo"):
            raise GraphError(f"unknown anchor kind {self.kind!r}")
        object.__setattr__(self, "source", s)
        object.__setattr__(self, "target", t)
        if self.scores is not None:
            sc = np.asarray(self.scores, dtype=np.float64)
            if sc.shape != s.shape:
                raise GraphError("one score per anchor expected")
            object.__setattr__(self, "scores", _frozen(sc, np.float64))

    @classmethod
    def from_pairs(cls, pairs: Iterable, kind="ground-truth", scores=None) -> "AnchorLinkSet":
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], kind, scores)

    @classmethod
    def identity(cls, n: int) -> "AnchorLinkSet":
        ids = np.arange(n, dtype=np.int64)
        return cls(ids, ids, "ground-truth")

    @classmethod
    def empty(cls, kind="pseudo") -> "AnchorLinkSet":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z, kind, np.zeros(0) if kind == "pseudo" else None)

    def __len__(self):
        return len(self.source)

    def pairs(self) -> list:
        return list(zip(self.source.tolist(), self.target.tolist()))

    def as_set(self) -> set:
        return set(self.pairs())

    def mapping(self) -> dict:
        """Source id -> target id."""
        return dict(self.pairs())

    def inverse(self) -> dict:
        """Target id -> source id."""
        return {t: s for s, t in self.pairs()}

    def reversed(self) -> "AnchorLinkSet":
        return AnchorLinkSet(self.target, self.source, self.kind, self.scores)

    def precision_against(self, truth: "AnchorLinkSet") -> float:
        """Fraction of these pairs that appear in ``truth``; 0 for an empty set."""
        if len(self) == 0:
            return 0.0
        t = truth.as_set()
        return sum(p in t for p in self.pairs()) / len(self)

    def __eq__(self, other):
        if not isinstance(other, AnchorLinkSet):
            return NotImplemented
        return (self.kind == other.kind and np.array_equal(self.source, other.source)
                and np.array_equal(self.target, other.target))

    __hash__ = None


@dataclass(frozen=True)
class AlignedPair:
    source: Graph
    target: Graph
    ground_truth: AnchorLinkSet
    lambda_e: float = 1.0
    seed: int | None = None
    meta: dict = field(default_factory=dict, compare=False)


# ---------------------------------------------------------------- edge lists

_SPLIT = {"tsv": re.compile(r"\s+"), "csv": re.compile(r"\s*,\s*"), "auto": re.compile(r"[\s,]+")}


def _parse_lines(path, fmt):
    sep = _SPLIT[fmt]
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = sep.split(line)
            if len(parts) != 2 or not all(parts):
                raise EdgeListParseError(path, lineno, line, "expected exactly two node ids")
            yield parts[0], parts[1]


def _is_int(s):
    return re.fullmatch(r"[+-]?\d+", s) is not None


def load_edge_list(path, format: str = "auto", nodes: Sequence[str] | None = None) -> Graph:
    """Read a whitespace- or comma-separated edge list.

    Ids are re-indexed densely: numerically if every id is an integer,
    otherwise by order of first appearance. Pass ``nodes`` to fix the node
    universe (and its order) instead, e.g. to keep isolated nodes.
    """
    if format not in _SPLIT:
        raise GraphError(f"unknown edge-list format {format!r}")
    path = Path(path)
    if not path.exists():
        raise GraphError(f"edge list not found: {path}")
    pairs = list(_parse_lines(path, format))
    if not pairs and nodes is None:
        raise GraphError(f"edge list {path} contains no edges")
    if nodes is not None:
        labels = [str(x) for x in nodes]
        index = {lab: i for i, lab in enumerate(labels)}
        missing = {x for p in pairs for x in p if x not in index}
        if missing:
            raise GraphError(f"{len(missing)} ids in {path} absent from node list, e.g. {sorted(missing)[0]!r}")
    else:
        seen = dict.fromkeys(x for p in pairs for x in p)
        labels = list(seen)
        if all(_is_int(x) for x in labels):
            labels.sort(key=int)
        index = {lab: i for i, lab in enumerate(labels)}
    e = np.array([(index[a], index[b]) for a, b in pairs], dtype=np.int64).reshape(-1, 2)
    g = Graph.from_edges(len(labels), e, labels)
    log.debug("loaded %s: %d nodes, %d edges", path, g.node_count, g.edge_count)
    return g


def write_edge_list(g: Graph, path, sep: str = "\t") -> None:
    labels = g.node_labels()
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edges():
            fh.write(f"{labels[u]}{sep}{labels[v]}\n")


# ----------------------------------------------------------- degree filtering

def filter_min_degree(g: Graph, min_deg: int, iterate: bool = True):
    """Drop nodes whose degree is ``<= min_deg``.

    With ``iterate`` (default) removal repeats until no remaining node falls
    at or below the threshold. Returns ``(graph, old_to_new)`` where
    removed nodes map to -1.
    """
    if min_deg < 0:
        raise GraphError("min_deg must be >= 0")
    alive = np.ones(g.node_count, dtype=bool)
    deg = g.degree().copy()
    while True:
        drop = alive & (deg <= min_deg)
        if not drop.any():
            break
        alive &= ~drop
        for u in np.flatnonzero(drop):
            deg[g.neighbors_of(u)] -= 1
        if not iterate:
            break
    if not alive.any():
        raise GraphError("graph eliminated by degree filter")
    old_to_new = np.full(g.node_count, -1, dtype=np.int64)
    old_to_new[alive] = np.arange(alive.sum())
    e = g.edges()
    e = e[alive[e[:, 0]] & alive[e[:, 1]]]
    labels = [g.node_labels()[i] for i in np.flatnonzero(alive)]
    return Graph.from_edges(int(alive.sum()), old_to_new[e], labels), old_to_new


# ------------------------------------------------------------ aligned pairs

def _dropout_count(lambda_e: float, m: int) -> int:
    rho = (1 - Fraction(str(lambda_e))) / 2
    x = rho * m
    return int(x + Fraction(1, 2)) if x >= 0 else 0  # round half up


def generate_aligned_pair(g: Graph, lambda_e: float, seed: int) -> AlignedPair:
    """Drop two disjoint random edge subsets, one per side.

    Each side loses ``round_half_up((1 - lambda_e) / 2 * |E|)`` edges, so
    the sides share ``|E| - 2k`` edges. Node sets are inherited unchanged
    and the ground truth is the identity bijection.
    """
    if not 0 < lambda_e <= 1:
        raise GraphError(f"lambda_e must lie in (0, 1], got {lambda_e}")
    edges = g.edges()
    m = len(edges)
    k = _dropout_count(lambda_e, m)
    if 2 * k > m:
        raise GraphError("not enough edges to drop")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(m)
    drop_s, drop_t = perm[:k], perm[k:2 * k]
    keep_s = np.ones(m, dtype=bool)
    keep_s[drop_s] = False
    keep_t = np.ones(m, dtype=bool)
    keep_t[drop_t] = False
    src = Graph.from_edges(g.node_count, edges[keep_s], g.labels)
    tgt = Graph.from_edges(g.node_count, edges[keep_t], g.labels)
    meta = {"dropped_per_side": k, "shared_edges": m - 2 * k, "original_edges": m}
    return AlignedPair(src, tgt, AnchorLinkSet.identity(g.node_count), float(lambda_e), seed, meta)


# --------------------------------------------------------------- anchor I/O

def write_anchors(path, anchors: AnchorLinkSet, source_labels=None, target_labels=None) -> None:
    """TSV ``source<TAB>target``; pseudo anchors carry a third score column."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, (s, t) in enumerate(anchors.pairs()):
            a = source_labels[s] if source_labels is not None else s
            b = target_labels[t] if target_labels is not None else t
            if anchors.scores is not None:
                fh.write(f"{a}\t{b}\t{float(anchors.scores[i])!r}\n")
            else:
                fh.write(f"{a}\t{b}\n")


def read_anchors(path, source_index: dict | None = None, target_index: dict | None = None,
                 kind: str = "ground-truth") -> AnchorLinkSet:
    src, tgt, scores = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise EdgeListParseError(path, lineno, line, "expected source<TAB>target[<TAB>score]")
            try:
                s = source_index[parts[0]] if source_index is not None else int(parts[0])
                t = target_index[parts[1]] if target_index is not None else int(parts[1])
            except (KeyError, ValueError) as exc:
                raise EdgeListParseError(path, lineno, line, f"unknown node id {exc}") from None
            src.append(s)
            tgt.append(t)
            if len(parts) == 3:
                scores.append(float(parts[2]))
    sc = np.asarray(scores) if scores and len(scores) == len(src) else None
    if sc is not None and kind == "ground-truth":
        kind = "pseudo"
    return AnchorLinkSet(np.asarray(src, dtype=np.int64), np.asarray(tgt, dtype=np.int64), kind, sc)


def save_aligned_pair(pair: AlignedPair, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(pair.source, out / "source.edges")
    write_edge_list(pair.target, out / "target.edges")
    write_anchors(out / "anchors.tsv", pair.ground_truth,
                  pair.source.node_labels(), pair.target.node_labels())
    meta = {
        "lambda_e": pair.lambda_e,
        "seed": pair.seed,
        "source_nodes": pair.source.node_count,
        "source_edges": pair.source.edge_count,
        "target_nodes": pair.target.node_count,
        "target_edges": pair.target.edge_count,
        "anchors": len(pair.ground_truth),
        **pair.meta,
        "source_labels": list(pair.source.node_labels()),
        "target_labels": list(pair.target.node_labels()),
    }
    with open(out / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")
    return out


def load_aligned_pair(in_dir) -> AlignedPair:
    d = Path(in_dir)
    if not (d / "meta.json").exists():
        raise GraphError(f"{d} is not an aligned-pair directory (meta.json missing)")
    with open(d / "meta.json", encoding="utf-8") as fh:
        meta = json.load(fh)
    src = load_edge_list(d / "source.edges", nodes=meta.get("source_labels"))
    tgt = load_edge_list(d / "target.edges", nodes=meta.get("target_labels"))
    truth = read_anchors(d / "anchors.tsv", src.index(), tgt.index())
    extra = {k: v for k, v in meta.items() if k not in ("source_labels", "target_labels")}
    return AlignedPair(src, tgt, truth, float(meta.get("lambda_e", 1.0)), meta.get("seed"), extra)


# ------------------------------------------------------- synthetic generators

def barabasi_albert_graph(n: int, m: int, seed: int) -> Graph:
    """Preferential attachment: each new node links to ``m`` distinct earlier nodes."""
    if not 1 <= m < n:
        raise GraphError("need 1 <= m < n")
    rng = np.random.default_rng(seed)
    edges = []
    repeated = []
    targets = list(range(m))
    for new in range(m, n):
        edges.extend((new, t) for t in targets)
        repeated.extend(targets)
        repeated.extend([new] * m)
        chosen = set()
        while len(chosen) < m:
            chosen.add(repeated[rng.integers(len(repeated))])
        targets = sorted(chosen)
    return Graph.from_edges(n, edges)


def erdos_renyi_graph(n: int, p: float, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))


def relabel(g: Graph, labels: Sequence[str]) -> Graph:
    return Graph(g.offsets, g.neighbors, tuple(labels))


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
