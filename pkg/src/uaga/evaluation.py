"""Alignment and link-prediction metrics, and the report format."""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EvaluationError
from .graph import AnchorLinkSet, Graph

__all__ = [
    "precision_at_n",
    "split_edges",
    "candidate_pairs",
    "dot_product_scores",
    "link_prediction_eval",
    "AlignmentReport",
    "summarize",
    "write_summary_csv",
]


def precision_at_n(candidates, truth: AnchorLinkSet, ns=(1, 5, 10)) -> dict:
    """Fraction of ground-truth source nodes whose counterpart is in their top-N list.

    ``candidates`` is a 2-D array (row = source id) or a mapping from source
    id to a ranked list. Source nodes absent from ``truth`` are not scored.
    """
    ns = sorted(set(int(n) for n in ns))
    if not ns or ns[0] < 1:
        raise EvaluationError("N values must be >= 1")
    if len(truth) == 0:
        raise EvaluationError("ground truth is empty")
    is_map = isinstance(candidates, dict)
    hits = np.zeros(len(ns))
    for s, t in truth.pairs():
        if is_map:
            if s not in candidates:
                raise EvaluationError(f"source node {s} has no candidate list")
            row = list(candidates[s])
        else:
            if s >= len(candidates):
                raise EvaluationError(f"source node {s} has no candidate list")
            row = list(candidates[s])
        if len(row) < ns[-1]:
            raise EvaluationError(f"candidate list of {s} shorter than N={ns[-1]}")
        for i, n in enumerate(ns):
            if t in row[:n]:
                hits[i] += 1
    return {n: float(h / len(truth)) for n, h in zip(ns, hits)}


# ---------------------------------------------------------- link prediction

def split_edges(g: Graph, holdout: float, seed: int):
    """Hold out ``round(holdout * |E|)`` random edges; returns ``(train_graph, held_out)``."""
    if not 0 < holdout < 1:
        raise EvaluationError("holdout fraction must lie in (0, 1)")
    e = g.edges()
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(e))
    k = int(round(holdout * len(e)))
    held = e[np.sort(perm[:k])]
    train = Graph.from_edges(g.node_count, e[np.sort(perm[k:])], g.labels)
    return train, held


def candidate_pairs(g: Graph) -> np.ndarray:
    """All unordered non-adjacent pairs ``u < v`` in lexicographic order."""
    n = g.node_count
    iu, ju = np.triu_indices(n, 1)
    adj = np.zeros((n, n), dtype=bool)
    src = np.repeat(np.arange(n), np.diff(g.offsets))
    adj[src, g.neighbors] = True
    keep = ~adj[iu, ju]
    return np.stack([iu[keep], ju[keep]], axis=1)


def dot_product_scores(emb, pairs) -> np.ndarray:
    z = np.asarray(getattr(emb, "vectors", emb), dtype=np.float64)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return np.einsum("ij,ij->i", z[pairs[:, 0]], z[pairs[:, 1]])


def link_prediction_eval(observed: Graph, held_out, pairs, scores, ks=(10, 50, 100)) -> dict:
    """precision@k: share of held-out edges among the ``k`` top-scored pairs.

    Pairs are ranked by descending score with ties kept in input order.
    Every scored pair must be unobserved.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) != len(pairs):
        raise EvaluationError("one score per pair expected")
    obs = observed.edge_set()
    canon = lambda u, v: (u, v) if u < v else (v, u)  # noqa: E731
    if any(canon(u, v) in obs for u, v in pairs.tolist()):
        raise EvaluationError("scored pairs must not include observed edges")
    positives = {canon(u, v) for u, v in np.asarray(held_out).reshape(-1, 2).tolist()}
    if positives & obs:
        raise EvaluationError("held-out edges overlap the observed graph")
    order = np.argsort(-scores, kind="stable")
    hit = np.array([canon(u, v) in positives for u, v in pairs[order].tolist()], dtype=np.float64)
    out = {}
    for k in ks:
        if k > len(pairs):
            raise EvaluationError(f"k={k} exceeds the {len(pairs)} scored pairs")
        out[int(k)] = float(hit[:k].mean())
    return out


# ------------------------------------------------------------------ reports

@dataclass
class AlignmentReport:
    scenario: str
    method: str
    precision_at: dict
    seed: int | None = None
    pseudo_anchor_count: int | None = None
    pseudo_anchor_precision: float | None = None
    loss_curves: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    wall_clock: float | None = None

    def __post_init__(self):
        self.precision_at = {int(k): float(v) for k, v in self.precision_at.items()}
        for v in self.precision_at.values():
            if not 0.0 <= v <= 1.0:
                raise EvaluationError(f"precision {v} outside [0, 1]")

    def to_dict(self, include_timing: bool = True) -> dict:
        d = asdict(self)
        d["precision_at"] = {str(k): v for k, v in sorted(self.precision_at.items())}
        d["loss_curves"] = [list(r) for r in self.loss_curves]
        if not include_timing:
            d.pop("wall_clock")
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "AlignmentReport":
        d = dict(d)
        d["loss_curves"] = [tuple(r) for r in d.get("loss_curves", [])]
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "AlignmentReport":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        if not isinstance(other, AlignmentReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def summarize(reports) -> list:
    """Mean and standard deviation of P@N per (scenario, method)."""
    groups = defaultdict(list)
    for r in reports:
        groups[(r.scenario, r.method)].append(r)
    rows = []
    for (scenario, method), rs in groups.items():
        ns = sorted(set.intersection(*(set(r.precision_at) for r in rs)))
        row = {"scenario": scenario, "method": method, "runs": len(rs)}
        for n in ns:
            vals = np.array([r.precision_at[n] for r in rs])
            row[f"P@{n}"] = float(vals.mean())
            row[f"P@{n}_std"] = float(vals.std())
        rows.append(row)
    return rows


def write_summary_csv(reports, path) -> list:
    rows = summarize(reports)
    cols = ["scenario", "method", "runs"]
    for r in rows:
        cols += [c for c in r if c not in cols]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        out.writeheader()
        for r in rows:
            out.writerow({k: (f"{v:.4f}" if isinstance(v, float) else v) for k, v in r.items()})
    return rows
