"""End-to-end alignment: single-pass UAGA and the incremental loop that
extends both graphs with edges implied by pseudo anchors.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .adversarial import AdvConfig, AdversarialResult, save_mapping, train_adversarial, write_loss_history
from .embedding import EmbeddingMatrix, WalkConfig, deepwalk, save_embeddings
from .errors import AlignmentError, GraphError
from .evaluation import precision_at_n
from .graph import AnchorLinkSet, Graph, write_anchors, write_edge_list
from .linalg import normalize_rows
from .refinement import build_cgss_index, mine_pseudo_anchors, rank_candidates, refine

log = logging.getLogger(__name__)

__all__ = [
    "AlignConfig",
    "VARIANTS",
    "UagaResult",
    "IUagaResult",
    "extend_graph",
    "round_seeds",
    "align_embeddings",
    "run_uaga",
    "run_iuaga",
]

# variant name -> (apply refinement, retrieval metric)
VARIANTS = {
    "Adv-NN": (False, "nn"),
    "Adv-CGSS": (False, "cgss"),
    "Adv-Refine-NN": (True, "nn"),
    "Adv-Refine-CGSS": (True, "cgss"),
}


@dataclass(frozen=True)
class AlignConfig:
    k: int = 10
    threshold: float = 0.7
    refine_threshold: bool = False
    extend_threshold: bool = True
    normalize: bool = True
    top: int = 10
    outer_max: int = 5
    stop_tol: float = 0.01

    def __post_init__(self):
        if self.k < 1 or self.top < 1 or self.outer_max < 1:
            raise AlignmentError("k, top and outer_max must be >= 1")
        if not 0 <= self.stop_tol <= 1:
            raise AlignmentError("stop_tol must lie in [0, 1]")

    def replace(self, **kw) -> "AlignConfig":
        return AlignConfig(**{**asdict(self), **kw})


def extend_graph(g: Graph, other: Graph, anchors: AnchorLinkSet, direction: str = "source") -> Graph:
    """Add ``(u, v)`` whenever both are anchored and their counterparts are linked in ``other``.

    ``direction`` says which side of ``anchors`` refers to ``g``.
    """
    if direction == "source":
        mine, theirs = anchors.source, anchors.target
    elif direction == "target":
        mine, theirs = anchors.target, anchors.source
    else:
        raise GraphError(f"direction must be 'source' or 'target', not {direction!r}")
    if len(mine) == 0:
        return g
    if mine.min() < 0 or mine.max() >= g.node_count or theirs.min() < 0 or theirs.max() >= other.node_count:
        raise GraphError("anchor references a node id outside the graphs")
    back = np.full(other.node_count, -1, dtype=np.int64)
    back[theirs] = mine
    e = other.edges()
    u, v = back[e[:, 0]], back[e[:, 1]]
    keep = (u >= 0) & (v >= 0) & (u != v)
    if not keep.any():
        return g
    return g.with_edges(np.stack([u[keep], v[keep]], axis=1))


def round_seeds(seed: int, round_index: int) -> tuple:
    """Independent (source walk, target walk, adversarial) seeds for one round."""
    s = np.random.SeedSequence([int(seed), int(round_index)]).generate_state(3)
    return tuple(int(x) for x in s)


def _prep(z, normalize):
    v = np.asarray(getattr(z, "vectors", z), dtype=np.float64)
    return normalize_rows(v) if normalize else v


@dataclass
class UagaResult:
    adversarial: AdversarialResult
    mapping: np.ndarray
    anchors: AnchorLinkSet
    zs: np.ndarray
    zt: np.ndarray
    config: AlignConfig = field(default_factory=AlignConfig)

    def candidates(self, variant: str = "Adv-Refine-CGSS", top: int | None = None) -> np.ndarray:
        if variant not in VARIANTS:
            raise AlignmentError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
        refined, metric = VARIANTS[variant]
        w = self.mapping if refined else self.adversarial.mapping
        return rank_candidates(w, self.zs, self.zt, metric, self.config.k, top or self.config.top)


def align_embeddings(zs, zt, adv_cfg: AdvConfig, cfg: AlignConfig = AlignConfig()) -> UagaResult:
    """Adversarial map followed by one refinement round."""
    a, b = _prep(zs, cfg.normalize), _prep(zt, cfg.normalize)
    if a.shape[1] != b.shape[1]:
        raise AlignmentError(f"dimension mismatch: source d={a.shape[1]}, target d={b.shape[1]}")
    adv = train_adversarial(a, b, adv_cfg)
    w, anchors = refine(adv.mapping, a, b, cfg.k, cfg.threshold, cfg.refine_threshold)
    return UagaResult(adv, w, anchors, a, b, cfg)


def _embed_pair(source, target, walk_cfg, seed, round_index):
    s_seed, t_seed, a_seed = round_seeds(seed, round_index)
    return deepwalk(source, walk_cfg, seed=s_seed), deepwalk(target, walk_cfg, seed=t_seed), a_seed


def run_uaga(source: Graph, target: Graph, walk_cfg: WalkConfig, adv_cfg: AdvConfig,
             cfg: AlignConfig = AlignConfig(), seed: int = 0) -> UagaResult:
    """Embed both graphs with independent seed streams, then align."""
    zs, zt, a_seed = _embed_pair(source, target, walk_cfg, seed, 0)
    return align_embeddings(zs, zt, adv_cfg.replace(seed=a_seed), cfg)


@dataclass
class IUagaResult:
    mapping: np.ndarray
    anchors: AnchorLinkSet
    rounds: list
    source: Graph
    target: Graph
    zs: np.ndarray
    zt: np.ndarray
    histories: list
    converged: bool = False
    stopped_early: bool = False
    first_round: UagaResult | None = None
    config: AlignConfig = field(default_factory=AlignConfig)
    extensions: list = field(default_factory=list)

    def candidates(self, top: int | None = None) -> np.ndarray:
        return rank_candidates(self.mapping, self.zs, self.zt, "cgss", self.config.k, top or self.config.top)


def _added_edges(before: Graph, after: Graph) -> np.ndarray:
    if after is before:
        return np.zeros((0, 2), dtype=np.int64)
    old = before.edge_set()
    return np.array([e for e in map(tuple, after.edges().tolist()) if e not in old],
                    dtype=np.int64).reshape(-1, 2)


def _false_edges(added, truth_map: dict, other: Graph) -> int:
    """Added edges whose true counterparts are not linked in the other graph."""
    other_edges = other.edge_set()
    bad = 0
    for u, v in added.tolist():
        a, b = truth_map.get(u), truth_map.get(v)
        if a is None or b is None or (min(a, b), max(a, b)) not in other_edges:
            bad += 1
    return bad


def _anchor_change(prev: AnchorLinkSet | None, cur: AnchorLinkSet) -> float:
    if prev is None:
        return 1.0
    a, b = prev.as_set(), cur.as_set()
    return len(a ^ b) / max(len(a), 1)


def run_iuaga(source: Graph, target: Graph, walk_cfg: WalkConfig, adv_cfg: AdvConfig,
              cfg: AlignConfig = AlignConfig(), seed: int = 0, truth: AnchorLinkSet | None = None,
              checkpoint_dir=None, ns=(1, 5, 10), keep_extensions: bool = False) -> IUagaResult:
    """Repeat embed / adversarial map / refine / mine / extend.

    Each round re-embeds the current (extended) graphs with seeds derived
    from ``(seed, round)``. Stops when the pseudo-anchor set changes by less
    than ``stop_tol`` (symmetric difference over the previous size), when a
    round yields no anchors, or after ``outer_max`` rounds. The final
    alignment uses the last map with CGSS retrieval.
    """
    if source.node_count == 0 or target.node_count == 0:
        raise GraphError("graphs must be nonempty")
    truth_map = truth.mapping() if truth is not None else None
    truth_inv = truth.inverse() if truth is not None else None
    rounds, histories, extensions = [], [], []
    prev = None
    converged = stopped = False
    first = None
    gs, gt = source, target
    for r in range(cfg.outer_max):
        zs, zt, a_seed = _embed_pair(gs, gt, walk_cfg, seed, r)
        res = align_embeddings(zs, zt, adv_cfg.replace(seed=a_seed), cfg)
        if first is None:
            first = res
        histories.append(res.adversarial.history)
        w = res.mapping
        mapped = res.zs @ w.T
        idx = build_cgss_index(mapped, res.zt, cfg.k)
        t_hat = mine_pseudo_anchors(mapped, res.zt, idx, cfg.threshold, cfg.extend_threshold)
        change = _anchor_change(prev, t_hat)
        row = {
            "round": r,
            "pseudo_anchors": len(t_hat),
            "refine_anchors": len(res.anchors),
            "anchor_change": change,
            "source_edges": gs.edge_count,
            "target_edges": gt.edge_count,
        }
        if truth is not None:
            row["pseudo_precision"] = t_hat.precision_against(truth)
            cands = rank_candidates(w, res.zs, res.zt, "cgss", cfg.k, max(max(ns), cfg.top))
            row["precision_at"] = {str(k): v for k, v in precision_at_n(cands, truth, ns).items()}
        if len(t_hat) == 0:
            log.warning("round %d produced no pseudo anchors; stopping", r)
            stopped = True
            row.update(added_source_edges=0, added_target_edges=0)
            rounds.append(row)
            break
        gs_new = extend_graph(gs, gt, t_hat, "source")
        gt_new = extend_graph(gt, gs, t_hat, "target")
        add_s, add_t = _added_edges(gs, gs_new), _added_edges(gt, gt_new)
        row.update(added_source_edges=len(add_s), added_target_edges=len(add_t))
        if truth is not None:
            row["false_source_edges"] = _false_edges(add_s, truth_map, gt)
            row["false_target_edges"] = _false_edges(add_t, truth_inv, gs)
        rounds.append(row)
        if keep_extensions:
            extensions.append((gs, gt, t_hat, gs_new, gt_new))
        if checkpoint_dir is not None:
            _checkpoint(Path(checkpoint_dir) / f"round_{r}", gs_new, gt_new, zs, zt, w, t_hat, row,
                        res.adversarial.history)
        gs, gt = gs_new, gt_new
        if r > 0 and change < cfg.stop_tol:
            converged = True
            break
        prev = t_hat
    return IUagaResult(w, t_hat, rounds, gs, gt, res.zs, res.zt, histories, converged, stopped,
                       first, cfg, extensions)


def _checkpoint(out: Path, gs, gt, zs: EmbeddingMatrix, zt: EmbeddingMatrix, w, t_hat, row, history):
    out.mkdir(parents=True, exist_ok=True)
    write_edge_list(gs, out / "source.edges")
    write_edge_list(gt, out / "target.edges")
    save_embeddings(zs, out / "source.emb")
    save_embeddings(zt, out / "target.emb")
    save_mapping(w, out / "mapping.txt")
    write_anchors(out / "pseudo_anchors.tsv", t_hat, gs.node_labels(), gt.node_labels())
    write_loss_history(history, out / "loss.csv")
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(row, fh, indent=1, sort_keys=True)
        fh.write("\n")
