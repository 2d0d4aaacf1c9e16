"""Hubness-corrected cross-graph similarity, pseudo-anchor mining and
orthogonal Procrustes refinement of the mapping.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, NoAnchorsWarning, RankDeficientWarning
from .graph import AnchorLinkSet
from .linalg import cosine_matrix, svd, topk_rows

__all__ = [
    "CgssIndex",
    "build_cgss_index",
    "cgss_score",
    "cgss",
    "cgss_matrix",
    "mine_pseudo_anchors",
    "procrustes",
    "refine",
    "rank_candidates",
]


def _vectors(x):
    return np.asarray(getattr(x, "vectors", x), dtype=np.float64)


def _mean_top_k(sims, k):
    """Row-wise mean of the ``k`` largest entries (sorted, so summation order is fixed)."""
    return (-np.sort(-sims, axis=1)[:, :k]).mean(axis=1)


@dataclass(frozen=True)
class CgssIndex:
    """Neighbourhood densities of both sides.

    ``r_source[i]`` is the mean cosine of mapped source row ``i`` to its
    ``k`` closest target rows; ``r_target[j]`` the same for target row ``j``
    against the mapped source rows. ``shortfall`` is set when one side has
    fewer than ``k`` rows, in which case every row of it is used.
    """

    k: int
    r_source: np.ndarray
    r_target: np.ndarray
    shortfall: bool = False

    def score(self, i: int, j: int, cos: float) -> float:
        return cgss_score(cos, self.r_source[i], self.r_target[j])


def build_cgss_index(mapped_source, target, k: int = 10) -> CgssIndex:
    if k < 1:
        raise AlignmentError("K must be >= 1")
    xs, xt = _vectors(mapped_source), _vectors(target)
    if len(xs) == 0 or len(xt) == 0:
        raise AlignmentError("cannot build a similarity index over an empty side")
    cos = cosine_matrix(xs, xt)
    shortfall = k > min(len(xs), len(xt))
    return CgssIndex(k, _mean_top_k(cos, min(k, len(xt))), _mean_top_k(cos.T, min(k, len(xs))), shortfall)


def cgss_score(cos, r_t, r_s):
    """``2 cos - r_T - r_S``: cosine penalised by both endpoints' neighbourhood density."""
    return 2.0 * cos - r_t - r_s


def cgss(mapped_s, z_t, idx: CgssIndex, i: int, j: int) -> float:
    """Score of mapped source row ``i`` (vector ``mapped_s``) against target row ``j``."""
    cos = float(cosine_matrix(np.atleast_2d(mapped_s), np.atleast_2d(z_t))[0, 0])
    return idx.score(i, j, cos)


def cgss_matrix(mapped_source, target, idx: CgssIndex) -> np.ndarray:
    cos = cosine_matrix(_vectors(mapped_source), _vectors(target))
    return cgss_score(cos, idx.r_source[:, None], idx.r_target[None, :])


def mine_pseudo_anchors(mapped_source, target, idx: CgssIndex, threshold: float = 0.7,
                        use_threshold: bool = True) -> AnchorLinkSet:
    """Mutual best matches under CGSS whose score exceeds ``threshold``.

    Argmax ties go to the lowest id. The result is injective on both sides
    because each row and column has a single argmax.
    """
    if use_threshold and not -2.0 <= threshold <= 2.0:
        raise AlignmentError("threshold must lie in [-2, 2]")
    m = cgss_matrix(mapped_source, target, idx)
    best_t = m.argmax(axis=1)
    best_s = m.argmax(axis=0)
    src = np.flatnonzero(best_s[best_t] == np.arange(len(m)))
    tgt = best_t[src]
    scores = m[src, tgt]
    if use_threshold:
        keep = scores > threshold
        src, tgt, scores = src[keep], tgt[keep], scores[keep]
    return AnchorLinkSet(src, tgt, "pseudo", scores)


def procrustes(x, y) -> np.ndarray:
    """Orthogonal ``W`` minimising ``||W x - y||_F``; columns are paired points.

    ``W = U V^T`` with ``U S V^T = svd(y x^T)``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape != y.shape:
        raise AlignmentError(f"procrustes needs equal d x k inputs, got {x.shape} and {y.shape}")
    d, k = x.shape
    if k == 0:
        raise AlignmentError("procrustes needs at least one pair")
    if not np.any(x) or not np.any(y):
        raise AlignmentError("procrustes input is all zeros")
    if k < d:
        warnings.warn(f"only {k} pairs for a {d}-dimensional map; solution is not unique",
                      RankDeficientWarning, stacklevel=2)
    u, _, v = svd(y @ x.T)
    return u @ v.T


def refine(w, zs, zt, k: int = 10, threshold: float = 0.7, use_threshold: bool = True):
    """One round: map, index, mine mutual anchors, re-solve ``W`` on them.

    Returns ``(W, anchors)``. With no anchors the input map is returned
    unchanged and a ``NoAnchorsWarning`` is issued.
    """
    w = np.asarray(w, dtype=np.float64)
    zs, zt = _vectors(zs), _vectors(zt)
    mapped = zs @ w.T
    idx = build_cgss_index(mapped, zt, k)
    anchors = mine_pseudo_anchors(mapped, zt, idx, threshold, use_threshold)
    if len(anchors) == 0:
        warnings.warn("no pseudo anchors found; mapping left unchanged", NoAnchorsWarning, stacklevel=2)
        return w.copy(), anchors
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        w_new = procrustes(zs[anchors.source].T, zt[anchors.target].T)
    return w_new, anchors


def rank_candidates(w, zs, zt, method: str = "cgss", k: int = 10, top: int = 10) -> np.ndarray:
    """Top ``top`` target ids per source row under cosine (``nn``) or CGSS."""
    zs, zt = _vectors(zs), _vectors(zt)
    mapped = zs @ np.asarray(w, dtype=np.float64).T
    if method == "nn":
        scores = cosine_matrix(mapped, zt)
    elif method == "cgss":
        scores = cgss_matrix(mapped, zt, build_cgss_index(mapped, zt, k))
    else:
        raise AlignmentError(f"unknown retrieval method {method!r}")
    return topk_rows(scores, top)
