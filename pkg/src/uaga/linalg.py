"""Dense linear algebra helpers: one-sided Jacobi SVD and exact cosine search."""
from __future__ import annotations

from typing import NamedTuple

import numba
import numpy as np

from .errors import UagaError

__all__ = ["svd", "normalize_rows", "cosine_matrix", "topk_cosine", "topk_rows", "TopK"]


@numba.njit(cache=True)
def _jacobi_sweeps(a, v, tol, max_sweeps):
    m, n = a.shape
    # columns below this squared norm are rounding noise; rotating them never settles
    null2 = 0.0
    for k in range(m):
        for q in range(n):
            null2 += a[k, q] * a[k, q]
    null2 *= 1e-30
    for sweep in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                alpha = 0.0
                beta = 0.0
                gamma = 0.0
                for k in range(m):
                    alpha += a[k, i] * a[k, i]
                    beta += a[k, j] * a[k, j]
                    gamma += a[k, i] * a[k, j]
                if gamma == 0.0 or min(alpha, beta) <= null2 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                for k in range(m):
                    ai = a[k, i]
                    aj = a[k, j]
                    a[k, i] = c * ai - s * aj
                    a[k, j] = s * ai + c * aj
                for k in range(n):
                    vi = v[k, i]
                    vj = v[k, j]
                    v[k, i] = c * vi - s * vj
                    v[k, j] = s * vi + c * vj
        if not rotated:
            return sweep + 1
    return -1


def _complete_basis(u, filled):
    """Fill the columns of ``u`` not in ``filled`` with an orthonormal completion."""
    m = u.shape[0]
    basis = [u[:, j] for j in range(u.shape[1]) if filled[j]]
    candidates = iter(np.eye(m))
    for j in range(u.shape[1]):
        if filled[j]:
            continue
        for e in candidates:
            x = e.copy()
            for _ in range(2):  # re-orthogonalize once for stability
                for b in basis:
                    x -= (b @ x) * b
            nrm = np.linalg.norm(x)
            if nrm > 1e-8:
                x /= nrm
                u[:, j] = x
                basis.append(x)
                break
    return u


def svd(m, tol: float = 1e-14, max_sweeps: int = 80):
    """Thin SVD ``m = U @ diag(s) @ V.T`` by one-sided (Hestenes) Jacobi.

    Returns ``(U, s, V)`` with singular values in descending order. For a
    square input ``U`` and ``V`` are both orthogonal, including in the
    rank-deficient case where the null-space columns of ``U`` are completed
    to an orthonormal basis.
    """
    a = np.array(m, dtype=np.float64, copy=True)
    if a.ndim != 2:
        raise UagaError("svd expects a 2-D matrix")
    if not np.all(np.isfinite(a)):
        raise UagaError("svd input contains NaN or Inf")
    transposed = a.shape[0] < a.shape[1]
    if transposed:
        a = np.ascontiguousarray(a.T)
    rows, cols = a.shape
    v = np.eye(cols)
    if a.size:
        if _jacobi_sweeps(a, v, tol, max_sweeps) < 0:
            raise UagaError("Jacobi SVD did not converge")
    s = np.sqrt(np.einsum("ij,ij->j", a, a))
    order = np.argsort(-s, kind="stable")
    s = s[order]
    a = a[:, order]
    v = v[:, order]
    scale = s[0] if len(s) else 0.0
    filled = s > max(scale, 1e-300) * 1e-13
    u = np.zeros_like(a)
    u[:, filled] = a[:, filled] / s[filled]
    if not filled.all():
        u = _complete_basis(u, filled)
    if transposed:
        return v, s, u
    return u, s, v


def normalize_rows(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return np.divide(x, n, out=np.zeros_like(x), where=n > 0)


def cosine_matrix(a, b) -> np.ndarray:
    """Pairwise cosine similarities; rows with zero norm give 0."""
    return normalize_rows(a) @ normalize_rows(b).T


class TopK(NamedTuple):
    rows: np.ndarray
    scores: np.ndarray
    truncated: bool

    def pairs(self):
        return list(zip(self.rows.tolist(), self.scores.tolist()))


def topk_cosine(query, candidates, k: int) -> TopK:
    """Exact top-``k`` candidate rows by cosine to ``query``.

    Ties are broken by ascending row id; zero-norm candidates score ``-inf``.
    ``truncated`` is set when ``k`` exceeds the candidate count.
    """
    if k < 1:
        raise UagaError("k must be >= 1")
    q = np.asarray(query, dtype=np.float64)
    qn = np.linalg.norm(q)
    if qn == 0:
        raise UagaError("query vector has zero norm")
    c = np.asarray(getattr(candidates, "vectors", candidates), dtype=np.float64)
    norms = np.linalg.norm(c, axis=1)
    sims = np.full(len(c), -np.inf)
    ok = norms > 0
    sims[ok] = (c[ok] @ q) / (norms[ok] * qn)
    truncated = k > len(c)
    order = np.argsort(-sims, kind="stable")[:k]
    return TopK(order, sims[order], truncated)


def topk_rows(scores, k: int, chunk: int = 4096) -> np.ndarray:
    """Column indices of the ``k`` largest entries per row, descending, ties by id."""
    s = np.asarray(scores)
    k = min(k, s.shape[1])
    out = np.empty((s.shape[0], k), dtype=np.int64)
    for start in range(0, s.shape[0], chunk):
        block = s[start:start + chunk]
        out[start:start + chunk] = np.argsort(-block, axis=1, kind="stable")[:, :k]
    return out
