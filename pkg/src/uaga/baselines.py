"""Centrality-based unsupervised aligners and the common-neighbour link scorer."""
from __future__ import annotations

from collections import deque

import numpy as np

from .errors import CentralityError
from .graph import Graph

__all__ = [
    "CENTRALITY_KINDS",
    "degree_centrality",
    "closeness_centrality",
    "betweenness_centrality",
    "eigenvector_centrality",
    "centrality",
    "centrality_align",
    "common_neighbor_scores",
    "write_centrality",
]

CENTRALITY_KINDS = ("degree", "closeness", "betweenness", "eigenvector")


def _check(g: Graph):
    if g.node_count == 0:
        raise CentralityError("graph is empty")


def degree_centrality(g: Graph) -> np.ndarray:
    _check(g)
    return g.degree().astype(np.float64)


def _bfs_distances(g: Graph, s: int) -> np.ndarray:
    dist = np.full(g.node_count, -1, dtype=np.int64)
    dist[s] = 0
    frontier = np.array([s])
    off, nb = g.offsets, g.neighbors
    level = 0
    while len(frontier):
        level += 1
        nxt = np.concatenate([nb[off[u]:off[u + 1]] for u in frontier])
        nxt = np.unique(nxt[dist[nxt] < 0])
        dist[nxt] = level
        frontier = nxt
    return dist


def closeness_centrality(g: Graph, wf_correction: bool = True) -> np.ndarray:
    """``(r - 1) / sum(d)`` over the ``r`` nodes reachable from each node.

    With ``wf_correction`` the value is further scaled by ``(r - 1)/(n - 1)``
    so that nodes in small components are not over-rated. Isolated nodes get 0.
    """
    _check(g)
    n = g.node_count
    out = np.zeros(n)
    for s in range(n):
        dist = _bfs_distances(g, s)
        reach = dist[dist >= 0]
        total = reach.sum()
        if total > 0:
            r = len(reach)
            out[s] = (r - 1) / total
            if wf_correction and n > 1:
                out[s] *= (r - 1) / (n - 1)
    return out


def betweenness_centrality(g: Graph) -> np.ndarray:
    """Brandes' exact algorithm, unnormalised, each unordered pair counted once."""
    _check(g)
    n = g.node_count
    off, nb = g.offsets, g.neighbors
    cb = np.zeros(n)
    for s in range(n):
        stack = []
        preds = [[] for _ in range(n)]
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1, dtype=np.int64)
        dist[s] = 0
        q = deque([s])
        while q:
            v = q.popleft()
            stack.append(v)
            for w in nb[off[v]:off[v + 1]].tolist():
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    q.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = np.zeros(n)
        while stack:
            w = stack.pop()
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                cb[w] += delta[w]
    return cb / 2.0


def eigenvector_centrality(g: Graph, tol: float = 1e-13, max_iter: int = 10_000) -> np.ndarray:
    """Leading adjacency eigenvector by power iteration, L2-normalised, non-negative.

    Iterates with ``A + I`` (same eigenvectors, spectrum shifted by one) so
    that bipartite graphs, whose spectrum is symmetric, do not oscillate.
    """
    _check(g)
    n = g.node_count
    src = np.repeat(np.arange(n), np.diff(g.offsets))
    nb = g.neighbors
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(max_iter):
        y = x + np.bincount(src, weights=x[nb], minlength=n)
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) < tol:
            return np.abs(y)
        x = y
    raise CentralityError(f"eigenvector centrality did not converge in {max_iter} iterations")


def centrality(g: Graph, kind: str) -> np.ndarray:
    if kind == "degree":
        return degree_centrality(g)
    if kind == "closeness":
        return closeness_centrality(g)
    if kind == "betweenness":
        return betweenness_centrality(g)
    if kind == "eigenvector":
        return eigenvector_centrality(g)
    raise CentralityError(f"unknown centrality {kind!r}; choose from {', '.join(CENTRALITY_KINDS)}")


def centrality_align(source: Graph, target: Graph, kind: str, top: int | None = None) -> np.ndarray:
    """Target ids ranked by ``|c_s(u) - c_t(v)|`` for every source node ``u``.

    Ties keep ascending target id. Returns an ``(n_s, top)`` array
    (all targets when ``top`` is None).
    """
    cs = centrality(source, kind)
    ct = centrality(target, kind)
    top = len(ct) if top is None else min(top, len(ct))
    out = np.empty((len(cs), top), dtype=np.int64)
    for start in range(0, len(cs), 1024):
        diff = np.abs(cs[start:start + 1024, None] - ct[None, :])
        out[start:start + 1024] = np.argsort(diff, axis=1, kind="stable")[:, :top]
    return out


def common_neighbor_scores(g: Graph, pairs) -> np.ndarray:
    """``|N(u) & N(v)|`` for each ``(u, v)`` row of ``pairs``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    n = g.node_count
    if len(pairs) and (pairs.min() < 0 or pairs.max() >= n):
        raise CentralityError("pair references a node outside the graph")
    adj = np.zeros((n, n), dtype=bool) if n <= 20_000 else None
    if adj is None:
        nbr = [set(g.neighbors_of(u).tolist()) for u in range(n)]
        return np.array([len(nbr[u] & nbr[v]) for u, v in pairs.tolist()], dtype=np.int64)
    src = np.repeat(np.arange(n), np.diff(g.offsets))
    adj[src, g.neighbors] = True
    out = np.empty(len(pairs), dtype=np.int64)
    step = max(1, 2_000_000 // max(n, 1))
    for i in range(0, len(pairs), step):
        p = pairs[i:i + step]
        out[i:i + step] = (adj[p[:, 0]] & adj[p[:, 1]]).sum(axis=1)
    return out


def write_centrality(path, g: Graph, scores) -> None:
    labels = g.node_labels()
    with open(path, "w", encoding="utf-8") as fh:
        for lab, s in zip(labels, np.asarray(scores).tolist()):
            fh.write(f"{lab}\t{s!r}\n")
