"""Slow reference implementations shared by the unit and acceptance tests."""
import numpy as np


def dense(g):
    a = np.zeros((g.node_count, g.node_count))
    for u, v in g.edge_set():
        a[u, v] = a[v, u] = 1.0
    return a


def floyd(g):
    n = g.node_count
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for u, v in g.edge_set():
        d[u, v] = d[v, u] = 1
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def path_counts(g, d):
    """Number of shortest paths between every pair, by layered counting."""
    n = g.node_count
    a = dense(g)
    sigma = np.eye(n)
    for s in range(n):
        order = sorted((x for x in range(n) if np.isfinite(d[s, x])), key=lambda x: d[s, x])
        for v in order:
            if v != s:
                sigma[s, v] = sum(sigma[s, u] for u in range(n) if a[u, v] and d[s, u] == d[s, v] - 1)
    return sigma


def closeness(g, wf=True):
    d = floyd(g)
    n = g.node_count
    out = np.zeros(n)
    for s in range(n):
        fin = d[s][np.isfinite(d[s])]
        if fin.sum() > 0:
            r = len(fin)
            out[s] = (r - 1) / fin.sum() * ((r - 1) / (n - 1) if wf else 1.0)
    return out


def betweenness(g):
    d = floyd(g)
    sigma = path_counts(g, d)
    n = g.node_count
    out = np.zeros(n)
    for s in range(n):
        for t in range(s + 1, n):
            if not np.isfinite(d[s, t]):
                continue
            for v in range(n):
                if v not in (s, t) and d[s, v] + d[v, t] == d[s, t]:
                    out[v] += sigma[s, v] * sigma[v, t] / sigma[s, t]
    return out


def eigenvector(g):
    w, v = np.linalg.eigh(dense(g))
    x = v[:, -1]
    return np.abs(x) / np.linalg.norm(x)


def common_neighbors(g, pairs):
    nb = [set(g.neighbors_of(u).tolist()) for u in range(g.node_count)]
    return np.array([len(nb[u] & nb[v]) for u, v in pairs], dtype=np.int64)
