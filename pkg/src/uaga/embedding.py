"""DeepWalk node embeddings: truncated uniform random walks fed to a
skip-gram model trained with negative sampling.
"""
from __future__ import annotations

import logging
import re
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numba
import numpy as np

from .errors import EmbeddingError
from .graph import Graph

log = logging.getLogger(__name__)

__all__ = [
    "WalkConfig",
    "EmbeddingMatrix",
    "generate_walks",
    "train_sgns",
    "deepwalk",
    "sgns_pair_loss",
    "save_embeddings",
    "load_embeddings",
]


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 40
    window: int = 5
    dim: int = 32
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_lr: float = 0.0001
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.window < 1:
            raise EmbeddingError("window must be >= 1")
        if self.walk_length <= self.window:
            raise EmbeddingError("walk_length must exceed window")
        if self.dim < 2:
            raise EmbeddingError("dim must be >= 2")
        if self.walks_per_node < 1 or self.epochs < 1 or self.negatives < 0:
            raise EmbeddingError("walks_per_node and epochs must be >= 1, negatives >= 0")

    def replace(self, **kw) -> "WalkConfig":
        return WalkConfig(**{**asdict(self), **kw})


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Row ``i`` is the embedding of node ``i``; ``ids`` holds node labels."""

    vectors: np.ndarray
    ids: tuple | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise EmbeddingError("embedding matrix must be 2-D")
        if not np.all(np.isfinite(v)):
            raise EmbeddingError("embedding contains NaN or Inf")
        object.__setattr__(self, "vectors", v)
        if self.ids is not None:
            ids = tuple(str(x) for x in self.ids)
            if len(ids) != len(v):
                raise EmbeddingError("one id per embedding row expected")
            object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def node_ids(self) -> tuple:
        return self.ids if self.ids is not None else tuple(str(i) for i in range(self.n))

    def __len__(self):
        return self.n


# -------------------------------------------------------------------- walks

def generate_walks(g: Graph, cfg: WalkConfig, seed: int | None = None) -> np.ndarray:
    """``walks_per_node`` rounds of one walk from every non-isolated node.

    Start order is reshuffled each round. Returns an int array of shape
    ``(rounds * starts, walk_length)``.
    """
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    deg = g.degree()
    starts = np.flatnonzero(deg > 0)
    if g.node_count == 0:
        raise EmbeddingError("graph is empty")
    if len(starts) == 0:
        raise EmbeddingError("every node is isolated; no walks possible")
    off, nbrs = g.offsets, g.neighbors
    walks = np.empty((cfg.walks_per_node * len(starts), cfg.walk_length), dtype=np.int64)
    for r in range(cfg.walks_per_node):
        cur = rng.permutation(starts)
        block = walks[r * len(starts):(r + 1) * len(starts)]
        block[:, 0] = cur
        u = rng.random((len(cur), cfg.walk_length - 1))
        for step in range(cfg.walk_length - 1):
            pick = (u[:, step] * deg[cur]).astype(np.int64)
            cur = nbrs[off[cur] + pick]
            block[:, step + 1] = cur
    return walks


# --------------------------------------------------------------------- SGNS

@numba.njit(cache=True)
def _sigmoid(x):
    if x > 30.0:
        return 1.0
    if x < -30.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


@numba.njit(cache=True, fastmath=True)
def _train_walk(walk, syn0, syn1, table, window, negatives, lr, work):
    d = syn0.shape[1]
    length = walk.shape[0]
    ntab = table.shape[0]
    for i in range(length):
        center = walk[i]
        lo = max(0, i - window)
        hi = min(length, i + window + 1)
        for j in range(lo, hi):
            if j == i:
                continue
            for q in range(d):
                work[q] = 0.0
            for k in range(negatives + 1):
                if k == 0:
                    ctx = walk[j]
                    label = 1.0
                else:
                    ctx = table[np.random.randint(0, ntab)]
                    if ctx == walk[j]:
                        continue
                    label = 0.0
                f = 0.0
                for q in range(d):
                    f += syn0[center, q] * syn1[ctx, q]
                g = (label - _sigmoid(f)) * lr
                for q in range(d):
                    work[q] += g * syn1[ctx, q]
                    syn1[ctx, q] += g * syn0[center, q]
            for q in range(d):
                syn0[center, q] += work[q]


@numba.njit(cache=True)
def _train_serial(walks, syn0, syn1, table, window, negatives, epochs, lr0, lr_min, seed):
    np.random.seed(seed)
    work = np.zeros(syn0.shape[1])
    total = epochs * walks.shape[0]
    done = 0
    for ep in range(epochs):
        for w in range(walks.shape[0]):
            lr = lr0 - (lr0 - lr_min) * done / total
            _train_walk(walks[w], syn0, syn1, table, window, negatives, lr, work)
            done += 1


@numba.njit(cache=True, parallel=True)
def _train_hogwild(walks, syn0, syn1, table, window, negatives, epochs, lr0, lr_min, seed):
    # lock-free concurrent updates: races on shared rows are accepted
    np.random.seed(seed)
    total = epochs * walks.shape[0]
    nw = walks.shape[0]
    for ep in range(epochs):
        for w in numba.prange(nw):
            work = np.zeros(syn0.shape[1])
            lr = lr0 - (lr0 - lr_min) * (ep * nw + w) / total
            _train_walk(walks[w], syn0, syn1, table, window, negatives, lr, work)


def noise_distribution(walks: np.ndarray, n: int) -> np.ndarray:
    """Cumulative unigram^0.75 weights over node frequency in the corpus."""
    counts = np.bincount(walks.ravel(), minlength=n).astype(np.float64)
    return np.cumsum(counts ** 0.75)


def noise_table(walks: np.ndarray, n: int, size: int = 1 << 20) -> np.ndarray:
    """Lookup table where node ``i`` fills a share of slots proportional to
    its unigram^0.75 weight; a uniform slot draw is a noise sample."""
    cum = noise_distribution(walks, n)
    pos = (np.arange(size) + 0.5) * (cum[-1] / size)
    return np.minimum(np.searchsorted(cum, pos, side="right"), n - 1).astype(np.int64)


def train_sgns(walks, cfg: WalkConfig, node_count: int | None = None,
               ids=None, seed: int | None = None) -> EmbeddingMatrix:
    """Skip-gram with negative sampling over a walk corpus.

    Each (center, context) pair within ``cfg.window`` positions is pushed
    towards ``sigmoid(z_center . c_context) = 1`` and ``cfg.negatives``
    noise nodes towards 0. The learning rate decays linearly per walk
    processed. Only the center (input) vectors are returned.
    """
    walks = np.ascontiguousarray(walks, dtype=np.int64)
    if walks.size == 0:
        raise EmbeddingError("empty walk corpus")
    n = int(node_count if node_count is not None else walks.max() + 1)
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    d = cfg.dim
    syn0 = (rng.random((n, d)) - 0.5) / d
    syn1 = np.zeros((n, d))
    table = noise_table(walks, n)
    kernel_seed = int(rng.integers(2**31 - 1))
    args = (walks, syn0, syn1, table, cfg.window, cfg.negatives, cfg.epochs,
            cfg.initial_lr, cfg.min_lr, kernel_seed)
    if cfg.threads > 1:
        numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
        _train_hogwild(*args)
    else:
        _train_serial(*args)
    if not np.all(np.isfinite(syn0)):
        raise EmbeddingError("SGNS diverged (non-finite vectors)")
    return EmbeddingMatrix(syn0, ids)


def deepwalk(g: Graph, cfg: WalkConfig, seed: int | None = None) -> EmbeddingMatrix:
    """Walks plus SGNS. Isolated nodes keep their random initial vector."""
    seed = cfg.seed if seed is None else seed
    walk_seed, train_seed = np.random.SeedSequence(seed).generate_state(2)
    walks = generate_walks(g, cfg, seed=int(walk_seed))
    return train_sgns(walks, cfg, g.node_count, g.node_labels(), seed=int(train_seed))


def sgns_pair_loss(z, c_pos, c_negs):
    """Negative-sampling loss for one center vector and its gradients.

    ``-log s(z.c_pos) - sum log s(-z.c_neg)``; returns
    ``(loss, dz, dc_pos, dc_negs)``.
    """
    z = np.asarray(z, dtype=np.float64)
    c_negs = np.atleast_2d(np.asarray(c_negs, dtype=np.float64)).reshape(-1, len(z))
    sp = 1.0 / (1.0 + np.exp(-(z @ c_pos)))
    sn = 1.0 / (1.0 + np.exp(c_negs @ z))
    loss = -np.log(sp) - np.log(sn).sum()
    dz = -(1 - sp) * c_pos + ((1 - sn)[:, None] * c_negs).sum(0)
    dc_pos = -(1 - sp) * z
    dc_negs = (1 - sn)[:, None] * z[None, :]
    return loss, dz, dc_pos, dc_negs


# ---------------------------------------------------------------------- I/O

def save_embeddings(emb: EmbeddingMatrix, path, binary: bool = False) -> None:
    """Text: ``n d`` header then ``id v1 .. vd`` at 9 significant digits.

    Binary: little-endian ``u64 n, u64 d`` then ``float32`` rows.
    """
    path = Path(path)
    if binary:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<QQ", emb.n, emb.d))
            fh.write(emb.vectors.astype("<f4").tobytes())
        return
    ids = emb.node_ids()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{emb.n} {emb.d}\n")
        for i in range(emb.n):
            fh.write(ids[i] + " " + " ".join(f"{x:.9g}" for x in emb.vectors[i]) + "\n")


def load_embeddings(path, binary: bool | None = None) -> EmbeddingMatrix:
    path = Path(path)
    if not path.exists():
        raise EmbeddingError(f"embedding file not found: {path}")
    if binary is None:
        with open(path, "rb") as fh:
            first = fh.read(64).split(b"\n", 1)[0]
        binary = re.fullmatch(rb"\s*\d+\s+\d+\s*", first) is None
    if binary:
        raw = path.read_bytes()
        n, d = struct.unpack("<QQ", raw[:16])
        data = np.frombuffer(raw[16:], dtype="<f4")
        if data.size != n * d:
            raise EmbeddingError(f"{path}: expected {n}x{d} floats, found {data.size}")
        return EmbeddingMatrix(data.reshape(n, d).astype(np.float64))
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise EmbeddingError(f"{path}: first line must be '<count> <dim>'")
        n, d = int(header[0]), int(header[1])
        ids, rows = [], []
        for lineno, line in enumerate(fh, 2):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != d + 1:
                raise EmbeddingError(f"{path}:{lineno}: expected id plus {d} values")
            ids.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(rows) != n:
        raise EmbeddingError(f"{path}: header says {n} rows, found {len(rows)}")
    return EmbeddingMatrix(np.array(rows, dtype=np.float64).reshape(n, d), tuple(ids))
