"""Adversarial learning of a linear map between two embedding spaces.

A two-layer discriminator learns to tell mapped source vectors ``W z_s``
from target vectors ``z_t``; the map ``W`` is updated to fool it, and after
every map step ``W`` is pulled back towards the orthogonal manifold.
Gradients are written out by hand (numpy only).
"""
from __future__ import annotations

import csv
import logging
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError
from .linalg import svd

log = logging.getLogger(__name__)

__all__ = [
    "AdvConfig",
    "Discriminator",
    "AdversarialResult",
    "discriminator_objective",
    "mapping_objective",
    "disc_loss",
    "disc_loss_and_grads",
    "map_loss",
    "map_loss_and_grad",
    "orthogonality_update",
    "orthogonality_residual",
    "moment_matching_init",
    "train_adversarial",
    "save_mapping",
    "load_mapping",
    "write_loss_history",
]

PROB_EPS = 1e-12


@dataclass(frozen=True)
class AdvConfig:
    lr: float = 1e-3
    lr_decay: float = 0.95
    batch: int = 1000
    epochs: int = 20
    epoch_size: int | None = None
    disc_steps_per_map_step: int = 1
    beta: float = 0.01
    hidden: int = 2048
    leaky_slope: float = 0.2
    input_dropout: float = 0.1
    smoothing: float = 0.2
    init: str = "moments"
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise AlignmentError("lr must be > 0")
        if not 0 < self.lr_decay <= 1:
            raise AlignmentError("lr_decay must lie in (0, 1]")
        if self.beta < 0:
            raise AlignmentError("beta must be >= 0")
        if self.batch < 1 or self.epochs < 0 or self.disc_steps_per_map_step < 1:
            raise AlignmentError("batch and disc steps must be >= 1, epochs >= 0")
        if not 0 <= self.input_dropout < 1 or not 0 <= self.smoothing < 0.5:
            raise AlignmentError("dropout must lie in [0, 1) and smoothing in [0, 0.5)")
        if self.init not in ("identity", "moments"):
            raise AlignmentError(f"unknown init {self.init!r}")

    def replace(self, **kw) -> "AdvConfig":
        return AdvConfig(**{**asdict(self), **kw})


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(eq=False)
class Discriminator:
    """``sigmoid(w2 . leaky(x @ w1 + b1) + b2)``: probability that x is a mapped source vector."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float = 0.0
    slope: float = 0.2
    input_dropout: float = 0.1
    smoothing: float = 0.2

    @classmethod
    def init(cls, dim: int, hidden: int = 2048, rng=None, slope=0.2, input_dropout=0.1, smoothing=0.2):
        rng = np.random.default_rng(rng)
        a1 = 1.0 / math.sqrt(dim)
        a2 = 1.0 / math.sqrt(hidden)
        return cls(rng.uniform(-a1, a1, (dim, hidden)), rng.uniform(-a1, a1, hidden),
                   rng.uniform(-a2, a2, hidden), float(rng.uniform(-a2, a2)),
                   slope, input_dropout, smoothing)

    @property
    def dim(self) -> int:
        return self.w1.shape[0]

    @property
    def parameter_count(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + 1

    def params(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": np.array(self.b2)}

    def copy(self) -> "Discriminator":
        return Discriminator(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2,
                             self.slope, self.input_dropout, self.smoothing)

    def dropout_mask(self, shape, rng) -> np.ndarray | None:
        if self.input_dropout <= 0:
            return None
        keep = 1.0 - self.input_dropout
        return (rng.random(shape) < keep) / keep

    def forward(self, x, mask=None):
        xin = x * mask if mask is not None else x
        h = xin @ self.w1 + self.b1
        a = np.where(h > 0, h, self.slope * h)
        return a @ self.w2 + self.b2, (xin, h, a)

    def predict(self, x) -> np.ndarray:
        return _sigmoid(self.forward(np.asarray(x, dtype=np.float64))[0])

    def backward(self, go, cache, mask=None, need_input=False):
        """Gradients of ``sum(go * logits)`` w.r.t. parameters (and input)."""
        xin, h, a = cache
        grads = {"w2": a.T @ go, "b2": np.array(go.sum())}
        gh = np.outer(go, self.w2) * np.where(h > 0, 1.0, self.slope)
        grads["w1"] = xin.T @ gh
        grads["b1"] = gh.sum(0)
        gx = None
        if need_input:
            gx = gh @ self.w1.T
            if mask is not None:
                gx = gx * mask
        return grads, gx


# ------------------------------------------------------------------- losses

def _clip(p):
    return np.clip(np.asarray(p, dtype=np.float64), PROB_EPS, 1 - PROB_EPS)


def _bce(p, y):
    return -(y * np.log(p) + (1 - y) * np.log(1 - p))


def discriminator_objective(p_source, p_target, smoothing: float = 0.0) -> float:
    """Discriminator cross-entropy with mapped source labelled 1 and target 0.

    Label smoothing replaces the hard labels by ``1 - s`` and ``s``.
    """
    ps, pt = _clip(p_source), _clip(p_target)
    return float(_bce(ps, 1 - smoothing).mean() + _bce(pt, smoothing).mean())


def mapping_objective(p_source, p_target) -> float:
    """Cross-entropy with the labels flipped: mapped source 0, target 1."""
    ps, pt = _clip(p_source), _clip(p_target)
    return float(-np.log(1 - ps).mean() - np.log(pt).mean())


def _logit_grad(o, y, n):
    """d/d logits of mean BCE on clipped probabilities (zero where clipped)."""
    p = _sigmoid(o)
    live = (p > PROB_EPS) & (p < 1 - PROB_EPS)
    return np.where(live, (p - y) / n, 0.0), _clip(p)


def disc_loss(d: Discriminator, mapped_source, target, mask_s=None, mask_t=None) -> float:
    return disc_loss_and_grads(d, mapped_source, target, mask_s, mask_t)[0]


def disc_loss_and_grads(d: Discriminator, mapped_source, target, mask_s=None, mask_t=None):
    """Loss and parameter gradients for one discriminator step."""
    xs = np.asarray(mapped_source, dtype=np.float64)
    xt = np.asarray(target, dtype=np.float64)
    if len(xs) == 0 or len(xt) == 0:
        raise AlignmentError("empty batch")
    s = d.smoothing
    os_, cs = d.forward(xs, mask_s)
    ot, ct = d.forward(xt, mask_t)
    gs, ps = _logit_grad(os_, 1 - s, len(xs))
    gt, pt = _logit_grad(ot, s, len(xt))
    loss = float(_bce(ps, 1 - s).mean() + _bce(pt, s).mean())
    g1, _ = d.backward(gs, cs)
    g2, _ = d.backward(gt, ct)
    return loss, {k: g1[k] + g2[k] for k in g1}


def map_loss(d: Discriminator, mapped_source, target, mask_s=None, mask_t=None) -> float:
    ps = _sigmoid(d.forward(np.asarray(mapped_source, dtype=np.float64), mask_s)[0])
    pt = _sigmoid(d.forward(np.asarray(target, dtype=np.float64), mask_t)[0])
    return mapping_objective(ps, pt)


def map_loss_and_grad(d: Discriminator, w, source, target, mask_s=None, mask_t=None):
    """Mapping loss for ``W`` applied to raw ``source`` rows, and ``dL/dW``.

    The target term does not depend on ``W`` and contributes no gradient.
    """
    zs = np.asarray(source, dtype=np.float64)
    if len(zs) == 0 or len(target) == 0:
        raise AlignmentError("empty batch")
    xs = zs @ w.T
    os_, cs = d.forward(xs, mask_s)
    pt = _sigmoid(d.forward(np.asarray(target, dtype=np.float64), mask_t)[0])
    go, ps = _logit_grad(os_, 0.0, len(zs))
    loss = float(-np.log(1 - ps).mean() - np.log(_clip(pt)).mean())
    _, gx = d.backward(go, cs, mask_s, need_input=True)
    return loss, gx.T @ zs


# ------------------------------------------------------------ orthogonality

def orthogonality_update(w, beta: float) -> np.ndarray:
    """One step of ``W <- (1 + beta) W - beta (W W^T) W``."""
    w = np.asarray(w, dtype=np.float64)
    return (1 + beta) * w - beta * (w @ w.T) @ w


def orthogonality_residual(w) -> float:
    w = np.asarray(w, dtype=np.float64)
    return float(np.linalg.norm(w.T @ w - np.eye(w.shape[1])))


def moment_matching_init(zs, zt) -> np.ndarray:
    """Orthogonal map pairing principal axes of the two clouds.

    Axes are matched by rank of variance; each axis sign is fixed so that
    the third moment of the projections agrees across the two sides.
    """
    a = np.asarray(zs, dtype=np.float64)
    b = np.asarray(zt, dtype=np.float64)
    a = a - a.mean(0)
    b = b - b.mean(0)
    _, _, va = svd(a)
    _, _, vb = svd(b)
    sa = np.sign(((a @ va) ** 3).sum(0))
    sb = np.sign(((b @ vb) ** 3).sum(0))
    sa[sa == 0] = 1
    sb[sb == 0] = 1
    return vb @ np.diag(sa * sb) @ va.T


# ----------------------------------------------------------------- training

@dataclass
class AdversarialResult:
    mapping: np.ndarray
    history: list = field(default_factory=list)
    discriminator: Discriminator | None = None
    initial_mapping: np.ndarray | None = None


class _IndexStream:
    """Shuffled pass over ``range(n)``, reshuffling when exhausted."""

    def __init__(self, n, rng):
        self.n, self.rng = n, rng
        self.perm = rng.permutation(n)
        self.pos = 0

    def take(self, k):
        out = []
        while k > 0:
            if self.pos == self.n:
                self.perm = self.rng.permutation(self.n)
                self.pos = 0
            step = min(k, self.n - self.pos)
            out.append(self.perm[self.pos:self.pos + step])
            self.pos += step
            k -= step
        return np.concatenate(out)


def initial_mapping(zs, zt, cfg: AdvConfig) -> np.ndarray:
    if cfg.init == "identity":
        return np.eye(zs.shape[1])
    return moment_matching_init(zs, zt)


def train_adversarial(zs, zt, cfg: AdvConfig, w0=None, callback=None) -> AdversarialResult:
    """Alternate discriminator and mapping SGD steps.

    Per epoch, ``ceil(epoch_size / batch)`` rounds run; each round does
    ``disc_steps_per_map_step`` discriminator steps then one map step
    followed by one orthogonality update. The learning rate is multiplied
    by ``lr_decay`` after every epoch. ``history`` rows are
    ``(epoch, L_D, L_W, orth_residual)``.
    """
    zs = np.asarray(getattr(zs, "vectors", zs), dtype=np.float64)
    zt = np.asarray(getattr(zt, "vectors", zt), dtype=np.float64)
    if zs.shape[1] != zt.shape[1]:
        raise AlignmentError(f"dimension mismatch: source d={zs.shape[1]}, target d={zt.shape[1]}")
    if len(zs) == 0 or len(zt) == 0:
        raise AlignmentError("empty embedding matrix")
    d = zs.shape[1]
    rng = np.random.default_rng(cfg.seed)
    disc = Discriminator.init(d, cfg.hidden, rng, cfg.leaky_slope, cfg.input_dropout, cfg.smoothing)
    w = initial_mapping(zs, zt, cfg) if w0 is None else np.array(w0, dtype=np.float64)
    w_init = w.copy()
    bs_s, bs_t = min(cfg.batch, len(zs)), min(cfg.batch, len(zt))
    epoch_size = cfg.epoch_size or max(len(zs), len(zt))
    rounds = max(1, math.ceil(epoch_size / cfg.batch))
    src_stream, tgt_stream = _IndexStream(len(zs), rng), _IndexStream(len(zt), rng)
    lr = cfg.lr
    history = []
    for epoch in range(cfg.epochs):
        ld_sum = lw_sum = 0.0
        for _ in range(rounds):
            for _ in range(cfg.disc_steps_per_map_step):
                xs = zs[src_stream.take(bs_s)] @ w.T
                xt = zt[tgt_stream.take(bs_t)]
                ld, grads = disc_loss_and_grads(disc, xs, xt, disc.dropout_mask(xs.shape, rng),
                                                disc.dropout_mask(xt.shape, rng))
                disc.w1 -= lr * grads["w1"]
                disc.b1 -= lr * grads["b1"]
                disc.w2 -= lr * grads["w2"]
                disc.b2 -= lr * float(grads["b2"])
            ld_sum += ld
            src = zs[src_stream.take(bs_s)]
            xt = zt[tgt_stream.take(bs_t)]
            lw, gw = map_loss_and_grad(disc, w, src, xt, disc.dropout_mask(src.shape, rng),
                                       disc.dropout_mask(xt.shape, rng))
            lw_sum += lw
            w = orthogonality_update(w - lr * gw, cfg.beta)
        row = (epoch, ld_sum / rounds, lw_sum / rounds, orthogonality_residual(w))
        history.append(row)
        if callback is not None:
            callback(row, w)
        if not np.all(np.isfinite(w)):
            raise AlignmentError(f"mapping diverged at epoch {epoch}")
        lr *= cfg.lr_decay
    return AdversarialResult(w, history, disc, w_init)


# ---------------------------------------------------------------------- I/O

def save_mapping(w, path, binary: bool = False) -> None:
    """Text: ``rows cols`` header then rows of floats (repr, exact). Binary:
    little-endian ``u64 rows, u64 cols`` then float64 data."""
    w = np.asarray(w, dtype=np.float64)
    if binary:
        with open(path, "wb") as fh:
            fh.write(struct.pack("<QQ", *w.shape))
            fh.write(w.astype("<f8").tobytes())
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{w.shape[0]} {w.shape[1]}\n")
        for row in w:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_mapping(path, binary: bool | None = None) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise AlignmentError(f"mapping file not found: {path}")
    raw = path.read_bytes()
    if binary is None:
        first = raw[:64].split(b"\n", 1)[0]
        binary = not first.replace(b" ", b"").isdigit()
    if binary:
        r, c = struct.unpack("<QQ", raw[:16])
        return np.frombuffer(raw[16:], dtype="<f8").reshape(r, c).copy()
    lines = raw.decode("utf-8").split("\n")
    r, c = (int(x) for x in lines[0].split())
    w = np.array([[float(x) for x in line.split()] for line in lines[1:1 + r]])
    if w.shape != (r, c):
        raise AlignmentError(f"{path}: expected a {r}x{c} matrix")
    return w


def write_loss_history(history, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["epoch", "L_D", "L_W", "orth_residual"])
        for epoch, ld, lw, orth in history:
            out.writerow([epoch, repr(float(ld)), repr(float(lw)), repr(float(orth))])
