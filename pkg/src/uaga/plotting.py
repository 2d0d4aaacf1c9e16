"""Report figures rendered to files (non-interactive backend)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_loss_curves", "plot_precision_bars", "plot_iuaga_rounds"]

STYLE = {
    "font.size": 8,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "lines.linewidth": 1.2,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 150,
}
COLORS = ["#08589e", "#4eb3d3", "#7bccc4", "#e34a33", "#fdbb84", "#636363", "#a8ddb5", "#2b8cbe"]


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_loss_curves(history, path, title: str | None = None):
    """Discriminator and mapping losses per epoch, orthogonality residual on a log axis."""
    h = np.asarray(history, dtype=np.float64).reshape(-1, 4)
    with plt.rc_context(STYLE):
        fig, (a, b) = plt.subplots(1, 2, figsize=(6.4, 2.4))
        a.plot(h[:, 0], h[:, 1], color=COLORS[0], label="discriminator")
        a.plot(h[:, 0], h[:, 2], color=COLORS[3], label="mapping")
        a.set_xlabel("epoch")
        a.set_ylabel("loss")
        a.legend(frameon=False)
        b.semilogy(h[:, 0], np.maximum(h[:, 3], 1e-300), color=COLORS[5])
        b.set_xlabel("epoch")
        b.set_ylabel(r"$\|W^\top W - I\|_F$")
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def plot_precision_bars(rows, path, ns=(1, 5, 10)):
    """Grouped bars of mean P@N per method with one-std error bars."""
    rows = list(rows)
    methods = [r["method"] for r in rows]
    x = np.arange(len(methods))
    width = 0.8 / len(ns)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(3.2, 0.6 * len(methods) + 1), 2.6))
        for i, n in enumerate(ns):
            mean = [r.get(f"P@{n}", np.nan) for r in rows]
            std = [r.get(f"P@{n}_std", 0.0) for r in rows]
            ax.bar(x + (i - (len(ns) - 1) / 2) * width, mean, width, yerr=std,
                   color=COLORS[i % len(COLORS)], label=f"P@{n}", capsize=1.5)
        ax.set_xticks(x)
        ax.set_xticklabels(methods, rotation=30, ha="right")
        ax.set_ylabel("precision")
        ax.set_ylim(0, 1)
        ax.legend(frameon=False, ncol=len(ns))
        return _save(fig, path)


def plot_iuaga_rounds(rounds, path):
    """Pseudo-anchor count and precision across incremental rounds."""
    r = [row["round"] for row in rounds]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.4, 2.4))
        ax.plot(r, [row["pseudo_anchors"] for row in rounds], "o-", color=COLORS[0])
        ax.set_xlabel("round")
        ax.set_ylabel("pseudo anchors", color=COLORS[0])
        if rounds and "pseudo_precision" in rounds[0]:
            ax2 = ax.twinx()
            ax2.plot(r, [row["pseudo_precision"] for row in rounds], "s--", color=COLORS[3])
            ax2.set_ylabel("anchor precision", color=COLORS[3])
            ax2.set_ylim(0, 1)
        ax.set_xticks(r)
        return _save(fig, path)
