"""Figure rendering for the experiment CSVs.

Every function takes plain arrays and a destination path, draws with the
non-interactive Agg backend and closes the figure.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.4,
    "savefig.dpi": 150,
}


def _figsize(width=5.5, ratio=None):
    ratio = ratio or (math.sqrt(5) - 1.0) / 2.0
    return width, width * ratio


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def takeover_figure(betas, means, stds, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=_figsize())
        ax.errorbar(betas, means, yerr=stds, marker="o", capsize=3)
        ax.set_xlabel(r"$\beta$")
        ax.set_ylabel("takeover time (generations)")
        return _save(fig, path)


def growth_figure(curves: dict, path):
    """``curves`` maps beta to ``(t, N(t), dN(t))``."""
    with plt.rc_context(STYLE):
        fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=_figsize(5.5, 1.0))
        for beta, (t, n, dn) in curves.items():
            top.plot(t, n, label=rf"$\beta$={beta:g}")
            bottom.plot(t, dn)
        top.set_ylabel("N(t)")
        bottom.set_ylabel(r"$\Delta$N(t)")
        bottom.set_xlabel("generation")
        top.legend()
        return _save(fig, path)


def performance_figure(betas, means, stds, path, ylabel="mean best fitness"):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=_figsize())
        ax.errorbar(betas, means, yerr=stds, marker="s", capsize=3)
        ax.set_xlabel(r"$\beta$")
        ax.set_ylabel(ylabel)
        return _save(fig, path)


def pij_figure(window_starts, means, path):
    """Log-scale ordinate: the three probabilities span orders of magnitude."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=_figsize())
        for col, label in enumerate(("P00", "P01", "P11")):
            ax.plot(window_starts, means[:, col], marker=".", label=label)
        ax.set_yscale("log")
        ax.set_xlabel("generation")
        ax.set_ylabel("estimated probability")
        ax.legend()
        return _save(fig, path)


def optimal_beta_figure(window_starts, beta_star, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=_figsize())
        ax.step(window_starts, beta_star, where="post")
        ax.set_ylim(-0.05, 1.05)
        ax.set_xlabel("generation")
        ax.set_ylabel(r"optimal $\beta$")
        return _save(fig, path)


def p_curve_figure(betas, p_values, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=_figsize())
        ax.plot(betas, p_values, marker="o")
        ax.set_xlabel(r"$\beta$")
        ax.set_ylabel("P (improvement within horizon)")
        return _save(fig, path)
