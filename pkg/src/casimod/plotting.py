"""Figures written next to the CSV output (matplotlib, non-interactive backend)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

DRUDE_COLOR = "tab:blue"
PLASMA_COLOR = "tab:red"


def _closed(phases, values):
    # repeat the first point at phi + 2 pi when the grid covers the full period
    order = np.argsort(phases)
    x, y = np.asarray(phases)[order], np.asarray(values)[order]
    if len(x) > 1 and x[0] == 0.0 and x[-1] > math.pi:
        x = np.append(x, 2.0 * math.pi)
        y = np.append(y, y[0])
    return x, y


def plot_modulation(curves: dict, path, title: str | None = None):
    """dF versus phase in mPa: Drude solid, its TE l=0 part dashed, plasma in red."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if "drude" in curves:
        c = curves["drude"]
        ax.plot(*_closed(c.phases, c.values * 1e3), color=DRUDE_COLOR, lw=1.8,
                label="Drude")
        ax.plot(*_closed(c.phases, c.breakdown_te0 * 1e3), color=DRUDE_COLOR, lw=1.4,
                ls="--", label="Drude, TE $\\omega=0$ only")
    if "plasma" in curves:
        c = curves["plasma"]
        ax.plot(*_closed(c.phases, c.values * 1e3), color=PLASMA_COLOR, lw=1.8,
                label="plasma")
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.set_xlabel(r"relative phase $\phi$ (rad)")
    ax.set_ylabel(r"$\Delta F$ (mPa)")
    ax.set_xlim(0.0, 2.0 * math.pi)
    ax.set_xticks([0, math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi])
    ax.set_xticklabels(["0", r"$\pi/2$", r"$\pi$", r"$3\pi/2$", r"$2\pi$"])
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_sweep(key: str, values, peaks: dict, path):
    """Peak modulation amplitude (mPa) against the swept parameter."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    styles = {"drude": (DRUDE_COLOR, "-"), "drude_te0": (DRUDE_COLOR, "--"),
              "plasma": (PLASMA_COLOR, "-")}
    for name, ys in peaks.items():
        color, ls = styles.get(name, ("k", ":"))
        ax.plot(values, np.asarray(ys) * 1e3, color=color, ls=ls, marker="o", ms=3, label=name)
    ax.set_xlabel(key)
    ax.set_ylabel(r"peak $|\Delta F|$ (mPa)")
    if any(np.all(np.asarray(ys) > 0) for ys in peaks.values()):
        ax.set_yscale("log")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
