"""Report figures rendered next to the benchmark's delimited output.

Uses matplotlib's object-oriented API (no pyplot global state), so
rendering is safe from headless and parallel contexts.
"""

from __future__ import annotations

import numpy as np
from matplotlib.figure import Figure

__all__ = ["save_trajectory_figure", "save_percent_figure"]


def save_trajectory_figure(path, truth, predictions: dict, bin_width: float = 0.1,
                           max_steps: int = 200) -> None:
    """Overlay decoded velocity traces on the ground truth.

    predictions maps a display label to a (T, 2) array; only the first
    max_steps rows are drawn, one panel per velocity component.
    """
    truth = np.asarray(truth, dtype=float)[:max_steps]
    t = np.arange(len(truth)) * bin_width
    fig = Figure(figsize=(9, 5))
    axes = fig.subplots(2, 1, sharex=True)
    for dim, ax in enumerate(axes):
        ax.plot(t, truth[:, dim], color="black", lw=1.5, label="truth")
        for label, pred in predictions.items():
            pred = np.asarray(pred, dtype=float)[:max_steps]
            ax.plot(t, pred[:, dim], lw=1.0, alpha=0.8, label=label)
        ax.set_ylabel(f"v{'xy'[dim]}")
        ax.grid(True, alpha=0.3)
    axes[1].set_xlabel("time (s)")
    axes[0].legend(loc="upper right", fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def save_percent_figure(path, table) -> None:
    """Horizontal bars of each method's average percent change vs the baseline."""
    rows = [r for r in table.rows if not r.is_baseline and r.cells[-1] is not None]
    labels = [r.label for r in rows]
    values = [r.cells[-1] for r in rows]
    fig = Figure(figsize=(7, 0.4 * max(len(rows), 4) + 1.2))
    ax = fig.subplots()
    y = np.arange(len(rows))
    colors = ["#2a7fb8" if v < 0 else "#d1495b" for v in values]
    ax.barh(y, values, color=colors)
    ax.set_yticks(y)
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.axvline(0.0, color="black", lw=1)
    ax.set_xlabel(f"{table.metric} change vs baseline (%)")
    for yi, v in zip(y, values):
        ax.annotate(f"{v:d}%", (v, yi), xytext=(4 if v >= 0 else -4, 0),
                    textcoords="offset points", va="center",
                    ha="left" if v >= 0 else "right", fontsize=8)
    ax.grid(True, axis="x", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
