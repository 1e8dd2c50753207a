# Rendering of figure results to PNG files next to the CSV output.

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import FigureResult

_AXES = {
    "fig1a": ("log", "log", "noise variance", "error probability"),
    "fig1b": ("log", "log", "noise variance", "error probability"),
    "fig1c": ("linear", "log", "noise variance", "error probability"),
    "fig2a": ("log", "log", "noise variance", "error probability"),
    "fig2b": ("log", "log", "noise variance", "error probability"),
    "fig5": ("linear", "linear", "feature dimension", "error probability"),
    "fig8": ("linear", "linear", "noise standard deviation", "accuracy"),
}


def render_figure(result: FigureResult, out_dir) -> str:
    """Draw curves (or the angle table as bars) and save a PNG; returns its path."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{result.figure}.png")
    fig, ax = plt.subplots(figsize=(5.0, 3.6), constrained_layout=True)
    if result.curves:
        xscale, yscale, xlabel, ylabel = _AXES.get(
            result.figure, ("linear", "linear", "x", "y")
        )
        for curve in result.curves:
            style = "--" if curve.name.startswith(("empirical", "accuracy_original")) else "-"
            if np.any(curve.yerr > 0):
                ax.errorbar(
                    curve.x, curve.y, yerr=curve.yerr, fmt=style, marker=".",
                    capsize=2, label=curve.name,
                )
            else:
                ax.plot(curve.x, curve.y, style, marker=".", label=curve.name)
        ax.set_xscale(xscale)
        ax.set_yscale(yscale)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7)
        ax.grid(True, which="both", alpha=0.3)
    elif "angles" in result.tables:
        header, rows = result.tables["angles"]
        methods = [row[0] for row in rows]
        mins = [float(row[-1]) for row in rows]
        ax.bar(methods, mins, color="tab:blue")
        ax.set_ylabel("min pairwise angle (deg)")
        ax.set_ylim(0, 95)
        ax.grid(True, axis="y", alpha=0.3)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
