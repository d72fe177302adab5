"""Figure rendering for scan tables and verification margins.

Uses the Agg backend unconditionally; every function writes a PNG and
returns the path it wrote.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ParameterError
from .lab import ScanTable

__all__ = ["plot_margins", "plot_scan"]


def plot_scan(table: ScanTable, path: str, logy: bool = False) -> str:
    """Line plot of every scan column against the axis."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    x = np.real(np.asarray(table.axis, dtype=float))
    plotted = 0
    for name, col in table.columns.items():
        col = np.asarray(col)
        if np.iscomplexobj(col):
            ax.plot(x, np.abs(col), marker="o", label=f"|{name}|")
        else:
            ax.plot(x, col, marker="o", label=name)
        plotted += 1
    if plotted == 0:
        plt.close(fig)
        raise ParameterError("the scan table has no columns to plot")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(table.axis_name)
    domain = table.metadata.get("domain")
    ax.set_title(f"scan over {table.axis_name}" + (f" on {domain}" if domain else ""))
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_margins(records, path: str) -> str:
    """Horizontal bar chart of check margins, failures in red."""
    records = list(records)
    if not records:
        raise ParameterError("no records to plot")
    labels = [f"[{r.suite}] {r.label}" for r in records]
    margins = np.array([r.margin for r in records], dtype=float)
    colors = ["#2a7e43" if r.passed else "#b03030" for r in records]
    # symmetric log keeps tiny and huge margins visible together
    shown = np.sign(margins) * np.log10(1.0 + np.abs(margins) / 1e-12)
    height = max(3.0, 0.28 * len(records))
    fig, ax = plt.subplots(figsize=(9.0, height))
    ax.barh(np.arange(len(records)), shown, color=colors)
    ax.set_yticks(np.arange(len(records)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.invert_yaxis()
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("signed log10(1 + margin/1e-12)")
    ax.set_title("check margins")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
