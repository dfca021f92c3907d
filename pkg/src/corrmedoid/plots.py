"""Figure rendering for benchmark and analysis reports.

Everything goes through the Agg backend straight to a file; nothing here
opens a window, so the functions are safe in headless runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_error_curve(result, path: str | Path) -> None:
    """Error probability against the budget grid, one marker per point."""
    xs = [c.budget_x for c in result.curves]
    ys = [c.error_prob for c in result.curves]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(xs, ys, marker="o", color="#1f6f8b")
    if min(xs) > 0 and max(xs) / min(xs) >= 16:
        ax.set_xscale("log", base=2)
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("budget multiplier (pulls per arm)")
    ax.set_ylabel("error probability")
    ax.set_title(f"{result.spec.algo}, {result.spec.metric}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_hardness(report, path: str | Path) -> None:
    """Scatter of gap vs normalized correlation distance per non-medoid arm."""
    mask = np.arange(report.delta.size) != report.medoid
    delta = report.delta[mask]
    rho = report.rho[mask]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.scatter(delta, rho, s=12, alpha=0.6, color="#b1540f", edgecolors="none")
    if delta.size and delta.min() > 0:
        ax.set_xscale("log")
    ax.set_xlabel("gap to medoid")
    ax.set_ylabel("rho (correlation-adjusted spread)")
    ax.set_title(
        f"sigma={report.sigma:.4g}  H2={report.h2:.4g}  "
        f"H2~={report.h2_tilde:.4g}  ratio={report.ratio:.3g}"
    )
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
