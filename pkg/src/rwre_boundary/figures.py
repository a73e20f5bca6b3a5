"""Figure rendering for the CLI report paths (written next to the CSV/JSON)."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .geometry import BoundaryPoint  # noqa: E402
from .phase_scan import ScanResult  # noqa: E402
from .rate_functions import annealed_rate_boundary, face_minimizer  # noqa: E402
from .stochastics import GreenResult  # noqa: E402


def render_phase_figure(result: ScanResult, path) -> None:
    """D_n(eps) per scanned n, with error bars where Monte Carlo was used."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    grid = np.asarray(result.eps_grid)
    for i, n in enumerate(result.n_list):
        ax.errorbar(grid, result.values[i], yerr=3.0 * result.stderr[i],
                    marker="o", markersize=3, capsize=2, label=f"n = {n}")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel(r"disorder $\varepsilon$")
    ax.set_ylabel(r"$D_n(\varepsilon)$")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_green_figure(green: GreenResult, path, fourier: float | None = None) -> None:
    """Collision terms (log-log) and partial sums, with the Fourier cap."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.5, 3.6))
    j = np.arange(1, len(green.terms))
    ax1.loglog(j, green.terms[1:], ".", ms=3)
    ax1.loglog(j, green.terms[1] * (j / 1.0) ** -1.5, "--", lw=0.8,
               label=r"$\propto j^{-3/2}$")
    ax1.set_xlabel("j")
    ax1.set_ylabel(r"$P(Z_j = 0)$")
    ax1.legend(frameon=False)
    partial = np.cumsum(green.terms)
    ax2.plot(np.arange(len(partial)), partial, lw=1.0, label="partial sum")
    if fourier is not None and np.isfinite(fourier):
        ax2.axhline(fourier, color="r", lw=0.8, label="fourier bound")
    ax2.set_xlabel("J")
    ax2.set_ylabel("collision sum")
    ax2.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_rate_figure(alpha, face, path, npts: int = 201) -> None:
    """Rate-function profile along the segment from the face minimizer to a
    vertex; the marked minimum is -log(face mass)."""
    summary = face_minimizer(alpha, face)
    base = np.asarray(summary.minimizer.delta)
    vertex = np.zeros_like(base)
    vertex[0] = 1.0
    ts = np.linspace(0.0, 0.98, npts)
    vals = []
    for t in ts:
        delta = (1 - t) * base + t * vertex
        vals.append(annealed_rate_boundary(alpha, BoundaryPoint(face, tuple(delta))))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ts, vals, lw=1.2)
    ax.axhline(summary.min_value, color="k", lw=0.6, ls="--",
               label=f"min = {summary.min_value:.4f}")
    ax.set_xlabel("t  (minimizer -> vertex)")
    ax.set_ylabel("annealed rate")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
