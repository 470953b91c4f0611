"""Figure rendering for the CLI report path.

This is the only module that imports matplotlib; the core pipeline and
the plain CLI commands stay CSV/JSON-only.  Figures are rendered to
files with the Agg backend (no display needed) next to the delimited
output they illustrate.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402 (backend must be set first)
import numpy as np  # noqa: E402

from .reconstruct import FieldGrid  # noqa: E402
from .scattering import ScatteringData  # noqa: E402


def render_field_grid(grid: FieldGrid, path) -> Path:
    """q(x, t) with the per-point jump residual underneath."""
    path = Path(path)
    fig, (ax_q, ax_r) = plt.subplots(
        2, 1, figsize=(8.0, 6.0), sharex=True,
        gridspec_kw={"height_ratios": [3, 1]})
    ok = ~grid.failed
    ax_q.plot(grid.x[ok], grid.q[ok], "-", lw=1.2, color="tab:blue",
              label=f"q(x, t={grid.t:g})")
    if grid.failed.any():
        ax_q.plot(grid.x[grid.failed],
                  np.full(grid.n_failed, grid.bd.q_plus), "x",
                  color="tab:red", label="failed points")
    for q0, lab in ((grid.bd.q_minus, "q_-"), (grid.bd.q_plus, "q_+")):
        ax_q.axhline(q0, color="gray", lw=0.6, ls="--")
        ax_q.annotate(lab, (grid.x[0], q0), textcoords="offset points",
                      xytext=(2, 3), fontsize=8, color="gray")
    ax_q.set_ylabel("q")
    ax_q.legend(loc="best", fontsize=8)
    ax_q.set_title(f"{grid.bd.regime.name.lower()} reconstruction, "
                   f"t = {grid.t:g}")
    ax_r.semilogy(grid.x[ok], np.maximum(grid.jump_residual[ok], 1e-16),
                  ".", ms=3, color="tab:orange")
    ax_r.set_xlabel("x")
    ax_r.set_ylabel("jump residual")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_scattering(data: ScatteringData, path) -> Path:
    """|rho| (and companions) over each sampled segment."""
    path = Path(path)
    labs = sorted(data.segments)
    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.0))
    ax_line, ax_cut = axes
    for lab in labs:
        seg = data.segments[lab]
        onaxis = np.allclose(seg.k.imag, 0.0)
        ax = ax_line if onaxis else ax_cut
        coord = seg.k.real if onaxis else seg.k.imag
        for key, vals in seg.data.items():
            order = np.argsort(coord)
            ax.semilogy(coord[order], np.abs(vals)[order], ".-", ms=2,
                        lw=0.7, label=f"|{key}| {lab}")
    ax_line.set_xlabel("Re k")
    ax_cut.set_xlabel("Im k")
    for ax in axes:
        ax.set_ylabel("|data|")
        if ax.lines:
            ax.legend(fontsize=6, loc="best")
    for d in data.discrete:
        ax_cut.axvline(d.k.imag, color="tab:red", lw=0.7, ls=":")
    fig.suptitle(f"scattering data, {data.bd.regime.name.lower()} "
                 f"q- = {data.bd.q_minus:g}, q+ = {data.bd.q_plus:g}, "
                 f"t = {data.t:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_comparison(grid: FieldGrid, x_ref, q_ref, path,
                      label: str = "pde_ref") -> Path:
    """Reconstruction against an independent reference field."""
    path = Path(path)
    fig, (ax_q, ax_d) = plt.subplots(
        2, 1, figsize=(8.0, 6.0), sharex=True,
        gridspec_kw={"height_ratios": [3, 1]})
    ok = ~grid.failed
    ax_q.plot(x_ref, q_ref, "-", lw=1.0, color="tab:gray", label=label)
    ax_q.plot(grid.x[ok], grid.q[ok], ".", ms=4, color="tab:blue",
              label="reconstruction")
    ax_q.set_ylabel("q")
    ax_q.legend(loc="best", fontsize=8)
    ax_q.set_title(f"cross-validation at t = {grid.t:g}")
    ref_on_grid = np.interp(grid.x[ok], np.asarray(x_ref),
                            np.asarray(q_ref))
    ax_d.semilogy(grid.x[ok],
                  np.maximum(np.abs(grid.q[ok] - ref_on_grid), 1e-16),
                  ".", ms=3, color="tab:orange")
    ax_d.set_xlabel("x")
    ax_d.set_ylabel("|difference|")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
