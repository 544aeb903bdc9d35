"""Figure output: intensity heatmaps, traces and study summaries.

Heatmaps use the ``viridis`` colour map (monotone in lightness, dark = low).
SVG output is byte-stable for a fixed input: the creation date is omitted
and the SVG id hash salt is fixed.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grid import Grid, matrix_to_csv  # noqa: E402

CMAP = "viridis"
CELL_GID = "cells"

plt.rcParams.update({
    "svg.hashsalt": "mrfnhpp",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.titlesize": 9,
    "figure.dpi": 100,
})


def _as_matrix(values, grid: Grid | None):
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        return values
    if grid is None:
        raise ValueError("a grid is needed to reshape a per-box vector")
    return grid.to_matrix(values)


def _edges(matrix, grid: Grid | None):
    n_y, n_x = matrix.shape
    if grid is None:
        return np.arange(n_x + 1), np.arange(n_y + 1)
    r = grid.region
    return np.linspace(r.x_min, r.x_max, n_x + 1), np.linspace(r.y_min, r.y_max, n_y + 1)


def draw_surface(ax, values, grid: Grid | None = None, vmin=None, vmax=None, title=None, cmap=CMAP):
    m = _as_matrix(values, grid)
    xe, ye = _edges(m, grid)
    mesh = ax.pcolormesh(xe, ye, m, cmap=cmap, vmin=vmin, vmax=vmax, shading="flat",
                         edgecolors="none", antialiased=False)
    mesh.set_gid(CELL_GID)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    return mesh


def emit_heatmap(values, out_path, grid: Grid | None = None, title=None, colorbar=True,
                 vmin=None, vmax=None):
    """Write ``<out>.svg`` and ``<out>.csv`` (n_y rows, lowest y first).

    ``values`` is either a per-box vector (with ``grid``) or an ``(n_y, n_x)``
    matrix.  Returns the two paths.
    """
    out_path = Path(out_path)
    m = _as_matrix(values, grid)
    svg_path = out_path.with_suffix(".svg")
    csv_path = out_path.with_suffix(".csv")
    csv_path.write_text(matrix_to_csv(m))

    n_y, n_x = m.shape
    width = 4.0
    fig, ax = plt.subplots(figsize=(width + (0.8 if colorbar else 0), width * n_y / n_x + 0.4))
    mesh = draw_surface(ax, m, grid, vmin=vmin, vmax=vmax, title=title)
    if colorbar:
        cb = fig.colorbar(mesh, ax=ax, shrink=0.8)
        # keep the colour bar out of the cell group
        cb.solids.set_gid("colorbar")
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return svg_path, csv_path


def plot_traces(report, out_path):
    """Rand index between successive sweeps and cluster count per sweep."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 4), sharex=True)
    it = np.arange(1, len(report.k_trace) + 1)
    if len(report.ri_trace):
        ax1.plot(it, report.ri_trace, lw=0.6)
    ax1.set_ylabel("RI to previous")
    ax2.plot(it, report.k_trace, lw=0.6, drawstyle="steps-mid")
    ax2.set_ylabel("K")
    ax2.set_xlabel("iteration")
    burn = report.meta.get("burn_in")
    if burn:
        for ax in (ax1, ax2):
            ax.axvline(burn, color="0.5", ls="--", lw=0.8)
    ax1.set_title(f"{report.model}, eta = {report.eta:g}")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def plot_criteria(fits, out_path, selected=None):
    """Criteria and Dahl cluster count against eta."""
    fits = sorted(fits, key=lambda ef: ef[0])
    etas = np.array([e for e, _ in fits])
    fig, axes = plt.subplots(1, 4, figsize=(11, 2.6), layout="constrained")
    for ax, name in zip(axes, ("DIC", "LPML", "BIC")):
        ax.plot(etas, [r.criteria[name] for _, r in fits], "o-", ms=3)
        if selected and name in selected:
            ax.axvline(selected[name], color="C3", ls="--", lw=0.8)
        ax.set_title(name)
        ax.set_xlabel("eta")
    axes[3].plot(etas, [r.K for _, r in fits], "o-", ms=3)
    axes[3].set_title("K (Dahl)")
    axes[3].set_xlabel("eta")
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def plot_fit_surfaces(report, grid: Grid, counts, out_path):
    """Observed counts next to the Dahl estimate and posterior summaries."""
    panels = [("counts per box", np.asarray(counts, dtype=float) / grid.box_area),
              (f"Dahl estimate (K={report.K})", report.surface),
              ("posterior mean", report.posterior_mean)]
    if report.posterior_quantiles is not None:
        q = np.asarray(report.posterior_quantiles)
        panels += [("2.5%", q[0]), ("97.5%", q[2])]
    vmax = max(float(np.max(v)) for _, v in panels[1:])
    fig, axes = plt.subplots(1, len(panels), figsize=(2.4 * len(panels) + 0.8, 2.4), layout="constrained")
    for ax, (title, v) in zip(axes, panels):
        mesh = draw_surface(ax, v, grid, vmin=0, vmax=vmax, title=title)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(mesh, ax=list(axes), shrink=0.8)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def plot_study_surfaces(study, grid: Grid, out_path, labels=("BIC", "MFM")):
    """Truth beside replicate-averaged quantile surfaces, one row per method."""
    labels = [lab for lab in labels if lab in study.surfaces]
    truth = np.asarray(study.true_surface)
    vmax = float(truth.max())
    fig, axes = plt.subplots(len(labels), 4, figsize=(10, 2.6 * len(labels)), squeeze=False,
                             layout="constrained")
    for row, lab in zip(axes, labels):
        s = study.surfaces[lab]
        panels = [("truth", truth), ("2.5%", s.get("q025")), ("median", s.get("median")),
                  ("97.5%", s.get("q975"))]
        for ax, (title, v) in zip(row, panels):
            if v is None:
                ax.axis("off")
                continue
            mesh = draw_surface(ax, v, grid, vmin=0, vmax=vmax, title=f"{lab}: {title}")
            ax.set_xticks([])
            ax.set_yticks([])
    fig.colorbar(mesh, ax=axes.ravel().tolist(), shrink=0.8)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def plot_study_bias(study, grid: Grid, out_path, labels=("BIC", "MFM")):
    """Absolute relative bias of the element-wise posterior mean."""
    labels = [lab for lab in labels if lab in study.surfaces]
    fig, axes = plt.subplots(1, len(labels), figsize=(3.2 * len(labels) + 0.8, 3), squeeze=False,
                             layout="constrained")
    vmax = max(float(np.max(study.surfaces[lab]["abs_relative_bias"])) for lab in labels)
    for ax, lab in zip(axes[0], labels):
        mesh = draw_surface(ax, study.surfaces[lab]["abs_relative_bias"], grid, vmin=0, vmax=vmax,
                            title=f"|relative bias|, {lab}")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(mesh, ax=axes.ravel().tolist(), shrink=0.8)
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
