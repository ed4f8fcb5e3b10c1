"""Figure definitions: band time series, density surfaces, bound curves.

Each supported figure id fixes a deterministic layout and color mapping so
the images are directly comparable run to run.  Band colors are listed from
the lowest telomere band upward.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .artifacts import (  # noqa: E402
    SchemaError,
    list_snapshots,
    load_bound_curves,
    load_snapshot,
    load_totals,
)

__all__ = ["FigureSpec", "FIGURES", "render", "render_many"]


@dataclass(frozen=True)
class FigureSpec:
    """How to draw one figure id from a run directory."""

    figure_id: int
    kind: str  # 'bands' | 'surfaces' | 'bound-curves'
    title: str
    band_colors: Sequence[str] = ()  # lowest band first
    include_total: bool = False
    log_y: bool = False
    surface_times: Sequence[float] = ()
    n_bands: Optional[int] = None


FIGURES = {
    3: FigureSpec(3, "bound-curves", "spectral radius estimate curves"),
    4: FigureSpec(4, "surfaces", "population density over time",
                  surface_times=(0, 1, 3, 6, 8, 14)),
    5: FigureSpec(5, "bands", "subpopulations by telomere length (quintiles)",
                  band_colors=("red", "green", "blue", "orange", "magenta"),
                  include_total=True, n_bands=5),
    8: FigureSpec(8, "surfaces", "population density over time",
                  surface_times=(0, 1, 2, 5, 10, 20)),
    9: FigureSpec(9, "bands", "subpopulations by telomere length (quarters)",
                  band_colors=("orange", "blue", "green", "red"),
                  log_y=True, n_bands=4),
    10: FigureSpec(10, "surfaces", "population density over time",
                   surface_times=(0, 1, 5, 20, 40, 50)),
    11: FigureSpec(11, "bands", "subpopulations by telomere length (quarters)",
                   band_colors=("red", "green", "blue", "orange"), n_bands=4),
}


def _band_label(k: int, n: int) -> str:
    lo, hi = k / n, (k + 1) / n
    return f"length {lo:.2f}-{hi:.2f}"


def _render_bands(spec: FigureSpec, run_dir: str, ax) -> None:
    totals = load_totals(run_dir)
    n = totals.bands.shape[0]
    if spec.n_bands is not None and n != spec.n_bands:
        raise SchemaError(
            f"{totals.path}: expected {spec.n_bands} band columns, found {n}")
    if spec.include_total:
        ax.plot(totals.times, totals.total, color="black", label="total")
    for k in range(n):
        ax.plot(totals.times, totals.bands[k], color=spec.band_colors[k],
                label=_band_label(k, n))
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("time")
    ax.set_ylabel("population")
    ax.legend(fontsize=8)


def _render_surfaces(spec: FigureSpec, run_dir: str, fig) -> None:
    available = list_snapshots(run_dir)
    stamps = sorted(available)
    chosen = []
    for t in spec.surface_times:
        nearest = min(stamps, key=lambda s: abs(s - t))
        if nearest not in chosen:
            chosen.append(nearest)
    ncol = 3
    nrow = (len(chosen) + ncol - 1) // ncol
    for i, t in enumerate(chosen):
        snap = load_snapshot(available[t])
        ax = fig.add_subplot(nrow, ncol, i + 1)
        mesh = ax.pcolormesh(snap.lengths, snap.ages, snap.density,
                             shading="auto", cmap="viridis")
        fig.colorbar(mesh, ax=ax, shrink=0.8)
        ax.set_title(f"t = {t:g}", fontsize=9)
        ax.set_xlabel("telomere length")
        ax.set_ylabel("age")


def _render_bound_curves(run_dir: str, ax) -> None:
    lengths, mother, daughter = load_bound_curves(run_dir)
    ax.plot(lengths, mother, color="red", label="per-mother estimate")
    ax.plot(lengths, daughter, color="blue", label="per-daughter estimate")
    ax.axhline(1.0, color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("telomere length")
    ax.set_ylabel("estimate")
    ax.legend(fontsize=8)


def render(spec: FigureSpec, run_dir: str, out_dir: str,
           fmt: str = "png") -> str:
    """Draw one figure from a run directory; returns the image path."""
    if fmt not in ("png", "svg"):
        raise SchemaError(f"unsupported format {fmt!r} (use png or svg)")
    os.makedirs(out_dir, exist_ok=True)
    out_path = os.path.join(out_dir, f"figure_{spec.figure_id}.{fmt}")
    if spec.kind == "surfaces":
        fig = plt.figure(figsize=(11, 6))
        _render_surfaces(spec, run_dir, fig)
    else:
        fig, ax = plt.subplots(figsize=(7, 5))
        if spec.kind == "bands":
            _render_bands(spec, run_dir, ax)
        else:
            _render_bound_curves(run_dir, ax)
    fig.suptitle(spec.title)
    fig.tight_layout()
    try:
        fig.savefig(out_path)
    finally:
        plt.close(fig)
    return out_path


def render_many(figure_ids: Sequence[int], run_dir: str, out_dir: str,
                fmt: str = "png") -> list:
    paths = []
    for fid in figure_ids:
        if fid not in FIGURES:
            raise SchemaError(
                f"unknown figure id {fid}; available: "
                f"{sorted(FIGURES)}")
        paths.append(render(FIGURES[fid], run_dir, out_dir, fmt))
    return paths
