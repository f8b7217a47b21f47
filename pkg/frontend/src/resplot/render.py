"""Render resonance-scan artifacts into publication-style figures.

Input files are the CSV/JSON artifacts written by the ``helmres``
command-line tool: a scan CSV (``re,im,logabsdet`` over a rectangular
grid), an optional eigenvalue JSON list, and a convergence-study CSV
(``n,re,im,succ_err``).  Renders are deterministic functions of the
input files: the color scale is pinned to the 1%/99% quantiles of the
data and no randomized layout is used.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class InputError(Exception):
    """Raised when an artifact file is malformed for the requested render."""


@dataclass
class ScanGrid:
    """A rectangular log|det| sample grid; rows sweep im, columns re."""

    re: np.ndarray
    im: np.ndarray
    logabsdet: np.ndarray

    def well_count(self) -> int:
        """Number of |det| wells: strict 8-neighbor local minima after
        removing each row's median level.

        The median removal flattens the depth-dependent background decay
        so that shallow wells near the real axis register; the top row is
        kept (wells of resonances close to the axis are cut off there)
        while the other edges are excluded as rim artifacts."""
        g = self.logabsdet - np.median(self.logabsdet, axis=1, keepdims=True)
        padded = np.pad(g, 1, constant_values=np.inf)
        mask = np.ones_like(g, dtype=bool)
        ni, nj = g.shape
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                mask &= g < padded[1 + di:1 + di + ni, 1 + dj:1 + dj + nj]
        mask[0, :] = mask[:, 0] = mask[:, -1] = False  # im ascends: row 0 is deep
        return int(mask.sum())


def load_scan(path: str) -> ScanGrid:
    """Parse a scan CSV into a full rectangular grid.

    The product structure is checked exactly: every (re, im) lattice pair
    must appear once.  Anything else is a ragged grid.
    """
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["re", "im", "logabsdet"]:
            raise InputError(f"{path}: expected header re,im,logabsdet")
        try:
            rows = [(float(a), float(b), float(c)) for a, b, c in reader]
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric row") from exc
    if not rows:
        raise InputError(f"{path}: empty scan")
    re = np.unique([r[0] for r in rows])
    im = np.unique([r[1] for r in rows])
    if len(rows) != len(re) * len(im):
        raise InputError(f"{path}: ragged grid ({len(rows)} rows, "
                         f"{len(re)} x {len(im)} lattice)")
    grid = np.full((len(im), len(re)), np.nan)
    ri = {v: i for i, v in enumerate(re)}
    ii = {v: i for i, v in enumerate(im)}
    for a, b, c in rows:
        grid[ii[b], ri[a]] = c
    if np.isnan(grid).any():
        raise InputError(f"{path}: ragged grid (duplicate lattice points)")
    return ScanGrid(re=re, im=im, logabsdet=grid)


def load_eigenvalues(path: str) -> list:
    with open(path) as f:
        data = json.load(f)
    try:
        return [float(entry["k"]) for entry in data]
    except (TypeError, KeyError) as exc:
        raise InputError(f"{path}: expected a JSON list of objects with 'k'") from exc


def _draw_panel(ax, grid: ScanGrid, eigenvalues: Sequence[float],
                window: Optional[Tuple[float, float, float, float]]):
    lo, hi = np.quantile(grid.logabsdet, [0.01, 0.99])
    if lo == hi:
        hi = lo + 1.0
    levels = np.linspace(lo, hi, 41)
    cf = ax.contourf(grid.re, grid.im, np.clip(grid.logabsdet, lo, hi),
                     levels=levels, cmap="viridis")
    if window is None:
        window = (grid.re[0], grid.re[-1], grid.im[0], 0.0)
    marks = [e for e in eigenvalues if window[0] <= e <= window[1]]
    if marks:
        ax.plot(marks, np.zeros(len(marks)), "o", color="red",
                markersize=5, clip_on=False, label="eigenvalues")
    ax.set_xlim(window[0], window[1])
    ax.set_ylim(window[2], max(window[3], 0.0))
    ax.set_xlabel("Re k")
    ax.set_ylabel("Im k")
    return cf


def render_contour(scan_path: str, eigs_path: Optional[str] = None,
                   zoom: Optional[Tuple[float, float, float, float]] = None,
                   out_path: Optional[str] = None):
    """Filled contour of log|det| with eigenvalue markers on the real axis.

    ``zoom`` adds a second panel restricted to the given
    (re0, re1, im0, im1) window.  Returns the matplotlib figure; writes a
    PNG when ``out_path`` is given.
    """
    grid = load_scan(scan_path)
    eigenvalues = load_eigenvalues(eigs_path) if eigs_path else []
    panels = 2 if zoom is not None else 1
    fig, axes = plt.subplots(1, panels, figsize=(6.0 * panels, 4.0),
                             squeeze=False)
    cf = _draw_panel(axes[0, 0], grid, eigenvalues, None)
    axes[0, 0].set_title("log|det|")
    if zoom is not None:
        _draw_panel(axes[0, 1], grid, eigenvalues, zoom)
        axes[0, 1].set_title("zoom")
    fig.colorbar(cf, ax=axes[0, -1])
    fig.tight_layout()
    if out_path:
        fig.savefig(out_path, dpi=150)
    return fig


def load_study(path: str):
    """Parse a study CSV into (n, z, succ_err) arrays; succ_err may hold NaN
    for rows without a doubled-parameter partner."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["n", "re", "im", "succ_err"]:
            raise InputError(f"{path}: expected header n,re,im,succ_err")
        rows = list(reader)
    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 study rows, got {len(rows)}")
    try:
        n = np.array([int(r[0]) for r in rows])
        z = np.array([complex(float(r[1]), float(r[2])) for r in rows])
        err = np.array([float(r[3]) if r[3] else np.nan for r in rows])
    except (ValueError, IndexError) as exc:
        raise InputError(f"{path}: malformed study row") from exc
    return n, z, err


_ERR_FLOOR = 1e-16


def render_convergence(study_path: str, out_path: Optional[str] = None):
    """Scatter of the resonance iterates plus log-log successive error.

    The right panel shows err(n) = |z_2n - z_n| against n with a least
    squares slope annotation when at least two error points exist (zero
    errors are floored for the log scale).  Returns (figure, slope);
    slope is None for a degenerate single-point fit.
    """
    n, z, err = load_study(study_path)
    fig, (ax_z, ax_e) = plt.subplots(1, 2, figsize=(10.0, 4.0))
    ax_z.plot(z.real, z.imag, "o")
    for ni, zi in zip(n, z):
        ax_z.annotate(f"n={ni}", (zi.real, zi.imag), fontsize=8,
                      xytext=(4, 4), textcoords="offset points")
    ax_z.set_xlabel("Re k")
    ax_z.set_ylabel("Im k")
    ax_z.set_title("resonance vs resolution")

    keep = ~np.isnan(err)
    slope = None
    if keep.any():
        ne, ee = n[keep], np.maximum(err[keep], _ERR_FLOOR)
        ax_e.loglog(ne, ee, "o-")
        if len(ne) >= 2:
            slope = float(np.polyfit(np.log(ne), np.log(ee), 1)[0])
            ax_e.annotate(f"slope ~ {slope:.2f}", xy=(0.05, 0.05),
                          xycoords="axes fraction")
    ax_e.set_xlabel("n")
    ax_e.set_ylabel("|z_2n - z_n|")
    ax_e.set_title("successive error")
    fig.tight_layout()
    if out_path:
        fig.savefig(out_path, dpi=150)
    return fig, slope
