"""Resonance localization in the lower half-plane.

A rectangular region is scanned on the lattice (1/n)(Z + iZ); the scan
statistic is log|det| of the truncated boundary operator supplied by a
caller-provided builder.  Candidates are selected either by the
1/log(n) threshold or as strict 8-neighbor local minima, then polished
by damped gradient descent on |det|^2.  The module also provides the
counterclockwise spiral tiling of the half-plane, the self-calibrating
radius search, and a truncated Attouch-Wets distance for comparing
candidate sets across parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, RefineFailureError
from .geometry import Obstacle

THRESHOLD_PAPER = "paper"
THRESHOLD_PRACTICAL = "practical"


@dataclass
class ScanRegion:
    """Axis-aligned rectangle strictly inside the open lower half-plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n: Optional[int] = None  # lattice density (step 1/n)
    index: Optional[int] = None  # spiral tile index, if applicable

    def __post_init__(self):
        if not (self.re_min <= self.re_max and self.im_min <= self.im_max):
            raise ConfigurationError("degenerate scan region")
        if self.im_max >= 0:
            raise ConfigurationError("scan region must lie below the real axis")


@dataclass
class ResonanceCandidate:
    k: complex
    absdet: float
    n: Optional[int] = None
    refined: bool = False
    refine_tol: Optional[float] = None


@dataclass
class ScanResult:
    """|det| samples over the full lattice grid of a region.

    ``logabsdet`` has shape (len(im), len(re)); rows sweep Im ascending
    and columns Re ascending, so flattening is row-major over the lattice.
    """

    region: ScanRegion
    n: int
    re: np.ndarray
    im: np.ndarray
    logabsdet: np.ndarray
    threshold: float
    selected: List[ResonanceCandidate] = field(default_factory=list)

    def grid_minimum(self) -> ResonanceCandidate:
        i, j = np.unravel_index(np.argmin(self.logabsdet), self.logabsdet.shape)
        return ResonanceCandidate(
            k=complex(self.re[j], self.im[i]),
            absdet=float(np.exp(self.logabsdet[i, j])),
            n=self.n,
        )


def default_threshold(n: int) -> float:
    if n < 2:
        raise ConfigurationError("lattice density must be >= 2")
    return 1.0 / math.log(n)


def _lattice_axis(lo: float, hi: float, n: int) -> np.ndarray:
    first = math.ceil(lo * n - 1e-9)
    last = math.floor(hi * n + 1e-9)
    return np.arange(first, last + 1) / n


def scan(region: ScanRegion, n: int, operator_builder: Callable,
         threshold: Optional[float] = None) -> ScanResult:
    """Evaluate log|det| on (1/n)(Z + iZ) intersected with the region.

    ``operator_builder`` maps a wavenumber to anything accepted by
    :func:`helmres.dtn.det_plain`.  Points at or below the threshold
    (default 1/log n) are attached as the selected candidate set.
    """
    from . import dtn

    if threshold is None:
        threshold = default_threshold(n)
    elif n < 2:
        raise ConfigurationError("lattice density must be >= 2")
    re = _lattice_axis(region.re_min, region.re_max, n)
    im = _lattice_axis(region.im_min, region.im_max, n)
    if len(re) == 0 or len(im) == 0:
        raise ConfigurationError("region contains no lattice points at this density")
    logabs = np.empty((len(im), len(re)))
    for i, b in enumerate(im):
        for j, a in enumerate(re):
            logabs[i, j] = dtn.det_plain(operator_builder(complex(a, b)))[0]
    result = ScanResult(region=region, n=n, re=re, im=im,
                        logabsdet=logabs, threshold=threshold)
    result.selected = threshold_select(result, n, THRESHOLD_PAPER)
    return result


def threshold_select(result: ScanResult, n: int,
                     threshold_mode: str = THRESHOLD_PRACTICAL) -> List[ResonanceCandidate]:
    """Candidate grid points, by |det| threshold or strict local minima.

    ``paper`` mode returns every grid point with |det| <= 1/log(n) (or the
    scan's override threshold); ``practical`` mode returns strict
    8-neighbor local minima of |det| over the grid interior (a well cut
    off by the region edge is not a detection), which is what resonance
    tables are built from.
    """
    logabs = result.logabsdet
    out: List[ResonanceCandidate] = []
    if threshold_mode == THRESHOLD_PAPER:
        cut = math.log(result.threshold)
        mask = logabs <= cut
    elif threshold_mode == THRESHOLD_PRACTICAL:
        padded = np.pad(logabs, 1, constant_values=np.inf)
        mask = np.ones_like(logabs, dtype=bool)
        ni, nj = logabs.shape
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                mask &= logabs < padded[1 + di:1 + di + ni, 1 + dj:1 + dj + nj]
        mask[0, :] = mask[-1, :] = False
        mask[:, 0] = mask[:, -1] = False
    else:
        raise ConfigurationError(f"unknown threshold mode {threshold_mode!r}")
    for i, j in zip(*np.nonzero(mask)):
        out.append(ResonanceCandidate(
            k=complex(result.re[j], result.im[i]),
            absdet=float(np.exp(logabs[i, j])),
            n=n,
        ))
    return out


def refine(k0: complex, operator_builder: Callable, stop_tol: float = 1e-7,
           max_iter: int = 10000) -> ResonanceCandidate:
    """Polish a candidate by gradient descent on |det|^2.

    The gradient is taken by central differences with step 1e-6 and the
    step size by backtracking line search.  Iterates are projected to
    Im k <= -1e-6.  Stops when |det| < stop_tol (refined) or the step
    collapses below 1e-12 (returned unrefined); exceeding the iteration
    cap raises with the best iterate attached.
    """
    from . import dtn

    delta = 1e-6

    def project(k: complex) -> complex:
        return complex(k.real, min(k.imag, -1e-6))

    def f(k: complex) -> float:
        logabs, _ = dtn.det_plain(operator_builder(k))
        return math.exp(2.0 * min(logabs, 300.0))

    k = project(complex(k0))
    fk = f(k)
    for _ in range(max_iter):
        if math.sqrt(fk) < stop_tol:
            return ResonanceCandidate(k=k, absdet=math.sqrt(fk),
                                      refined=True, refine_tol=stop_tol)
        gx = (f(k + delta) - f(k - delta)) / (2 * delta)
        gy = (f(k + 1j * delta) - f(k - 1j * delta)) / (2 * delta)
        g = complex(gx, gy)
        gnorm2 = gx * gx + gy * gy
        if gnorm2 == 0.0:
            return ResonanceCandidate(k=k, absdet=math.sqrt(fk),
                                      refined=False, refine_tol=stop_tol)
        # near a simple zero f ~ c|k-z|^2, so f/|g|^2 gives a trial step of
        # length |k-z|/2 -- scale-free and local, so descent cannot hop to
        # a different zero across the landscape
        t = fk / gnorm2
        while True:
            trial = project(k - t * g)
            ftrial = f(trial)
            if ftrial <= fk - 1e-4 * t * gnorm2 or abs(trial - k) < 1e-12:
                break
            t *= 0.5
        if abs(trial - k) < 1e-12:
            return ResonanceCandidate(k=k, absdet=math.sqrt(fk),
                                      refined=math.sqrt(fk) < stop_tol,
                                      refine_tol=stop_tol)
        k, fk = trial, ftrial
    best = ResonanceCandidate(k=k, absdet=math.sqrt(fk),
                              refined=False, refine_tol=stop_tol)
    raise RefineFailureError(
        f"refinement did not converge after {max_iter} iterations", best=best
    )


# ---------------------------------------------------------------------------
# spiral tiling
# ---------------------------------------------------------------------------
def _spiral_coordinates(j: int):
    """Integer (column, row-level) of the j-th cell of a CCW square spiral."""
    x = y = 0
    if j == 1:
        return x, y
    step = 1
    count = 1
    moves = [(1, 0), (0, 1), (-1, 0), (0, -1)]  # right, up, left, down
    m = 0
    while True:
        for _ in range(2):
            dx, dy = moves[m % 4]
            for _ in range(step):
                x += dx
                y += dy
                count += 1
                if count == j:
                    return x, y
            m += 1
        step += 1


def _row_interval(level: int):
    """Imaginary-axis extent of a tile row.

    Level 0 is [-2, -1]; levels below continue with unit heights; levels
    above halve towards the real axis: [-2^{1-m}, -2^{-m}].
    """
    if level <= 0:
        return float(level - 2), float(level - 1)
    return -(2.0 ** (1 - level)), -(2.0 ** (-level))


def spiral_tiles(j: int) -> ScanRegion:
    """The j-th rectangle of the counterclockwise tiling of the half-plane."""
    if j < 1:
        raise ConfigurationError("tile index must be >= 1")
    col, level = _spiral_coordinates(j)
    im_min, im_max = _row_interval(level)
    return ScanRegion(re_min=col - 0.5, re_max=col + 0.5,
                      im_min=im_min, im_max=im_max, index=j)


# ---------------------------------------------------------------------------
# radius search
# ---------------------------------------------------------------------------
def locate_radius(obstacle: Obstacle, step: float = 0.01, cap: float = 100.0):
    """Self-calibrating outer radius: grow r (and R with it) until every
    obstacle hit on the step-lattice inside B_r lies in B_{R-1}.

    The search ball keeps growing past an accepted state until it covers
    the obstacle's reported extent, so hidden components cannot be missed;
    an extent beyond the cap counts as invisible (hits decide alone).
    Returns the accepted (R, r); on acceptance r has already been grown
    once for the next round, so the obstacle satisfies U subset B_{R-1}.
    """
    target = obstacle.bounding_radius
    if target is not None and target > cap:
        target = None
    R = r = 1.0
    while r <= cap:
        m = int(math.floor(r / step))
        axis = np.arange(-m, m + 1) * step
        xx, yy = np.meshgrid(axis, axis)
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) < r]
        hits = obstacle.contains(pts).astype(bool)
        radii = np.hypot(pts[hits, 0], pts[hits, 1])
        if len(radii) == 0 or np.max(radii) <= R - 1:
            if target is None or r >= target:
                return R, r + 1.0
            r += 1.0  # accepted, but the obstacle extends beyond B_r
        else:
            r += 1.0
            R = r
    raise ConfigurationError(f"radius search exceeded the cap {cap}")


# ---------------------------------------------------------------------------
# set distance
# ---------------------------------------------------------------------------
def _dist_to_set(x: complex, pts: Sequence[complex]) -> float:
    return min(abs(x - p) for p in pts)


def set_distance(A: Sequence[complex], B: Sequence[complex], window: int = 10) -> float:
    """Truncated Attouch-Wets distance sum_{m=1..window} 2^{-m} min(1, s_m).

    s_m is the largest deviation |d(x, A) - d(x, B)| over the ball of
    radius m, evaluated on the points of A and B themselves (exact
    whenever both sets lie inside the ball, since the deviation is
    maximized on the sets).  Empty-set conventions: the Hausdorff-type
    deviation is +inf against one empty set and 0 when both are empty.
    """
    A = [complex(a) for a in A]
    B = [complex(b) for b in B]
    total = 0.0
    for m in range(1, int(window) + 1):
        if not A and not B:
            s = 0.0
        elif not A or not B:
            s = math.inf
        else:
            cand = [p for p in A + B if abs(p) <= m]
            if cand:
                s = max(abs(_dist_to_set(x, A) - _dist_to_set(x, B)) for x in cand)
            else:
                s = 0.0
        total += 2.0 ** (-m) * min(1.0, s)
    return total
