"""Obstacle geometry: membership oracles, boundary parametrizations, radial cutoff.

An obstacle ``U`` is an open bounded subset of the plane accessed through its
characteristic function ``chi``.  Built-in shape families additionally expose
closed-form boundary distances, nearest-point projections and an arc-length
parametrization of their boundary, which the mesher and the Neumann pipeline
rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, UnsupportedOperationError

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Radial cutoff
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Cutoff:
    """C^2 radial cutoff: 0 on B_{R-0.9}, 1 outside B_{R-0.1}.

    The transition is a quintic smoothstep, so the first two derivatives
    vanish at both ends of the band.
    """

    R: float

    @property
    def r0(self) -> float:
        return self.R - 0.9

    @property
    def r1(self) -> float:
        return self.R - 0.1

    def eval(self, r):
        """Return (rho, rho', rho'') at radius r (scalar or array)."""
        r = np.asarray(r, dtype=float)
        w = self.r1 - self.r0
        t = np.clip((r - self.r0) / w, 0.0, 1.0)
        rho = t**3 * (6.0 * t**2 - 15.0 * t + 10.0)
        d1 = 30.0 * t**2 * (t - 1.0) ** 2 / w
        d2 = 60.0 * t * (2.0 * t - 1.0) * (t - 1.0) / w**2
        if rho.ndim == 0:
            return float(rho), float(d1), float(d2)
        return rho, d1, d2


def rho_eval(r: float, cutoff: Cutoff):
    """Cutoff value and first two derivatives at radius ``r >= 0``."""
    if np.any(np.asarray(r) < 0):
        raise ValueError("radius must be nonnegative")
    return cutoff.eval(r)


# ---------------------------------------------------------------------------
# Obstacles
# ---------------------------------------------------------------------------
@dataclass
class Obstacle:
    """A bounded open obstacle defined by a membership oracle.

    For ``kind="custom"`` the caller must provide ``oracle`` (vectorized over
    an (n, 2) point array), ``bounding_radius`` and, if the obstacle is used
    with Neumann conditions or snapping, a boundary parametrization.
    """

    kind: str
    params: dict = field(default_factory=dict)
    oracle: Optional[Callable[[np.ndarray], np.ndarray]] = None
    custom_boundary: Optional[Callable[[float], tuple]] = None
    custom_boundary_length: Optional[float] = None
    curvature_bound: Optional[float] = None
    bounding_radius: Optional[float] = None

    def __post_init__(self):
        known = {"circular_chamber", "four_disks", "disk", "annulus_with_gap", "custom"}
        if self.kind not in known:
            raise ConfigurationError(f"unknown obstacle kind {self.kind!r}")
        if self.kind == "custom":
            if self.oracle is None:
                raise ConfigurationError("custom obstacle requires a membership oracle")
            if self.bounding_radius is None:
                raise ConfigurationError("custom obstacle requires a bounding radius")
        else:
            self._init_builtin()

    # -- built-in shape setup ------------------------------------------------
    def _init_builtin(self):
        p = self.params
        if self.kind == "disk":
            p.setdefault("radius", 1.0)
            p.setdefault("cx", 0.0)
            p.setdefault("cy", 0.0)
            if p["radius"] <= 0:
                raise ConfigurationError("disk radius must be positive")
            self.bounding_radius = math.hypot(p["cx"], p["cy"]) + p["radius"]
            self.curvature_bound = 1.0 / p["radius"]
        elif self.kind == "four_disks":
            p.setdefault("radius", 0.6)
            p.setdefault("offset", 1.0)
            if p["radius"] <= 0:
                raise ConfigurationError("four_disks radius must be positive")
            self.bounding_radius = math.sqrt(2.0) * p["offset"] + p["radius"]
            self.curvature_bound = 1.0 / p["radius"]
        elif self.kind in ("circular_chamber", "annulus_with_gap"):
            p.setdefault("r_outer", 2.0)
            p.setdefault("r_inner", 1.8)
            dkey = "d" if self.kind == "circular_chamber" else "gap"
            p.setdefault(dkey, 1.3)
            d = p[dkey]
            if not (0 < p["r_inner"] < p["r_outer"]):
                raise ConfigurationError("need 0 < r_inner < r_outer")
            if not (0 < d < 2 * p["r_inner"]):
                raise ConfigurationError("opening width must fit in the inner circle")
            self.bounding_radius = p["r_outer"]
            # Corners of the opening are not C^2; the bound reflects the arcs only.
            self.curvature_bound = 1.0 / p["r_inner"]

    def _opening_halfwidth(self) -> float:
        key = "d" if self.kind == "circular_chamber" else "gap"
        return 0.5 * self.params[key]

    def _disk_centers(self) -> np.ndarray:
        a = self.params["offset"]
        return np.array([[a, a], [-a, a], [-a, -a], [a, -a]])

    # -- membership ----------------------------------------------------------
    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized membership: 1 for points in the open set U, else 0."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "custom":
            out = np.asarray(self.oracle(pts)).astype(np.uint8)
        elif self.kind == "disk":
            p = self.params
            out = ((x - p["cx"]) ** 2 + (y - p["cy"]) ** 2 < p["radius"] ** 2).astype(np.uint8)
        elif self.kind == "four_disks":
            r2 = self.params["radius"] ** 2
            out = np.zeros(len(pts), dtype=np.uint8)
            for cx, cy in self._disk_centers():
                out |= ((x - cx) ** 2 + (y - cy) ** 2 < r2).astype(np.uint8)
        else:  # circular chamber / annulus with gap
            p = self.params
            r2 = x * x + y * y
            in_wall = (r2 > p["r_inner"] ** 2) & (r2 < p["r_outer"] ** 2)
            half = self._opening_halfwidth()
            in_channel = (x >= 0) & (np.abs(y) <= half)
            out = (in_wall & ~in_channel).astype(np.uint8)
        return out

    # -- distances -----------------------------------------------------------
    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        """Unsigned distance to the obstacle boundary (closed form per shape)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "disk":
            p = self.params
            return np.abs(np.hypot(x - p["cx"], y - p["cy"]) - p["radius"])
        if self.kind == "four_disks":
            r = self.params["radius"]
            d = np.full(len(pts), np.inf)
            for cx, cy in self._disk_centers():
                d = np.minimum(d, np.abs(np.hypot(x - cx, y - cy) - r))
            return d
        if self.kind in ("circular_chamber", "annulus_with_gap"):
            return self._chamber_boundary_distance(pts)
        raise UnsupportedOperationError(
            "custom obstacles do not carry a closed-form boundary distance"
        )

    def _chamber_boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        p = self.params
        ro, ri = p["r_outer"], p["r_inner"]
        half = self._opening_halfwidth()
        xo = math.sqrt(ro * ro - half * half)
        xi = math.sqrt(ri * ri - half * half)
        x, y = pts[:, 0], pts[:, 1]
        r = np.hypot(x, y)
        ya = np.abs(y)
        rs = np.where(r == 0, 1.0, r)
        # arc distance is |r - r_arc| unless the radial projection lands inside
        # the removed opening; then the nearest arc point is the arc endpoint
        gap_outer = (x > 0) & (ro * ya / rs < half)
        gap_inner = (x > 0) & (ri * ya / rs < half)
        d_outer = np.where(gap_outer, np.hypot(x - xo, ya - half), np.abs(r - ro))
        d_inner = np.where(gap_inner, np.hypot(x - xi, ya - half), np.abs(r - ri))
        # channel edges: segments y = +-half, xi <= x <= xo
        xc = np.clip(x, xi, xo)
        d_edge = np.hypot(x - xc, ya - half)
        return np.minimum(np.minimum(d_outer, d_inner), d_edge)

    def nearest_boundary_point(self, pts: np.ndarray) -> np.ndarray:
        """Project points onto the obstacle boundary (closed form per shape)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disk":
            p = self.params
            c = np.array([p["cx"], p["cy"]])
            v = pts - c
            n = np.linalg.norm(v, axis=1, keepdims=True)
            n[n == 0] = 1.0
            return c + p["radius"] * v / n
        if self.kind == "four_disks":
            r = self.params["radius"]
            centers = self._disk_centers()
            dists = np.stack(
                [np.abs(np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) - r) for c in centers]
            )
            which = np.argmin(dists, axis=0)
            out = np.empty_like(pts)
            for i, w in enumerate(which):
                c = centers[w]
                v = pts[i] - c
                n = np.linalg.norm(v) or 1.0
                out[i] = c + r * v / n
            return out
        if self.kind in ("circular_chamber", "annulus_with_gap"):
            return self._chamber_nearest(pts)
        raise UnsupportedOperationError(
            "custom obstacles do not carry a closed-form boundary projection"
        )

    def _chamber_nearest(self, pts: np.ndarray) -> np.ndarray:
        p = self.params
        ro, ri = p["r_outer"], p["r_inner"]
        half = self._opening_halfwidth()
        xo = math.sqrt(ro * ro - half * half)
        xi = math.sqrt(ri * ri - half * half)
        out = np.empty_like(pts)
        for i, (x, y) in enumerate(pts):
            r = math.hypot(x, y) or 1e-300
            sy = 1.0 if y >= 0 else -1.0
            ya = abs(y)
            cand = []
            if x > 0 and ro * ya / r < half:
                cand.append((xo, sy * half))
            else:
                cand.append((ro * x / r, ro * y / r))
            if x > 0 and ri * ya / r < half:
                cand.append((xi, sy * half))
            else:
                cand.append((ri * x / r, ri * y / r))
            xc = min(max(x, xi), xo)
            cand.append((xc, sy * half))
            d = [math.hypot(x - cx, y - cy) for cx, cy in cand]
            out[i] = cand[int(np.argmin(d))]
        return out

    # -- boundary parametrization -------------------------------------------
    def boundary_length(self) -> float:
        if self.kind == "disk":
            return TWO_PI * self.params["radius"]
        if self.kind == "four_disks":
            return 4.0 * TWO_PI * self.params["radius"]
        if self.kind in ("circular_chamber", "annulus_with_gap"):
            p = self.params
            ro, ri = p["r_outer"], p["r_inner"]
            half = self._opening_halfwidth()
            a0 = math.asin(half / ro)
            b0 = math.asin(half / ri)
            xo = math.sqrt(ro * ro - half * half)
            xi = math.sqrt(ri * ri - half * half)
            return ro * (TWO_PI - 2 * a0) + ri * (TWO_PI - 2 * b0) + 2 * (xo - xi)
        if self.custom_boundary_length is not None:
            return self.custom_boundary_length
        raise UnsupportedOperationError("obstacle has no boundary parametrization")

    def boundary_point(self, s: float) -> np.ndarray:
        """Arc-length parametrization of the obstacle boundary."""
        if self.kind == "custom":
            if self.custom_boundary is None:
                raise UnsupportedOperationError("custom obstacle has no boundary parametrization")
            return np.asarray(self.custom_boundary(s), dtype=float)
        total = self.boundary_length()
        if s < -1e-12 or s > total + 1e-12:
            raise ValueError(f"arc length {s} outside [0, {total}]")
        s = min(max(s, 0.0), total)
        if self.kind == "disk":
            p = self.params
            t = s / p["radius"]
            return np.array([p["cx"] + p["radius"] * math.cos(t),
                             p["cy"] + p["radius"] * math.sin(t)])
        if self.kind == "four_disks":
            r = self.params["radius"]
            per = TWO_PI * r
            idx = min(int(s // per), 3)
            t = (s - idx * per) / r
            cx, cy = self._disk_centers()[idx]
            return np.array([cx + r * math.cos(t), cy + r * math.sin(t)])
        return self._chamber_boundary_point(s)

    def _chamber_boundary_point(self, s: float) -> np.ndarray:
        p = self.params
        ro, ri = p["r_outer"], p["r_inner"]
        half = self._opening_halfwidth()
        a0 = math.asin(half / ro)
        b0 = math.asin(half / ri)
        xo = math.sqrt(ro * ro - half * half)
        xi = math.sqrt(ri * ri - half * half)
        L_out = ro * (TWO_PI - 2 * a0)
        L_edge = xo - xi
        L_in = ri * (TWO_PI - 2 * b0)
        # counterclockwise around the wall: outer arc, lower edge inward,
        # inner arc (clockwise, it bounds the cavity), upper edge outward
        if s <= L_out:
            t = a0 + s / ro
            return np.array([ro * math.cos(t), ro * math.sin(t)])
        s -= L_out
        if s <= L_edge:
            return np.array([xo - s, -half])
        s -= L_edge
        if s <= L_in:
            t = -b0 - s / ri
            return np.array([ri * math.cos(t), ri * math.sin(t)])
        s -= L_in
        return np.array([xi + s, half])


# ---------------------------------------------------------------------------
# Shape factories and operation wrappers
# ---------------------------------------------------------------------------
def circular_chamber(r_outer=2.0, r_inner=1.8, d=1.3) -> Obstacle:
    return Obstacle("circular_chamber", {"r_outer": r_outer, "r_inner": r_inner, "d": d})


def annulus_with_gap(r_outer=2.0, r_inner=1.8, gap=1.3) -> Obstacle:
    return Obstacle("annulus_with_gap", {"r_outer": r_outer, "r_inner": r_inner, "gap": gap})


def four_disks(radius=0.6, offset=1.0) -> Obstacle:
    return Obstacle("four_disks", {"radius": radius, "offset": offset})


def disk(radius=1.0, cx=0.0, cy=0.0) -> Obstacle:
    return Obstacle("disk", {"radius": radius, "cx": cx, "cy": cy})


def empty_obstacle() -> Obstacle:
    """An obstacle whose support lies far outside any working ball (U = empty
    as seen from B_R)."""
    u = disk(radius=0.25, cx=1e3, cy=0.0)
    # irrelevant for mesh admissibility: the obstacle never meets the ball
    u.curvature_bound = None
    return u


def chi(obstacle: Obstacle, point) -> int:
    """Membership bit of the open set U; boundary points give 0."""
    return int(obstacle.contains(np.asarray(point, dtype=float).reshape(1, 2))[0])


def boundary_point(obstacle: Obstacle, s: float) -> np.ndarray:
    return obstacle.boundary_point(s)
