"""Command-line interface: mesh export, determinant scans, refinement,
closed-chamber eigenvalues and convergence studies.

Configuration is plain ``key = value`` text (with ``#`` comments); any
flag given on the command line overrides the file.  All outputs are
deterministic: floats are written with 12 significant digits, CSV uses
LF endings and row-major grid order, JSON uses snake_case keys.

Exit codes: 0 success, 2 configuration error, 3 numerical error,
4 refinement failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import dtn, fem, geometry, mesh, search, specfun
from .errors import (
    ConfigurationError,
    HelmresError,
    RefineFailureError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_REFINE = 4

_BC_CHOICES = ("dirichlet", "neumann")
_MODE_CHOICES = (dtn.MODE_DIRECT, dtn.MODE_THEORETICAL)
_THRESHOLD_CHOICES = ("paper", "minima")

_OBSTACLES = {
    "circular_chamber": geometry.circular_chamber,
    "annulus_with_gap": geometry.annulus_with_gap,
    "four_disks": geometry.four_disks,
    "disk": geometry.disk,
    "empty": geometry.empty_obstacle,
}


@dataclass
class RunConfig:
    obstacle: str = "circular_chamber"
    params: dict = field(default_factory=dict)
    R: float = 3.0
    h: float = 0.1
    N: int = 20
    bc: str = "dirichlet"
    mode: str = dtn.MODE_DIRECT
    region: Optional[tuple] = None  # (re0, re1, im0, im1)
    tile: Optional[int] = None
    grid_step: float = 1e-3
    threshold_mode: str = "minima"
    refine_tol: float = 1e-7
    k0: Optional[complex] = None
    n_list: Optional[List[int]] = None
    out: Optional[str] = None
    export_mesh: Optional[str] = None

    def validate(self) -> None:
        if self.obstacle not in _OBSTACLES:
            raise ConfigurationError(f"unknown obstacle {self.obstacle!r}")
        if self.bc not in _BC_CHOICES:
            raise ConfigurationError(f"unknown bc {self.bc!r}")
        if self.mode not in _MODE_CHOICES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.threshold_mode not in _THRESHOLD_CHOICES:
            raise ConfigurationError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.mode == dtn.MODE_THEORETICAL and self.bc != "dirichlet":
            raise ConfigurationError("theoretical mode supports only bc=dirichlet")
        if self.R <= 1.0:
            raise ConfigurationError("R must exceed 1 (the cutoff band has width 1)")
        if self.grid_step <= 0:
            raise ConfigurationError("grid step must be positive")

    def bc_mode(self) -> str:
        return fem.DIRICHLET_ALL if self.bc == "dirichlet" else fem.DIRICHLET_OUTER_NEUMANN_INNER

    def make_obstacle(self) -> geometry.Obstacle:
        factory = _OBSTACLES[self.obstacle]
        try:
            return factory(**self.params)
        except TypeError as exc:
            raise ConfigurationError(f"bad parameters for {self.obstacle}: {exc}") from exc

    def scan_region(self) -> search.ScanRegion:
        if self.region is not None and self.tile is not None:
            raise ConfigurationError("give either a region or a tile, not both")
        if self.tile is not None:
            return search.spiral_tiles(self.tile)
        if self.region is not None:
            re0, re1, im0, im1 = self.region
            return search.ScanRegion(re0, re1, im0, im1)
        raise ConfigurationError("a scan needs --region or --tile")


# ---------------------------------------------------------------------------
# config file / flags
# ---------------------------------------------------------------------------
def _parse_scalar(key: str, value: str):
    value = value.strip()
    if key in ("R", "h", "grid_step", "refine_tol"):
        return float(value)
    if key in ("N", "tile"):
        return int(value)
    if key == "region":
        parts = [float(p) for p in value.split(",")]
        if len(parts) != 4:
            raise ConfigurationError("region needs four numbers re0,re1,im0,im1")
        return tuple(parts)
    if key == "k0":
        parts = [float(p) for p in value.split(",")]
        if len(parts) != 2:
            raise ConfigurationError("k0 needs two numbers re,im")
        return complex(parts[0], parts[1])
    if key == "n_list":
        return [int(p) for p in value.split(",")]
    return value


def read_config(path: str) -> RunConfig:
    """Parse a plain key = value configuration file."""
    config = RunConfig()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            if key.startswith("param."):
                config.params[key[len("param."):]] = float(value)
            elif hasattr(config, key) and key != "params":
                setattr(config, key, _parse_scalar(key, value))
            else:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
    return config


def _apply_flags(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    direct = {
        "obstacle": "obstacle", "R": "R", "h": "h", "N": "N", "bc": "bc",
        "mode": "mode", "grid_step": "grid_step", "threshold": "threshold_mode",
        "tile": "tile", "out": "out", "export_mesh": "export_mesh",
        "refine_tol": "refine_tol",
    }
    for flag, key in direct.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, key, value)
    if getattr(args, "region", None) is not None:
        config.region = _parse_scalar("region", args.region)
    if getattr(args, "k0", None) is not None:
        config.k0 = _parse_scalar("k0", args.k0)
    if getattr(args, "n_list", None) is not None:
        config.n_list = _parse_scalar("n_list", args.n_list)
    for item in getattr(args, "param", None) or []:
        if "=" not in item:
            raise ConfigurationError(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        config.params[key.strip()] = float(value)
    return config


def _fmt(x: float) -> str:
    return f"{x:.12g}"


# ---------------------------------------------------------------------------
# pipeline pieces
# ---------------------------------------------------------------------------
def _build_system(config: RunConfig):
    obstacle = config.make_obstacle()
    if config.bc == "neumann" and obstacle.kind == "custom" and obstacle.custom_boundary is None:
        raise ConfigurationError("neumann bc needs an obstacle with a boundary parametrization")
    m = mesh.build_mesh(obstacle, config.R, config.h)
    m = mesh.snap_boundary(m, obstacle, config.R)
    if config.export_mesh:
        mesh.write_mesh(m, config.export_mesh)
    return obstacle, m, fem.assemble(m)


def _operator_builder(config: RunConfig, system):
    cutoff = geometry.Cutoff(config.R)
    bc_mode = config.bc_mode()

    def build(k: complex):
        return dtn.assemble_operator(k, config.N, config.mode, system, cutoff,
                                     bc_mode=bc_mode)

    return build


def _write_candidates(path: str, candidates) -> None:
    payload = [
        {"k_re": c.k.real, "k_im": c.k.imag, "absdet": c.absdet}
        for c in candidates
    ]
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def candidates_path(csv_path: str) -> str:
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    return stem + ".candidates.json"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_mesh(config: RunConfig) -> int:
    config.validate()
    out = config.out or config.export_mesh
    if out is None:
        raise ConfigurationError("mesh command needs --out")
    obstacle, m, _ = _build_system(config)
    mesh.write_mesh(m, out)
    dists = []
    outer = m.node_class == mesh.OUTER_BOUNDARY
    if np.any(outer):
        r = np.hypot(m.nodes[outer, 0], m.nodes[outer, 1])
        dists.append(np.abs(config.R - r))
    inner = m.node_class == mesh.INNER_BOUNDARY
    if np.any(inner):
        dists.append(obstacle.boundary_distance(m.nodes[inner]))
    worst = float(np.max(np.concatenate(dists))) if dists else 0.0
    print(f"nodes: {m.n_nodes}")
    print(f"triangles: {m.n_triangles}")
    print(f"max boundary distance: {_fmt(worst)}")
    return EXIT_OK


def cmd_scan(config: RunConfig) -> int:
    config.validate()
    region = config.scan_region()
    if config.out is None:
        raise ConfigurationError("scan command needs --out")
    _, _, system = _build_system(config)
    build = _operator_builder(config, system)
    n = int(round(1.0 / config.grid_step))
    result = search.scan(region, n, build)
    if config.threshold_mode == "paper":
        candidates = result.selected
    else:
        candidates = search.threshold_select(result, n, search.THRESHOLD_PRACTICAL)
    with open(config.out, "w", newline="\n") as fh:
        fh.write("re,im,logabsdet\n")
        for i, b in enumerate(result.im):
            for j, a in enumerate(result.re):
                fh.write(f"{_fmt(a)},{_fmt(b)},{_fmt(result.logabsdet[i, j])}\n")
    _write_candidates(candidates_path(config.out), candidates)
    print(f"grid: {len(result.im)} x {len(result.re)}")
    print(f"candidates: {len(candidates)}")
    return EXIT_OK


def cmd_refine(config: RunConfig) -> int:
    config.validate()
    if config.k0 is None:
        raise ConfigurationError("refine command needs --k0 re,im")
    _, _, system = _build_system(config)
    build = _operator_builder(config, system)
    cand = search.refine(config.k0, build, stop_tol=config.refine_tol)
    payload = {
        "k_re": cand.k.real,
        "k_im": cand.k.imag,
        "absdet": cand.absdet,
        "refined": cand.refined,
        "refine_tol": cand.refine_tol,
    }
    text = json.dumps(payload, indent=2) + "\n"
    if config.out:
        with open(config.out, "w", newline="\n") as fh:
            fh.write(text)
    print(text, end="")
    return EXIT_OK


def chamber_eigenvalues(r_inner: float, count: int = 20):
    """Smallest Dirichlet eigenvalue parameters j_{n,m}/r_inner of the
    closed chamber disk, ascending, with angular multiplicity."""
    values = []
    for n_ang in range(0, count + 1):
        for m_rad in range(1, count + 1):
            values.append(
                (specfun.bessel_zero(n_ang, m_rad) / r_inner, n_ang, m_rad)
            )
    values.sort()
    out = []
    for k, n_ang, m_rad in values[:count]:
        out.append({
            "k": k,
            "order_n": n_ang,
            "radial_m": m_rad,
            "multiplicity": 1 if n_ang == 0 else 2,
        })
    return out


def cmd_eigs(config: RunConfig) -> int:
    config.validate()
    if config.obstacle not in ("circular_chamber", "annulus_with_gap"):
        raise ConfigurationError("eigs requires a chamber-type obstacle")
    obstacle = config.make_obstacle()
    r_inner = obstacle.params["r_inner"]
    eigs = chamber_eigenvalues(r_inner)
    text = json.dumps(eigs, indent=2) + "\n"
    if config.out:
        with open(config.out, "w", newline="\n") as fh:
            fh.write(text)
    print(text, end="")
    return EXIT_OK


def cmd_study(config: RunConfig) -> int:
    config.validate()
    if not config.n_list:
        raise ConfigurationError("study command needs --n-list n1,n2,...")
    if config.out is None:
        raise ConfigurationError("study command needs --out")
    k0 = config.k0 if config.k0 is not None else 1.32 - 0.002j
    results = {}
    for n in config.n_list:
        cfg = RunConfig(**{**config.__dict__, "N": n, "h": 1.0 / n})
        _, _, system = _build_system(cfg)
        build = _operator_builder(cfg, system)
        cand = search.refine(k0, build, stop_tol=config.refine_tol)
        results[n] = cand.k
    with open(config.out, "w", newline="\n") as fh:
        fh.write("n,re,im,succ_err\n")
        for n in config.n_list:
            z = results[n]
            err = abs(results[2 * n] - z) if 2 * n in results else None
            tail = _fmt(err) if err is not None else ""
            fh.write(f"{n},{_fmt(z.real)},{_fmt(z.imag)},{tail}\n")
    print(f"study rows: {len(results)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="helmres",
        description="Resonances of sound-hard/soft obstacles via boundary-operator determinants",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("mesh", "scan", "refine", "eigs", "study"):
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--obstacle", choices=sorted(_OBSTACLES))
        p.add_argument("--param", action="append", metavar="KEY=VAL")
        p.add_argument("--R", type=float)
        p.add_argument("--h", type=float)
        p.add_argument("--N", type=int)
        p.add_argument("--bc", choices=_BC_CHOICES)
        p.add_argument("--mode", choices=_MODE_CHOICES)
        p.add_argument("--region", metavar="RE0,RE1,IM0,IM1")
        p.add_argument("--tile", type=int)
        p.add_argument("--grid-step", dest="grid_step", type=float)
        p.add_argument("--threshold", choices=_THRESHOLD_CHOICES)
        p.add_argument("--refine-tol", dest="refine_tol", type=float)
        p.add_argument("--k0", metavar="RE,IM")
        p.add_argument("--n-list", dest="n_list", metavar="N1,N2,...")
        p.add_argument("--out")
        p.add_argument("--export-mesh", dest="export_mesh")
    return parser


_COMMANDS = {
    "mesh": cmd_mesh,
    "scan": cmd_scan,
    "refine": cmd_refine,
    "eigs": cmd_eigs,
    "study": cmd_study,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = read_config(args.config) if args.config else RunConfig()
        config = _apply_flags(config, args)
        return _COMMANDS[args.command](config)
    except RefineFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.best is not None:
            print(
                f"best iterate: {_fmt(exc.best.k.real)},{_fmt(exc.best.k.imag)} "
                f"|det| = {_fmt(exc.best.absdet)}",
                file=sys.stderr,
            )
        return EXIT_REFINE
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HelmresError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
