"""Grid-based P1 triangulation of the domain between an obstacle and B_R.

The mesh is built from membership queries only: a lattice point j of h*Z^2
belongs to the mesh lattice when the 16 surrounding lattice points of the
block [j1-h, j1+2h] x [j2-h, j2+2h] all lie inside the working domain
O = B_R minus the closed obstacle.  Cells whose four corners are lattice
members are split along the lower-left/upper-right diagonal into two
counterclockwise triangles.  An optional snapping pass moves boundary nodes
onto the exact obstacle boundary / outer circle for fitted (e.g. Neumann)
computations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, MeshError, SnapError
from .geometry import Obstacle

INTERIOR = 0
INNER_BOUNDARY = 1
OUTER_BOUNDARY = 2

_CLASS_NAMES = {INTERIOR: "interior", INNER_BOUNDARY: "inner_boundary", OUTER_BOUNDARY: "outer_boundary"}
_CLASS_IDS = {v: k for k, v in _CLASS_NAMES.items()}


@dataclass
class TriMesh:
    """Conforming triangle mesh with per-node boundary classification.

    ``lattice_index`` holds each node's integer lattice coordinates;
    ``snapped`` records whether the node has been moved off the lattice.
    """

    h: float
    nodes: np.ndarray  # (n, 2) float
    triangles: np.ndarray  # (m, 3) int, counterclockwise
    node_class: np.ndarray  # (n,) int8
    lattice_index: np.ndarray  # (n, 2) int
    snapped: np.ndarray = field(default=None)  # (n,) bool
    chi_queries: int = 0

    def __post_init__(self):
        if self.snapped is None:
            self.snapped = np.zeros(len(self.nodes), dtype=bool)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        a = self.nodes[self.triangles[:, 0]]
        b = self.nodes[self.triangles[:, 1]]
        c = self.nodes[self.triangles[:, 2]]
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    def validate(self, snapped: bool = False) -> None:
        """Check orientation, non-degeneracy and edge conformity."""
        areas = self.triangle_areas()
        floor = 0.05 * self.h**2 if snapped else 0.499 * self.h**2
        if len(areas) == 0:
            raise MeshError("mesh has no triangles")
        if np.min(areas) <= floor:
            raise MeshError(f"degenerate triangle: min area {np.min(areas):.3g} <= {floor:.3g}")
        edge_count = {}
        for tri in self.triangles:
            if len(set(int(v) for v in tri)) != 3:
                raise MeshError("triangle with repeated vertex")
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (int(min(a, b)), int(max(a, b)))
                edge_count[key] = edge_count.get(key, 0) + 1
        if any(c > 2 for c in edge_count.values()):
            raise MeshError("non-conforming mesh: edge shared by more than two triangles")


def build_lattice(obstacle: Obstacle, R: float, h: float):
    """Lattice points j of h*Z^2 in B_R whose 16-point neighborhood block
    lies in O = B_R \\ closure(U).

    Returns ``(points, queries)``: an (n, 2) integer array of lattice
    coordinates and the number of membership queries spent.
    """
    if h > 0.5:
        raise ConfigurationError("lattice spacing must satisfy h <= 0.5")
    if obstacle.curvature_bound is not None and h >= 1.0 / obstacle.curvature_bound:
        raise ConfigurationError(
            f"h = {h} too coarse for curvature bound {obstacle.curvature_bound:.3g}"
        )
    n = int(math.floor(R / h)) + 2
    idx = np.arange(-n - 1, n + 3)  # covers every point of every 16-block
    ii, jj = np.meshgrid(idx, idx, indexing="ij")
    pts = np.column_stack([ii.ravel() * h, jj.ravel() * h])
    inside_ball = np.hypot(pts[:, 0], pts[:, 1]) < R
    in_obstacle = obstacle.contains(pts).astype(bool)
    in_domain = (inside_ball & ~in_obstacle).reshape(ii.shape)
    queries = len(pts)

    # the 16 neighbors of j are the offsets {-1, 0, 1, 2}^2 in lattice units
    ok = np.ones((len(idx) - 3, len(idx) - 3), dtype=bool)
    for di in range(-1, 3):
        for dj in range(-1, 3):
            ok &= in_domain[1 + di : 1 + di + ok.shape[0], 1 + dj : 1 + dj + ok.shape[1]]
    base = idx[1 : 1 + ok.shape[0]]
    gi, gj = np.meshgrid(base, base, indexing="ij")
    dist = np.hypot(gi * h, gj * h)
    ok &= dist < R
    points = np.column_stack([gi[ok], gj[ok]])
    if len(points) == 0:
        raise MeshError(f"empty lattice at h = {h}: resolution too coarse")
    return points, queries


def triangulate(lattice: np.ndarray, h: float, R: float,
                obstacle: Optional[Obstacle] = None, chi_queries: int = 0) -> TriMesh:
    """Split every lattice cell with four member corners into two triangles.

    Node classification: a node is a boundary node when one of its four
    incident cells is missing from the mesh; boundary nodes within distance
    4h of the circle |x| = R are ``outer_boundary``, the rest
    ``inner_boundary``.
    """
    lattice = np.asarray(lattice, dtype=np.int64)
    member = {(int(i), int(j)) for i, j in lattice}
    cells = [
        (i, j)
        for i, j in member
        if (i + 1, j) in member and (i, j + 1) in member and (i + 1, j + 1) in member
    ]
    cells.sort()
    if not cells:
        raise MeshError("lattice admits no complete cells")
    cell_set = set(cells)

    node_ids = {}
    nodes = []
    for i, j in cells:
        for corner in ((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)):
            if corner not in node_ids:
                node_ids[corner] = len(nodes)
                nodes.append(corner)
    order = sorted(range(len(nodes)), key=lambda t: nodes[t])
    remap = np.empty(len(nodes), dtype=np.int64)
    remap[order] = np.arange(len(nodes))
    node_ids = {nodes[t]: int(remap[t]) for t in range(len(nodes))}
    nodes = [nodes[t] for t in order]

    tris = []
    for i, j in cells:
        a = node_ids[(i, j)]
        b = node_ids[(i + 1, j)]
        c = node_ids[(i + 1, j + 1)]
        d = node_ids[(i, j + 1)]
        tris.append((a, b, c))
        tris.append((a, c, d))

    lattice_index = np.asarray(nodes, dtype=np.int64)
    coords = lattice_index * h
    node_class = np.zeros(len(nodes), dtype=np.int8)
    for t, (i, j) in enumerate(nodes):
        incident = ((i, j), (i - 1, j), (i, j - 1), (i - 1, j - 1))
        if all(c in cell_set for c in incident):
            continue
        r = math.hypot(coords[t, 0], coords[t, 1])
        # staircase nodes along the circle sit up to 3*sqrt(2)*h (~4.24h)
        # inside it, so the outer classification band must reach that far
        if R - r <= 3.0 * math.sqrt(2.0) * h:
            node_class[t] = OUTER_BOUNDARY
        else:
            node_class[t] = INNER_BOUNDARY

    mesh = TriMesh(
        h=h,
        nodes=coords.astype(float),
        triangles=np.asarray(tris, dtype=np.int64),
        node_class=node_class,
        lattice_index=lattice_index,
        chi_queries=chi_queries,
    )
    mesh.validate(snapped=False)
    return mesh


def build_mesh(obstacle: Obstacle, R: float, h: float) -> TriMesh:
    """Convenience pipeline: lattice plus triangulation."""
    lattice, queries = build_lattice(obstacle, R, h)
    return triangulate(lattice, h, R, obstacle, chi_queries=queries)


def snap_boundary(mesh: TriMesh, obstacle: Obstacle, R: float) -> TriMesh:
    """Move inner boundary nodes onto the obstacle boundary and outer
    boundary nodes radially onto the circle |x| = R.

    Triangles that the move degenerates (area <= 0.05 h^2) are repaired by
    collapsing one of their snapped nodes onto its nearest retained
    neighbor.
    """
    if mesh.snapped.any():
        raise ConfigurationError("mesh is already snapped")
    nodes = mesh.nodes.copy()
    snapped = np.zeros(len(nodes), dtype=bool)

    inner = np.nonzero(mesh.node_class == INNER_BOUNDARY)[0]
    if len(inner):
        far = obstacle.boundary_distance(nodes[inner]) > 3.0 * math.sqrt(2.0) * mesh.h
        if far.any():
            raise SnapError(
                "inner boundary node unexpectedly far from the obstacle boundary"
            )
        nodes[inner] = obstacle.nearest_boundary_point(nodes[inner])
        snapped[inner] = True
    outer = np.nonzero(mesh.node_class == OUTER_BOUNDARY)[0]
    if len(outer):
        r = np.hypot(nodes[outer, 0], nodes[outer, 1])
        r[r == 0] = 1.0
        nodes[outer] = nodes[outer] * (R / r)[:, None]
        snapped[outer] = True

    out = TriMesh(
        h=mesh.h,
        nodes=nodes,
        triangles=mesh.triangles.copy(),
        node_class=mesh.node_class.copy(),
        lattice_index=mesh.lattice_index.copy(),
        snapped=snapped,
        chi_queries=mesh.chi_queries,
    )
    _repair_degenerate(out)
    _smooth_interior(out)
    try:
        out.validate(snapped=True)
    except MeshError as exc:
        raise SnapError(f"snapping produced an invalid mesh: {exc}") from exc
    return out


def _repair_degenerate(mesh: TriMesh, max_rounds: int = 2000) -> None:
    """Collapse nodes of near-zero-area triangles onto a nearest neighbor.

    Operates in place: updates nodes/triangles/classes.  Only snapped
    boundary nodes are eligible for collapsing, which preserves the lattice
    interior.
    """
    floor = 0.05 * mesh.h**2
    for _ in range(max_rounds):
        areas = mesh.triangle_areas()
        bad = np.nonzero(areas <= floor)[0]
        if len(bad) == 0:
            return
        tri = mesh.triangles[bad[0]]
        # prefer collapsing a snapped node; a degenerate triangle always has
        # one because unsnapped triangles have exact area h^2/2
        cand = [v for v in tri if mesh.snapped[v]]
        if not cand:
            raise SnapError("degenerate triangle without snapped vertices")
        # collapse the candidate with the closest neighbor in the triangle
        best = None
        for v in cand:
            for w in tri:
                if w == v:
                    continue
                d = float(np.hypot(*(mesh.nodes[v] - mesh.nodes[w])))
                if best is None or d < best[0]:
                    best = (d, int(v), int(w))
        _, v, w = best
        _collapse_node(mesh, v, w)
    raise SnapError("mesh repair did not converge")


def _smooth_interior(mesh: TriMesh, iters: int = 5, damping: float = 0.7) -> None:
    """Relax interior nodes after snapping (damped Laplacian smoothing).

    On the undisturbed lattice the neighbor average is a fixed point, so
    only nodes near the snapped band actually move; the pass spreads the
    distortion of large radial snaps over a few element layers, which
    markedly improves the quality of the boundary-layer triangles.  A move
    that would push a triangle below the degeneracy floor is undone and
    the offending nodes sit out the remaining sweeps.
    """
    import scipy.sparse as sp

    n = len(mesh.nodes)
    tris = mesh.triangles
    if len(tris) == 0 or iters <= 0:
        return
    rows = np.concatenate([tris[:, 0], tris[:, 1], tris[:, 1], tris[:, 2], tris[:, 2], tris[:, 0]])
    cols = np.concatenate([tris[:, 1], tris[:, 0], tris[:, 2], tris[:, 1], tris[:, 0], tris[:, 2]])
    adj = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    adj = (adj > 0).astype(float)
    deg = np.maximum(np.asarray(adj.sum(axis=1)).ravel(), 1.0)
    movable = mesh.node_class == INTERIOR
    floor = 0.05 * mesh.h**2
    nodes = mesh.nodes
    for _ in range(iters):
        target = (adj @ nodes) / deg[:, None]
        new = nodes.copy()
        new[movable] = nodes[movable] + damping * (target[movable] - nodes[movable])
        for _reject in range(n):
            a = new[tris[:, 0]]
            b = new[tris[:, 1]]
            c = new[tris[:, 2]]
            areas = 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                           - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
            bad = areas <= floor
            if not bad.any():
                break
            freeze = np.unique(tris[bad].ravel())
            freeze = freeze[movable[freeze]]
            if len(freeze) == 0:
                break
            new[freeze] = nodes[freeze]
            movable[freeze] = False
        nodes = new
    moved = np.any(nodes != mesh.nodes, axis=1)
    mesh.snapped = mesh.snapped | moved
    mesh.nodes = nodes


def _collapse_node(mesh: TriMesh, v: int, w: int) -> None:
    """Merge node v into node w, dropping collapsed triangles."""
    tris = mesh.triangles
    tris = np.where(tris == v, w, tris)
    keep = (tris[:, 0] != tris[:, 1]) & (tris[:, 1] != tris[:, 2]) & (tris[:, 0] != tris[:, 2])
    tris = tris[keep]
    # remove the orphaned node and re-index
    mask = np.ones(len(mesh.nodes), dtype=bool)
    mask[v] = False
    remap = np.cumsum(mask) - 1
    mesh.nodes = mesh.nodes[mask]
    mesh.node_class = mesh.node_class[mask]
    mesh.lattice_index = mesh.lattice_index[mask]
    mesh.snapped = mesh.snapped[mask]
    mesh.triangles = remap[tris]


def write_mesh(mesh: TriMesh, path: str) -> None:
    """Plain-text mesh export: `#nodes` (x y class) then `#triangles` (i j k)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("#nodes\n")
        for (x, y), cls in zip(mesh.nodes, mesh.node_class):
            fh.write(f"{x:.12g} {y:.12g} {_CLASS_NAMES[int(cls)]}\n")
        fh.write("#triangles\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")


def read_mesh(path: str, h: float = 0.0) -> TriMesh:
    """Read a mesh produced by :func:`write_mesh`."""
    nodes, classes, tris = [], [], []
    section = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                section = line[1:]
                continue
            parts = line.split()
            if section == "nodes":
                nodes.append((float(parts[0]), float(parts[1])))
                classes.append(_CLASS_IDS[parts[2]])
            elif section == "triangles":
                tris.append(tuple(int(p) for p in parts[:3]))
    nodes = np.asarray(nodes, dtype=float)
    return TriMesh(
        h=h,
        nodes=nodes,
        triangles=np.asarray(tris, dtype=np.int64),
        node_class=np.asarray(classes, dtype=np.int8),
        lattice_index=np.zeros((len(nodes), 2), dtype=np.int64),
        snapped=np.ones(len(nodes), dtype=bool),
    )
