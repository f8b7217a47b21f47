"""P1 finite elements on lattice triangle meshes.

Assembly produces exact mass and stiffness matrices (closed-form element
integrals for affine triangles).  Helmholtz systems (s - k^2 m) are solved by
a direct sparse LU factorization of the free-node block, built once per
wavenumber and reused across arbitrarily many right-hand sides; Dirichlet
data enters through the standard lifting construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, ConfigurationError, NearEigenvalueError
from .mesh import INTERIOR, INNER_BOUNDARY, OUTER_BOUNDARY, TriMesh

DIRICHLET_ALL = "dirichlet_all"
DIRICHLET_OUTER_NEUMANN_INNER = "dirichlet_outer_neumann_inner"
_BC_MODES = (DIRICHLET_ALL, DIRICHLET_OUTER_NEUMANN_INNER)


@dataclass
class AssembledSystem:
    """Mass/stiffness pair for a mesh, boundary-condition agnostic."""

    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    mesh: TriMesh

    def constrained_nodes(self, bc_mode: str) -> np.ndarray:
        """Indices of Dirichlet-constrained nodes for the given mode."""
        if bc_mode not in _BC_MODES:
            raise ConfigurationError(f"unknown bc_mode {bc_mode!r}")
        cls = self.mesh.node_class
        if bc_mode == DIRICHLET_ALL:
            return np.nonzero(cls != INTERIOR)[0]
        return np.nonzero(cls == OUTER_BOUNDARY)[0]

    def free_nodes(self, bc_mode: str) -> np.ndarray:
        mask = np.ones(self.mesh.n_nodes, dtype=bool)
        mask[self.constrained_nodes(bc_mode)] = False
        return np.nonzero(mask)[0]


def assemble(mesh: TriMesh) -> AssembledSystem:
    """Scatter-assemble the exact P1 mass and stiffness matrices."""
    pts = mesh.nodes
    tris = mesh.triangles
    n = mesh.n_nodes
    p = pts[tris]  # (m, 3, 2)
    # b_i = y_j - y_k, c_i = x_k - x_j with (i, j, k) cyclic
    b = p[:, [1, 2, 0], 1] - p[:, [2, 0, 1], 1]
    c = p[:, [2, 0, 1], 0] - p[:, [1, 2, 0], 0]
    area2 = b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0]
    if np.any(area2 <= 0):
        raise AssemblyError("degenerate or misoriented triangle")
    area = 0.5 * area2
    ke = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * area)[:, None, None]
    mass_local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    me = area[:, None, None] * mass_local
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    mass = sp.csr_matrix((me.ravel(), (rows, cols)), shape=(n, n))
    stiffness = sp.csr_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    return AssembledSystem(mass=mass, stiffness=stiffness, mesh=mesh)


def helmholtz_matrix(system: AssembledSystem, k: complex) -> sp.csr_matrix:
    """The full (unconstrained) discrete Helmholtz operator s - k^2 m."""
    return (system.stiffness - (k * k) * system.mass).tocsr()


@dataclass
class HelmholtzFactorization:
    """Reusable sparse LU of the free-node block of s - k^2 m."""

    k: complex
    bc_mode: str
    system: AssembledSystem
    free: np.ndarray
    constrained: np.ndarray
    lu: spla.SuperLU
    coupling: sp.csr_matrix  # A[free, constrained]

    def solve_free(self, rhs_free: np.ndarray) -> np.ndarray:
        return self.lu.solve(np.asarray(rhs_free, dtype=complex))


def factor(system: AssembledSystem, k: complex, bc_mode: str = DIRICHLET_ALL,
           force: bool = False) -> HelmholtzFactorization:
    """Factor the free-node block of (s - k^2 m) for repeated solves.

    Refuses wavenumbers within 1e-6 of the real axis unless ``force`` is
    set: there k^2 can sit arbitrarily close to a discrete interior
    eigenvalue and the factorization becomes meaningless.
    """
    k = complex(k)
    if abs(k.imag) < 1e-6 and not force:
        raise NearEigenvalueError(
            f"k = {k} too close to the real axis; pass force=True to override", k=k
        )
    free = system.free_nodes(bc_mode)
    constrained = system.constrained_nodes(bc_mode)
    A = helmholtz_matrix(system, k).astype(complex)
    A_ff = A[free][:, free].tocsc()
    try:
        lu = spla.splu(A_ff)
    except RuntimeError as exc:
        raise NearEigenvalueError(
            f"singular Helmholtz operator at k = {k} (k^2 near an interior eigenvalue)",
            k=k,
        ) from exc
    if not np.all(np.isfinite(lu.U.data)):
        raise NearEigenvalueError(
            f"singular Helmholtz operator at k = {k} (k^2 near an interior eigenvalue)",
            k=k,
        )
    coupling = A[free][:, constrained].tocsr()
    return HelmholtzFactorization(
        k=k, bc_mode=bc_mode, system=system, free=free,
        constrained=constrained, lu=lu, coupling=coupling,
    )


def _as_full_vector(values, n: int, allowed: Optional[np.ndarray]) -> np.ndarray:
    """Expand a dict/array specification into a full nodal vector."""
    if values is None:
        return np.zeros(n, dtype=complex)
    if isinstance(values, dict):
        out = np.zeros(n, dtype=complex)
        for node, val in values.items():
            out[int(node)] = val
        idx = np.asarray(sorted(int(i) for i in values), dtype=int)
    else:
        out = np.asarray(values, dtype=complex)
        if out.shape != (n,):
            raise ConfigurationError(f"expected a vector of length {n}")
        idx = np.nonzero(out)[0]
    if allowed is not None:
        mask = np.zeros(n, dtype=bool)
        mask[allowed] = True
        if not np.all(mask[idx]):
            raise ConfigurationError("boundary data supplied on a non-constrained node")
    return out


def solve_dirichlet(fact: HelmholtzFactorization, boundary_values=None,
                    volume_rhs=None) -> np.ndarray:
    """Solve (s - k^2 m) u = rhs with Dirichlet data by lifting.

    ``boundary_values`` maps constrained nodes to their data (dict, or a full
    nodal vector that is zero off the constrained set); ``volume_rhs`` is a
    weak-form load vector (use m @ f for an L^2 source f given at nodes).
    Returns the full nodal solution vector.
    """
    n = fact.system.mesh.n_nodes
    g = _as_full_vector(boundary_values, n, allowed=fact.constrained)
    rhs = _as_full_vector(volume_rhs, n, allowed=None)
    b_free = rhs[fact.free] - fact.coupling @ g[fact.constrained]
    u = g.copy()
    u[fact.free] = fact.solve_free(b_free)
    return u


def solve_many(fact: HelmholtzFactorization, boundary_columns: np.ndarray,
               volume_columns: Optional[np.ndarray] = None) -> np.ndarray:
    """Vectorized variant of :func:`solve_dirichlet` for many right-hand sides.

    ``boundary_columns`` is (n, m) with data on constrained rows (free rows
    ignored); returns the (n, m) matrix of solutions.
    """
    n = fact.system.mesh.n_nodes
    G = np.asarray(boundary_columns, dtype=complex)
    if G.shape[0] != n:
        raise ConfigurationError(f"expected {n} rows")
    B = -fact.coupling @ G[fact.constrained]
    if volume_columns is not None:
        B = B + np.asarray(volume_columns, dtype=complex)[fact.free]
    U = np.zeros_like(G)
    U[fact.constrained] = G[fact.constrained]
    U[fact.free] = fact.lu.solve(np.ascontiguousarray(B))
    return U
