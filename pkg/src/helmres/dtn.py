"""Truncated, scaled Dirichlet-to-Neumann operator and its determinants.

The resonance indicator is the determinant of a dense (2N+1) x (2N+1)
matrix of the form I + [compact], assembled from Fourier modes on the
outer circle.  Two interchangeable constructions are provided:

* ``direct`` (the default elsewhere): the inner map is computed wholesale
  from finite element solves with Fourier boundary data, then combined
  with the outer Hankel-ratio diagonal.
* ``theoretical``: the inner map is split into a known Bessel-ratio
  diagonal plus a correction matrix obtained from zero-Dirichlet solves
  with cutoff-commutator loads.

Determinants are evaluated through LU factorizations and reported in
(log-magnitude, phase) form so that large truncation orders cannot
overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import fem, specfun
from .errors import ConfigurationError, PoleError
from .geometry import Cutoff
from .mesh import OUTER_BOUNDARY, TriMesh

MODE_DIRECT = "direct"
MODE_THEORETICAL = "theoretical"
_MODES = (MODE_DIRECT, MODE_THEORETICAL)

# below this (relative to the neighbouring order), J_n(kR) counts as a pole
_POLE_RTOL = 1e-12


@dataclass
class DtnTruncation:
    """Dense truncation I + A of the scaled boundary operator at one k."""

    k: complex
    N: int
    mode: str
    matrix: np.ndarray  # (2N+1, 2N+1) complex
    R: float
    h: Optional[float] = None  # mesh size used in the assembly, if any

    @property
    def size(self) -> int:
        return 2 * self.N + 1


# ---------------------------------------------------------------------------
# diagonal building blocks
# ---------------------------------------------------------------------------
def _hankel_ratio_seq(nmax: int, k: complex, R: float) -> np.ndarray:
    """[-k H_{n-1}(kR)/H_n(kR) for n = 0..nmax], with H_{-1} = -H_1."""
    z = complex(k) * R
    h = specfun.h1_sequence(max(nmax, 1), z)
    out = np.empty(nmax + 1, dtype=complex)
    out[0] = -complex(k) * (-h[1]) / h[0]
    for n in range(1, nmax + 1):
        out[n] = -complex(k) * h[n - 1] / h[n]
    return out


def _bessel_seq(nmax: int, k: complex, R: float) -> np.ndarray:
    """[J_0(kR), ..., J_nmax(kR)]."""
    return specfun.jn_sequence(nmax, complex(k) * R)


def _check_bessel_poles(j: np.ndarray, nmax: int, k: complex, R: float) -> None:
    scale = float(np.max(np.abs(j))) + abs(complex(k) * R)
    for n in range(nmax + 1):
        if abs(j[n]) <= _POLE_RTOL * scale:
            raise PoleError(
                f"J_{n}(kR) vanishes at k = {complex(k)}, R = {R}", order=n
            )


def m_outer_diag(n: int, k: complex, R: float) -> complex:
    """Diagonal entry |n|/R - k H_{|n|-1}(kR)/H_{|n|}(kR) of the outer map."""
    k = complex(k)
    if k == 0:
        raise ConfigurationError("m_outer_diag requires k != 0")
    a = abs(int(n))
    return a / R + _hankel_ratio_seq(a, k, R)[a]


def m_inner0_diag(n: int, k: complex, R: float) -> complex:
    """Diagonal entry k J'_{|n|}(kR)/J_{|n|}(kR) of the obstacle-free inner map."""
    k = complex(k)
    a = abs(int(n))
    j = _bessel_seq(a + 1, k, R)
    _check_bessel_poles(j, a, k, R)
    return a / R - k * j[a + 1] / j[a]


# ---------------------------------------------------------------------------
# cutoff commutator data
# ---------------------------------------------------------------------------
def f_alpha_eval(alpha: int, k: complex, cutoff: Cutoff, point) -> complex:
    """Commutator source (2 rho' d_r + rho'' + rho'/r) applied to the
    normalized separated solution with trace e_alpha, at (r, theta)."""
    r, theta = float(point[0]), float(point[1])
    vals = _f_alpha_radial(alpha, complex(k), cutoff, np.array([r]))
    return complex(vals[0] * np.exp(1j * alpha * theta)
                   / math.sqrt(2.0 * math.pi * cutoff.R))


def _f_alpha_radial(alpha: int, k: complex, cutoff: Cutoff, r: np.ndarray) -> np.ndarray:
    """Radial factor of f_alpha (without the angular exponential)."""
    a = abs(int(alpha))
    R = cutoff.R
    out = np.zeros(len(r), dtype=complex)
    band = (r > cutoff.r0) & (r < cutoff.r1)
    if not band.any():
        return out
    rb = r[band]
    _, d1, d2 = cutoff.eval(rb)
    jR = _bessel_seq(a + 1, k, R)
    _check_bessel_poles(jR, a, k, R)
    seq = specfun.jn_many(a + 1, k * rb)
    j = seq[a]
    if a == 0:
        jp = -seq[1]
    else:
        jp = seq[a - 1] - (a / (k * rb)) * j
    out[band] = (2.0 * d1 * k * jp + (d2 + d1 / rb) * j) / jR[a]
    return out


def _basis_matrix(nodes: np.ndarray, cutoff: Cutoff, N: int) -> np.ndarray:
    """E[i, alpha+N] = rho(r_i) e_alpha(theta_i) at the mesh nodes."""
    r = np.hypot(nodes[:, 0], nodes[:, 1])
    theta = np.arctan2(nodes[:, 1], nodes[:, 0])
    rho, _, _ = cutoff.eval(r)
    alphas = np.arange(-N, N + 1)
    ang = np.exp(1j * np.outer(theta, alphas)) / math.sqrt(2.0 * math.pi * cutoff.R)
    return rho[:, None] * ang


def _as_system(mesh_or_system) -> fem.AssembledSystem:
    if isinstance(mesh_or_system, fem.AssembledSystem):
        return mesh_or_system
    if isinstance(mesh_or_system, TriMesh):
        return fem.assemble(mesh_or_system)
    raise ConfigurationError("expected a TriMesh or AssembledSystem")


def _i3_diagonal(k: complex, cutoff: Cutoff, N: int, panels: int = 200) -> np.ndarray:
    """Diagonal overlap integrals of the basis against f_alpha.

    Composite Simpson on [R-1, R]; the angular integral collapses to a
    Kronecker delta, leaving one radial integral per |alpha|.
    """
    R = cutoff.R
    m = 2 * panels
    r = np.linspace(R - 1.0, R, m + 1)
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (1.0 / R) / (6.0 * panels)  # Simpson: step/3 with step 1/(2*panels)
    rho, d1, d2 = cutoff.eval(r)
    jR = _bessel_seq(N + 1, k, R)
    _check_bessel_poles(jR, N, k, R)
    seq = specfun.jn_many(N + 1, k * r)  # (N+2, m+1)
    out = np.empty(2 * N + 1, dtype=complex)
    for a in range(N + 1):
        j = seq[a]
        jp = -seq[1] if a == 0 else seq[a - 1] - (a / (k * r)) * j
        integrand = rho * (2.0 * d1 * k * r * jp + r * (d2 + d1 / r) * j) / jR[a]
        val = np.sum(w * integrand)
        out[N + a] = val
        out[N - a] = val
    return out


# ---------------------------------------------------------------------------
# inner maps
# ---------------------------------------------------------------------------
def m_inner_matrix_direct(mesh_or_system, k: complex, N: int, cutoff: Cutoff,
                          bc_mode: str = fem.DIRICHLET_ALL) -> np.ndarray:
    """Inner Dirichlet-to-Neumann matrix from whole-domain FEM solves.

    Entry (beta, alpha) is the E_beta-weighted discrete Helmholtz residual
    of the solve u_alpha with boundary data e_alpha on the outer circle;
    all 2N+1 solves share one factorization.
    """
    system = _as_system(mesh_or_system)
    mesh = system.mesh
    outer = np.nonzero(mesh.node_class == OUTER_BOUNDARY)[0]
    if len(outer) == 0:
        raise ConfigurationError("mesh has no outer boundary nodes")
    if not np.all(mesh.snapped[outer]):
        raise ConfigurationError(
            "direct inner map requires an outer-snapped mesh "
            "(staircase node angles alias the Fourier basis)"
        )
    k = complex(k)
    fact = fem.factor(system, k, bc_mode=bc_mode)
    E = _basis_matrix(mesh.nodes, cutoff, N)
    G = np.zeros((mesh.n_nodes, 2 * N + 1), dtype=complex)
    theta = np.arctan2(mesh.nodes[outer, 1], mesh.nodes[outer, 0])
    alphas = np.arange(-N, N + 1)
    G[outer] = np.exp(1j * np.outer(theta, alphas)) / math.sqrt(2.0 * math.pi * cutoff.R)
    U = fem.solve_many(fact, G)
    A = fem.helmholtz_matrix(system, k)
    return E.conj().T @ (A @ U)


def k_matrix_theoretical(mesh_or_system, k: complex, N: int, cutoff: Cutoff) -> np.ndarray:
    """Correction matrix of the inner map beyond its Bessel-ratio diagonal.

    For each alpha a zero-Dirichlet problem with the commutator load
    f_alpha is solved; the matrix combines the E_beta-weighted discrete
    Helmholtz residual of those solves with the exact diagonal radial
    overlap integrals.
    """
    system = _as_system(mesh_or_system)
    mesh = system.mesh
    k = complex(k)
    fact = fem.factor(system, k, bc_mode=fem.DIRICHLET_ALL)
    r = np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1])
    theta = np.arctan2(mesh.nodes[:, 1], mesh.nodes[:, 0])
    F = np.zeros((mesh.n_nodes, 2 * N + 1), dtype=complex)
    norm = math.sqrt(2.0 * math.pi * cutoff.R)
    for a in range(N + 1):
        radial = _f_alpha_radial(a, k, cutoff, r)
        F[:, N + a] = radial * np.exp(1j * a * theta) / norm
        if a:
            F[:, N - a] = radial * np.exp(-1j * a * theta) / norm
    loads = system.mass @ F
    V = fem.solve_many(fact, np.zeros_like(F), volume_columns=loads)
    E = _basis_matrix(mesh.nodes, cutoff, N)
    A = fem.helmholtz_matrix(system, k)
    out = E.conj().T @ (A @ V)
    out[np.diag_indices_from(out)] -= _i3_diagonal(k, cutoff, N)
    return out


# ---------------------------------------------------------------------------
# operator assembly
# ---------------------------------------------------------------------------
def assemble_operator(k: complex, N: int, mode: str, mesh_or_system,
                      cutoff: Cutoff,
                      bc_mode: str = fem.DIRICHLET_ALL) -> DtnTruncation:
    """Build the dense truncation I + A at wavenumber k.

    ``mesh_or_system`` may be a mesh or a pre-assembled mass/stiffness
    pair; passing the latter lets a scan assemble once and factor per k.
    """
    if mode not in _MODES:
        raise ConfigurationError(f"unknown mode {mode!r}")
    k = complex(k)
    system = _as_system(mesh_or_system)
    R = cutoff.R
    n_abs = np.abs(np.arange(-N, N + 1))
    scale = 1.0 / np.sqrt(np.maximum(n_abs, 1).astype(float))
    hank = _hankel_ratio_seq(N, k, R)[n_abs]
    size = 2 * N + 1
    P0 = np.zeros((size, size))
    P0[N, N] = 1.0
    if mode == MODE_DIRECT:
        inner = m_inner_matrix_direct(system, k, N, cutoff, bc_mode=bc_mode)
        core = np.diag(hank) + inner
        matrix = 0.5 * (np.eye(size) - P0
                        + R * (scale[:, None] * core * scale[None, :]))
    else:
        j = _bessel_seq(N + 1, k, R)
        _check_bessel_poles(j, N, k, R)
        bess = (-k * j[1:] / j[:-1])[n_abs]
        core = np.diag(hank + bess) + k_matrix_theoretical(system, k, N, cutoff)
        matrix = (np.eye(size) - P0
                  + 0.5 * R * (scale[:, None] * core * scale[None, :]))
    return DtnTruncation(k=k, N=N, mode=mode, matrix=matrix, R=R,
                         h=system.mesh.h)


# ---------------------------------------------------------------------------
# determinants
# ---------------------------------------------------------------------------
def _matrix_of(T) -> np.ndarray:
    if isinstance(T, DtnTruncation):
        return T.matrix
    return np.asarray(T, dtype=complex)


def det_plain(T) -> tuple:
    """Determinant via LU, returned as (log-magnitude, phase).

    A singular matrix yields (-inf, phase); reconstruct the value with
    :func:`det_value` when the magnitude is known to be representable.
    """
    sign, logabs = np.linalg.slogdet(_matrix_of(T))
    return float(logabs), float(np.angle(sign)) if sign != 0 else 0.0


def det_value(log_magnitude: float, phase: float) -> complex:
    """Reconstruct the complex determinant from its (log |.|, arg) pair."""
    return complex(np.exp(log_magnitude) * np.exp(1j * phase))


def det_regularized(T, p: int = 3) -> complex:
    """Modified determinant det(M exp(sum_{j<p} (-A)^j / j)) with A = M - I.

    The exponential factor contributes exp(trace(.)), so the value is the
    plain determinant times a never-vanishing correction; zero sets of the
    two determinants coincide.
    """
    if int(p) < 2:
        raise ConfigurationError("regularized determinant requires p >= 2")
    M = _matrix_of(T)
    A = M - np.eye(M.shape[0])
    power = np.eye(M.shape[0], dtype=complex)
    tr = 0.0 + 0.0j
    for j in range(1, int(p)):
        power = power @ (-A)
        tr += np.trace(power) / j
    logabs, phase = det_plain(M)
    return det_value(logabs + tr.real, phase + tr.imag)
