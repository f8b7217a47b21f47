"""Tests for the truncated boundary-operator assembly and determinants.

Oracles: the obstacle-free inner map is exactly diagonal with Bessel-ratio
entries; the commutator source is checked against a finite-difference
application of 2 rho' d_r + (rho'' + rho'/r) to the closed-form separated
solution; small determinants are checked against a recursive cofactor
expansion; the regularized determinant of a rank-1 perturbation has a
closed form.
"""
import functools
import math

import mpmath as mp
import numpy as np
import pytest
from numpy.testing import assert_allclose

from helmres import dtn, fem, geometry, mesh, specfun
from helmres.errors import ConfigurationError, PoleError

mp.mp.dps = 40

R = 3.0
K = 2 - 0.5j
CUTOFF = geometry.Cutoff(R)


@functools.lru_cache(maxsize=None)
def cached_system(kind, h, snap=True):
    obstacle = {
        "empty": geometry.empty_obstacle,
        "chamber": geometry.circular_chamber,
    }[kind]()
    m = mesh.build_mesh(obstacle, R, h)
    if snap:
        m = mesh.snap_boundary(m, obstacle, R)
    return fem.assemble(m)


# ---------------------------------------------------------------------------
# diagonal entries
# ---------------------------------------------------------------------------
def test_outer_diag_depends_only_on_abs_n():
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = int(rng.integers(1, 30))
        k = complex(rng.uniform(0.5, 4), rng.uniform(-2, -0.05))
        assert dtn.m_outer_diag(n, k, R) == dtn.m_outer_diag(-n, k, R)


def test_outer_diag_zero_order_is_hankel_ratio():
    got = dtn.m_outer_diag(0, K, R)
    want = K * mp.hankel1(1, K * R) / mp.hankel1(0, K * R)
    assert abs(got - complex(want)) <= 1e-10 * abs(complex(want))


def test_outer_diag_large_order_asymptotic():
    n, k = 50, 2.0
    got = dtn.m_outer_diag(n, k, R)
    want = n / R - k**2 * R / (2 * n)
    assert abs(got - want) <= 0.03 * abs(want)


def test_inner0_two_forms_agree():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(0, 15))
        k = complex(rng.uniform(0.5, 4), rng.uniform(-2, 2))
        got = dtn.m_inner0_diag(n, k, R)
        want = k * specfun.bessel_j_prime(n, k * R) / specfun.bessel_j(n, k * R)
        assert abs(got - want) <= 1e-10 * (1 + abs(want))
        assert dtn.m_inner0_diag(-n, k, R) == got


def test_inner0_known_value():
    # k=1: J_0'(3)/J_0(3) = -J_1(3)/J_0(3)
    j0, j1 = -0.2600519549019335, 0.3390589585259365
    assert_allclose(dtn.m_inner0_diag(0, 1.0, R), -j1 / j0, rtol=1e-10)


def test_inner0_pole_detected():
    k = specfun.bessel_zero(0, 1) / R  # J_0(kR) = 0
    with pytest.raises(PoleError) as err:
        dtn.m_inner0_diag(0, k, R)
    assert err.value.order == 0


# ---------------------------------------------------------------------------
# commutator source
# ---------------------------------------------------------------------------
def test_f_alpha_vanishes_off_band():
    for r in (0.5, R - 1.0, R - 0.9, R - 0.1, R):
        assert dtn.f_alpha_eval(2, K, CUTOFF, (r, 0.3)) == 0


@pytest.mark.parametrize("alpha", [0, 3])
def test_f_alpha_matches_finite_difference(alpha):
    r, theta = R - 0.5, 0.7
    jR = specfun.bessel_j(alpha, K * R)

    def u(rr):  # closed-form separated extension with unit trace coefficient
        return specfun.bessel_j(alpha, K * rr) / jR

    delta = 1e-5
    du = (u(r + delta) - u(r - delta)) / (2 * delta)
    _, d1, d2 = CUTOFF.eval(r)
    want = (2 * d1 * du + (d2 + d1 / r) * u(r)) * np.exp(1j * alpha * theta)
    want /= math.sqrt(2 * math.pi * R)
    got = dtn.f_alpha_eval(alpha, K, CUTOFF, (r, theta))
    assert abs(got - want) <= 1e-8 * (1 + abs(want))


def test_f_alpha_negative_order_reflects_angle():
    r, theta = R - 0.4, 1.1
    got = dtn.f_alpha_eval(-4, K, CUTOFF, (r, theta))
    want = dtn.f_alpha_eval(4, K, CUTOFF, (r, -theta))
    assert abs(got - want) <= 1e-12 * (1 + abs(want))


def test_i3_is_even_and_matches_quadrature_oracle():
    N = 6
    i3 = dtn._i3_diagonal(K, CUTOFF, N)
    assert_allclose(i3[: N + 1], i3[N:][::-1], rtol=1e-13)
    cutoff = CUTOFF

    def integrand(r):
        r = float(r)
        _, d1, d2 = cutoff.eval(r)
        rho, _, _ = cutoff.eval(r)
        z = K * r
        j = complex(mp.besselj(0, z))
        jp = -complex(mp.besselj(1, z))
        return rho * (2 * d1 * K * r * jp + r * (d2 + d1 / r) * j)

    want = complex(mp.quad(integrand, [R - 0.9, R - 0.5, R - 0.1]))
    want /= R * complex(mp.besselj(0, K * R))
    assert abs(i3[N] - want) <= 1e-8 * abs(want)


# ---------------------------------------------------------------------------
# inner maps against the obstacle-free diagonal oracle
# ---------------------------------------------------------------------------
def test_direct_inner_matrix_empty_obstacle():
    N = 10
    diag = np.array([dtn.m_inner0_diag(n, K, R) for n in range(-N, N + 1)])
    errs = []
    for h in (0.1, 0.05):
        M = dtn.m_inner_matrix_direct(cached_system("empty", h), K, N, CUTOFF)
        errs.append(np.max(np.abs(M - np.diag(diag))))
    assert errs[-1] <= 5e-2
    assert errs[1] < errs[0]


def test_k_matrix_empty_obstacle_is_small():
    M = dtn.k_matrix_theoretical(cached_system("empty", 0.05), K, 10, CUTOFF)
    assert np.max(np.abs(M)) <= 5e-2


def test_k_matrix_reflection_symmetry():
    # the chamber is symmetric under theta -> -theta, so flipping the signs
    # of both mode indices must leave entries unchanged up to the
    # triangulation error (the fixed diagonal split of the lattice cells is
    # not reflection-symmetric, so the agreement is only O(h^2))
    asym = []
    for h in (0.1, 0.05):
        M = dtn.k_matrix_theoretical(cached_system("chamber", h), K, 6, CUTOFF)
        scale = 1.0 + np.max(np.abs(M))
        asym.append(np.max(np.abs(M - M[::-1, ::-1])) / scale)
    assert asym[1] < asym[0]
    assert asym[1] <= 2e-2


# ---------------------------------------------------------------------------
# operator assembly
# ---------------------------------------------------------------------------
def test_modes_agree_on_chamber():
    system = cached_system("chamber", 0.05)
    direct = dtn.assemble_operator(K, 10, dtn.MODE_DIRECT, system, CUTOFF)
    theo = dtn.assemble_operator(K, 10, dtn.MODE_THEORETICAL, system, CUTOFF)
    assert np.max(np.abs(direct.matrix - theo.matrix)) <= 1e-1


def test_direct_mode_requires_outer_snapped_mesh():
    with pytest.raises(ConfigurationError):
        dtn.assemble_operator(K, 5, dtn.MODE_DIRECT,
                              cached_system("empty", 0.1, snap=False), CUTOFF)


def test_unknown_mode_rejected():
    with pytest.raises(ConfigurationError):
        dtn.assemble_operator(K, 5, "spectral", cached_system("empty", 0.1), CUTOFF)


def test_truncation_tail_shrinks_with_order():
    system = cached_system("empty", 0.05)
    dets = []
    for N in (5, 10, 20):
        T = dtn.assemble_operator(K, N, dtn.MODE_DIRECT, system, CUTOFF)
        dets.append(dtn.det_value(*dtn.det_plain(T)))
    assert abs(dets[0] - dets[1]) > abs(dets[1] - dets[2])


def test_compact_part_scaling_under_order_doubling():
    system = cached_system("empty", 0.05)
    smax = []
    for N in (5, 10, 20):
        T = dtn.assemble_operator(K, N, dtn.MODE_DIRECT, system, CUTOFF)
        A = T.matrix - np.eye(T.size)
        smax.append(np.linalg.svd(A, compute_uv=False)[0])
    for lo, hi in zip(smax, smax[1:]):
        assert hi <= 1.2 * lo + 0.1


# ---------------------------------------------------------------------------
# determinants
# ---------------------------------------------------------------------------
def cofactor_det(M):
    if M.shape[0] == 1:
        return M[0, 0]
    return sum(
        (-1) ** j * M[0, j] * cofactor_det(np.delete(np.delete(M, 0, 0), j, 1))
        for j in range(M.shape[0])
    )


def test_det_plain_identity_and_diagonal():
    logmag, phase = dtn.det_plain(np.eye(7))
    assert_allclose(dtn.det_value(logmag, phase), 1.0)
    logmag, phase = dtn.det_plain(np.diag([2.0, 3.0]))
    assert_allclose(dtn.det_value(logmag, phase), 6.0, rtol=1e-13)


@pytest.mark.parametrize("n", [4, 5])
def test_det_plain_matches_cofactor_expansion(n):
    rng = np.random.default_rng(n)
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    want = cofactor_det(M)
    got = dtn.det_value(*dtn.det_plain(M))
    assert abs(got - want) <= 1e-12 * abs(want)


def test_det_regularized_of_identity():
    assert_allclose(dtn.det_regularized(np.eye(6)), 1.0)


def test_det_regularized_rank_one_closed_form():
    rng = np.random.default_rng(3)
    u = rng.normal(size=8) + 1j * rng.normal(size=8)
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    A = np.outer(u, v)
    t = v @ u
    want = (1 + t) * np.exp(-t + t * t / 2)
    got = dtn.det_regularized(np.eye(8) + A, p=3)
    assert abs(got - want) <= 1e-10 * abs(want)


def test_det_zero_sets_coincide():
    rng = np.random.default_rng(9)
    M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    M[:, 3] = M[:, 1]  # singular
    logmag, _ = dtn.det_plain(M)
    assert logmag == -np.inf or logmag < -25
    assert abs(dtn.det_regularized(M)) <= 1e-10
    M[:, 3] += rng.normal(size=6)  # generically nonsingular again
    logmag, _ = dtn.det_plain(M)
    assert logmag > -25
    assert abs(dtn.det_regularized(M)) > 1e-10


def test_det_regularized_rejects_small_p():
    with pytest.raises(ConfigurationError):
        dtn.det_regularized(np.eye(3), p=1)
