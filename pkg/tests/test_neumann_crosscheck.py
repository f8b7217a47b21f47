"""Cross-validation of the sound-hard path against a multipole oracle.

For a finite collection of sound-hard disks the scattering resonances
can be computed without any mesh: expand the field around each disk in
cylindrical harmonics, translate between centers with Graf's addition
theorem, and look for wavenumbers where the resulting block system is
singular.  This pins down an exact reference value that the meshed
boundary-operator pipeline must reproduce.
"""
import cmath
import math

import numpy as np
from scipy.special import h1vp, hankel1, jvp

from helmres import dtn, fem, geometry, mesh, search

RADIUS = 0.6
CENTERS = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
ORDER = 12  # per-disk truncation; values are stable from ~10 upwards


def multipole_matrix(k, order=ORDER):
    """Singular exactly at the sound-hard resonances of the disk cluster.

    Rows are preconditioned by the diagonal H1_m'(ka) so the diagonal is
    the identity and the determinant stays representable.
    """
    a = RADIUS
    orders = np.arange(-order, order + 1)
    size = len(CENTERS) * len(orders)
    A = np.eye(size, dtype=complex)
    jp = jvp(orders, k * a)
    hp = h1vp(orders, k * a)
    for l, cl in enumerate(CENTERS):
        for j, cj in enumerate(CENTERS):
            if j == l:
                continue
            sep = cj - cl
            d = math.hypot(*sep)
            theta = math.atan2(sep[1], sep[0])
            nm = orders[None, :] - orders[:, None]  # n - m over the block
            block = (jp[:, None] / hp[:, None]) * hankel1(nm, k * d) \
                * np.exp(1j * nm * theta)
            r0, c0 = l * len(orders), j * len(orders)
            A[r0:r0 + len(orders), c0:c0 + len(orders)] += block
    return A


def test_truncation_stability_of_the_oracle():
    k = 0.91 - 0.21j
    d10 = dtn.det_plain(multipole_matrix(k, 10))[0]
    d14 = dtn.det_plain(multipole_matrix(k, 14))[0]
    assert abs(d10 - d14) < 1e-6


def test_pipeline_matches_multipole_resonance():
    # exact reference: polish the oracle determinant near its shallow zero
    oracle = search.refine(0.91 - 0.21j, multipole_matrix).k
    assert abs(oracle - (0.9114 - 0.2050j)) < 1e-3

    obstacle = geometry.four_disks()
    R = 4.0
    m = mesh.snap_boundary(mesh.build_mesh(obstacle, R, 0.1), obstacle, R)
    system = fem.assemble(m)
    cutoff = geometry.Cutoff(R)

    def build(k):
        return dtn.assemble_operator(k, 20, dtn.MODE_DIRECT, system, cutoff,
                                     bc_mode=fem.DIRICHLET_OUTER_NEUMANN_INNER)

    res = search.scan(search.ScanRegion(0.83, 0.99, -0.27, -0.13), 100, build)
    got = search.refine(res.grid_minimum().k, build).k
    assert abs(got - oracle) < 2e-2
