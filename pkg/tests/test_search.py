"""Tests for lattice scanning, refinement, tiling and set distances.

Synthetic 1x1 "operators" [[k - z0]] make |det| = |k - z0|, giving exact
knowledge of minima for the scan and descent logic; the spiral tiling is
checked against its defining rectangles and the disjointness property.
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from helmres import dtn, fem, geometry, mesh, search
from helmres.errors import ConfigurationError, RefineFailureError

Z0 = 1.33 - 0.27j


def linear_builder(z0):
    return lambda k: np.array([[k - z0]])


# ---------------------------------------------------------------------------
# regions and thresholds
# ---------------------------------------------------------------------------
def test_region_must_lie_below_axis():
    with pytest.raises(ConfigurationError):
        search.ScanRegion(0, 1, -1, 0.5)
    with pytest.raises(ConfigurationError):
        search.ScanRegion(1, 0, -1, -0.5)


def test_default_threshold():
    assert_allclose(search.default_threshold(int(round(math.e**2))), 1 / math.log(round(math.e**2)))
    with pytest.raises(ConfigurationError):
        search.default_threshold(1)


# ---------------------------------------------------------------------------
# scanning
# ---------------------------------------------------------------------------
def test_scan_grid_layout_and_minimum():
    region = search.ScanRegion(1.0, 2.0, -1.0, -0.1)
    result = search.scan(region, 10, linear_builder(Z0))
    assert_allclose(result.re, np.arange(10, 21) / 10)
    assert_allclose(result.im, np.arange(-10, 0) / 10)
    assert result.logabsdet.shape == (10, 11)
    best = result.grid_minimum()
    assert best.k == 1.3 - 0.3j  # nearest lattice point to Z0
    assert_allclose(best.absdet, abs(1.3 - 0.3j - Z0))


def test_paper_selection_matches_threshold():
    region = search.ScanRegion(1.0, 2.0, -1.0, -0.1)
    result = search.scan(region, 10, linear_builder(Z0))
    want = {
        complex(a / 10, b / 10)
        for a in range(10, 21)
        for b in range(-10, 0)
        if abs(complex(a / 10, b / 10) - Z0) <= 1 / math.log(10)
    }
    got = {c.k for c in result.selected}
    assert got == want
    assert all(c.absdet <= result.threshold for c in result.selected)


def test_practical_selection_finds_unique_pit():
    region = search.ScanRegion(1.0, 2.0, -1.0, -0.1)
    result = search.scan(region, 10, linear_builder(Z0))
    minima = search.threshold_select(result, 10, search.THRESHOLD_PRACTICAL)
    assert [c.k for c in minima] == [1.3 - 0.3j]


def test_practical_selection_empty_on_flat_grid():
    region = search.ScanRegion(0.0, 1.0, -1.0, -0.5)
    result = search.scan(region, 4, lambda k: np.array([[2.0]]), threshold=0.1)
    assert search.threshold_select(result, 4, search.THRESHOLD_PRACTICAL) == []


def test_unknown_threshold_mode_rejected():
    region = search.ScanRegion(0.0, 1.0, -1.0, -0.5)
    result = search.scan(region, 4, linear_builder(Z0))
    with pytest.raises(ConfigurationError):
        search.threshold_select(result, 4, "bayesian")


def test_scan_requires_density_at_least_two():
    region = search.ScanRegion(0.0, 1.0, -1.0, -0.5)
    with pytest.raises(ConfigurationError):
        search.scan(region, 1, linear_builder(Z0))


def test_scan_free_space_selects_nothing():
    # free space has no resonances: nothing at resonance depth, and no
    # local-minimum wells either
    obstacle = geometry.empty_obstacle()
    m = mesh.snap_boundary(mesh.build_mesh(obstacle, 3.0, 0.1), obstacle, 3.0)
    system = fem.assemble(m)
    cutoff = geometry.Cutoff(3.0)
    builder = lambda k: dtn.assemble_operator(k, 10, dtn.MODE_DIRECT, system, cutoff)
    region = search.ScanRegion(1.0, 1.25, -0.5, -0.25)
    result = search.scan(region, 8, builder, threshold=1e-9)
    assert result.selected == []
    assert search.threshold_select(result, 8, search.THRESHOLD_PRACTICAL) == []


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------
def test_refine_converges_to_zero():
    z0 = 1.5 - 0.4j
    cand = search.refine(z0 + 0.1 - 0.05j, linear_builder(z0))
    assert cand.refined
    assert cand.absdet < 1e-7
    assert abs(cand.k - z0) < 1e-7


def test_refine_stays_below_axis():
    cand = search.refine(1.0 - 0.2j, linear_builder(1.0 + 0.5j))
    assert cand.k.imag <= -1e-6
    assert not cand.refined
    assert_allclose(cand.k.real, 1.0, atol=1e-6)


def test_refine_iteration_cap_reports_best():
    with pytest.raises(RefineFailureError) as err:
        search.refine(50.0 - 0.3j, linear_builder(Z0), max_iter=5)
    best = err.value.best
    assert best is not None
    assert abs(best.k - Z0) < abs(50.0 - 0.3j - Z0)  # progress was made


# ---------------------------------------------------------------------------
# spiral tiling
# ---------------------------------------------------------------------------
def test_first_tiles_match_layout():
    want = {
        1: (-0.5, 0.5, -2, -1),
        2: (0.5, 1.5, -2, -1),
        3: (0.5, 1.5, -1, -0.5),
        4: (-0.5, 0.5, -1, -0.5),
        5: (-1.5, -0.5, -1, -0.5),
        6: (-1.5, -0.5, -2, -1),
        7: (-1.5, -0.5, -3, -2),
        8: (-0.5, 0.5, -3, -2),
    }
    for j, (a, b, c, d) in want.items():
        t = search.spiral_tiles(j)
        assert (t.re_min, t.re_max, t.im_min, t.im_max) == (a, b, c, d)
        assert t.index == j


def test_tile_rows_halve_towards_axis():
    t = search.spiral_tiles(13)  # spiral cell (2, 2): second halved row
    assert (t.im_min, t.im_max) == (-0.5, -0.25)


def test_tiles_are_disjoint_and_below_axis():
    tiles = [search.spiral_tiles(j) for j in range(1, 41)]
    for t in tiles:
        assert t.im_max < 0
    for i, a in enumerate(tiles):
        for b in tiles[i + 1:]:
            overlap_re = min(a.re_max, b.re_max) - max(a.re_min, b.re_min)
            overlap_im = min(a.im_max, b.im_max) - max(a.im_min, b.im_min)
            assert min(overlap_re, overlap_im) <= 0 or overlap_re * overlap_im == 0


def test_tile_index_guard():
    with pytest.raises(ConfigurationError):
        search.spiral_tiles(0)


# ---------------------------------------------------------------------------
# radius search
# ---------------------------------------------------------------------------
def test_locate_radius_small_disk():
    R, r = search.locate_radius(geometry.disk(radius=0.5))
    assert (R, r) == (2.0, 3.0)


def test_locate_radius_no_hits_keeps_R():
    R, r = search.locate_radius(geometry.empty_obstacle())
    assert (R, r) == (1.0, 2.0)


def test_locate_radius_four_disks():
    R, r = search.locate_radius(geometry.four_disks())
    # obstacle extends to sqrt(2) + 0.6 ~ 2.01, so R - 1 must exceed that
    assert R - 1 >= math.sqrt(2) + 0.6
    assert R == 4.0


def test_locate_radius_hits_inside_shrunk_ball():
    for make in (geometry.circular_chamber, geometry.four_disks,
                 lambda: geometry.disk(radius=1.0)):
        obstacle = make()
        R, r = search.locate_radius(obstacle)
        step = 0.01
        m = int(math.floor(r / step))
        axis = np.arange(-m, m + 1) * step
        xx, yy = np.meshgrid(axis, axis)
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) < r]
        hits = pts[obstacle.contains(pts).astype(bool)]
        assert np.all(np.hypot(hits[:, 0], hits[:, 1]) <= R - 1)


def test_locate_radius_cap():
    everything = geometry.Obstacle(
        "custom", oracle=lambda p: np.ones(len(p), dtype=bool), bounding_radius=1e6
    )
    with pytest.raises(ConfigurationError):
        search.locate_radius(everything, cap=5.0)


# ---------------------------------------------------------------------------
# set distance
# ---------------------------------------------------------------------------
def test_set_distance_identical_sets():
    pts = [0.3 - 0.2j, 1.5 - 1.0j]
    assert search.set_distance(pts, pts) == 0.0
    assert search.set_distance([], []) == 0.0


def test_set_distance_against_empty_saturates():
    w = 8
    assert_allclose(search.set_distance([0.0], [], window=w), 1 - 2.0**-w)
    assert_allclose(search.set_distance([], [0.0], window=w), 1 - 2.0**-w)


def test_set_distance_singletons():
    w = 10
    got = search.set_distance([0.0], [0.1], window=w)
    assert_allclose(got, 0.1 * (1 - 2.0**-w))


def test_set_distance_symmetric():
    A = [0.5 - 0.5j, 2.0 - 1.0j]
    B = [0.6 - 0.4j]
    assert_allclose(search.set_distance(A, B), search.set_distance(B, A))
