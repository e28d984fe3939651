import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapelab import DomainError, Euclidean, Hyperbolic, Sphere, SurrogateRangeError
from shapelab.approx import (GaussianDistanceKernel, HeatCircleKernel, dist2_taylor, distance_matrix, gram_matrix,
                             heat_kernel_circle, heat_kernel_gaussian, symspace_dist2)
from shapelab.ladders import fit_slope

from .conftest import random_tangent

S2 = Sphere(2)
NORTH = np.array([0.0, 0.0, 1.0])
coef = st.floats(-1.0, 1.0, allow_nan=False)


def _exact2(m, x, u, v):
    return float(m.dist(m.exp(x, u), m.exp(x, v))) ** 2


def test_taylor_trivial_cases(rng):
    x = S2.base_point()
    u = random_tangent(S2, x, rng)
    assert dist2_taylor(S2, x, u, u) == pytest.approx(0.0, abs=1e-16)
    e = Euclidean(3)
    a, b = rng.normal(size=3), rng.normal(size=3)
    assert dist2_taylor(e, np.zeros(3), a, b) == pytest.approx(float(np.sum((a - b) ** 2)), rel=1e-14)


def test_taylor_orthogonal_pair_on_sphere():
    a, b = 0.3, 0.2
    u, v = np.array([a, 0, 0]), np.array([0, b, 0])
    assert dist2_taylor(S2, NORTH, u, v) == pytest.approx(a * a + b * b - a * a * b * b / 3, rel=1e-14)
    # exact from cos d = cos a cos b
    assert _exact2(S2, NORTH, u, v) == pytest.approx(math.acos(math.cos(a) * math.cos(b)) ** 2, rel=1e-12)


@pytest.mark.parametrize("m", [Sphere(2), Hyperbolic(2)], ids=repr)
def test_taylor_residual_orders(m, rng):
    x = m.base_point()
    u, v = random_tangent(m, x, rng, 1.0), random_tangent(m, x, rng, 1.0)
    scales = np.array([0.2, 0.1, 0.05, 0.025])
    with_c = [abs(dist2_taylor(m, x, s * u, s * v) - _exact2(m, x, s * u, s * v)) for s in scales]
    without = [abs(dist2_taylor(m, x, s * u, s * v, False) - _exact2(m, x, s * u, s * v)) for s in scales]
    # measured on squared distance: the leading neglected term has degree 6, degree 4 without curvature
    assert fit_slope(scales, with_c) >= 4.5
    assert fit_slope(scales, without) == pytest.approx(4.0, abs=0.1)


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=4, max_size=4), st.sampled_from([Sphere(2), Sphere(3, 2.0), Hyperbolic(2)]))
def test_symspace_is_exact_on_space_forms(c, m):
    x = m.base_point()
    fr = m.frame(x)
    u = 0.9 * (c[0] * fr[0] + c[1] * fr[1])
    v = 0.9 * (c[2] * fr[0] + c[3] * fr[1])
    assert symspace_dist2(m, x, u, v) == pytest.approx(_exact2(m, x, u, v), abs=1e-10)


def test_symspace_flat_and_collinear():
    e = Euclidean(2)
    u, v = np.array([0.3, 0.1]), np.array([-0.2, 0.4])
    assert symspace_dist2(e, np.zeros(2), u, v) == pytest.approx(float(np.sum((u - v) ** 2)), rel=1e-14)
    v = np.array([0.1, 0.05, 0.0])
    assert symspace_dist2(S2, NORTH, 2 * v, v) == pytest.approx(float(v @ v), rel=1e-13)
    assert symspace_dist2(S2, NORTH, -2 * v, v) == pytest.approx(9 * float(v @ v), rel=1e-13)
    with pytest.raises(SurrogateRangeError):
        symspace_dist2(S2, NORTH, np.array([3.2, 0, 0]), np.array([0, 0.1, 0]))


def test_distance_matrix_two_samples_and_constant_cloud():
    pts = np.array([S2.exp(NORTH, np.array([0.3, 0.1, 0])), S2.exp(NORTH, np.array([-0.2, 0.25, 0]))])
    ex = distance_matrix(S2, pts, "exact")
    sym = distance_matrix(S2, pts, "symspace")
    np.testing.assert_allclose(sym.matrix, ex.matrix, atol=1e-12)
    same = distance_matrix(S2, np.tile(NORTH, (4, 1)), "taylor_curv")
    assert np.all(same.matrix == 0)
    with pytest.raises(DomainError):
        distance_matrix(S2, pts, "chebyshev")


def test_bvp_bookkeeping_and_gram_discrepancy():
    rng = np.random.default_rng(11)
    pts = np.array([S2.exp(NORTH, S2.tangent_gaussian(NORTH, 0.2, rng)) for _ in range(30)])
    ex = gram_matrix(GaussianDistanceKernel(0.2, "exact"), pts, S2)
    ap = gram_matrix(GaussianDistanceKernel(0.2, "taylor_curv"), pts, S2)
    assert ex.distances.bvp_count == 435
    assert ap.distances.bvp_count == 30
    rel = np.linalg.norm(ex.matrix - ap.matrix) / np.linalg.norm(ex.matrix)
    assert rel <= 0.01
    # regression fixture for this seed
    assert rel == pytest.approx(5.2899e-05, rel=1e-3)
    np.testing.assert_allclose(np.diag(ap.matrix), 1.0)
    assert ex.is_psd


def test_gram_identical_samples_and_errors():
    g = gram_matrix(GaussianDistanceKernel(0.5, "symspace"), np.tile(NORTH, (3, 1)), S2)
    np.testing.assert_allclose(g.matrix, 1.0)
    with pytest.raises(DomainError):
        gram_matrix(GaussianDistanceKernel(0.5), np.tile(NORTH, (3, 1)))
    with pytest.raises(DomainError):
        gram_matrix("rbf", np.zeros(3))


def test_heat_kernel_normalisation_peak_and_bound():
    t = 0.05
    theta = np.linspace(0, 2 * math.pi, 4097)[:-1]
    val, bound = heat_kernel_circle(t, theta)
    assert val.mean() * 2 * math.pi == pytest.approx(1.0, abs=1e-8)
    assert np.argmax(val) == 0
    assert np.all(val > -1e-15)
    assert bound < 1e-40
    with pytest.raises(DomainError):
        heat_kernel_circle(0.0, 0.0)


def test_heat_kernel_gaussian_limit():
    t = 0.01
    theta = np.linspace(-1, 1, 801)
    series = heat_kernel_circle(t, theta, terms=400)[0]
    gauss = heat_kernel_gaussian(t, theta)
    assert np.max(np.abs(series - gauss)) / gauss.max() <= 0.02
    core = np.abs(theta) <= 0.5
    np.testing.assert_allclose(series[core], gauss[core], rtol=0.02)
    # the error shrinks with t
    t2 = 0.002
    d2 = np.max(np.abs(heat_kernel_circle(t2, theta, 800)[0] - heat_kernel_gaussian(t2, theta)))
    assert d2 < np.max(np.abs(series - gauss)) + 1e-12


def test_heat_gram_is_psd():
    rng = np.random.default_rng(0)
    g = gram_matrix(HeatCircleKernel(0.1), rng.uniform(0, 2 * math.pi, 25))
    assert g.is_psd


def test_exact_matrix_matches_dist(rng):
    pts = np.array([S2.exp(NORTH, random_tangent(S2, NORTH, rng, 0.4)) for _ in range(8)])
    rep = distance_matrix(S2, pts, "exact")
    for i in range(8):
        for j in range(8):
            assert rep.matrix[i, j] == pytest.approx(float(S2.dist(pts[i], pts[j])), abs=1e-12)


def test_curvature_term_never_hurts_on_small_clouds():
    rng = np.random.default_rng(8)
    for m in (S2, Hyperbolic(2)):
        x = m.base_point()
        pts = np.array([m.exp(x, random_tangent(m, x, rng, 0.15)) for _ in range(15)])
        exact = distance_matrix(m, pts, "exact").matrix
        e2 = np.nanmax(np.abs(distance_matrix(m, pts, "taylor2").matrix ** 2 - exact ** 2))
        ec = np.nanmax(np.abs(distance_matrix(m, pts, "taylor_curv").matrix ** 2 - exact ** 2))
        assert ec <= e2
