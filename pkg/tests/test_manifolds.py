import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from shapelab import (SPD, BVPError, CutLocusError, DegeneracyError, DomainError, Euclidean, Hyperbolic,
                      NumericSurface, Sphere, parse_manifold)

from .conftest import SPACE_FORMS, SYMMETRIC, random_point, random_tangent

ALL = SPACE_FORMS + [SPD(2), SPD(3)]
coef = st.floats(-1.0, 1.0, allow_nan=False)


def test_sphere_quarter_circle_and_inverse():
    s = Sphere(2)
    x = np.array([0.0, 0.0, 1.0])
    y = s.exp(x, np.array([math.pi / 2, 0, 0]))
    np.testing.assert_allclose(y, [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(s.log(x, np.array([1.0, 0, 0])), [math.pi / 2, 0, 0], atol=1e-15)


def test_sphere_antipode_distance_and_cut_locus():
    s = Sphere(2, radius=2.0)
    x = np.array([0.0, 0.0, 2.0])
    assert s.dist(x, -x) == pytest.approx(2 * math.pi, abs=1e-12)
    with pytest.raises(CutLocusError):
        s.log(x, -x)


@pytest.mark.parametrize("m", ALL, ids=repr)
def test_exp_zero_and_log_self(m, rng):
    x = random_point(m, rng)
    np.testing.assert_allclose(m.exp(x, m.zero_vector(x)), x, atol=1e-14)
    assert np.max(np.abs(m.log(x, x))) < 1e-12


def test_spd_exp_matches_expm_oracle():
    m = SPD(2)
    np.testing.assert_allclose(m.exp(np.eye(2), np.diag([1.0, -1.0])), np.diag([math.e, 1 / math.e]), rtol=1e-14)
    rng = np.random.default_rng(3)
    a = rng.normal(size=(3, 3))
    x = a @ a.T + 3 * np.eye(3)
    v = rng.normal(size=(3, 3))
    v = v + v.T
    s = sla.sqrtm(x).real
    si = np.linalg.inv(s)
    oracle = s @ sla.expm(si @ v @ si) @ s
    np.testing.assert_allclose(SPD(3).exp(x, v), oracle, rtol=1e-10)


def test_spd_distance_closed_form():
    assert SPD(2).dist(np.eye(2), np.diag([math.e**2, 1.0])) == pytest.approx(2.0, abs=1e-14)


def test_spd_transport_closed_form():
    rng = np.random.default_rng(5)
    m = SPD(3)
    x, y = random_point(m, rng), random_point(m, rng)
    v = random_tangent(m, x, rng)
    e = sla.sqrtm(y @ np.linalg.inv(x)).real
    np.testing.assert_allclose(m.transport(x, y, v), e @ v @ e.T, atol=1e-12)


@pytest.mark.parametrize("m", ALL, ids=repr)
def test_round_trip_and_transport_isometry(m, rng):
    for _ in range(5):
        x = random_point(m, rng)
        v = random_tangent(m, x, rng)
        y = m.exp(x, v)
        assert np.linalg.norm(m.log(x, y) - v) <= 1e-8 * np.linalg.norm(v)
        w = random_tangent(m, x, rng)
        assert float(m.norm(y, m.transport(x, y, w))) == pytest.approx(float(m.norm(x, w)), abs=1e-10)


@pytest.mark.parametrize("m", ALL, ids=repr)
def test_dist_symmetry_and_triangle(m, rng):
    for _ in range(5):
        a, b, c = (random_point(m, rng) for _ in range(3))
        assert float(m.dist(a, b)) == pytest.approx(float(m.dist(b, a)), abs=1e-12)
        assert m.dist(a, c) <= m.dist(a, b) + m.dist(b, c) + 1e-9


@pytest.mark.parametrize("m", ALL, ids=repr)
def test_curvature_antisymmetry_and_bianchi(m, rng):
    x = random_point(m, rng)
    u, v, w = (random_tangent(m, x, rng) for _ in range(3))
    r = m.curvature
    np.testing.assert_allclose(r(x, u, v, w), -r(x, v, u, w), atol=1e-10)
    np.testing.assert_allclose(r(x, u, v, w) + r(x, v, w, u) + r(x, w, u, v), 0.0, atol=1e-10)


def test_sectional_curvatures():
    rng = np.random.default_rng(0)
    for m, k in [(Sphere(2), 1.0), (Sphere(3, 2.0), 0.25), (Hyperbolic(2), -1.0), (Euclidean(3), 0.0)]:
        x = random_point(m, rng)
        u, v = m.frame(x)[:2]
        assert m.sectional_curvature(x, u, v) == pytest.approx(k, abs=1e-12)
    s = NumericSurface("saddle")
    e = np.eye(2)
    assert s.sectional_curvature(np.zeros(2), e[0], e[1]) == pytest.approx(-4.0, abs=1e-10)
    with pytest.raises(DegeneracyError):
        Sphere(2).sectional_curvature(np.array([0, 0, 1.0]), np.array([1.0, 0, 0]), np.array([2.0, 0, 0]))


def test_surface_gauss_curvature_oracle():
    # K = (f_xx f_yy - f_xy^2) / (1 + f_x^2 + f_y^2)^2 for f = x^2 + y^2 at (0.3, -0.2)
    s = NumericSurface("paraboloid")
    p = np.array([0.3, -0.2])
    fx, fy = 2 * p
    assert s.gauss_curvature(p) == pytest.approx(4.0 / (1 + fx**2 + fy**2) ** 2, rel=1e-12)


def test_surface_log_round_trip(rng):
    s = NumericSurface("x**2 + y**2")
    for _ in range(3):
        x = rng.uniform(-0.3, 0.3, 2)
        y = x + rng.uniform(-0.3, 0.3, 2)
        v = s.log(x, y)
        np.testing.assert_allclose(s.exp(x, v), y, atol=1e-9)


def test_surface_log_out_of_radius():
    s = NumericSurface("paraboloid", convexity_radius=0.2)
    with pytest.raises((BVPError, DomainError)):
        s.log(np.zeros(2), np.array([1.0, 1.0]))


def test_surface_transport_isometry_and_plane_flag():
    s = NumericSurface("bump")
    x, y = np.array([0.1, 0.0]), np.array([0.4, 0.3])
    v = np.array([0.2, -0.1])
    assert float(s.norm(y, s.transport(x, y, v))) == pytest.approx(float(s.norm(x, v)), abs=1e-9)
    assert NumericSurface("plane").is_symmetric_space
    assert not s.is_symmetric_space


def test_sphere_transport_keeps_geodesic_tangent():
    s = Sphere(2)
    x = np.array([0.0, 0.0, 1.0])
    v = np.array([0.7, 0.2, 0.0])
    y = s.exp(x, v)
    # velocity of the geodesic at y is -log_y(x) scaled
    np.testing.assert_allclose(s.transport(x, y, v), -s.log(y, x), atol=1e-12)


def test_sphere_transport_matches_rotation_oracle():
    s = Sphere(2)
    x = np.array([0.0, 0.0, 1.0])
    y = s.exp(x, np.array([0.4, -0.3, 0.0]))
    axis = np.cross(x, y)
    ang = math.asin(np.linalg.norm(axis))
    rot = Rotation.from_rotvec(axis / np.linalg.norm(axis) * ang)
    w = np.array([0.1, 0.5, 0.0])
    np.testing.assert_allclose(s.transport(x, y, w), rot.apply(w), atol=1e-12)


def test_tangent_gaussian(rng):
    s = Sphere(2)
    x = random_point(s, rng)
    assert np.all(s.tangent_gaussian(x, 0.0, rng) == 0)
    v = s.tangent_gaussian(x, 0.7, rng)
    assert abs(v @ x) < 1e-12
    draws = np.array([s.tangent_gaussian(x, 0.7, rng) for _ in range(20000)])
    coords = draws @ s.frame(x).T
    np.testing.assert_allclose(coords.var(axis=0), 0.49, rtol=0.05)
    with pytest.raises(DomainError):
        s.tangent_gaussian(x, -1.0, rng)


def test_tangent_gaussian_variance_large_sample():
    rng = np.random.default_rng(11)
    s = Sphere(2)
    x = np.array([0.0, 0.0, 1.0])
    xi = rng.standard_normal((100_000, 3)) * 0.3
    proj = xi - np.outer(xi @ x, x)
    np.testing.assert_allclose(proj[:, :2].var(axis=0), 0.09, rtol=0.05)


def test_law_of_cosines_oracle():
    rng = np.random.default_rng(2)
    for m, k in [(Sphere(2), 1.0), (Hyperbolic(2), -1.0)]:
        x = m.base_point()
        u, v = random_tangent(m, x, rng, 0.6), random_tangent(m, x, rng, 0.6)
        a, b = float(m.norm(x, u)), float(m.norm(x, v))
        cg = float(m.inner(x, u, v)) / (a * b)
        d = float(m.dist(m.exp(x, u), m.exp(x, v)))
        if k > 0:
            assert math.cos(d) == pytest.approx(math.cos(a) * math.cos(b) + math.sin(a) * math.sin(b) * cg, abs=1e-10)
        else:
            assert math.cosh(d) == pytest.approx(math.cosh(a) * math.cosh(b) - math.sinh(a) * math.sinh(b) * cg,
                                                 abs=1e-10)


def test_constraint_checks():
    with pytest.raises(DomainError):
        Sphere(2).check_point(np.array([1.0, 1.0, 0.0]))
    with pytest.raises(DomainError):
        SPD(2).check_point(np.diag([1.0, -1.0]))
    with pytest.raises(DomainError):
        Hyperbolic(2).check_point(np.array([0.5, 0.0, 0.0]))
    with pytest.raises(DomainError):
        Sphere(2, radius=0.0)


def test_parse_manifold():
    assert isinstance(parse_manifold("sphere:d=2,r=1"), Sphere)
    assert parse_manifold("sphere:d=3,r=2").radius == 2.0
    assert parse_manifold("spd:n=3").n == 3
    assert isinstance(parse_manifold("surface:f=paraboloid"), NumericSurface)
    assert isinstance(parse_manifold("surface:f=x**2 - y**2/3,radius=0.5"), NumericSurface)
    for bad in ["", "torus:d=2", "sphere:q=1", "sphere:d"]:
        with pytest.raises(DomainError):
            parse_manifold(bad)


@settings(max_examples=40, deadline=None)
@given(st.lists(coef, min_size=2, max_size=2), st.lists(coef, min_size=2, max_size=2),
       st.sampled_from(SYMMETRIC + SPACE_FORMS))
def test_property_round_trip(a, b, m):
    x = m.base_point()
    fr = m.frame(x)
    p = m.exp(x, 0.8 * (a[0] * fr[0] + a[1] * fr[1]))
    fp = m.frame(p)
    v = 0.8 * (b[0] * fp[0] + b[1] * fp[1])
    y = m.exp(p, v)
    assert np.linalg.norm(m.log(p, y) - v) <= 1e-8 * max(np.linalg.norm(v), 1e-300) + 1e-15
