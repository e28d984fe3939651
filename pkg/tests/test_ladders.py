import math

import numpy as np
import pytest

from shapelab import SPD, ConfigurationError, Euclidean, Hyperbolic, NumericSurface, Sphere
from shapelab.ladders import (LadderConfig, convergence_order, fit_slope, ladder_error, pole_step, schild_step,
                              transport_ladder)

from .conftest import random_point, random_tangent

NORTH = np.array([0.0, 0.0, 1.0])


@pytest.mark.parametrize("step", [pole_step, schild_step])
def test_euclidean_exact_and_zero(step, rng):
    m = Euclidean(3)
    p, q = rng.normal(size=3), rng.normal(size=3)
    u = rng.normal(size=3)
    np.testing.assert_allclose(step(m, p, q, u), u, atol=1e-14)
    s = Sphere(2)
    q = s.exp(NORTH, np.array([0.2, 0.1, 0.0]))
    np.testing.assert_allclose(step(s, NORTH, q, np.zeros(3)), 0.0, atol=1e-15)


@pytest.mark.parametrize("m", [Sphere(2), Hyperbolic(2), SPD(2), SPD(3)], ids=repr)
def test_pole_step_exact_on_symmetric_spaces(m, rng):
    for _ in range(5):
        p = random_point(m, rng)
        v = random_tangent(m, p, rng)
        v = v * (0.3 / float(m.norm(p, v)))
        q = m.exp(p, v)
        u = random_tangent(m, p, rng)
        u = u * (0.3 * rng.random() / float(m.norm(p, u)))
        assert float(m.norm(q, pole_step(m, p, q, u) - m.transport(p, q, u))) <= 1e-9


def test_convergence_orders():
    s = Sphere(2)
    q = s.exp(NORTH, np.array([0.5, 0.3, 0.0]))
    u = np.array([0.1, -0.25, 0.0])
    assert convergence_order(s, NORTH, q, u, "pole", [2, 4, 8]) == math.inf
    # regression fixture, measured once
    assert convergence_order(s, NORTH, q, u, "schild", [2, 4, 8, 16, 32]) == pytest.approx(1.0037, abs=2e-3)


@pytest.mark.slow
def test_pole_order_on_non_symmetric_surface():
    f = NumericSurface("x**2/2 + x*y/3 + y**3/4")
    order = convergence_order(f, np.zeros(2), np.array([0.4, 0.3]), np.array([0.2, -0.1]), "pole", [2, 4, 8, 16])
    assert order >= 2.0 - 0.05
    assert order == pytest.approx(2.003, abs=0.02)


def test_schild_error_decays_on_surface():
    f = NumericSurface("bump")
    errs = [ladder_error(f, np.zeros(2), np.array([0.3, 0.2]), np.array([0.1, 0.15]), "schild", s) for s in (1, 2, 4)]
    assert errs[0] > errs[1] > errs[2]


def test_single_segment_reduces_to_one_step():
    s = Sphere(2)
    q = s.exp(NORTH, np.array([0.3, 0.0, 0.0]))
    u = np.array([0.0, 0.2, 0.0])
    res = transport_ladder(s, [NORTH, q], u, LadderConfig(1, "schild"))
    np.testing.assert_allclose(res.vector, schild_step(s, NORTH, q, u), atol=1e-15)
    assert res.steps == 1


def test_closed_euclidean_loop():
    m = Euclidean(2)
    loop = [np.zeros(2), np.array([1.0, 0.0]), np.array([1.0, 1.0]), np.zeros(2)]
    u = np.array([0.3, -0.2])
    np.testing.assert_allclose(transport_ladder(m, loop, u, LadderConfig(3, "schild")).vector, u, atol=1e-14)


def test_three_right_angle_triangle_holonomy():
    # enclosed area pi/2 on the unit sphere rotates vectors by pi/2
    s = Sphere(2)
    path = [NORTH, np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), NORTH]
    u = np.array([0.1, 0.0, 0.0])
    v = transport_ladder(s, path, u, LadderConfig(4, "pole")).vector
    ang = math.acos(np.clip(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)), -1, 1))
    assert ang == pytest.approx(math.pi / 2, abs=1e-9)


def test_pole_norm_drift_is_negligible_on_symmetric_spaces(rng):
    s = Sphere(2)
    q = s.exp(NORTH, np.array([0.3, 0.1, 0.0]))
    for k in (1, 2, 4, 8):
        assert transport_ladder(s, [NORTH, q], np.array([0.0, 0.2, 0.0]), LadderConfig(k, "pole")).norm_drift < 1e-13


def _defect(m, p, step, seg, u, scales):
    # step(u) - 2 step(u/2) with the segment scaled together with u
    out = []
    for r in scales:
        q = m.exp(p, r * seg)
        out.append(np.linalg.norm(step(m, p, q, r * u) - 2 * step(m, p, q, 0.5 * r * u)))
    return out


def test_ladder_nonlinearity_is_cubic_under_joint_scaling():
    scales = np.array([0.4, 0.2, 0.1, 0.05])
    s = Sphere(2)
    d = _defect(s, NORTH, schild_step, np.array([1.0, 0, 0]), np.array([0.6, 0.8, 0.0]), scales)
    assert fit_slope(scales, d) >= 2.8
    f = NumericSurface("bump")
    d = _defect(f, np.zeros(2), pole_step, np.array([1.0, 0.5]), np.array([0.3, 0.8]), scales)
    assert fit_slope(scales, d) >= 2.8


def test_config_validation():
    with pytest.raises(ConfigurationError):
        LadderConfig(0, "pole")
    with pytest.raises(ConfigurationError):
        LadderConfig(2, "fan")
    with pytest.raises(ConfigurationError):
        convergence_order(Sphere(2), NORTH, NORTH, np.zeros(3), "pole", [1, 2])


def test_schild_defect_with_fixed_segment_is_quadratic():
    # with the segment held fixed the homogeneity defect scales like |u|^2
    s = Sphere(2)
    q = s.exp(NORTH, np.array([0.4, 0.1, 0.0]))
    u = np.array([0.6, 0.8, 0.0])
    rs = np.array([0.4, 0.2, 0.1, 0.05])
    d = [np.linalg.norm(schild_step(s, NORTH, q, 0.5 * r * u) - 0.5 * schild_step(s, NORTH, q, r * u)) for r in rs]
    assert fit_slope(rs, d) == pytest.approx(2.0, abs=0.1)
    d = [np.linalg.norm(pole_step(s, NORTH, q, 0.5 * r * u) - 0.5 * pole_step(s, NORTH, q, r * u)) for r in rs]
    assert max(d) < 1e-14
