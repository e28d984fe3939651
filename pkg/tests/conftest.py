import numpy as np
import pytest

from shapelab import SPD, Euclidean, Hyperbolic, Sphere


def random_point(m, rng, scale=0.5):
    x = m.base_point()
    return m.exp(x, m.tangent_gaussian(x, scale, rng))


def random_tangent(m, x, rng, scale=0.3):
    return m.tangent_gaussian(x, scale, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


SPACE_FORMS = [Euclidean(3), Sphere(2), Sphere(3, 2.0), Hyperbolic(2), Hyperbolic(3)]
SYMMETRIC = [Sphere(2), Hyperbolic(2), SPD(2), SPD(3)]


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[k])
