"""Approximate distance matrices and heat kernels.

Pairwise squared distances are approximated from one log per sample at a
common base point, either by the curvature-corrected Taylor expansion or by
a two-dimensional constant-curvature surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeLabError, SurrogateRangeError
from .frechet import frechet_mean
from .manifolds import Manifold
from .quantize import EmpiricalMeasure

METHODS = ("exact", "taylor2", "taylor_curv", "symspace")


def dist2_taylor(m: Manifold, x, u, v, with_curvature=True):
    """|u - v|^2 - R_x(u, v, v, u) / 3, or just |u - v|^2."""
    d = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    val = float(m.inner(x, d, d))
    if with_curvature:
        val -= float(m.inner(x, m.curvature(x, u, v, v), u)) / 3.0
    return val


def _law_of_cosines2(kappa, a, b, half_angle_sin2):
    """Squared distance between points at radii a, b separated by an angle, curvature kappa."""
    if kappa > 0:
        s = math.sqrt(kappa)
        if s * max(a, b) >= math.pi:
            raise SurrogateRangeError(f"radius {max(a, b):.4g} outside the surrogate sphere (kappa = {kappa:.4g})")
        h = math.sin(0.5 * s * (a - b)) ** 2 + math.sin(s * a) * math.sin(s * b) * half_angle_sin2
        return (2.0 * math.asin(min(1.0, math.sqrt(max(h, 0.0)))) / s) ** 2
    if kappa < 0:
        s = math.sqrt(-kappa)
        h = math.sinh(0.5 * s * (a - b)) ** 2 + math.sinh(s * a) * math.sinh(s * b) * half_angle_sin2
        return (2.0 * math.asinh(math.sqrt(max(h, 0.0))) / s) ** 2
    return (a - b) ** 2 + 4.0 * a * b * half_angle_sin2


def symspace_dist2(m: Manifold, x, u, v, kappa=None, collinear_tol=1e-14):
    """Squared distance in the 2-d space form matching the sectional curvature of span(u, v)."""
    a = float(m.norm(x, u))
    b = float(m.norm(x, v))
    if a == 0.0 or b == 0.0:
        return (a - b) ** 2
    uv = float(m.inner(x, u, v))
    cos_g = max(-1.0, min(1.0, uv / (a * b)))
    wedge = a * a * b * b - uv * uv
    # sin^2(gamma/2) = |u/a - v/b|^2 / 4
    d = np.asarray(u) / a - np.asarray(v) / b
    half2 = float(m.inner(x, d, d)) / 4.0
    if wedge <= collinear_tol * a * a * b * b:
        # radial geodesic through x
        return (a - b) ** 2 if cos_g > 0 else (a + b) ** 2
    if kappa is None:
        kappa = m.sectional_curvature(x, np.asarray(u) / a, np.asarray(v) / b)
    return _law_of_cosines2(kappa, a, b, half2)


@dataclass
class DistanceMatrixReport:
    matrix: np.ndarray
    method: str
    basepoint: np.ndarray | None
    bvp_count: int
    failures: int = 0

    @property
    def squared(self):
        return self.matrix**2


def _logs(m, base, samples):
    out, fails = [], 0
    for y in samples:
        try:
            out.append(m.log(base, y))
        except ShapeLabError:
            out.append(None)
            fails += 1
    return out, fails


def distance_matrix(m: Manifold, samples, method="taylor_curv", base=None, mean_tol=1e-12):
    """Pairwise distances; approximate methods use one log per sample at the base point.

    The base point defaults to the Frechet mean of the samples. Entries whose
    computation fails are NaN and counted in ``failures``.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    samples = np.asarray(samples, dtype=float)
    n = len(samples)
    mat = np.zeros((n, n))
    failures = 0
    if method == "exact":
        for i in range(n):
            for j in range(i + 1, n):
                try:
                    d = float(m.dist(samples[i], samples[j]))
                except ShapeLabError:
                    d = math.nan
                    failures += 1
                mat[i, j] = mat[j, i] = d
        return DistanceMatrixReport(mat, method, None, n * (n - 1) // 2, failures)
    if base is None:
        base = frechet_mean(EmpiricalMeasure(m, samples), tol=mean_tol, max_iter=500).mean
    logs, failures = _logs(m, base, samples)
    for i in range(n):
        for j in range(i + 1, n):
            if logs[i] is None or logs[j] is None:
                d2 = math.nan
            else:
                try:
                    if method == "symspace":
                        d2 = symspace_dist2(m, base, logs[i], logs[j])
                    else:
                        d2 = dist2_taylor(m, base, logs[i], logs[j], with_curvature=(method == "taylor_curv"))
                except ShapeLabError:
                    d2 = math.nan
                    failures += 1
            mat[i, j] = mat[j, i] = math.sqrt(max(d2, 0.0)) if not math.isnan(d2) else math.nan
    return DistanceMatrixReport(mat, method, np.asarray(base), n, failures)


# ---------------------------------------------------------------------------
# heat kernels
# ---------------------------------------------------------------------------


def heat_kernel_circle(t, theta, terms=50):
    """Spectral series of the heat kernel exp(t d^2/dtheta^2) on the unit circle.

    Returns (value, bound) where bound majorises the truncation error.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    theta = np.asarray(theta, dtype=float)
    k = np.arange(1, terms + 1)
    val = (1.0 + 2.0 * np.sum(np.exp(-k**2 * t) * np.cos(np.multiply.outer(theta, k)), axis=-1)) / (2.0 * math.pi)
    bound = math.exp(-terms**2 * t) / (math.pi * (1.0 - math.exp(-terms * t)))
    return val, bound


def heat_kernel_gaussian(t, theta):
    """Leading-order Euclidean approximation (4 pi t)^(-1/2) exp(-theta^2 / 4t)."""
    theta = np.asarray(theta, dtype=float)
    return np.exp(-(theta**2) / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


@dataclass(frozen=True)
class HeatCircleKernel:
    t: float
    terms: int = 50

    def __call__(self, a, b):
        return heat_kernel_circle(self.t, np.subtract.outer(a, b), self.terms)[0]


@dataclass(frozen=True)
class GaussianDistanceKernel:
    """exp(-d^2 / (2 sigma^2)) on a distance matrix of the chosen method."""

    sigma: float
    method: str = "exact"


@dataclass
class GramReport:
    matrix: np.ndarray
    min_eigenvalue: float
    distances: DistanceMatrixReport | None = None

    @property
    def is_psd(self):
        return self.min_eigenvalue >= -1e-10


def gram_matrix(kernel, samples, manifold: Manifold | None = None):
    if isinstance(kernel, HeatCircleKernel):
        theta = np.asarray(samples, dtype=float)
        g = kernel(theta, theta)
        rep = None
    elif isinstance(kernel, GaussianDistanceKernel):
        if manifold is None:
            raise DomainError("distance kernels need a manifold")
        rep = distance_matrix(manifold, samples, kernel.method)
        g = np.exp(-rep.squared / (2.0 * kernel.sigma**2))
    else:
        raise DomainError(f"unsupported kernel {kernel!r}")
    g = 0.5 * (g + g.T)
    lam = float(np.linalg.eigvalsh(g)[0]) if np.all(np.isfinite(g)) else math.nan
    return GramReport(g, lam, rep)
