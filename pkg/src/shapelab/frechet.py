"""Frechet means, empirical moment tensors and small-sample asymptotics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonConvergenceError, StatisticsError, UnsupportedError
from .ladders import fit_slope
from .manifolds import Manifold, NumericSurface, Sphere
from .quantize import EmpiricalMeasure
from .rng import spawn


def log_many(m: Manifold, x, ys):
    """log_x applied to a stack of points."""
    if getattr(m, "batched", False):
        return m.log(x, ys)
    return np.array([m.log(x, y) for y in ys])


def default_diameter_bound(m: Manifold):
    if isinstance(m, Sphere):
        return 1.0 * m.radius
    if isinstance(m, NumericSurface):
        return m.convexity_radius
    if m.constant_curvature is not None and m.constant_curvature <= 0:
        return math.inf
    if m.name == "spd":
        return math.inf
    return 1.0


def support_diameter(mu: EmpiricalMeasure, exact_limit=4000):
    m = mu.manifold
    pts = mu.atoms[mu.weights > 0]
    r0 = float(np.max(_dists(m, pts[0], pts)))
    if len(pts) > exact_limit:
        return 2.0 * r0
    return max(float(np.max(_dists(m, p, pts[i + 1:]), initial=0.0)) for i, p in enumerate(pts))


def _dists(m, x, ys):
    if len(ys) == 0:
        return np.zeros(0)
    if getattr(m, "batched", False):
        return np.atleast_1d(m.dist(x, ys))
    return np.array([m.dist(x, y) for y in ys])


@dataclass
class MeanReport:
    mean: np.ndarray
    iterations: int
    final_gradient_norm: float


def frechet_mean(mu: EmpiricalMeasure, tol=1e-10, max_iter=200, x0=None, diameter_bound=None,
                 check_diameter=True, step=1.0) -> MeanReport:
    """Fixed-point iteration x <- exp_x(step * M1(x)) for the weighted Frechet mean."""
    m = mu.manifold
    if check_diameter:
        bound = default_diameter_bound(m) if diameter_bound is None else diameter_bound
        if math.isfinite(bound):
            diam = support_diameter(mu)
            if diam > bound:
                raise DomainError(f"support diameter {diam:.4g} exceeds uniqueness bound {bound:.4g}")
    w = mu.weights
    x = mu.atoms[int(np.argmax(w))] if x0 is None else np.asarray(x0, dtype=float)
    if len(mu) == 1:
        return MeanReport(np.array(mu.atoms[0]), 0, 0.0)
    gnorm = math.inf
    for it in range(max_iter + 1):
        logs = log_many(m, x, mu.atoms)
        m1 = np.tensordot(w, logs, axes=(0, 0))
        gnorm = float(m.norm(x, m1))
        if gnorm <= tol:
            return MeanReport(x, it, gnorm)
        if it < max_iter:
            x = m.exp(x, step * m1)
    raise NonConvergenceError(f"Frechet mean did not reach tol {tol:g} in {max_iter} iterations (|M1| = {gnorm:.3e})")


@dataclass
class MomentTensors:
    """Moments of log_x(y) in an orthonormal frame at ``base``."""

    manifold: Manifold
    base: np.ndarray
    frame: np.ndarray
    m1: np.ndarray
    m2: np.ndarray | None = None
    m3: np.ndarray | None = None

    def m1_vector(self):
        return self.manifold.from_frame(self.base, self.m1, self.frame)


def empirical_moments(mu: EmpiricalMeasure, x, up_to=2) -> MomentTensors:
    if up_to not in (1, 2, 3):
        raise DomainError("up_to must be 1, 2 or 3")
    m = mu.manifold
    x = np.asarray(x, dtype=float)
    frame = m.frame(x)
    c = frame_coords(m, x, log_many(m, x, mu.atoms), frame)
    w = mu.weights
    m1 = w @ c
    m2 = np.einsum("n,ni,nj->ij", w, c, c) if up_to >= 2 else None
    m3 = np.einsum("n,ni,nj,nk->ijk", w, c, c, c) if up_to >= 3 else None
    return MomentTensors(m, x, frame, m1, m2, m3)


def frame_coords(m: Manifold, x, vecs, frame):
    vecs = np.asarray(vecs, dtype=float)
    return np.stack([np.atleast_1d(m.inner(x, vecs, e)) for e in frame], axis=-1)


def curvature_contraction(m: Manifold, x, frame, m1_vec, m2):
    """sum_ij m2[i, j] R(e_i, m1) e_j."""
    out = np.zeros_like(np.asarray(m1_vec, dtype=float))
    for i, ei in enumerate(frame):
        for j, ej in enumerate(frame):
            if m2[i, j] != 0.0:
                out = out + m2[i, j] * m.curvature(x, ei, m1_vec, ej)
    return out


def log_frechet_from_moments(mom: MomentTensors):
    """Third-order estimate of log_x(mean) from the moments at x.

    Only the curvature term is kept, so the manifold must have parallel
    curvature (the covariant-derivative terms are then identically zero).
    """
    m = mom.manifold
    if not m.curvature_parallel:
        raise UnsupportedError(f"{m.spec()} has non-parallel curvature; truncation not implemented")
    if mom.m2 is None:
        raise DomainError("second moment required")
    m1v = mom.m1_vector()
    return m1v - curvature_contraction(m, mom.base, mom.frame, m1v, mom.m2) / 3.0


# ---------------------------------------------------------------------------
# laws
# ---------------------------------------------------------------------------


class FiniteLaw:
    """Finite discrete law; the population Frechet mean is computed exactly."""

    def __init__(self, manifold: Manifold, atoms, weights=None, tol=1e-14):
        self.manifold = manifold
        self.measure = EmpiricalMeasure(manifold, atoms, weights)
        self.mean = frechet_mean(self.measure, tol=tol, max_iter=500).mean

    def sample(self, rng, n):
        idx = self.measure.sample_indices(rng, n)
        return self.measure.atoms[idx]

    def sample_indices(self, rng, n):
        return self.measure.sample_indices(rng, n)


class TangentDiskLaw:
    """exp_p(v) with v uniform in the tangent ball of radius eps (isotropic)."""

    def __init__(self, manifold: Manifold, eps, base=None):
        self.manifold = manifold
        self.eps = float(eps)
        self.mean = manifold.base_point() if base is None else np.asarray(base, dtype=float)
        self.frame = manifold.frame(self.mean)

    def sample(self, rng, n):
        d = len(self.frame)
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.eps * rng.random(n) ** (1.0 / d)
        v = (g * r[:, None]) @ self.frame.reshape(d, -1)
        v = v.reshape((n,) + self.mean.shape)
        m = self.manifold
        if getattr(m, "batched", False):
            return m.exp(self.mean, v)
        return np.array([m.exp(self.mean, vi) for vi in v])


def _sample_mean(m, pts, tol, x0):
    mu = EmpiricalMeasure(m, pts)
    return frechet_mean(mu, tol=tol, max_iter=500, x0=x0, check_diameter=False).mean


@dataclass
class BiasRow:
    n: int
    trials: int
    bias: np.ndarray
    se: np.ndarray
    norm: float
    failures: int


def bias_experiment(law, n_values, trials, rng, tol=1e-13, control_variate=True):
    """Monte Carlo bias E[log_mean(mean_n)] in the frame at the population mean.

    With ``control_variate`` the estimator averages z_n - M1_hat(mean), whose
    expectation equals E[z_n] because the population first moment vanishes at
    the mean; it removes the O(1/sqrt(n)) fluctuation of z_n.
    """
    m = law.manifold
    xbar = law.mean
    frame = m.frame(xbar)
    rows = []
    streams = spawn(rng, len(n_values))
    for n, stream in zip(n_values, streams):
        zs, fails = _z_samples(m, law, xbar, frame, int(n), trials, stream, tol, control_variate)
        k = len(zs)
        if k < 2:
            raise StatisticsError("fewer than two successful trials")
        b = zs.mean(axis=0)
        se = zs.std(axis=0, ddof=1) / math.sqrt(k)
        rows.append(BiasRow(int(n), k, b, se, float(np.linalg.norm(b)), fails))
    return rows


def _z_samples(m, law, xbar, frame, n, trials, rng, tol, control_variate):
    out = []
    fails = 0
    for stream in spawn(rng, trials):
        pts = law.sample(stream, n)
        try:
            xn = _sample_mean(m, pts, tol, xbar)
        except NonConvergenceError:
            fails += 1
            continue
        z = frame_coords(m, xbar, m.log(xbar, xn)[None], frame)[0]
        if control_variate:
            logs = log_many(m, xbar, pts)
            z = z - frame_coords(m, xbar, logs, frame).mean(axis=0)
        out.append(z)
    return np.array(out), fails


def bias_slope(rows):
    return fit_slope([r.n for r in rows], [r.norm for r in rows])


@dataclass
class CovarianceRow:
    n: int
    trials: int
    trace_diff: float
    se: float
    sigma: np.ndarray
    failures: int


def population_m2(law, frame, rng=None, samples=200_000):
    """Second moment at the mean: exact for finite laws, Monte Carlo otherwise."""
    m = law.manifold
    if isinstance(law, FiniteLaw):
        c = frame_coords(m, law.mean, log_many(m, law.mean, law.measure.atoms), frame)
        return np.einsum("n,ni,nj->ij", law.measure.weights, c, c)
    if isinstance(law, TangentDiskLaw):
        d = len(frame)
        return np.eye(d) * law.eps**2 / (d + 2)
    pts = law.sample(np.random.default_rng(rng), samples)
    c = frame_coords(m, law.mean, log_many(m, law.mean, pts), frame)
    return c.T @ c / len(c)


def covariance_experiment(law, n_values, trials, rng, tol=1e-13, control_variate=True):
    """Monte Carlo Sigma_n = E[z_n z_n^T]; reports trace(n Sigma_n) - trace(M2).

    With ``control_variate`` each trial contributes n|z_n|^2 - n|M1_hat|^2; the
    subtracted term has mean trace(M2) exactly, so the difference is an
    unbiased, low-variance estimate of the curvature correction. Without it
    the plain n|z_n|^2 - trace(M2) is averaged.
    """
    m = law.manifold
    xbar = law.mean
    frame = m.frame(xbar)
    tr_m2 = None if control_variate else float(np.trace(population_m2(law, frame)))
    rows = []
    for n, stream in zip(n_values, spawn(rng, len(n_values))):
        n = int(n)
        diffs, sig, fails = [], [], 0
        for s in spawn(stream, trials):
            pts = law.sample(s, n)
            try:
                xn = _sample_mean(m, pts, tol, xbar)
            except NonConvergenceError:
                fails += 1
                continue
            z = frame_coords(m, xbar, m.log(xbar, xn)[None], frame)[0]
            if control_variate:
                m1 = frame_coords(m, xbar, log_many(m, xbar, pts), frame).mean(axis=0)
                diffs.append(n * (z @ z) - n * (m1 @ m1))
            else:
                diffs.append(n * (z @ z) - tr_m2)
            sig.append(np.outer(z, z))
        k = len(diffs)
        if k < 2:
            raise StatisticsError("fewer than two successful trials")
        diffs = np.array(diffs)
        rows.append(CovarianceRow(n, k, float(diffs.mean()), float(diffs.std(ddof=1) / math.sqrt(k)),
                                  np.mean(sig, axis=0), fails))
    return rows


def gavrilov_terms(m: Manifold, x, u, v):
    """Exact double exponential and its curvature truncation at x."""
    y = m.exp(x, v)
    w = m.transport(x, y, u)
    h = m.log(x, m.exp(y, w))
    approx = v + u + m.curvature(x, u, v, v) / 6.0 + m.curvature(x, u, v, u) / 3.0
    return h, approx


def gavrilov_check(m: Manifold, x, u, v, scales=(0.4, 0.2, 0.1, 0.05)):
    """Fitted exponent of |h(su, sv) - truncation| in s; ``inf`` when the residual is round-off."""
    if not m.curvature_parallel:
        raise UnsupportedError("gavrilov_check needs parallel curvature")
    res = []
    for s in scales:
        h, approx = gavrilov_terms(m, x, s * np.asarray(u), s * np.asarray(v))
        res.append(float(m.norm(x, h - approx)))
    res = np.array(res)
    if np.all(res < 1e-14):
        return math.inf
    keep = res >= 1e-14
    return fit_slope(np.asarray(scales)[keep], res[keep])


def _compositions(n, k):
    for cut in itertools.combinations(range(n + k - 1), k - 1):
        edges = (-1,) + cut + (n + k - 1,)
        yield [edges[i + 1] - edges[i] - 1 for i in range(k)]


@dataclass
class ExactRow:
    n: int
    bias: np.ndarray
    trace_diff: float
    outcomes: int


def exact_sample_mean_moments(law: FiniteLaw, n_values, tol=1e-15, max_outcomes=200_000):
    """E[z_n] and E[n|z_n|^2] - trace(M2) by summing over all multinomial outcomes.

    Only feasible for finite laws with a handful of atoms; no sampling noise.
    """
    from scipy.stats import multinomial

    m = law.manifold
    atoms = law.measure.atoms
    w = law.measure.weights
    k = len(atoms)
    xbar = law.mean
    frame = m.frame(xbar)
    tr_m2 = float(np.trace(population_m2(law, frame)))
    rows = []
    for n in n_values:
        n = int(n)
        count = math.comb(n + k - 1, k - 1)
        if count > max_outcomes:
            raise DomainError(f"{count} outcomes exceed the enumeration limit {max_outcomes}")
        bias = np.zeros(len(frame))
        second = 0.0
        for cnt in _compositions(n, k):
            p = multinomial.pmf(cnt, n, w)
            if p == 0.0:
                continue
            cw = np.asarray(cnt, dtype=float) / n
            keep = cw > 0
            mu = EmpiricalMeasure(m, atoms[keep], cw[keep])
            xn = frechet_mean(mu, tol=tol, max_iter=500, x0=xbar, check_diameter=False).mean
            z = frame_coords(m, xbar, m.log(xbar, xn)[None], frame)[0]
            bias += p * z
            second += p * n * float(z @ z)
        rows.append(ExactRow(n, bias, second - tr_m2, count))
    return rows
