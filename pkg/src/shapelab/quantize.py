"""Riemannian quantization of empirical measures.

Cost F_{n,p}, Voronoi assignment, the p=2 gradient, online competitive
learning (CLRQ), summary measures and a small exact Wasserstein oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .errors import CapacityError, ConfigurationError, DomainError, NumericError
from .manifolds import Manifold, Sphere

TIE_TOL = 1e-12
WASSERSTEIN_MAX_ATOMS = 64


@dataclass
class EmpiricalMeasure:
    manifold: Manifold
    atoms: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float)
        if len(self.atoms) == 0:
            raise DomainError("empirical measure needs at least one atom")
        n = len(self.atoms)
        if self.weights is None:
            self.weights = np.full(n, 1.0 / n)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (n,) or np.any(self.weights < 0):
            raise DomainError("weights must be nonnegative, one per atom")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise DomainError(f"weights sum to {self.weights.sum():.15g}, not 1")

    def __len__(self):
        return len(self.atoms)

    def sample_indices(self, rng, size):
        return rng.choice(len(self.atoms), size=size, p=self.weights)


@dataclass
class Codebook:
    manifold: Manifold
    centers: np.ndarray

    def __post_init__(self):
        self.centers = np.array(self.centers, dtype=float)
        n = len(self.centers)
        for i in range(n):
            for j in range(i + 1, n):
                if self.manifold.dist(self.centers[i], self.centers[j]) <= 0:
                    raise DomainError(f"centers {i} and {j} coincide")

    def __len__(self):
        return len(self.centers)


@dataclass(frozen=True)
class StepSchedule:
    """Harmonic steps gamma_k = c0 / (1 + c1 k)."""

    c0: float = 1.0
    c1: float = 0.1

    def __post_init__(self):
        if self.c0 <= 0 or self.c1 <= 0:
            raise ConfigurationError("schedule parameters must be positive")

    def __call__(self, k):
        return self.c0 / (1.0 + self.c1 * k)


def distance_table(mu: EmpiricalMeasure, cb: Codebook):
    """N x n matrix of atom-to-center distances."""
    m = mu.manifold
    if _batched(m):
        return np.stack([m.dist(a, mu.atoms) for a in cb.centers], axis=1)
    return np.array([[float(m.dist(a, x)) for a in cb.centers] for x in mu.atoms])


def _batched(m):
    return getattr(m, "batched", False)


def _nearest(d):
    """Index of the nearest center with ties (within TIE_TOL) going to the lowest index."""
    dmin = d.min(axis=1, keepdims=True)
    return np.argmax(d <= dmin + TIE_TOL, axis=1)


def voronoi_assign(mu: EmpiricalMeasure, cb: Codebook):
    return _nearest(distance_table(mu, cb))


def cost(mu: EmpiricalMeasure, cb: Codebook, p=2.0):
    if p < 1:
        raise DomainError("p must be >= 1")
    d = distance_table(mu, cb)
    return float(np.dot(mu.weights, d.min(axis=1) ** p))


def gradient(mu: EmpiricalMeasure, cb: Codebook):
    """Gradient of F_{n,2} with respect to each center.

    Atoms equidistant (within TIE_TOL) from two centers lie on a cell boundary
    and are left out, following the open-cell indicator.
    """
    m = mu.manifold
    d = distance_table(mu, cb)
    dmin = d.min(axis=1, keepdims=True)
    in_open = (d <= dmin + TIE_TOL).sum(axis=1) == 1
    owner = _nearest(d)
    grads = []
    for i, a in enumerate(cb.centers):
        sel = np.flatnonzero(in_open & (owner == i))
        g = np.zeros_like(a)
        for j in sel:
            g = g + mu.weights[j] * m.log(a, mu.atoms[j])
        grads.append(-2.0 * g)
    return np.array(grads)


def gradient_norm(mu: EmpiricalMeasure, cb: Codebook):
    g = gradient(mu, cb)
    return float(np.sqrt(sum(mu.manifold.inner(a, gi, gi) for a, gi in zip(cb.centers, g))))


def initial_codebook(mu: EmpiricalMeasure, n, rng):
    """n distinct atoms drawn without replacement according to the weights."""
    m = mu.manifold
    distinct = []
    for j, x in enumerate(mu.atoms):
        if mu.weights[j] > 0 and all(m.dist(x, mu.atoms[k]) > 0 for k in distinct):
            distinct.append(j)
        if len(distinct) > n:
            break
    if len(distinct) < n:
        raise ConfigurationError(f"measure has {len(distinct)} distinct atoms, need {n}")
    for _ in range(1000):
        idx = rng.choice(len(mu), size=n, replace=False, p=mu.weights if np.count_nonzero(mu.weights) >= n else None)
        pts = mu.atoms[idx]
        if all(m.dist(pts[i], pts[j]) > 0 for i in range(n) for j in range(i + 1, n)):
            return Codebook(m, pts)
    # many duplicated atoms: fall back to the deterministic distinct set
    return Codebook(m, mu.atoms[distinct[:n]])


@dataclass
class CLRQResult:
    codebook: Codebook
    steps: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gammas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sampled_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    checkpoints: list = field(default_factory=list)


def clrq_run(mu: EmpiricalMeasure, n, schedule: StepSchedule | None = None, rng=None, iters=10_000,
             log_every=0, checkpoint_every=0, init: Codebook | None = None, fast=True) -> CLRQResult:
    """Competitive learning: move only the nearest center toward each new draw.

    ``log_every`` records (k, gamma_k, d(X_k, nearest)^2); ``checkpoint_every``
    records the full cost of the current codebook. On spheres a scalar loop
    replaces the array calls unless ``fast`` is False.
    """
    if iters < 1:
        raise ConfigurationError("iters must be >= 1")
    schedule = schedule or StepSchedule()
    rng = np.random.default_rng(rng)
    m = mu.manifold
    cb = init if init is not None else initial_codebook(mu, n, rng)
    centers = np.array(cb.centers)
    draws = mu.sample_indices(rng, iters)
    log_k, log_g, log_c, checks = [], [], [], []
    if fast and isinstance(m, Sphere) and not checkpoint_every:
        centers, dsel = _sphere_competitive(centers, mu.atoms, draws, schedule, m.radius)
        if log_every:
            log_k = list(range(0, iters, log_every))
            log_g = [schedule(k) for k in log_k]
            log_c = list(dsel[log_k] ** 2)
        return CLRQResult(Codebook(m, centers), np.array(log_k), np.array(log_g), np.array(log_c), checks)
    for k in range(iters):
        x = mu.atoms[draws[k]]
        if _batched(m):
            d = m.dist(centers, x)
        else:
            d = np.array([m.dist(a, x) for a in centers])
        i = int(_nearest(d[None, :])[0])
        g = schedule(k)
        centers[i] = m.exp(centers[i], g * m.log(centers[i], x))
        if log_every and k % log_every == 0:
            log_k.append(k)
            log_g.append(g)
            log_c.append(float(d[i] ** 2))
        if checkpoint_every and (k + 1) % checkpoint_every == 0:
            checks.append((k + 1, cost(mu, _raw_codebook(m, centers))))
    final = Codebook(m, centers)
    return CLRQResult(final, np.array(log_k), np.array(log_g), np.array(log_c), checks)


def _sphere_competitive(centers, atoms, draws, schedule, radius):
    # same update as the generic loop written with scalar math; the per-call
    # numpy overhead dominates for 3-vectors
    cs = [list(map(float, c)) for c in centers]
    pts = [list(map(float, a)) for a in atoms]
    r2 = radius * radius
    dim = len(cs[0])
    dsel = np.empty(len(draws))
    for k, j in enumerate(draws.tolist()):
        x = pts[j]
        best, bi, bw, bnw = None, 0, None, 0.0
        for i, c in enumerate(cs):
            dot = sum(c[t] * x[t] for t in range(dim))
            w = [x[t] - dot / r2 * c[t] for t in range(dim)]
            nw = math.sqrt(sum(wt * wt for wt in w))
            d = radius * math.atan2(nw * radius, dot)
            if best is None or d < best - TIE_TOL:
                best, bi, bw, bnw = d, i, w, nw
        dsel[k] = best
        if bnw == 0.0:
            continue
        theta = schedule(k) * best / radius
        c = cs[bi]
        ca, sa = math.cos(theta), math.sin(theta) * radius / bnw
        y = [ca * c[t] + sa * bw[t] for t in range(dim)]
        s = radius / math.sqrt(sum(yt * yt for yt in y))
        cs[bi] = [yt * s for yt in y]
    return np.array(cs), dsel


def _raw_codebook(m, centers):
    cb = object.__new__(Codebook)
    cb.manifold = m
    cb.centers = np.array(centers)
    return cb


def summary_measure(mu: EmpiricalMeasure, cb: Codebook) -> EmpiricalMeasure:
    owner = voronoi_assign(mu, cb)
    w = np.bincount(owner, weights=mu.weights, minlength=len(cb))
    w = w / w.sum()
    return EmpiricalMeasure(mu.manifold, np.array(cb.centers), w)


def wasserstein_p(mu1: EmpiricalMeasure, mu2: EmpiricalMeasure, p=2.0):
    """Exact W_p between two small discrete measures by a transportation LP."""
    if p < 1:
        raise DomainError("p must be >= 1")
    n1, n2 = len(mu1), len(mu2)
    if n1 > WASSERSTEIN_MAX_ATOMS or n2 > WASSERSTEIN_MAX_ATOMS:
        raise CapacityError(f"supports of size {n1} and {n2} exceed the {WASSERSTEIN_MAX_ATOMS}-atom limit")
    m = mu1.manifold
    c = np.array([[float(m.dist(x, y)) ** p for y in mu2.atoms] for x in mu1.atoms])
    a_eq = np.zeros((n1 + n2, n1 * n2))
    for i in range(n1):
        a_eq[i, i * n2:(i + 1) * n2] = 1.0
    for j in range(n2):
        a_eq[n1 + j, j::n2] = 1.0
    b_eq = np.concatenate([mu1.weights, mu2.weights])
    res = linprog(c.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if not res.success:
        raise NumericError(f"transport LP failed: {res.message}")
    return max(float(res.fun), 0.0) ** (1.0 / p)
