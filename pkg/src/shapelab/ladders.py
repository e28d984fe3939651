"""Schild's ladder and pole ladder parallel transport."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .manifolds import Manifold

SCHEMES = ("pole", "schild")


@dataclass(frozen=True)
class LadderConfig:
    steps: int = 1
    scheme: str = "pole"

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigurationError(f"steps must be an integer >= 1, got {self.steps!r}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown ladder scheme {self.scheme!r}")


@dataclass
class LadderResult:
    vector: np.ndarray
    norm_drift: float
    steps: int


def geodesic_symmetry(m: Manifold, center, y):
    """s_center(y) = exp_center(-log_center(y))."""
    return m.exp(center, -m.log(center, y))


def pole_step(m: Manifold, p, q, u_p):
    """One pole-ladder rung from p to q. The vector is encoded by exp_p(u_p)."""
    u_p = np.asarray(u_p, dtype=float)
    if not np.any(u_p):
        return np.zeros_like(u_p)
    mid = m.midpoint(p, q)
    reflected = geodesic_symmetry(m, mid, m.exp(p, u_p))
    # log_q(s_q(z)) = -log_q(z)
    return -m.log(q, reflected)


def schild_step(m: Manifold, p, q, u_p):
    """One Schild's-ladder rung: geodesic parallelogram through the diagonal midpoint."""
    u_p = np.asarray(u_p, dtype=float)
    if not np.any(u_p):
        return np.zeros_like(u_p)
    x1 = m.exp(p, u_p)
    mid = m.midpoint(x1, q)
    x2 = m.exp(p, 2.0 * m.log(p, mid))
    return m.log(q, x2)


_STEP = {"pole": pole_step, "schild": schild_step}


def transport_ladder(m: Manifold, path, u0, cfg: LadderConfig | None = None) -> LadderResult:
    """Chain ladder rungs along a piecewise geodesic path.

    Each path segment is cut into ``cfg.steps`` rungs; the vector is scaled by
    1/steps on the way in and scaled back at the end.
    """
    cfg = cfg or LadderConfig()
    path = [np.asarray(p, dtype=float) for p in path]
    if len(path) < 2:
        raise DomainError("path needs at least two points")
    step = _STEP[cfg.scheme]
    u0 = np.asarray(u0, dtype=float)
    norm0 = float(m.norm(path[0], u0))
    v = u0 / cfg.steps
    current = path[0]
    rungs = 0
    for nxt in path[1:]:
        seg = m.log(current, nxt)
        rung_points = [m.exp(current, (j / cfg.steps) * seg) for j in range(1, cfg.steps)] + [nxt]
        for target in rung_points:
            v = step(m, current, target, v)
            current = target
            rungs += 1
    v = v * cfg.steps
    return LadderResult(v, abs(float(m.norm(current, v)) - norm0), rungs)


def ladder_error(m: Manifold, p, q, u_p, scheme, steps):
    """Metric error at q of the ladder against exact transport."""
    res = transport_ladder(m, [p, q], u_p, LadderConfig(steps, scheme))
    exact = m.transport(p, q, u_p)
    return float(m.norm(q, res.vector - exact))


def fit_slope(x, y):
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def convergence_order(m: Manifold, p, q, u_p, scheme, step_counts, floor=1e-12):
    """Empirical order of the ladder error in 1/steps; ``inf`` when exact to ``floor``."""
    counts = [int(s) for s in step_counts]
    if len(counts) < 3 or any(b <= a for a, b in zip(counts, counts[1:])) or counts[0] < 1:
        raise ConfigurationError("step_counts must be >= 3 strictly increasing positive integers")
    errs = np.array([ladder_error(m, p, q, u_p, scheme, n) for n in counts])
    if np.all(errs < floor):
        return math.inf
    keep = errs >= floor
    if keep.sum() < 2:
        return math.inf
    return fit_slope(1.0 / np.array(counts)[keep], errs[keep])
