"""Stochastic flows on S^2, the sqrt(t) dispersion statistic and Hopf lifts to S^3.

Quaternions are arrays (w, x, y, z). The Hopf map is pi(q) = q k conj(q)
and the fibre through q is q exp(k phi), so the vertical direction is q k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, StatisticsError, StepSizeError
from .ladders import fit_slope
from .rng import spawn

NORTH = np.array([0.0, 0.0, 1.0])


@dataclass
class SpherePath:
    times: np.ndarray
    points: np.ndarray


@dataclass
class QuaternionPath:
    times: np.ndarray
    quats: np.ndarray


def zero_gradient(r):
    return np.zeros_like(r)


def height_gradient(r):
    """Ambient gradient of f(r) = -r_z."""
    g = np.zeros_like(r)
    g[..., 2] = -1.0
    return g


def _project(r, v):
    return v - np.sum(v * r, axis=-1, keepdims=True) * r


def _sphere_exp(r, v):
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    y = np.cos(nv) * r + np.sinc(nv / np.pi) * v
    return y / np.linalg.norm(y, axis=-1, keepdims=True)


def sde_step(r, grad_f: Callable, dt, rng=None, xi=None):
    """One projected Euler step along a great circle for dr = -grad f dt + dw."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    r = np.asarray(r, dtype=float)
    if xi is None:
        xi = rng.standard_normal(r.shape)
    v = _project(r, -np.asarray(grad_f(r)) * dt + math.sqrt(dt) * np.asarray(xi))
    return _sphere_exp(r, v)


def simulate_ensemble(n_paths, grad_f: Callable | None, dt, t_max, rng, record_every=1, block=1024,
                      start=NORTH):
    """Independent paths from ``start`` (default the north pole), one RNG substream per path.

    Paths are advanced together; noise for path i is read in blocks from its
    own substream so results do not depend on the ensemble size.
    """
    if dt <= 0 or t_max < 0:
        raise DomainError("need dt > 0 and t_max >= 0")
    if n_paths == 0:
        return []
    grad_f = grad_f or zero_gradient
    steps = int(round(t_max / dt))
    if abs(steps * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise DomainError("t_max must be a multiple of dt")
    streams = spawn(rng, n_paths)
    r = np.tile(np.asarray(start, dtype=float), (n_paths, 1))
    keep = list(range(0, steps + 1, record_every))
    if keep[-1] != steps:
        keep.append(steps)
    keep_set = set(keep)
    rec = [r.copy()]
    sdt = math.sqrt(dt)
    noise = None
    for s in range(steps):
        j = s % block
        if j == 0:
            size = min(block, steps - s)
            noise = np.stack([g.standard_normal((size, 3)) for g in streams], axis=1)
        v = _project(r, -grad_f(r) * dt + sdt * noise[j])
        r = _sphere_exp(r, v)
        if s + 1 in keep_set:
            rec.append(r.copy())
    times = np.array(keep, dtype=float) * dt
    pts = np.stack(rec, axis=1)
    return [SpherePath(times, pts[i]) for i in range(n_paths)]


@dataclass
class Dispersion:
    times: np.ndarray
    mean_distance: np.ndarray
    exponent: float


def dispersion_stat(paths, t_fit=0.2, min_paths=100, pole=NORTH):
    """Mean geodesic distance to the pole per time and the fitted power-law exponent."""
    if len(paths) < min_paths:
        raise StatisticsError(f"need at least {min_paths} paths, got {len(paths)}")
    times = paths[0].times
    pts = np.stack([p.points for p in paths])
    d = np.arccos(np.clip(pts @ np.asarray(pole), -1.0, 1.0)).mean(axis=0)
    sel = (times > 0) & (times <= t_fit + 1e-12)
    if sel.sum() < 2:
        raise StatisticsError("fewer than two times in the fit window")
    return Dispersion(times, d, fit_slope(times[sel], d[sel]))


# ---------------------------------------------------------------------------
# quaternions and the Hopf fibration
# ---------------------------------------------------------------------------


def qmul(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ], axis=-1)


def qconj(q):
    q = np.array(q, dtype=float)
    q[..., 1:] *= -1.0
    return q


def pure(v):
    v = np.asarray(v, dtype=float)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


QK = np.array([0.0, 0.0, 0.0, 1.0])


def hopf_project(q):
    """pi(q) = q k conj(q), returned as a 3-vector."""
    return qmul(qmul(q, QK), qconj(q))[..., 1:]


def vertical(q):
    return qmul(q, QK)


def _horizontal_factor(s):
    """h = exp(a i + b j) with h k conj(h) = s (rotation of k onto s about an axis in the ij-plane)."""
    sx, sy, sz = s
    phi = math.acos(max(-1.0, min(1.0, sz)))
    st = math.hypot(sx, sy)
    if st < 1e-300:
        if sz > 0:
            return np.array([1.0, 0.0, 0.0, 0.0])
        raise StepSizeError("step reaches the antipode of the current base point")
    half = 0.5 * phi
    sh = math.sin(half)
    return np.array([math.cos(half), -sy / st * sh, sx / st * sh, 0.0])


def hopf_lift(base: SpherePath, q0, max_step=0.5, tol=1e-8):
    """Horizontal lift of a piecewise-geodesic base path.

    Each base step is lifted by q <- q exp(a i + b j), the horizontal curve
    over the great-circle segment, so pi(lift) reproduces the base up to
    round-off.
    """
    q = np.asarray(q0, dtype=float)
    q = q / np.linalg.norm(q)
    pts = np.asarray(base.points, dtype=float)
    if np.linalg.norm(hopf_project(q) - pts[0]) > tol:
        raise DomainError("pi(q0) does not match the first base point")
    out = [q]
    for k in range(1, len(pts)):
        ang = math.acos(max(-1.0, min(1.0, float(pts[k - 1] @ pts[k]))))
        if ang > max_step:
            raise StepSizeError(f"base step {k} spans {ang:.3f} rad > {max_step}")
        # target in the frame of q: conj(q) p q
        s = qmul(qmul(qconj(q), pure(pts[k])), q)[1:]
        s = s / np.linalg.norm(s)
        q = qmul(q, _horizontal_factor(s))
        q = q / np.linalg.norm(q)
        out.append(q)
    return QuaternionPath(np.asarray(base.times, dtype=float), np.array(out))


def lift_horizontality(path: QuaternionPath):
    """max over steps of |<q_{k+1} - q_k, q_k k>|."""
    q = path.quats
    if len(q) < 2:
        return 0.0
    inc = q[1:] - q[:-1]
    return float(np.max(np.abs(np.sum(inc * vertical(q[:-1]), axis=-1))))


def uniform_walk_s3(n_paths, dt, t_max, rng, record_every=1, start=None, block=1024):
    """Isotropic Gaussian geodesic random walk on S^3 from the identity quaternion.

    Steps are ambient Gaussians projected to the tangent space (as in
    ``Sphere.tangent_gaussian``) followed by a geodesic step; path i reads its
    noise from substream i.
    """
    if dt <= 0 or t_max < 0:
        raise DomainError("need dt > 0 and t_max >= 0")
    if n_paths == 0:
        return []
    steps = int(round(t_max / dt))
    q0 = np.array([1.0, 0.0, 0.0, 0.0]) if start is None else np.asarray(start, dtype=float)
    keep = list(range(0, steps + 1, record_every))
    if keep[-1] != steps:
        keep.append(steps)
    keep_set = set(keep)
    streams = spawn(rng, n_paths)
    q = np.tile(q0, (n_paths, 1))
    rec = [q.copy()]
    sdt = math.sqrt(dt)
    noise = None
    for s in range(steps):
        j = s % block
        if j == 0:
            size = min(block, steps - s)
            noise = np.stack([g.standard_normal((size, 4)) for g in streams], axis=1)
        q = _sphere_exp(q, _project(q, sdt * noise[j]))
        if s + 1 in keep_set:
            rec.append(q.copy())
    times = np.array(keep, dtype=float) * dt
    qs = np.stack(rec, axis=1)
    return [QuaternionPath(times, qs[i]) for i in range(n_paths)]


def s3_distance_to_identity(q):
    return np.arccos(np.clip(np.asarray(q)[..., 0], -1.0, 1.0))


def coverage_fraction(quats, radius=math.pi / 4):
    """Fraction of quaternions within geodesic distance ``radius`` of the identity."""
    return float(np.mean(s3_distance_to_identity(quats) <= radius))
