"""Riemannian manifolds in ambient coordinates.

Points and tangent vectors are plain numpy arrays. Each manifold class
implements ``exp``, ``log``, ``dist``, ``inner``, ``curvature`` and exact
parallel transport; the closed-form manifolds accept batches along the
leading axis of the second argument of ``exp``/``log``/``dist``.

Curvature convention: R(u,v)w = nabla_u nabla_v w - nabla_v nabla_u w -
nabla_[u,v] w, so that <R(u,v)v, u> is the (unnormalised) sectional
curvature.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    BVPError,
    CutLocusError,
    DegeneracyError,
    DomainError,
    IntegrationError,
)

POINT_TOL = 1e-12
CUT_LOCUS_MARGIN = 1e-6


def _sinc(theta):
    # sin(theta)/theta, safe at 0
    return np.sinc(np.asarray(theta) / np.pi)


def _sinhc(theta):
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 1e-4
    t2 = theta * theta
    safe = np.where(small, 1.0, theta)
    return np.where(small, 1.0 + t2 / 6.0 + t2 * t2 / 120.0, np.sinh(safe) / safe)


class Manifold:
    """Common interface. Subclasses fill in the geometry."""

    name = "manifold"
    dim: int
    is_symmetric_space = False
    #: constant sectional curvature, or None when it varies
    constant_curvature: float | None = None
    #: True when the covariant derivative of the curvature tensor vanishes
    curvature_parallel = False
    #: exp/log/dist broadcast over a leading batch axis of their last argument
    batched = True

    # -- constraint checks -------------------------------------------------
    def check_point(self, x):
        raise NotImplementedError

    def check_tangent(self, x, v):
        raise NotImplementedError

    # -- metric -------------------------------------------------------------
    def inner(self, x, u, v):
        raise NotImplementedError

    def norm(self, x, v):
        return np.sqrt(np.maximum(self.inner(x, v, v), 0.0))

    def project(self, x, v):
        """Orthogonal projection of an ambient vector onto T_x."""
        raise NotImplementedError

    def frame(self, x):
        """Orthonormal basis of T_x, stacked along axis 0."""
        raise NotImplementedError

    def to_frame(self, x, v, basis=None):
        basis = self.frame(x) if basis is None else basis
        v = np.asarray(v, dtype=float)
        return np.stack([self.inner(x, v, e) for e in basis], axis=-1)

    def from_frame(self, x, coords, basis=None):
        basis = self.frame(x) if basis is None else basis
        coords = np.asarray(coords, dtype=float)
        return np.tensordot(coords, basis, axes=([-1], [0]))

    def base_point(self):
        raise NotImplementedError

    def zero_vector(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    # -- geometry -----------------------------------------------------------
    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def dist(self, x, y):
        return self.norm(x, self.log(x, y))

    def geodesic_point(self, x, y, t):
        return self.exp(x, t * self.log(x, y))

    def midpoint(self, x, y):
        return self.geodesic_point(x, y, 0.5)

    def curvature(self, x, u, v, w):
        raise NotImplementedError

    def transport(self, x, y, v):
        """Parallel transport of v from T_x to T_y along the minimising geodesic."""
        raise NotImplementedError

    def sectional_curvature(self, x, u, v):
        uu = self.inner(x, u, u)
        vv = self.inner(x, v, v)
        uv = self.inner(x, u, v)
        denom = uu * vv - uv * uv
        if denom < 1e-14:
            raise DegeneracyError(f"degenerate plane: |u^v|^2 = {denom:.3e}")
        return float(self.inner(x, self.curvature(x, u, v, v), u) / denom)

    def tangent_gaussian(self, x, sigma, rng):
        """Isotropic Gaussian tangent vector with per-coordinate variance sigma^2."""
        if sigma < 0:
            raise DomainError("sigma must be nonnegative")
        xi = rng.standard_normal(np.shape(x))
        return self.project(x, sigma * xi)

    def __repr__(self):
        return f"{type(self).__name__}({self.spec()})"

    def spec(self):
        return self.name


# ---------------------------------------------------------------------------
# Euclidean space
# ---------------------------------------------------------------------------


class Euclidean(Manifold):
    name = "euclidean"
    is_symmetric_space = True
    constant_curvature = 0.0
    curvature_parallel = True

    def __init__(self, d=2):
        if d < 1:
            raise DomainError("dimension must be >= 1")
        self.dim = int(d)

    def spec(self):
        return f"euclidean:d={self.dim}"

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim or not np.all(np.isfinite(x)):
            raise DomainError(f"expected finite points in R^{self.dim}")
        return x

    def check_tangent(self, x, v):
        return self.check_point(v)

    def inner(self, x, u, v):
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def project(self, x, v):
        return np.asarray(v, dtype=float)

    def frame(self, x):
        return np.eye(self.dim)

    def base_point(self):
        return np.zeros(self.dim)

    def exp(self, x, v):
        return np.asarray(x, dtype=float) + np.asarray(v, dtype=float)

    def log(self, x, y):
        return np.asarray(y, dtype=float) - np.asarray(x, dtype=float)

    def dist(self, x, y):
        return np.linalg.norm(np.asarray(y, float) - np.asarray(x, float), axis=-1)

    def curvature(self, x, u, v, w):
        return np.zeros_like(np.asarray(w, dtype=float))

    def transport(self, x, y, v):
        return np.array(v, dtype=float)


# ---------------------------------------------------------------------------
# Sphere of radius r in R^{d+1}
# ---------------------------------------------------------------------------


class Sphere(Manifold):
    name = "sphere"
    is_symmetric_space = True
    curvature_parallel = True

    def __init__(self, d=2, radius=1.0):
        if d < 1:
            raise DomainError("dimension must be >= 1")
        if radius <= 0:
            raise DomainError("radius must be positive")
        self.dim = int(d)
        self.radius = float(radius)
        self.constant_curvature = 1.0 / self.radius**2

    def spec(self):
        return f"sphere:d={self.dim},r={self.radius:g}"

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim + 1:
            raise DomainError(f"expected points in R^{self.dim + 1}")
        err = np.abs(np.linalg.norm(x, axis=-1) - self.radius)
        if np.any(~(err <= POINT_TOL * max(1.0, self.radius))):
            raise DomainError(f"point off the sphere by {np.max(err):.3e}")
        return x

    def check_tangent(self, x, v):
        v = np.asarray(v, dtype=float)
        scale = max(1.0, float(np.max(np.abs(v), initial=0.0))) * self.radius
        err = np.abs(np.sum(v * x, axis=-1))
        if np.any(~(err <= POINT_TOL * scale)):
            raise DomainError(f"vector not tangent: <v,x> = {np.max(err):.3e}")
        return v

    def inner(self, x, u, v):
        return np.sum(np.asarray(u) * np.asarray(v), axis=-1)

    def project(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return v - (np.sum(v * x, axis=-1, keepdims=True) / self.radius**2) * x

    def frame(self, x):
        x = np.asarray(x, dtype=float)
        _, _, vt = np.linalg.svd(x[None, :] / self.radius)
        return vt[1:]

    def base_point(self):
        p = np.zeros(self.dim + 1)
        p[-1] = self.radius
        return p

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        theta = nv / self.radius
        y = np.cos(theta) * x + _sinc(theta) * v
        return y * (self.radius / np.linalg.norm(y, axis=-1, keepdims=True))

    def _angle(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = np.sum(x * y, axis=-1, keepdims=True)
        w = y - (c / self.radius**2) * x
        nw = np.linalg.norm(w, axis=-1, keepdims=True)
        return np.arctan2(nw * self.radius, c), w, nw

    def log(self, x, y):
        theta, w, nw = self._angle(x, y)
        if np.any(self.radius * theta > math.pi * self.radius - CUT_LOCUS_MARGIN):
            raise CutLocusError("points are (nearly) antipodal")
        scale = np.where(nw > 0, self.radius * theta / np.where(nw > 0, nw, 1.0), 0.0)
        return scale * w

    def dist(self, x, y):
        theta, _, _ = self._angle(x, y)
        return self.radius * theta[..., 0]

    def curvature(self, x, u, v, w):
        k = self.constant_curvature
        u, v, w = (np.asarray(a, dtype=float) for a in (u, v, w))
        return k * (self.inner(x, v, w) * u - self.inner(x, u, w) * v)

    def transport(self, x, y, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        u = self.log(x, y)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return v.copy()
        theta = nu / self.radius
        e = u / nu
        a = float(np.dot(e, v))
        out = v + a * ((math.cos(theta) - 1.0) * e - math.sin(theta) * x / self.radius)
        return self.project(y, out)


# ---------------------------------------------------------------------------
# Hyperbolic space, hyperboloid model in Minkowski space R^{1,d}
# ---------------------------------------------------------------------------


def minkowski(u, v):
    u = np.asarray(u)
    v = np.asarray(v)
    return np.sum(u[..., 1:] * v[..., 1:], axis=-1) - u[..., 0] * v[..., 0]


class Hyperbolic(Manifold):
    name = "hyperbolic"
    is_symmetric_space = True
    constant_curvature = -1.0
    curvature_parallel = True

    def __init__(self, d=2):
        if d < 1:
            raise DomainError("dimension must be >= 1")
        self.dim = int(d)

    def spec(self):
        return f"hyperbolic:d={self.dim}"

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim + 1:
            raise DomainError(f"expected points in R^{self.dim + 1}")
        err = np.abs(minkowski(x, x) + 1.0)
        if np.any(~(err <= POINT_TOL * np.maximum(1.0, x[..., 0] ** 2))) or np.any(x[..., 0] <= 0):
            raise DomainError(f"point off the upper hyperboloid sheet by {np.max(err):.3e}")
        return x

    def check_tangent(self, x, v):
        v = np.asarray(v, dtype=float)
        err = np.abs(minkowski(x, v))
        scale = max(1.0, float(np.max(np.abs(v), initial=0.0))) * max(1.0, float(np.max(np.abs(x))))
        if np.any(~(err <= POINT_TOL * scale)):
            raise DomainError(f"vector not Minkowski-orthogonal to x: {np.max(err):.3e}")
        return v

    def inner(self, x, u, v):
        return minkowski(u, v)

    def project(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return v + minkowski(v, x)[..., None] * x

    def frame(self, x):
        x = np.asarray(x, dtype=float)
        basis = []
        for e in np.eye(self.dim + 1):
            w = self.project(x, e)
            for b in basis:
                w = w - minkowski(w, b) * b
            nw = minkowski(w, w)
            if nw > 1e-10:
                basis.append(w / math.sqrt(nw))
            if len(basis) == self.dim:
                break
        return np.array(basis)

    def tangent_gaussian(self, x, sigma, rng):
        # isotropic in the Riemannian metric, not in Minkowski ambient coordinates
        if sigma < 0:
            raise DomainError("sigma must be nonnegative")
        return self.from_frame(x, sigma * rng.standard_normal(self.dim))

    def base_point(self):
        p = np.zeros(self.dim + 1)
        p[0] = 1.0
        return p

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        theta = np.sqrt(np.maximum(minkowski(v, v), 0.0))[..., None]
        y = np.cosh(theta) * x + _sinhc(theta) * v
        return y / np.sqrt(-minkowski(y, y))[..., None]

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        w = y + minkowski(x, y)[..., None] * x
        nw = np.sqrt(np.maximum(minkowski(w, w), 0.0))[..., None]
        theta = np.arcsinh(nw)
        scale = np.where(nw > 0, theta / np.where(nw > 0, nw, 1.0), 1.0)
        return scale * w

    def dist(self, x, y):
        diff = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        chord = np.sqrt(np.maximum(minkowski(diff, diff), 0.0))
        return 2.0 * np.arcsinh(chord / 2.0)

    def curvature(self, x, u, v, w):
        u, v, w = (np.asarray(a, dtype=float) for a in (u, v, w))
        return -(minkowski(v, w) * u - minkowski(u, w) * v)

    def transport(self, x, y, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        u = self.log(x, y)
        theta = math.sqrt(max(minkowski(u, u), 0.0))
        if theta == 0.0:
            return v.copy()
        e = u / theta
        a = float(minkowski(e, v))
        out = v + a * ((math.cosh(theta) - 1.0) * e + math.sinh(theta) * x)
        return self.project(y, out)


# ---------------------------------------------------------------------------
# SPD matrices with the affine-invariant metric
# ---------------------------------------------------------------------------


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def sym_fun(a, fn):
    """Apply a scalar function to a (batch of) symmetric matrices via eigh."""
    w, q = np.linalg.eigh(_sym(np.asarray(a, dtype=float)))
    return (q * fn(w)[..., None, :]) @ np.swapaxes(q, -1, -2)


class SPD(Manifold):
    name = "spd"
    is_symmetric_space = True
    constant_curvature = None
    curvature_parallel = True

    def __init__(self, n=2):
        if n < 1:
            raise DomainError("matrix size must be >= 1")
        self.n = int(n)
        self.dim = self.n * (self.n + 1) // 2
        if self.n == 1:
            self.constant_curvature = 0.0

    def spec(self):
        return f"spd:n={self.n}"

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-2:] != (self.n, self.n):
            raise DomainError(f"expected {self.n}x{self.n} matrices")
        asym = np.max(np.abs(x - np.swapaxes(x, -1, -2)))
        if asym > POINT_TOL * max(1.0, float(np.max(np.abs(x)))):
            raise DomainError(f"matrix not symmetric ({asym:.3e})")
        if np.min(np.linalg.eigvalsh(_sym(x))) <= 0:
            raise DomainError("matrix not positive definite")
        return x

    def check_tangent(self, x, v):
        v = np.asarray(v, dtype=float)
        asym = np.max(np.abs(v - np.swapaxes(v, -1, -2)))
        if asym > POINT_TOL * max(1.0, float(np.max(np.abs(v)))):
            raise DomainError(f"tangent matrix not symmetric ({asym:.3e})")
        return v

    def _sqrt_pair(self, x):
        w, q = np.linalg.eigh(_sym(np.asarray(x, dtype=float)))
        s = (q * np.sqrt(w)) @ q.T
        si = (q / np.sqrt(w)) @ q.T
        return s, si

    def inner(self, x, u, v):
        xi = np.linalg.inv(np.asarray(x, dtype=float))
        return np.trace(xi @ np.asarray(u) @ xi @ np.asarray(v), axis1=-2, axis2=-1)

    def project(self, x, v):
        return _sym(np.asarray(v, dtype=float))

    def frame(self, x):
        s, _ = self._sqrt_pair(x)
        basis = []
        for i in range(self.n):
            for j in range(i, self.n):
                e = np.zeros((self.n, self.n))
                if i == j:
                    e[i, i] = 1.0
                else:
                    e[i, j] = e[j, i] = 1.0 / math.sqrt(2.0)
                basis.append(s @ e @ s)
        return np.array(basis)

    def tangent_gaussian(self, x, sigma, rng):
        if sigma < 0:
            raise DomainError("sigma must be nonnegative")
        return self.from_frame(x, sigma * rng.standard_normal(self.dim))

    def base_point(self):
        return np.eye(self.n)

    def exp(self, x, v):
        s, si = self._sqrt_pair(x)
        return _sym(s @ sym_fun(si @ np.asarray(v, dtype=float) @ si, np.exp) @ s)

    def log(self, x, y):
        s, si = self._sqrt_pair(x)
        return _sym(s @ sym_fun(si @ np.asarray(y, dtype=float) @ si, np.log) @ s)

    def dist(self, x, y):
        _, si = self._sqrt_pair(x)
        w = np.linalg.eigvalsh(_sym(si @ np.asarray(y, dtype=float) @ si))
        return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))

    def curvature(self, x, u, v, w):
        s, si = self._sqrt_pair(x)
        a, b, c = (si @ np.asarray(m, dtype=float) @ si for m in (u, v, w))
        ab = a @ b - b @ a
        r = -0.25 * (ab @ c - c @ ab)
        return s @ r @ s

    def transport(self, x, y, v):
        s, si = self._sqrt_pair(x)
        mid = sym_fun(si @ np.asarray(y, dtype=float) @ si, np.sqrt)
        e = s @ mid @ si
        return _sym(e @ np.asarray(v, dtype=float) @ e.T)


# ---------------------------------------------------------------------------
# Graph surface (x, y) -> (x, y, f(x, y)) with chart coordinates
# ---------------------------------------------------------------------------

SURFACE_PRESETS = {
    "paraboloid": "x**2 + y**2",
    "saddle": "x**2 - y**2",
    "monkey": "x**3 - 3*x*y**2",
    "bump": "exp(-(x**2 + 2*y**2)) / 2 + x*y/4",
    "plane": "x/2 - y/3",
}


@dataclass(frozen=True)
class _HeightFunction:
    expr: str
    f: Callable
    grad: Callable
    hess: Callable
    dhess: Callable
    affine: bool


def _compile_height(expr):
    import sympy as sp

    x, y = sp.symbols("x y", real=True)
    try:
        f = sp.sympify(expr, locals={"x": x, "y": y})
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise DomainError(f"cannot parse height function {expr!r}") from exc
    extra = f.free_symbols - {x, y}
    if extra:
        raise DomainError(f"height function has unknown symbols {sorted(map(str, extra))}")
    g = [sp.diff(f, x), sp.diff(f, y)]
    h = [[sp.diff(gi, v) for v in (x, y)] for gi in g]
    dh = [[[sp.diff(hij, v) for v in (x, y)] for hij in row] for row in h]
    affine = all(sp.simplify(hij) == 0 for row in h for hij in row)
    lam = lambda e: sp.lambdify((x, y), e, "numpy")  # noqa: E731
    fl, gl, hl, dhl = lam(f), lam(g), lam(h), lam(dh)
    return _HeightFunction(
        expr=str(f),
        f=lambda p: float(fl(p[0], p[1])),
        grad=lambda p: np.array(gl(p[0], p[1]), dtype=float),
        hess=lambda p: np.array(hl(p[0], p[1]), dtype=float),
        dhess=lambda p: np.array(dhl(p[0], p[1]), dtype=float),
        affine=affine,
    )


class NumericSurface(Manifold):
    """Graph surface with geodesics computed by ODE integration.

    Points are chart coordinates (x, y); tangent vectors are chart components.
    ``convexity_radius`` bounds the ambient chord length accepted by ``log``.
    """

    name = "surface"
    dim = 2
    batched = False

    def __init__(self, f="paraboloid", convexity_radius=1.0, rtol=1e-10, atol=1e-12,
                 transport_rtol=1e-12, newton_tol=1e-12, max_newton=30):
        self.label = f
        self.height = _compile_height(SURFACE_PRESETS.get(f, f))
        self.convexity_radius = float(convexity_radius)
        self.rtol = rtol
        self.atol = atol
        self.transport_rtol = transport_rtol
        self.newton_tol = newton_tol
        self.max_newton = max_newton
        self.is_symmetric_space = self.height.affine
        self.curvature_parallel = self.height.affine
        self.constant_curvature = 0.0 if self.height.affine else None

    def spec(self):
        return f"surface:f={self.label}"

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 2 or not np.all(np.isfinite(x)):
            raise DomainError("expected finite chart points (x, y)")
        return x

    def check_tangent(self, x, v):
        return self.check_point(v)

    def embed(self, p):
        p = np.asarray(p, dtype=float)
        return np.array([p[0], p[1], self.height.f(p)])

    def metric(self, p):
        g = self.height.grad(p)
        return np.eye(2) + np.outer(g, g)

    def inner(self, x, u, v):
        return np.asarray(u) @ self.metric(x) @ np.asarray(v)

    def project(self, x, v):
        return np.asarray(v, dtype=float)

    def frame(self, x):
        g = self.metric(x)
        e1 = np.array([1.0, 0.0]) / math.sqrt(g[0, 0])
        e2 = np.array([0.0, 1.0])
        e2 = e2 - (e1 @ g @ e2) * e1
        e2 = e2 / math.sqrt(e2 @ g @ e2)
        return np.array([e1, e2])

    def tangent_gaussian(self, x, sigma, rng):
        if sigma < 0:
            raise DomainError("sigma must be nonnegative")
        xi = sigma * rng.standard_normal(3)
        grad = self.height.grad(x)
        jac = np.array([[1.0, 0.0], [0.0, 1.0], [grad[0], grad[1]]])
        return np.linalg.solve(jac.T @ jac, jac.T @ xi)

    def base_point(self):
        return np.zeros(2)

    def gauss_curvature(self, p):
        g = self.height.grad(p)
        h = self.height.hess(p)
        return float((h[0, 0] * h[1, 1] - h[0, 1] ** 2) / (1.0 + g @ g) ** 2)

    def curvature(self, x, u, v, w):
        k = self.gauss_curvature(x)
        u, v, w = (np.asarray(a, dtype=float) for a in (u, v, w))
        return k * (self.inner(x, v, w) * u - self.inner(x, u, w) * v)

    # -- ODE machinery --------------------------------------------------------
    def _accel(self, p, v):
        g = self.height.grad(p)
        h = self.height.hess(p)
        return -g * (v @ h @ v) / (1.0 + g @ g)

    def _geodesic_rhs(self, t, s):
        p, v = s[:2], s[2:4]
        return np.concatenate([v, self._accel(p, v)])

    def _variational_rhs(self, t, s):
        # state: p, v, Jp (2x2), Jv (2x2); J = d(p, v)/d(v0)
        p, v = s[:2], s[2:4]
        jp = s[4:8].reshape(2, 2)
        jv = s[8:12].reshape(2, 2)
        g = self.height.grad(p)
        h = self.height.hess(p)
        dh = self.height.dhess(p)  # dh[i, j, k] = d_k h_ij
        den = 1.0 + g @ g
        q = v @ h @ v
        da_dv = -np.outer(g, 2.0 * h @ v) / den
        da_dp = np.empty((2, 2))
        for k in range(2):
            dq = v @ dh[:, :, k] @ v
            dden = 2.0 * g @ h[:, k]
            da_dp[:, k] = -h[:, k] * q / den - g * dq / den + g * q * dden / den**2
        acc = -g * q / den
        return np.concatenate([v, acc, jv.ravel(), (da_dp @ jp + da_dv @ jv).ravel()])

    def _integrate(self, rhs, s0, rtol):
        sol = solve_ivp(rhs, (0.0, 1.0), s0, method="DOP853", rtol=rtol, atol=self.atol)
        if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
            raise IntegrationError(f"geodesic integration failed after {sol.t.size} steps: {sol.message}")
        return sol.y[:, -1]

    def exp(self, x, v):
        x = self.check_point(x)
        v = np.asarray(v, dtype=float)
        if not np.any(v):
            return x.copy()
        return self._integrate(self._geodesic_rhs, np.concatenate([x, v]), self.rtol)[:2]

    def _shoot(self, x, v):
        s0 = np.concatenate([x, v, np.zeros(4), np.eye(2).ravel()])
        s = self._integrate(self._variational_rhs, s0, self.rtol)
        return s[:2], s[4:8].reshape(2, 2)

    def _initial_guess(self, x, y):
        chord = self.embed(y) - self.embed(x)
        grad = self.height.grad(x)
        jac = np.array([[1.0, 0.0], [0.0, 1.0], [grad[0], grad[1]]])
        return np.linalg.solve(jac.T @ jac, jac.T @ chord)

    def log(self, x, y):
        x = self.check_point(x)
        y = self.check_point(y)
        if np.array_equal(x, y):
            return np.zeros(2)
        chord = np.linalg.norm(self.embed(y) - self.embed(x))
        if chord > self.convexity_radius:
            raise DomainError(f"chord {chord:.3g} exceeds configured convexity radius {self.convexity_radius:g}")
        v = self._initial_guess(x, y)
        scale = max(np.linalg.norm(y - x), 1e-300)
        for _ in range(self.max_newton):
            end, jac = self._shoot(x, v)
            r = end - y
            if np.linalg.norm(r) <= self.newton_tol * max(1.0, scale):
                return v
            v = v - np.linalg.solve(jac, r)
        end, _ = self._shoot(x, v)
        res = np.linalg.norm(end - y)
        if res <= 1e3 * self.newton_tol * max(1.0, scale):
            return v
        raise BVPError(f"shooting did not converge in {self.max_newton} Newton steps (residual {res:.3e})")

    def _transport_rhs(self, t, s):
        p, v, w = s[:2], s[2:4], s[4:6]
        g = self.height.grad(p)
        h = self.height.hess(p)
        den = 1.0 + g @ g
        return np.concatenate([v, -g * (v @ h @ v) / den, -g * (v @ h @ w) / den])

    def transport(self, x, y, v):
        x = self.check_point(x)
        v = np.asarray(v, dtype=float)
        u = self.log(x, y)
        if not np.any(u):
            return v.copy()
        s = self._integrate(self._transport_rhs, np.concatenate([x, u, v]), self.transport_rtol)
        return s[4:6]


# ---------------------------------------------------------------------------
# string specs
# ---------------------------------------------------------------------------

_SPEC_RE = re.compile(r"^\s*(?P<kind>[a-z]+)\s*(?::(?P<args>.*))?$")


def parse_manifold(spec: str) -> Manifold:
    """Build a manifold from strings such as ``"sphere:d=2,r=1"`` or ``"surface:f=saddle"``."""
    if not isinstance(spec, str) or not spec.strip():
        raise DomainError("empty manifold spec")
    m = _SPEC_RE.match(spec)
    if m is None:
        raise DomainError(f"malformed manifold spec {spec!r}")
    kind = m.group("kind")
    args = {}
    raw = m.group("args") or ""
    if kind == "surface":
        # the height expression may contain commas; only split off known keys
        for part in re.split(r",(?=\s*(?:f|radius)\s*=)", raw) if raw else []:
            key, _, val = part.partition("=")
            args[key.strip()] = val.strip()
    else:
        for part in filter(None, (p.strip() for p in raw.split(","))):
            key, sep, val = part.partition("=")
            if not sep:
                raise DomainError(f"malformed manifold argument {part!r}")
            args[key.strip()] = val.strip()
    try:
        if kind == "euclidean":
            return Euclidean(int(args.pop("d", 2)), **_no_extra(args))
        if kind == "sphere":
            return Sphere(int(args.pop("d", 2)), float(args.pop("r", 1.0)), **_no_extra(args))
        if kind == "hyperbolic":
            return Hyperbolic(int(args.pop("d", 2)), **_no_extra(args))
        if kind == "spd":
            return SPD(int(args.pop("n", 2)), **_no_extra(args))
        if kind == "surface":
            f = args.pop("f", "paraboloid")
            radius = float(args.pop("radius", 1.0))
            return NumericSurface(f, convexity_radius=radius, **_no_extra(args))
    except (TypeError, ValueError) as exc:
        raise DomainError(f"bad manifold spec {spec!r}: {exc}") from exc
    raise DomainError(f"unknown manifold kind {kind!r}")


def _no_extra(args):
    if args:
        raise DomainError(f"unexpected manifold arguments {sorted(args)}")
    return {}
