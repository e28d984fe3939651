"""Oriented varifolds of closed polygonal curves.

A closed curve with vertices v_0..v_{N-1} is represented by one quadrature
node per edge: midpoint x_i, unit tangent t_i and length l_i. With a
separable kernel rho(|x - y|^2) gamma(u . v) the varifold inner product is

    <mu_c1, mu_c2> = sum_ij rho(|x_i - y_j|^2) gamma(t_i . s_j) l_i m_j.

Deformations h are per-vertex vectors; a vertex perturbation moves
midpoints by (h_i + h_{i+1}) / 2 and edge vectors by h_{i+1} - h_i, which is
all the analytic first and second variations below need.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegeneracyError, DomainError, NumericError


@dataclass
class DiscreteCurve:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise DomainError("vertices must be an (N, 2) or (N, 3) array")
        if len(v) < 2:
            raise DomainError("a closed curve needs at least two vertices")
        self.vertices = v
        e = self.edges
        self.lengths = np.linalg.norm(e, axis=1)
        if np.any(self.lengths <= 0):
            raise DegeneracyError("curve has a zero-length edge")
        self.tangents = e / self.lengths[:, None]
        self.midpoints = 0.5 * (v + np.roll(v, -1, axis=0))

    @property
    def edges(self):
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def dim(self):
        return self.vertices.shape[1]

    def __len__(self):
        return len(self.vertices)

    @classmethod
    def from_function(cls, f: Callable, n, phase=0.0):
        """Sample a 2*pi-periodic parametrization f(theta) -> (dim, n) at n uniform parameters."""
        th = phase + 2.0 * np.pi * np.arange(n) / n
        return cls(np.asarray(f(th), dtype=float).T)

    def transformed(self, rot=None, shift=None):
        v = self.vertices
        if rot is not None:
            v = v @ np.asarray(rot).T
        if shift is not None:
            v = v + np.asarray(shift)
        return DiscreteCurve(v)

    def reversed(self):
        return DiscreteCurve(self.vertices[::-1])

    def perturbed(self, h, eps):
        return DiscreteCurve(self.vertices + eps * np.asarray(h))

    def total_length(self):
        return float(self.lengths.sum())


def fourier_resample(c: DiscreteCurve, n, reparam: Callable | None = None):
    """Trigonometric interpolant of the vertices evaluated at n new parameters.

    ``reparam`` maps uniform parameters in [0, 2 pi) to new ones (an
    orientation-preserving circle diffeomorphism).
    """
    v = c.vertices
    N = len(v)
    coef = np.fft.rfft(v, axis=0) / N
    th = 2.0 * np.pi * np.arange(n) / n
    if reparam is not None:
        th = reparam(th)
    k = np.arange(coef.shape[0])
    w = np.full(len(k), 2.0)
    w[0] = 1.0
    if N % 2 == 0:
        w[-1] = 1.0  # Nyquist term taken as a cosine
    basis = np.exp(1j * np.multiply.outer(th, k)) * w
    out = np.real(basis @ coef)
    return DiscreteCurve(out)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

RHO_KINDS = ("gaussian", "cauchy")
GAMMA_KINDS = ("linear", "binet", "constant")


@dataclass(frozen=True)
class SeparableKernel:
    """rho(|x - y|^2) * gamma(u . v) with closed-form derivatives."""

    rho_kind: str = "gaussian"
    sigma: float = 1.0
    gamma_kind: str = "linear"

    def __post_init__(self):
        if self.rho_kind not in RHO_KINDS:
            raise DomainError(f"rho kind must be one of {RHO_KINDS}")
        if self.gamma_kind not in GAMMA_KINDS:
            raise DomainError(f"gamma kind must be one of {GAMMA_KINDS}")
        if self.sigma <= 0:
            raise DomainError("sigma must be positive")

    def rho(self, s, order=0):
        s = np.asarray(s, dtype=float)
        a = 1.0 / self.sigma**2
        if self.rho_kind == "gaussian":
            return (-a) ** order * np.exp(-a * s)
        q = 1.0 / (1.0 + a * s)
        return [q, -a * q**2, 2.0 * a * a * q**3][order]

    def gamma(self, z, order=0):
        z = np.asarray(z, dtype=float)
        if self.gamma_kind == "linear":
            return [z, np.ones_like(z), np.zeros_like(z)][order]
        if self.gamma_kind == "binet":
            return [z * z, 2.0 * z, np.full_like(z, 2.0)][order]
        return [np.ones_like(z), np.zeros_like(z), np.zeros_like(z)][order]

    def __call__(self, x, u, y, v):
        d = np.asarray(x) - np.asarray(y)
        return self.rho(np.sum(d * d, axis=-1)) * self.gamma(np.sum(np.asarray(u) * np.asarray(v), axis=-1))


def _pair_terms(c1: DiscreteCurve, c2: DiscreteCurve, k: SeparableKernel):
    r = c1.midpoints[:, None, :] - c2.midpoints[None, :, :]
    s = np.sum(r * r, axis=-1)
    z = np.clip(c1.tangents @ c2.tangents.T, -1.0, 1.0)
    return r, s, z


def varifold_inner(c1: DiscreteCurve, c2: DiscreteCurve, k: SeparableKernel):
    if c1.dim != c2.dim:
        raise DomainError("curves live in different dimensions")
    _, s, z = _pair_terms(c1, c2, k)
    w = np.outer(c1.lengths, c2.lengths)
    return float(np.sum(k.rho(s) * k.gamma(z) * w))


def _clamped_sqrt(val, scale, what):
    tol = 1e-12 * max(1.0, scale)
    if val < -tol:
        raise NumericError(f"{what} is negative ({val:.3e})")
    return math.sqrt(max(val, 0.0))


def chordal_distance(c1: DiscreteCurve, c2: DiscreteCurve, k: SeparableKernel):
    a = varifold_inner(c1, c1, k)
    b = varifold_inner(c1, c2, k)
    c = varifold_inner(c2, c2, k)
    return _clamped_sqrt(a - 2.0 * b + c, abs(a) + abs(c), "squared chordal distance")


def gram(curves, k: SeparableKernel):
    n = len(curves)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = varifold_inner(curves[i], curves[j], k)
    return g


# ---------------------------------------------------------------------------
# first variation
# ---------------------------------------------------------------------------


@dataclass
class TestFunction:
    """omega(x, u) on R^n x R^n with derivatives, vectorized over leading axes.

    dxu returns the matrix d/du_a d/dx_b omega; duu the Hessian in u.
    """

    value: Callable
    dx: Callable
    du: Callable
    dxu: Callable | None = None
    duu: Callable | None = None

    @classmethod
    def kernel_section(cls, k: SeparableKernel, a, b):
        """omega(x, u) = rho(|x - a|^2) gamma(u . b), the kernel centred at (a, b)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)

        def parts(x, u):
            r = np.asarray(x) - a
            s = np.sum(r * r, axis=-1)
            z = np.asarray(u) @ b
            return r, s, z

        def value(x, u):
            _, s, z = parts(x, u)
            return k.rho(s) * k.gamma(z)

        def dx(x, u):
            r, s, z = parts(x, u)
            return (2.0 * k.rho(s, 1) * k.gamma(z))[..., None] * r

        def du(x, u):
            _, s, z = parts(x, u)
            return (k.rho(s) * k.gamma(z, 1))[..., None] * b

        def dxu(x, u):
            r, s, z = parts(x, u)
            return (2.0 * k.rho(s, 1) * k.gamma(z, 1))[..., None, None] * np.einsum("a,...b->...ab", b, r)

        def duu(x, u):
            _, s, z = parts(x, u)
            return (k.rho(s) * k.gamma(z, 2))[..., None, None] * np.outer(b, b)

        return cls(value, dx, du, dxu, duu)


def varifold_action(c: DiscreteCurve, omega: TestFunction):
    """mu_c(omega) by edge-midpoint quadrature."""
    return float(np.sum(omega.value(c.midpoints, c.tangents) * c.lengths))


def _edge_variations(c: DiscreteCurve, h):
    h = np.asarray(h, dtype=float)
    if h.shape != c.vertices.shape:
        raise DomainError("deformation field must have one vector per vertex")
    hn = np.roll(h, -1, axis=0)
    return 0.5 * (h + hn), hn - h


def first_variation_pairing(c: DiscreteCurve, h, omega: TestFunction):
    """(d/d eps) mu_{c + eps h}(omega) at eps = 0, differentiating the quadrature exactly."""
    a, b = _edge_variations(c, h)
    t, l = c.tangents, c.lengths
    tb = np.sum(t * b, axis=1)
    dt = (b - tb[:, None] * t) / l[:, None]
    x = c.midpoints
    val = (np.sum(omega.dx(x, t) * a, axis=1) + np.sum(omega.du(x, t) * dt, axis=1)) * l
    val += omega.value(x, t) * tb
    return float(np.sum(val))


def discrete_curvature(c: DiscreteCurve):
    """Curvature vectors at vertices from the circle through each vertex triple."""
    v = c.vertices
    p, q = np.roll(v, 1, axis=0), np.roll(v, -1, axis=0)
    a, b = v - p, q - v
    chord = q - p
    la, lb, lc = (np.linalg.norm(w, axis=1) for w in (a, b, chord))
    # H = 2 (a x b) x chord / (|a||b||chord|)... written without cross products
    ab = np.sum(a * b, axis=1)
    # component of b - a orthogonal to the chord, scaled so |H| = 1/R
    d = b / lb[:, None] - a / la[:, None]
    tc = chord / lc[:, None]
    perp = d - np.sum(d * tc, axis=1)[:, None] * tc
    npp = np.linalg.norm(perp, axis=1)
    sin_turn = np.sqrt(np.maximum(0.0, 1.0 - (ab / (la * lb)) ** 2))
    kappa = 2.0 * sin_turn / lc
    with np.errstate(invalid="ignore", divide="ignore"):
        H = np.where(npp[:, None] > 0, perp / np.where(npp > 0, npp, 1.0)[:, None], 0.0) * kappa[:, None]
    return H, tc


def first_variation_curvature_form(c: DiscreteCurve, h, omega: TestFunction):
    """Normal-projection form of the first variation evaluated at the vertices.

    Integrand [d_x w - (d_xu w) t - (d_uu w) H - (w - d_u w . t) H] . h_perp
    with discrete curvature H, vertex tangent t and dual lengths as weights.
    Agrees with the analytic pairing only up to discretization error.
    """
    if omega.dxu is None or omega.duu is None:
        raise DomainError("test function needs second derivatives")
    H, t = discrete_curvature(c)
    v = c.vertices
    h = np.asarray(h, dtype=float)
    hp = h - np.sum(h * t, axis=1)[:, None] * t
    ds = 0.5 * (c.lengths + np.roll(c.lengths, 1))
    w = omega.value(v, t)
    g = omega.dx(v, t)
    g -= np.einsum("...ab,...b->...a", omega.dxu(v, t), t)
    g -= np.einsum("...ab,...b->...a", omega.duu(v, t), H)
    g -= (w - np.sum(omega.du(v, t) * t, axis=1))[:, None] * H
    return float(np.sum(np.sum(g * hp, axis=1) * ds))


# ---------------------------------------------------------------------------
# induced metric
# ---------------------------------------------------------------------------


def _edge_pair_hessian_form(c: DiscreteCurve, a, b, k: SeparableKernel):
    """sum_ij [a_i; b_i]^T (d^2 f / d(x_i, e_i) d(y_j, f_j)) [a_j; b_j] for
    f = rho(|x - y|^2) gamma(e^ . f^) |e| |f|."""
    r, s, z = _pair_terms(c, c, k)
    t, l = c.tangents, c.lengths
    rho0, rho1, rho2 = k.rho(s), k.rho(s, 1), k.rho(s, 2)
    g0, g1, g2 = k.gamma(z), k.gamma(z, 1), k.gamma(z, 2)
    L = np.outer(l, l)
    g = g0 * L

    ra_i = np.einsum("ijd,id->ij", r, a)
    ra_j = np.einsum("ijd,jd->ij", r, a)
    aa = a @ a.T
    term_xy = g * (-2.0 * rho1 * aa - 4.0 * rho2 * ra_i * ra_j)

    # d_e g . b_i  with  d_e g = |f| [g1 (f^ - z e^) + g0 e^]
    tb = t @ b.T  # [i, j] = t_i . b_j
    bt = b @ t.T  # [i, j] = b_i . t_j
    tib = np.sum(t * b, axis=1)
    de_g_bi = l[None, :] * (g1 * (bt - z * tib[:, None]) + g0 * tib[:, None])
    df_g_bj = l[:, None] * (g1 * (tb - z * tib[None, :]) + g0 * tib[None, :])
    term_xf = 2.0 * rho1 * ra_i * df_g_bj
    term_ey = -2.0 * rho1 * ra_j * de_g_bi

    # d_e d_f g = g1 I + (g0 - z g1) e^ f^T + g2 (f^ - z e^)(e^ - z f^)^T
    bb = b @ b.T
    m = g1 * bb + (g0 - z * g1) * np.outer(tib, tib)
    m += g2 * (bt - z * tib[:, None]) * (tb - z * tib[None, :])
    term_ef = rho0 * m
    return float(np.sum(term_xy + term_xf + term_ey + term_ef))


def induced_norm(c: DiscreteCurve, h, k: SeparableKernel):
    """Squared induced norm d_eps d_eps' <mu_{c + eps h}, mu_{c + eps' h}> at 0."""
    a, b = _edge_variations(c, h)
    val = _edge_pair_hessian_form(c, a, b, k)
    if val < -1e-12 * max(1.0, varifold_inner(c, c, k)) * max(1.0, float(np.sum(np.asarray(h) ** 2))):
        raise NumericError(f"squared induced norm is negative ({val:.3e})")
    return max(val, 0.0)


def induced_norm_fd(c: DiscreteCurve, h, k: SeparableKernel, delta=1e-3):
    """Central second-difference estimate of the mixed derivative, Richardson-extrapolated."""

    def mixed(d):
        cp, cm = c.perturbed(h, d), c.perturbed(h, -d)
        return (varifold_inner(cp, cp, k) - 2.0 * varifold_inner(cp, cm, k) + varifold_inner(cm, cm, k)) / (4 * d * d)

    return (4.0 * mixed(delta / 2) - mixed(delta)) / 3.0


# ---------------------------------------------------------------------------
# invariance checks
# ---------------------------------------------------------------------------


def random_rotation(dim, rng):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


@dataclass
class InvarianceReport:
    translation: float
    rotation: float
    resampling: float
    reparametrization: float
    norm_translation: float
    norm_rotation: float


def _rel(a, b):
    return abs(a - b) / max(abs(a), 1e-300)


def invariance_suite(c: DiscreteCurve, k: SeparableKernel, rng=None, h=None, reference=None, trials=5,
                     resample_to=None):
    """Max relative deviations of inner products and induced norms under
    rigid motions (with h rotated along) and under vertex resampling.

    Resampling uses the trigonometric interpolant of the vertices, so it is
    meaningful for curves sampled from a smooth closed parametrization.
    """
    rng = np.random.default_rng(rng)
    n = len(c)
    if reference is None:
        centre = c.vertices.mean(axis=0)
        reference = DiscreteCurve(centre + 0.8 * (c.vertices - centre) + 0.3 * np.eye(c.dim)[0])
    if h is None:
        th = 2.0 * np.pi * np.arange(n) / n
        h = np.stack([np.cos(th + j) * 0.3 + np.sin(2 * th - j) * 0.2 for j in range(c.dim)], axis=1)
    h = np.asarray(h, dtype=float)
    base_ip = varifold_inner(c, reference, k)
    base_nrm = induced_norm(c, h, k)
    dev_t = dev_r = nt = nr = 0.0
    for _ in range(trials):
        shift = rng.normal(scale=3.0, size=c.dim)
        rot = random_rotation(c.dim, rng)
        ct, rt = c.transformed(shift=shift), reference.transformed(shift=shift)
        dev_t = max(dev_t, _rel(base_ip, varifold_inner(ct, rt, k)))
        nt = max(nt, _rel(base_nrm, induced_norm(ct, h, k)))
        cr, rr = c.transformed(rot=rot), reference.transformed(rot=rot)
        dev_r = max(dev_r, _rel(base_ip, varifold_inner(cr, rr, k)))
        nr = max(nr, _rel(base_nrm, induced_norm(cr, h @ rot.T, k)))
    m = resample_to or 4 * n
    dev_s = _rel(base_ip, varifold_inner(fourier_resample(c, m), reference, k))
    warp = lambda th: th + 0.2 * np.sin(th)  # noqa: E731
    dev_p = _rel(base_ip, varifold_inner(fourier_resample(c, m, warp), reference, k))
    return InvarianceReport(dev_t, dev_r, dev_s, dev_p, nt, nr)


def tangential_field(c: DiscreteCurve, profile: Callable | None = None):
    """phi(theta_i) times the vertex tangent (central difference), a reparametrization direction."""
    v = c.vertices
    tv = np.roll(v, -1, axis=0) - np.roll(v, 1, axis=0)
    tv = tv / np.linalg.norm(tv, axis=1)[:, None]
    th = 2.0 * np.pi * np.arange(len(v)) / len(v)
    phi = np.ones_like(th) if profile is None else profile(th)
    return phi[:, None] * tv


def ellipse(n, a=1.0, b=0.6, centre=(0.0, 0.0)):
    th = 2.0 * np.pi * np.arange(n) / n
    return DiscreteCurve(np.stack([centre[0] + a * np.cos(th), centre[1] + b * np.sin(th)], axis=1))


def load_curve_csv(path):
    """Vertex coordinates, one row per vertex; an optional header row is skipped."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    skip = 0 if re.match(r"\s*[-+0-9.]", first) else 1
    return DiscreteCurve(np.loadtxt(path, delimiter=",", ndmin=2, skiprows=skip))


def save_curve_csv(path, c: DiscreteCurve):
    cols = ["x", "y", "z"][: c.dim]
    np.savetxt(path, c.vertices, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
