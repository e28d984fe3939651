"""One-dimensional Euler-Arnold equations on the circle R/Z.

omega = L u evolves by omega_t = -u omega_x - 2 u_x omega. The solver is
pseudospectral (2/3 dealiasing, classical RK4) and carries Lagrangian
tracers eta(t, x) with eta_t = u(eta) and (eta_x)_t = u_x(eta) eta_x.
Closed-form solar models are provided for Hunter-Saxton and a
self-consistency check for the Wunsch equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, PostBreakdownError

BREAKDOWN_ETA_X = 1e-6
TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# grids, fields, operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleGrid:
    n: int

    def __post_init__(self):
        n = self.n
        if n < 16 or n & (n - 1):
            raise ConfigurationError(f"grid size must be a power of two >= 16, got {n}")

    @property
    def x(self):
        return np.arange(self.n) / self.n

    @property
    def modes(self):
        """Nonnegative integer modes of the real FFT."""
        return np.arange(self.n // 2 + 1)

    @property
    def wavenumbers(self):
        return TWO_PI * self.modes

    def dealias_mask(self):
        return self.modes < self.n / 3.0


@dataclass
class VelocityField:
    grid: CircleGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise DomainError("field values must match the grid")

    @property
    def mean(self):
        return float(self.values.mean())

    def require_mean_zero(self, tol=1e-12):
        scale = max(1.0, float(np.max(np.abs(self.values))))
        if abs(self.mean) > tol * scale:
            raise DomainError(f"velocity field must have zero mean (mean = {self.mean:.3e})")
        return self

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(grid.x))


class MultiplierOperator:
    """Real Fourier multiplier L acting on functions of x in R/Z."""

    def __init__(self, kind="hunter_saxton", symbol: Callable | None = None, mu=1.0):
        self.kind = kind
        self.mu = float(mu)
        if kind == "hunter_saxton":
            self._symbol = lambda k: (TWO_PI * k) ** 2
        elif kind == "wunsch":
            # H u_x with H = -i sign(k): (-i sign k)(2 pi i k) = 2 pi |k|
            self._symbol = lambda k: TWO_PI * np.abs(k)
        elif kind == "mu_hs":
            self._symbol = lambda k: np.where(k == 0, self.mu, (TWO_PI * k) ** 2)
        elif kind == "custom":
            if symbol is None:
                raise ConfigurationError("custom operator needs a symbol")
            self._symbol = symbol
            ks = np.arange(1, 65)
            if np.max(np.abs(np.asarray(symbol(-ks)) - np.conj(symbol(ks)))) > 1e-12 * (1 + np.max(np.abs(symbol(ks)))):
                raise ConfigurationError("symbol must satisfy symbol(-k) = conj(symbol(k))")
        else:
            raise ConfigurationError(f"unknown operator kind {kind!r}")

    def symbol(self, k):
        return np.asarray(self._symbol(np.asarray(k)), dtype=complex if self.kind == "custom" else float)

    def inverse_symbol(self, k):
        s = self.symbol(k)
        out = np.zeros_like(s)
        nz = s != 0
        out[nz] = 1.0 / s[nz]
        return out

    def __repr__(self):
        return f"MultiplierOperator({self.kind!r})"


def apply_L(op: MultiplierOperator, u: VelocityField):
    uh = np.fft.rfft(u.values)
    return np.fft.irfft(op.symbol(u.grid.modes) * uh, u.grid.n)


def spectral_derivative(values, order=1):
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    kw = TWO_PI * np.arange(n // 2 + 1)
    fac = (1j * kw) ** order
    if order % 2 == 1:
        fac[-1] = 0.0  # Nyquist mode of an odd derivative is not real
    return np.fft.irfft(fac * np.fft.rfft(values, axis=-1), n, axis=-1)


def spectral_antiderivative(values):
    """Mean-free antiderivative of the mean-free part of a periodic function."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    kw = TWO_PI * np.arange(n // 2 + 1)
    fh = np.fft.rfft(values, axis=-1)
    out = np.zeros_like(fh)
    out[..., 1:] = fh[..., 1:] / (1j * kw[1:])
    out[..., -1] = 0.0
    return np.fft.irfft(out, n, axis=-1)


def hilbert(values):
    """Periodic Hilbert transform, multiplier -i sign(k)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    fh = np.fft.rfft(values, axis=-1)
    fac = -1j * np.ones(n // 2 + 1)
    fac[0] = 0.0
    fac[-1] = 0.0
    return np.fft.irfft(fac * fh, n, axis=-1)


# ---------------------------------------------------------------------------
# evaluation of grid functions at arbitrary points
# ---------------------------------------------------------------------------


def trig_eval(fh, n, pts, mask=None):
    """Exact trigonometric interpolant (rfft coefficients ``fh``) at points."""
    pts = np.asarray(pts, dtype=float)
    kmax = n // 2
    w = np.full(kmax + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    coef = fh * w
    if mask is not None:
        keep = np.flatnonzero(mask)
        kmax = int(keep[-1])
        coef = coef[: kmax + 1] * mask[: kmax + 1]
    z = np.exp(2j * math.pi * pts)[:, None]
    powers = np.empty((len(pts), kmax + 1), dtype=complex)
    powers[:, 0] = 1.0
    powers[:, 1:] = z
    np.cumprod(powers, axis=1, out=powers)
    return (powers @ coef).real / n


class LagrangeInterpolator:
    """Periodic local Lagrange interpolation of even order on a uniform grid."""

    def __init__(self, n, order=12):
        if order % 2:
            raise ConfigurationError("interpolation order must be even")
        self.n = n
        self.order = order
        offs = np.arange(order)
        self.offsets = offs
        self.denoms = np.array([np.prod([j - m for m in offs if m != j]) for j in offs], dtype=float)

    def weights(self, pts):
        s = np.mod(np.asarray(pts, dtype=float), 1.0) * self.n
        base = np.floor(s).astype(int) - (self.order // 2 - 1)
        r = s - base
        p = self.order
        diffs = r[:, None] - self.offsets[None, :]
        wts = np.empty((len(r), p))
        for j in range(p):
            prod = np.ones(len(r))
            for m in range(p):
                if m != j:
                    prod *= diffs[:, m]
            wts[:, j] = prod / self.denoms[j]
        idx = np.mod(base[:, None] + self.offsets[None, :], self.n)
        return idx, wts

    def __call__(self, values, pts=None, stencil=None):
        idx, wts = stencil if stencil is not None else self.weights(pts)
        return np.sum(np.asarray(values)[idx] * wts, axis=1)


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------


@dataclass
class LagrangianFlow:
    grid: CircleGrid | None
    labels: np.ndarray
    times: np.ndarray
    eta: np.ndarray
    eta_x: np.ndarray


@dataclass
class EASolution:
    op: MultiplierOperator
    grid: CircleGrid
    labels: np.ndarray
    times: np.ndarray
    eta: np.ndarray
    eta_x: np.ndarray
    omega_eta: np.ndarray
    u_eta: np.ndarray
    omega0: np.ndarray
    status: str
    t_end: float
    dt: float
    snapshot_times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)
    final_u: np.ndarray | None = None
    mean_history: np.ndarray | None = None

    @property
    def flow(self):
        return LagrangianFlow(self.grid, self.labels, self.times, self.eta, self.eta_x)

    def momentum_error(self):
        """max |eta_x^2 omega(eta) - omega_0| over recorded times and labels."""
        return float(np.max(np.abs(self.eta_x**2 * self.omega_eta - self.omega0[None, :])))


def default_dt(op, grid, u0_values, cap=1e-3):
    """Advective step bound: fixed RK4 step from the initial field."""
    uh = np.fft.rfft(u0_values)
    umax = float(np.max(np.abs(u0_values)))
    uxmax = float(np.max(np.abs(np.fft.irfft(1j * grid.wavenumbers * uh, grid.n))))
    kmax = TWO_PI * grid.n / 3.0
    bounds = [cap]
    if umax > 0:
        bounds.append(1.0 / (kmax * umax))
    if uxmax > 0:
        bounds.append(0.25 / uxmax)
    return min(bounds)


class EulerArnoldSolver:
    def __init__(self, op: MultiplierOperator, grid: CircleGrid, labels=None, interp="auto", order=12):
        self.op = op
        self.grid = grid
        n = grid.n
        self.labels = grid.x.copy() if labels is None else np.asarray(labels, dtype=float)
        self.mask = grid.dealias_mask().astype(float)
        k = grid.modes
        self.kw = grid.wavenumbers
        self.sym = op.symbol(k)
        self.inv = op.inverse_symbol(k)
        if interp == "auto":
            interp = "spectral" if n * len(self.labels) <= (1 << 18) else "lagrange"
        if interp not in ("spectral", "lagrange"):
            raise ConfigurationError(f"unknown interpolation {interp!r}")
        self.interp = interp
        self._lag = LagrangeInterpolator(n, order) if interp == "lagrange" else None

    def u_hat(self, w_hat):
        return self.inv * w_hat

    def at(self, fh, pts, stencil=None):
        if self.interp == "spectral":
            return trig_eval(fh, self.grid.n, pts, self.mask)
        return self._lag(np.fft.irfft(fh * self.mask, self.grid.n), stencil=stencil)

    def _tracer_values(self, fhs, eta):
        if self.interp == "spectral":
            return [trig_eval(fh, self.grid.n, eta, self.mask) for fh in fhs]
        stencil = self._lag.weights(eta)
        return [self._lag(np.fft.irfft(fh * self.mask, self.grid.n), stencil=stencil) for fh in fhs]

    def rhs(self, w_hat, eta, ex, want_omega=False):
        n = self.grid.n
        uh = self.inv * w_hat * self.mask
        wh = w_hat * self.mask
        u = np.fft.irfft(uh, n)
        ux = np.fft.irfft(1j * self.kw * uh, n)
        w = np.fft.irfft(wh, n)
        wx = np.fft.irfft(1j * self.kw * wh, n)
        nl = np.fft.rfft(-u * wx - 2.0 * ux * w) * self.mask
        if self.interp == "spectral":
            ue = trig_eval(uh, n, eta)
            uxe = trig_eval(1j * self.kw * uh, n, eta)
            we = trig_eval(wh, n, eta) if want_omega else None
        else:
            st = self._lag.weights(eta)
            ue = self._lag(u, stencil=st)
            uxe = self._lag(ux, stencil=st)
            we = self._lag(w, stencil=st) if want_omega else None
        return nl, ue, uxe * ex, we, ue

    def solve(self, u0: VelocityField, t_max, dt=None, snapshot_every=0, record_fields=None,
              breakdown_threshold=BREAKDOWN_ETA_X, require_mean_zero=True):
        grid = self.grid
        if u0.grid.n != grid.n:
            raise DomainError("initial field lives on a different grid")
        if require_mean_zero:
            u0.require_mean_zero()
        if t_max < 0:
            raise DomainError("t_max must be nonnegative")
        dt0 = default_dt(self.op, grid, u0.values) if dt is None else float(dt)
        if dt0 <= 0:
            raise DomainError("dt must be positive")
        steps = int(math.ceil(t_max / dt0 - 1e-12)) if t_max > 0 else 0
        dt = t_max / steps if steps else dt0
        record_fields = record_fields or {}

        uh0 = np.fft.rfft(u0.values)
        if self.sym[0] == 0:
            uh0[0] = 0.0
        w_hat = self.sym * uh0
        eta = self.labels.copy()
        ex = np.ones_like(eta)
        omega0 = trig_eval(w_hat, grid.n, self.labels)

        times, etas, exs, omegas, us, means = [], [], [], [], [], []
        snap_t, snaps = [], []
        extra = {name: [] for name in record_fields}

        def record(t, w_hat, eta, ex, we, ue):
            times.append(t)
            etas.append(eta.copy())
            exs.append(ex.copy())
            omegas.append(we)
            us.append(ue)
            uh = self.inv * w_hat
            means.append(float(np.real(uh[0])) / grid.n)
            if record_fields:
                uhm = uh * self.mask
                for name, fn in record_fields.items():
                    extra[name].append(self._tracer_values([np.fft.rfft(fn(uhm, self))], eta)[0])

        status = "ok"
        t = 0.0
        for s in range(steps):
            k1 = self.rhs(w_hat, eta, ex, want_omega=True)
            record(t, w_hat, eta, ex, k1[3], k1[4])
            if snapshot_every and s % snapshot_every == 0:
                snap_t.append(t)
                snaps.append(np.fft.irfft(self.inv * w_hat, grid.n))
            k2 = self.rhs(w_hat + 0.5 * dt * k1[0], eta + 0.5 * dt * k1[1], ex + 0.5 * dt * k1[2])
            k3 = self.rhs(w_hat + 0.5 * dt * k2[0], eta + 0.5 * dt * k2[1], ex + 0.5 * dt * k2[2])
            k4 = self.rhs(w_hat + dt * k3[0], eta + dt * k3[1], ex + dt * k3[2])
            new_w = w_hat + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            new_eta = eta + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            new_ex = ex + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            if not (np.all(np.isfinite(new_w)) and np.all(np.isfinite(new_ex))):
                status = "blowup"
                break
            w_hat, eta, ex = new_w, new_eta, new_ex
            t = (s + 1) * dt
            if np.min(ex) < breakdown_threshold:
                status = "breakdown"
                break
        if status != "blowup":
            k1 = self.rhs(w_hat, eta, ex, want_omega=True)
            record(t, w_hat, eta, ex, k1[3], k1[4])
        final_u = np.fft.irfft(self.inv * w_hat, grid.n)
        if snapshot_every and (not snap_t or snap_t[-1] != t):
            snap_t.append(t)
            snaps.append(final_u)
        return EASolution(
            op=self.op, grid=grid, labels=self.labels, times=np.array(times), eta=np.array(etas),
            eta_x=np.array(exs), omega_eta=np.array(omegas), u_eta=np.array(us), omega0=omega0,
            status=status, t_end=t, dt=dt, snapshot_times=snap_t, snapshots=snaps,
            fields={k: np.array(v) for k, v in extra.items()}, final_u=final_u,
            mean_history=np.array(means),
        )


def euler_arnold_solve(op: MultiplierOperator, u0: VelocityField, t_max, dt=None, labels=None,
                       interp="auto", **kwargs) -> EASolution:
    return EulerArnoldSolver(op, u0.grid, labels, interp).solve(u0, t_max, dt, **kwargs)


# ---------------------------------------------------------------------------
# Hunter-Saxton solar model
# ---------------------------------------------------------------------------


@dataclass
class SolarState:
    grid: CircleGrid
    t: float
    gamma: np.ndarray
    gamma_dot: np.ndarray

    def angular_momentum(self):
        g, gd = self.gamma, self.gamma_dot
        return g[:, 0] * gd[:, 1] - g[:, 1] * gd[:, 0]


def hs_constants(u0: VelocityField):
    """(K, u0', omega0) with K^2 = 1/4 * integral of u0'^2, computed spectrally."""
    uh = np.fft.rfft(u0.values)
    kw = u0.grid.wavenumbers
    n = u0.grid.n
    # Parseval for the real FFT: sum over both signs of |k uh|^2 / n^2
    wts = np.full(len(kw), 2.0)
    wts[0] = 1.0
    wts[-1] = 1.0
    k2 = 0.25 * float(np.sum(wts * np.abs(kw * uh) ** 2)) / n**2
    ux = spectral_derivative(u0.values, 1)
    omega0 = -spectral_derivative(u0.values, 2)
    return math.sqrt(k2), ux, omega0


def hs_solar(u0: VelocityField, t) -> SolarState:
    u0.require_mean_zero()
    k, ux, omega0 = hs_constants(u0)
    n = u0.grid.n
    if k == 0.0:
        gamma = np.column_stack([np.ones(n), np.zeros(n)])
        return SolarState(u0.grid, float(t), gamma, np.zeros((n, 2)))
    v0 = np.column_stack([ux / 2.0, omega0])
    c, s = math.cos(k * t), math.sin(k * t)
    gamma = s / k * v0
    gamma[:, 0] += c
    gamma_dot = c * v0
    gamma_dot[:, 0] -= k * s
    return SolarState(u0.grid, float(t), gamma, gamma_dot)


@dataclass
class BreakdownReport:
    t_star: float
    x_star: float
    status: str
    node: int = -1


def _trig_derivative_coeffs(values, order):
    n = len(values)
    kw = TWO_PI * np.arange(n // 2 + 1)
    fac = (1j * kw) ** order
    if order % 2:
        fac[-1] = 0.0
    return fac * np.fft.rfft(values)


def hs_breakdown(u0: VelocityField) -> BreakdownReport:
    """First time some Gamma_1(t, x) hits zero, with x* refined off the grid.

    Gamma_1 = cos(Kt) + u0'(x) sin(Kt) / (2K) first vanishes where u0' is most
    negative, at K t = arctan(2K / |u0'|).
    """
    u0.require_mean_zero()
    k, ux, _ = hs_constants(u0)
    n = u0.grid.n
    if k == 0.0:
        return BreakdownReport(math.inf, math.nan, "no-breakdown")
    j = int(np.argmin(ux))
    x_star = float(u0.grid.x[j])
    c2 = _trig_derivative_coeffs(u0.values, 2)
    f = lambda x: float(trig_eval(c2, n, np.array([x]))[0])  # noqa: E731
    h = 1.0 / n
    a, b = x_star - h, x_star + h
    fa, fb = f(a), f(b)
    if fa < 0 < fb or fa > 0 > fb:
        x_star = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    elif fa == 0.0:
        x_star = a
    c1 = _trig_derivative_coeffs(u0.values, 1)
    slope = float(trig_eval(c1, n, np.array([x_star]))[0])
    t_star = _hs_root(k, slope)
    return BreakdownReport(t_star, float(np.mod(x_star, 1.0)), "breakdown", j)


def _hs_root(k, slope):
    # smallest t > 0 with cos(kt) + slope sin(kt) / (2k) = 0
    if slope < 0:
        return math.atan(2.0 * k / -slope) / k
    if slope == 0:
        return math.pi / (2.0 * k)
    return (math.pi - math.atan(2.0 * k / slope)) / k


def hs_node_breakdown_times(u0: VelocityField):
    k, ux, _ = hs_constants(u0)
    return np.array([_hs_root(k, s) for s in ux])


@dataclass
class ReconstructedFlow:
    flow: LagrangianFlow
    u_eta: np.ndarray  # u(t, eta(t, x)) = eta_t(t, x)

    def mean_u(self):
        """Integral of u over the circle at each time, as integral of eta_t eta_x."""
        return np.mean(self.u_eta * self.flow.eta_x, axis=1)


def reconstruct_flow(states) -> ReconstructedFlow:
    """Lagrangian flow and u(eta) from HS solar states.

    eta_x = Gamma_1^2; eta_t is the antiderivative of 2 Gamma_1 dGamma_1/dt with
    the constant fixed by integral(eta_t eta_x) = 0. The offset of eta at x = 0
    is integrated in time by the trapezoid rule when the series starts at t = 0
    and left at zero otherwise.
    """
    states = list(states)
    if not states:
        raise DomainError("no solar states given")
    grid = states[0].grid
    times = np.array([s.t for s in states])
    etas, exs, ets = [], [], []
    for s in states:
        g1 = s.gamma[:, 0]
        if np.any(g1 <= 0):
            raise PostBreakdownError(f"Gamma_1 <= 0 at t = {s.t:.6g}: flow has left the diffeomorphism group")
        ex = g1**2
        etx = 2.0 * g1 * s.gamma_dot[:, 0]
        f = spectral_antiderivative(etx)
        c = -np.mean(f * ex) / np.mean(ex)
        ets.append(f + c)
        exs.append(ex)
    exs = np.array(exs)
    ets = np.array(ets)
    x = grid.x
    disp = np.array([spectral_antiderivative(e - 1.0) for e in exs])
    # eta = x + disp + b(t) with disp mean-free, so b' is the mean of eta_t
    if times[0] == 0.0 and len(times) > 1:
        offset = cumulative_trapezoid(ets.mean(axis=1), times, initial=0.0)
    else:
        offset = np.zeros(len(times))
    etas = x[None, :] + disp + offset[:, None]
    flow = LagrangianFlow(grid, x, times, etas, exs)
    return ReconstructedFlow(flow, ets)


# ---------------------------------------------------------------------------
# Wunsch
# ---------------------------------------------------------------------------


def wunsch_forcing(u):
    """F = -u u_xx - H(u H(u_xx)) on the grid."""
    uxx = spectral_derivative(u, 2)
    return -u * uxx - hilbert(u * hilbert(uxx))


def _forcing_field(uh_masked, solver):
    n = solver.grid.n
    return wunsch_forcing(np.fft.irfft(uh_masked, n))


def wunsch_breakdown_estimate(u0_fn, n=1024, dt=2e-4, t_cap=2.0, threshold=BREAKDOWN_ETA_X, labels=256):
    """Time at which min eta_x drops below the threshold on a refined run."""
    grid = CircleGrid(n)
    u0 = VelocityField.from_function(grid, u0_fn)
    lab = np.arange(labels) / labels
    sol = euler_arnold_solve(MultiplierOperator("wunsch"), u0, t_cap, dt, labels=lab,
                             breakdown_threshold=threshold)
    return sol.t_end if sol.status == "breakdown" else math.inf


@dataclass
class WunschReport:
    t_max: float
    breakdown_estimate: float
    residual: float
    residual_scale: float
    min_forcing: float
    momentum_error: float
    status: str
    times: np.ndarray
    gamma: np.ndarray


def wunsch_solar_check(u0_fn, t_max=None, n=256, dt=1e-4, refine=4, estimate_dt=2e-4):
    """Self-consistency of the Wunsch solar model on a PDE solution.

    Gamma = eta_x exp(i theta) with theta = omega0 * integral(dt / eta_x^2);
    the residual |Gamma_tt + F(eta) Gamma| uses second differences in t.
    ``t_max`` defaults to half the breakdown estimate from a run at refine*n.
    """
    est = wunsch_breakdown_estimate(u0_fn, n=refine * n, dt=estimate_dt)
    if t_max is None:
        if not math.isfinite(est):
            raise DomainError("no breakdown detected; pass t_max explicitly")
        t_max = 0.5 * est
    grid = CircleGrid(n)
    u0 = VelocityField.from_function(grid, u0_fn)
    sol = euler_arnold_solve(MultiplierOperator("wunsch"), u0, t_max, dt,
                             record_fields={"F": _forcing_field}, snapshot_every=0)
    ts = sol.times
    ex = sol.eta_x
    fe = sol.fields["F"]
    theta = sol.omega0[None, :] * cumulative_trapezoid(1.0 / ex**2, ts, axis=0, initial=0.0)
    gamma = ex * np.exp(1j * theta)
    h = sol.dt
    gtt = (gamma[2:] - 2.0 * gamma[1:-1] + gamma[:-2]) / h**2
    res = np.abs(gtt + fe[1:-1] * gamma[1:-1])
    # the forcing is also checked on the full grid at every recorded step
    min_f = float(np.min(fe))
    return WunschReport(t_max, est, float(res.max()), float(np.abs(gtt).max()), min_f,
                        sol.momentum_error(), sol.status, ts, gamma)


def wunsch_breakdown_points(u0: VelocityField):
    """Points x0 with omega0(x0) = 0 and u0'(x0) < 0 for omega0 = H u0'."""
    n = u0.grid.n
    uh = np.fft.rfft(u0.values)
    kw = u0.grid.wavenumbers
    w_hat = kw * uh
    w_hat[-1] = 0.0
    d_hat = 1j * kw * uh
    d_hat[-1] = 0.0
    x = u0.grid.x
    w = trig_eval(w_hat, n, np.append(x, 1.0))
    tol = 1e-13 * max(1.0, float(np.max(np.abs(w))))
    f = lambda p: float(trig_eval(w_hat, n, np.array([p]))[0])  # noqa: E731
    pts = []
    for j in range(n):
        a, b = w[j], w[j + 1]
        if abs(a) <= tol or (a * b < 0 and abs(b) > tol):
            xa = x[j]
            x0 = xa if abs(a) <= tol else brentq(f, xa, xa + 1.0 / n, xtol=1e-14)
            slope = float(trig_eval(d_hat, n, np.array([x0]))[0])
            if slope < 0:
                pts.append(float(np.mod(x0, 1.0)))
    return pts


# ---------------------------------------------------------------------------
# mu-Hunter-Saxton evidence table
# ---------------------------------------------------------------------------


@dataclass
class MuHSRow:
    label: str
    omega0_sign_change: bool
    status: str
    t_end: float
    min_eta_x: float


def mu_hs_momentum(u0: VelocityField, mu=1.0):
    op = MultiplierOperator("mu_hs", mu=mu)
    return apply_L(op, u0)


def mu_hs_momentum_experiment(family, t_max=10.0, n=256, dt=None, labels=128, mu=1.0):
    """Breakdown evidence for mu-HS initial data; ``family`` maps label -> u0(x).

    Initial data may carry a nonzero mean, which is what allows one-signed
    momentum for this operator.
    """
    grid = CircleGrid(n)
    op = MultiplierOperator("mu_hs", mu=mu)
    lab = np.arange(labels) / labels
    rows = []
    for name, fn in family.items():
        u0 = VelocityField.from_function(grid, fn)
        w0 = apply_L(op, u0)
        scale = max(1.0, float(np.max(np.abs(w0))))
        pos = np.any(w0 > 1e-12 * scale)
        neg = np.any(w0 < -1e-12 * scale)
        sol = euler_arnold_solve(op, u0, t_max, dt, labels=lab, require_mean_zero=False)
        rows.append(MuHSRow(name, bool(pos and neg), sol.status, sol.t_end, float(np.min(sol.eta_x))))
    return rows


# ---------------------------------------------------------------------------
# H^div metric versus cone metric
# ---------------------------------------------------------------------------


@dataclass
class DiffeoPath:
    """phi(t_k, x_j) on a uniform time grid; phi(t, x) - x is periodic."""

    times: np.ndarray
    phi: np.ndarray
    phi_t: np.ndarray | None = None

    @classmethod
    def from_function(cls, fn, fn_t, t_max, steps, n):
        times = np.linspace(0.0, t_max, steps + 1)
        x = np.arange(n) / n
        phi = np.array([fn(t, x) for t in times])
        phi_t = np.array([fn_t(t, x) for t in times]) if fn_t is not None else None
        return cls(times, phi, phi_t)

    def reversed(self):
        t_max = self.times[-1]
        phi_t = None if self.phi_t is None else -self.phi_t[::-1]
        return DiffeoPath(t_max - self.times[::-1], self.phi[::-1].copy(), phi_t)


def _invert_circle_map(disp_hat, n, y, jac_hat, iters=50):
    """Solve x + d(x) = y for x, d periodic with rfft coefficients disp_hat."""
    x = y - trig_eval(disp_hat, n, y)
    for _ in range(iters):
        r = x + trig_eval(disp_hat, n, x) - y
        jac = 1.0 + trig_eval(jac_hat, n, x)
        step = r / jac
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return x


def hdiv_cone_energies(path: DiffeoPath):
    """Energies of a diffeomorphism path in the H^div metric and in the cone metric.

    E_hdiv integrates |v|^2 + |div v|^2 / 4 over Eulerian coordinates with
    v = X o phi^{-1}; E_cone integrates lam |X|^2 + X_lam^2 / (4 lam) over the
    reference circle with lam = phi_x and X_lam = d/dt lam. Time integration is
    by the trapezoid rule.
    """
    phi = np.asarray(path.phi, dtype=float)
    times = np.asarray(path.times, dtype=float)
    nt, n = phi.shape
    x = np.arange(n) / n
    if path.phi_t is not None:
        xt = np.asarray(path.phi_t, dtype=float)
    else:
        xt = np.gradient(phi, times, axis=0, edge_order=2)
    disp = phi - x[None, :]
    kw = TWO_PI * np.arange(n // 2 + 1)
    e_h = np.empty(nt)
    e_c = np.empty(nt)
    for i in range(nt):
        dh = np.fft.rfft(disp[i])
        jh = 1j * kw * dh
        jh[-1] = 0.0
        lam = 1.0 + np.fft.irfft(jh, n)
        if np.min(lam) <= 0:
            raise DomainError(f"path is not monotone at t = {times[i]:.6g}")
        xh = np.fft.rfft(xt[i])
        xlam = np.fft.irfft(1j * kw * xh * (np.arange(n // 2 + 1) < n // 2), n)
        e_c[i] = np.mean(lam * xt[i] ** 2 + 0.25 * xlam**2 / lam)
        y = x
        xinv = _invert_circle_map(dh, n, y, jh)
        v = trig_eval(xh, n, xinv)
        dv = spectral_derivative(v, 1)
        e_h[i] = np.mean(v**2 + 0.25 * dv**2)
    return float(trapezoid(e_h, times)), float(trapezoid(e_c, times))


def log_bump_path(n, steps=40, t_max=1.0, amp=0.04, drift=0.3):
    """phi(t, x) = x + drift t + amp sin(pi t) log(1.1 - cos 2 pi x).

    Smooth but not band-limited, so energies converge spectrally rather than
    being exact at finite n. Monotone in x for amp < 0.22.
    """

    def fn(t, x):
        return x + drift * t + amp * math.sin(math.pi * t) * np.log(1.1 - np.cos(TWO_PI * x))

    def fn_t(t, x):
        return drift + amp * math.pi * math.cos(math.pi * t) * np.log(1.1 - np.cos(TWO_PI * x))

    return DiffeoPath.from_function(fn, fn_t, t_max, steps, n)


def rotation_path(n, steps=40, t_max=1.0, speed=0.3):
    """Rigid rotation phi(t, x) = x + speed t; both energies equal speed^2 t_max."""
    return DiffeoPath.from_function(lambda t, x: x + speed * t, lambda t, x: np.full_like(x, speed),
                                    t_max, steps, n)
