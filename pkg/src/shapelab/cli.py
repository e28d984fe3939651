"""Command-line driver: ``shapelab list`` and ``shapelab run``.

Each experiment reads a JSON config ({"experiment", "manifold", "seed",
"params", "out"}), writes CSV tables, one SVG plot and a resolved-config
sidecar into the output directory. Exit codes: 0 success, 2 configuration
error, 3 domain error raised by a module.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import svg
from .errors import ConfigurationError, ShapeLabError
from .manifolds import parse_manifold

U64 = 2**64
TOP_KEYS = ("experiment", "manifold", "seed", "params", "out")

# ---------------------------------------------------------------------------
# u0 mini-grammar
# ---------------------------------------------------------------------------

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM = re.compile(rf"^(?:(?P<coef>{_NUM})\s*\*\s*)?(?P<fn>sin|cos):(?P<k>\d+)$|^(?P<const>{_NUM})$")


def parse_u0(text: str):
    """Parse "a*sin:k + cos:m - 0.5 + ..." into [(coef, fn, k)] with fn in {sin, cos, const}.

    sin:k stands for sin(2 pi k x) on the unit circle.
    """
    if not isinstance(text, str) or not text.strip():
        raise ConfigurationError("u0 must be a non-empty string")
    parts = re.split(r"(?<=[^eE*+\-\s])\s*(?=[+-])", text.strip())
    terms = []
    for p in parts:
        p = p.strip()
        sign = 1.0
        while p and p[0] in "+-":
            if p[0] == "-":
                sign = -sign
            p = p[1:].strip()
        m = _TERM.match(p)
        if m is None:
            raise ConfigurationError(f"cannot parse u0 term {p!r} in {text!r}")
        if m.group("const") is not None:
            terms.append((sign * float(m.group("const")), "const", 0))
            continue
        k = int(m.group("k"))
        if k < 1:
            raise ConfigurationError(f"mode number must be >= 1 in {p!r}")
        coef = float(m.group("coef")) if m.group("coef") else 1.0
        terms.append((sign * coef, m.group("fn"), k))
    return terms


def u0_function(text: str) -> Callable:
    terms = parse_u0(text)

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, kind, k in terms:
            if kind == "const":
                out = out + a
            elif kind == "sin":
                out = out + a * np.sin(2.0 * np.pi * k * x)
            else:
                out = out + a * np.cos(2.0 * np.pi * k * x)
        return out

    return fn


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Output:
    def __init__(self, root):
        self.root = root
        self.files: list[str] = []

    def path(self, name):
        return os.path.join(self.root, name)

    def csv(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
        self._write(name, buf.getvalue())

    def text(self, name, content):
        self._write(name, content)

    def _write(self, name, content):
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        self.files.append(name)


@dataclass
class Context:
    manifold: object
    params: dict
    rng: np.random.Generator
    out: Output
    workers: int = 1


@dataclass
class Experiment:
    name: str
    talk: str
    summary: str
    needs_manifold: bool
    defaults: dict
    docs: dict
    runner: Callable = field(repr=False)


REGISTRY: dict[str, Experiment] = {}


def experiment(name, talk, summary, needs_manifold, defaults, docs):
    def deco(fn):
        REGISTRY[name] = Experiment(name, talk, summary, needs_manifold, defaults, docs, fn)
        return fn

    return deco


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _cluster_data(m, rng, clusters, per_cluster, spread, separation):
    base = m.base_point()
    fr = m.frame(base)
    centres = [base]
    for c in range(1, clusters):
        ang = 2.0 * np.pi * (c - 1) / max(1, clusters - 1)
        d = fr[0] * math.cos(ang) + (fr[1] * math.sin(ang) if len(fr) > 1 else 0.0)
        centres.append(m.exp(base, separation * d))
    pts = []
    for cen in centres:
        for _ in range(per_cluster):
            pts.append(m.exp(cen, m.tangent_gaussian(cen, spread, rng)))
    return np.array(pts)


@experiment("quantize", "Riemannian quantization talk",
            "online competitive learning quantization of a clustered sample", True,
            {"n_centers": 2, "clusters": 2, "points_per_cluster": 250, "spread": 0.15, "separation": 1.5,
             "iters": 100000, "c0": 1.0, "c1": 0.1, "log_every": 100},
            {"n_centers": "codebook size", "clusters": "number of Gaussian clusters in the sample",
             "points_per_cluster": "samples per cluster", "spread": "tangent Gaussian scale",
             "separation": "geodesic distance of cluster centres from the base point",
             "iters": "CLRQ iterations", "c0": "step numerator", "c1": "step decay rate",
             "log_every": "log stride for the per-iteration table"})
def _run_quantize(ctx: Context):
    from .quantize import (EmpiricalMeasure, StepSchedule, clrq_run, cost, gradient_norm, summary_measure,
                           wasserstein_p)

    p, m = ctx.params, ctx.manifold
    g_data, g_run = ctx.rng.spawn(2)
    pts = _cluster_data(m, g_data, p["clusters"], p["points_per_cluster"], p["spread"], p["separation"])
    mu = EmpiricalMeasure(m, pts)
    res = clrq_run(mu, p["n_centers"], StepSchedule(p["c0"], p["c1"]), g_run, p["iters"],
                   log_every=p["log_every"])
    cb = res.codebook
    ctx.out.csv("quantize_log.csv", ["k", "gamma", "sampled_cost"], zip(res.steps, res.gammas, res.sampled_costs))
    dim = np.asarray(cb.centers[0]).size
    ctx.out.csv("codebook.csv", ["center"] + [f"c{j}" for j in range(dim)],
                ([i] + list(np.ravel(c)) for i, c in enumerate(cb.centers)))
    final = cost(mu, cb)
    summ = summary_measure(mu, cb)
    w2 = wasserstein_p(mu, summ) if len(mu) <= 64 else math.nan
    ctx.out.csv("quantize_summary.csv", ["cost", "gradient_norm", "w2_summary"],
                [[final, gradient_norm(mu, cb), w2]])
    k = np.maximum(res.steps, 1)
    run = np.cumsum(res.sampled_costs) / np.arange(1, len(res.sampled_costs) + 1)
    ctx.out.text("quantize.svg", svg.plot(
        [{"x": k, "y": run, "label": "running mean of sampled cost"},
         {"x": k, "y": np.full(len(k), final), "label": "final cost"}],
        title="CLRQ cost versus iteration", xlabel="iteration", ylabel="cost", logx=True))


@experiment("transport", "parallel transport ladders talk",
            "ladder transport error versus number of rungs", True,
            {"scheme": "pole", "steps": [1, 2, 4, 8, 16], "distance": 0.5, "u_norm": 0.3},
            {"scheme": "pole or schild", "steps": "rung counts", "distance": "length of the transport segment",
             "u_norm": "norm of the transported vector"})
def _run_transport(ctx: Context):
    from .ladders import LadderConfig, ladder_error, transport_ladder

    p, m = ctx.params, ctx.manifold
    p0 = m.base_point()
    fr = m.frame(p0)
    q = m.exp(p0, p["distance"] * fr[0])
    u = p["u_norm"] * (fr[1] if len(fr) > 1 else fr[0])
    rows = []
    for s in p["steps"]:
        err = ladder_error(m, p0, q, u, p["scheme"], int(s))
        drift = transport_ladder(m, [p0, q], u, LadderConfig(int(s), p["scheme"])).norm_drift
        rows.append((int(s), err, drift))
    ctx.out.csv("transport.csv", ["steps", "error", "norm_drift"], rows)
    st = np.array([r[0] for r in rows], dtype=float)
    er = np.array([max(r[1], 1e-17) for r in rows])
    ctx.out.text("transport.svg", svg.plot([{"x": st, "y": er, "label": p["scheme"]}],
                                           title="ladder error", xlabel="rungs", ylabel="error",
                                           logx=True, logy=True))


_FRECHET_DEFAULTS = {"eps": 0.3, "n_values": [5, 10, 20], "trials": 1000, "control_variate": True}
_FRECHET_DOCS = {"eps": "radius of the tangent-disk law", "n_values": "sample sizes",
                 "trials": "Monte Carlo trials per sample size",
                 "control_variate": "subtract the first-moment control variate"}


@experiment("frechet-bias", "Frechet mean asymptotics talk",
            "Monte Carlo bias of the empirical Frechet mean", True, dict(_FRECHET_DEFAULTS), dict(_FRECHET_DOCS))
def _run_bias(ctx: Context):
    from .frechet import TangentDiskLaw, bias_experiment

    p = ctx.params
    law = TangentDiskLaw(ctx.manifold, p["eps"])
    rows = bias_experiment(law, p["n_values"], p["trials"], ctx.rng, control_variate=p["control_variate"])
    d = len(rows[0].bias)
    ctx.out.csv("frechet_bias.csv", ["n", "trials"] + [f"bias_{i}" for i in range(d)] + [f"se_{i}" for i in range(d)],
                ([r.n, r.trials] + list(r.bias) + list(r.se) for r in rows))
    ctx.out.text("frechet_bias.svg", svg.plot(
        [{"x": [r.n for r in rows], "y": [r.norm for r in rows], "label": "|bias|"},
         {"x": [r.n for r in rows], "y": [float(np.linalg.norm(r.se)) for r in rows], "label": "|SE|"}],
        title="bias of the empirical mean", xlabel="n", ylabel="norm", logx=True, logy=True))


@experiment("frechet-cov", "Frechet mean asymptotics talk",
            "curvature correction to the covariance of the empirical Frechet mean", True,
            dict(_FRECHET_DEFAULTS), dict(_FRECHET_DOCS))
def _run_cov(ctx: Context):
    from .frechet import TangentDiskLaw, covariance_experiment

    p = ctx.params
    law = TangentDiskLaw(ctx.manifold, p["eps"])
    rows = covariance_experiment(law, p["n_values"], p["trials"], ctx.rng, control_variate=p["control_variate"])
    ctx.out.csv("frechet_cov.csv", ["n", "trials", "trace_diff", "se"], ((r.n, r.trials, r.trace_diff, r.se)
                                                                        for r in rows))
    n = [r.n for r in rows]
    ctx.out.text("frechet_cov.svg", svg.plot(
        [{"x": n, "y": [r.trace_diff for r in rows], "label": "tr(n Sigma_n) - tr(M2)"},
         {"x": n, "y": [r.trace_diff + 3 * r.se for r in rows], "label": "+3 SE"},
         {"x": n, "y": [r.trace_diff - 3 * r.se for r in rows], "label": "-3 SE"}],
        title="covariance correction", xlabel="n", ylabel="trace difference", logx=True))


@experiment("dist-approx", "approximate distances talk",
            "approximate distance matrices and Gram matrices from one log per sample", True,
            {"samples": 30, "radius": 0.2, "methods": ["exact", "taylor2", "taylor_curv", "symspace"], "sigma": 0.2},
            {"samples": "number of samples", "radius": "tangent-disk radius of the cloud",
             "methods": "distance methods", "sigma": "Gaussian kernel bandwidth"})
def _run_dist(ctx: Context):
    from .approx import METHODS, GaussianDistanceKernel, distance_matrix, gram_matrix
    from .frechet import TangentDiskLaw

    p, m = ctx.params, ctx.manifold
    bad = [x for x in p["methods"] if x not in METHODS]
    if bad:
        raise ConfigurationError(f"unknown distance methods {bad}")
    pts = TangentDiskLaw(m, p["radius"]).sample(ctx.rng, p["samples"])
    exact = distance_matrix(m, pts, "exact")
    g_exact = np.exp(-exact.squared / (2 * p["sigma"] ** 2))
    summary, series = [], []
    for meth in p["methods"]:
        rep = exact if meth == "exact" else distance_matrix(m, pts, meth)
        n = len(rep.matrix)
        ctx.out.csv(f"dist_{meth}.csv", ["method", "bvp_count", "row"] + [f"s{j}" for j in range(n)],
                    ([meth, rep.bvp_count, i] + list(rep.matrix[i]) for i in range(n)))
        g = gram_matrix(GaussianDistanceKernel(p["sigma"], meth), pts, m) if meth != "exact" else None
        gm = g_exact if g is None else g.matrix
        rel = float(np.linalg.norm(gm - g_exact) / np.linalg.norm(g_exact))
        err = float(np.nanmax(np.abs(rep.matrix - exact.matrix)))
        lam = float(np.linalg.eigvalsh(gm)[0])
        summary.append((meth, rep.bvp_count, rep.failures, err, rel, lam))
        iu = np.triu_indices(n, 1)
        if meth != "exact":
            series.append({"x": exact.matrix[iu], "y": rep.matrix[iu] - exact.matrix[iu], "label": meth,
                           "kind": "scatter"})
    ctx.out.csv("dist_summary.csv", ["method", "bvp_count", "failures", "max_abs_error", "gram_rel_frobenius",
                                     "gram_min_eigenvalue"], summary)
    if series:
        ctx.out.text("dist_approx.svg", svg.plot(series, title="approximate minus exact distance",
                                                 xlabel="exact distance", ylabel="error"))


def _thin(path, every):
    from .diffusion import SpherePath

    keep = list(range(0, len(path.times), every))
    if keep[-1] != len(path.times) - 1:
        keep.append(len(path.times) - 1)
    return SpherePath(path.times[keep], path.points[keep])


@experiment("diffuse", "stochastic flows on the sphere talk",
            "Brownian paths on S^2, the sqrt(t) statistic and Hopf lifts", False,
            {"n_paths": 1000, "dt": 0.001, "t_max": 1.0, "record_every": 10, "drift": "zero", "t_fit": 0.2,
             "write_paths": True, "lift_paths": 100, "coverage_radius": 0.7853981633974483},
            {"n_paths": "ensemble size", "dt": "time step", "t_max": "final time",
             "record_every": "steps between recorded points", "drift": "zero or height (f = -r_z)",
             "t_fit": "upper end of the power-law fit window", "write_paths": "emit the long path table",
             "lift_paths": "number of paths lifted to S^3",
             "coverage_radius": "S^3 ball radius for the coverage comparison"})
def _run_diffuse(ctx: Context):
    from .diffusion import (coverage_fraction, dispersion_stat, height_gradient, hopf_lift, hopf_project,
                            lift_horizontality, simulate_ensemble, uniform_walk_s3, zero_gradient)

    p = ctx.params
    if p["drift"] not in ("zero", "height"):
        raise ConfigurationError("drift must be 'zero' or 'height'")
    grad = zero_gradient if p["drift"] == "zero" else height_gradient
    g_paths, g_walk = ctx.rng.spawn(2)
    # lifts need the unthinned base path (the lift rejects steps above 0.5 rad)
    fine = simulate_ensemble(p["n_paths"], grad, p["dt"], p["t_max"], g_paths, 1)
    paths = [_thin(pa, p["record_every"]) for pa in fine]
    if p["write_paths"]:
        ctx.out.csv("paths.csv", ["path_id", "t", "x", "y", "z"],
                    ([i, t] + list(r) for i, pa in enumerate(paths) for t, r in zip(pa.times, pa.points)))
    disp = dispersion_stat(paths, p["t_fit"], min_paths=min(100, p["n_paths"]))
    ctx.out.csv("dispersion.csv", ["t", "mean_distance"], zip(disp.times, disp.mean_distance))
    n_lift = min(p["lift_paths"], len(paths))
    proj_err = horiz = math.nan
    cov_lift = cov_unif = math.nan
    if n_lift:
        lifts = [hopf_lift(pa, np.array([1.0, 0.0, 0.0, 0.0])) for pa in fine[:n_lift]]
        proj_err = max(float(np.max(np.linalg.norm(hopf_project(L.quats) - pa.points, axis=1)))
                       for L, pa in zip(lifts, fine))
        horiz = max(lift_horizontality(L) for L in lifts)
        walks = uniform_walk_s3(n_lift, p["dt"], p["t_max"], g_walk, p["record_every"])
        cov_lift = coverage_fraction(np.array([L.quats[-1] for L in lifts]), p["coverage_radius"])
        cov_unif = coverage_fraction(np.array([w.quats[-1] for w in walks]), p["coverage_radius"])
    ctx.out.csv("diffusion_summary.csv", ["exponent", "lift_projection_error", "lift_horizontality",
                                          "coverage_lift", "coverage_uniform"],
                [[disp.exponent, proj_err, horiz, cov_lift, cov_unif]])
    t = disp.times[1:]
    c = disp.mean_distance[1:]
    sel = t <= p["t_fit"] + 1e-12
    scale = float(np.exp(np.mean(np.log(c[sel]) - 0.5 * np.log(t[sel])))) if sel.any() else 1.0
    ctx.out.text("dispersion.svg", svg.plot(
        [{"x": t, "y": c, "label": f"mean distance (exponent {disp.exponent:.3f})"},
         {"x": t, "y": scale * np.sqrt(t), "label": "c sqrt(t)"}],
        title="dispersion from the pole", xlabel="t", ylabel="mean geodesic distance"))
    ends = np.array([pa.points[-1] for pa in paths])
    ctx.out.text("endpoints.svg", svg.plot([{"x": ends[:, 0], "y": ends[:, 1], "kind": "scatter",
                                             "label": "endpoints (x, y)"}],
                                           title="endpoint cloud", xlabel="x", ylabel="y", equal=True))


@experiment("solar", "Euler-Arnold solar models talk",
            "Hunter-Saxton solar model, breakdown time and reconstructed flow", False,
            {"u0": "sin:1", "n": 256, "frames": 10, "fraction": 0.9, "trajectory_points": 16},
            {"u0": "initial velocity, e.g. 'sin:1 + 0.5*cos:2' (sin:k = sin(2 pi k x))",
             "n": "grid size (power of two)", "frames": "time samples in [0, fraction * t*]",
             "fraction": "last frame as a fraction of the breakdown time",
             "trajectory_points": "labels drawn in the trajectory plot"})
def _run_solar(ctx: Context):
    from .euler_arnold import CircleGrid, VelocityField, hs_breakdown, hs_constants, hs_solar, reconstruct_flow

    p = ctx.params
    grid = CircleGrid(p["n"])
    u0 = VelocityField.from_function(grid, u0_function(p["u0"])).require_mean_zero()
    br = hs_breakdown(u0)
    k, _, _ = hs_constants(u0)
    ctx.out.csv("breakdown.csv", ["t_star", "x_star", "K", "status"], [[br.t_star, br.x_star, k, br.status]])
    if not math.isfinite(br.t_star):
        return
    times = np.linspace(0.0, p["fraction"] * br.t_star, p["frames"])
    states = [hs_solar(u0, t) for t in times]
    rec = reconstruct_flow(states)
    rows = []
    for i, s in enumerate(states):
        lsign = np.sign(s.angular_momentum())
        for j in range(grid.n):
            rows.append((s.t, grid.x[j], s.gamma[j, 0], s.gamma[j, 1], rec.flow.eta_x[i, j], rec.u_eta[i, j],
                         int(lsign[j])))
    ctx.out.csv("solar.csv", ["t", "x", "gamma1", "gamma2", "eta_x", "u", "L_sign"], rows)
    fine = np.linspace(0.0, br.t_star, 200)
    fs = [hs_solar(u0, t) for t in fine]
    idx = np.linspace(0, grid.n, p["trajectory_points"], endpoint=False).astype(int)
    series = []
    for j in idx:
        lj = fs[0].angular_momentum()[j]
        series.append({"x": [s.gamma[j, 0] for s in fs], "y": [s.gamma[j, 1] for s in fs],
                       "color": "#d62728" if lj > 0 else "#1f77b4"})
    series.append({"x": [0.0], "y": [0.0], "kind": "scatter", "radius": 4, "color": "black", "label": "origin"})
    ctx.out.text("solar.svg", svg.plot(series, title="solar trajectories up to breakdown", xlabel="Gamma1",
                                       ylabel="Gamma2", equal=True))


@experiment("wunsch", "Euler-Arnold solar models talk",
            "Wunsch equation: PDE solve, forcing positivity and solar-model residual", False,
            {"u0": "sin:1", "n": 256, "dt": 1e-4, "refine": 4, "t_max": None, "trajectory_points": 16},
            {"u0": "initial velocity (mean zero)", "n": "grid size", "dt": "RK4 step",
             "refine": "grid refinement factor for the breakdown estimate",
             "t_max": "final time (default: half the breakdown estimate)",
             "trajectory_points": "labels written to the trajectory table"})
def _run_wunsch(ctx: Context):
    from .euler_arnold import wunsch_solar_check

    p = ctx.params
    rep = wunsch_solar_check(u0_function(p["u0"]), t_max=p["t_max"], n=p["n"], dt=p["dt"], refine=p["refine"])
    ctx.out.csv("wunsch_summary.csv", ["t_max", "breakdown_estimate", "residual", "residual_scale", "min_forcing",
                                       "momentum_error", "status"],
                [[rep.t_max, rep.breakdown_estimate, rep.residual, rep.residual_scale, rep.min_forcing,
                  rep.momentum_error, rep.status]])
    n = rep.gamma.shape[1]
    idx = np.linspace(0, n, p["trajectory_points"], endpoint=False).astype(int)
    stride = max(1, len(rep.times) // 200)
    ctx.out.csv("wunsch_gamma.csv", ["t", "label", "gamma1", "gamma2"],
                ((rep.times[i], j / n, rep.gamma[i, j].real, rep.gamma[i, j].imag)
                 for i in range(0, len(rep.times), stride) for j in idx))
    series = [{"x": rep.gamma[::stride, j].real, "y": rep.gamma[::stride, j].imag} for j in idx]
    ctx.out.text("wunsch.svg", svg.plot(series, title="Wunsch solar trajectories", xlabel="Re Gamma",
                                        ylabel="Im Gamma", equal=True))


@experiment("mu-hs", "Euler-Arnold solar models talk",
            "mu-Hunter-Saxton breakdown evidence against the sign of the initial momentum", False,
            {"family": {"sin": "sin:1", "shifted": "0.5 + 0.01*sin:1", "zero": "0"}, "t_max": 10.0, "n": 256,
             "labels": 128, "mu": 1.0},
            {"family": "label -> u0 expression (constants allowed)", "t_max": "final time", "n": "grid size",
             "labels": "Lagrangian tracers", "mu": "weight of the mean in the operator"})
def _run_muhs(ctx: Context):
    from .euler_arnold import mu_hs_momentum_experiment

    p = ctx.params
    fam = {k: u0_function(v) for k, v in p["family"].items()}
    rows = mu_hs_momentum_experiment(fam, p["t_max"], p["n"], labels=p["labels"], mu=p["mu"])
    ctx.out.csv("mu_hs.csv", ["label", "u0", "omega0_sign_change", "status", "t_end", "min_eta_x"],
                ((r.label, p["family"][r.label], r.omega0_sign_change, r.status, r.t_end, r.min_eta_x) for r in rows))
    ctx.out.text("mu_hs.svg", svg.plot(
        [{"x": [i], "y": [r.t_end], "kind": "scatter", "radius": 5, "label": f"{r.label}: {r.status}"}
         for i, r in enumerate(rows)], title="mu-HS run length", xlabel="family member", ylabel="t_end"))


@experiment("curve-dist", "varifold curve metrics talk",
            "varifold chordal distances between closed curves and invariance checks", False,
            {"vertices": 64, "shapes": [[1.0, 1.0, 0.0], [1.0, 0.6, 0.0], [1.0, 0.6, 0.5], [0.8, 0.8, 0.2]],
             "curve_files": [], "rho": "gaussian", "sigma": 0.5, "gamma": "linear"},
            {"vertices": "vertices per generated ellipse",
             "shapes": "ellipses as [a, b, x-offset]", "curve_files": "extra CSV curves (vertex rows)",
             "rho": "gaussian or cauchy", "sigma": "spatial kernel scale", "gamma": "linear, binet or constant"})
def _run_curves(ctx: Context):
    from .varifold import SeparableKernel, chordal_distance, ellipse, invariance_suite, load_curve_csv

    p = ctx.params
    k = SeparableKernel(p["rho"], p["sigma"], p["gamma"])
    curves, names = [], []
    for i, s in enumerate(p["shapes"]):
        if len(s) != 3:
            raise ConfigurationError("each shape is [a, b, x-offset]")
        curves.append(ellipse(p["vertices"], s[0], s[1], (s[2], 0.0)))
        names.append(f"ellipse{i}")
    for f in p["curve_files"]:
        curves.append(load_curve_csv(f))
        names.append(os.path.basename(f))
    if len({c.dim for c in curves}) > 1:
        raise ConfigurationError("curves must share one ambient dimension")
    n = len(curves)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = chordal_distance(curves[i], curves[j], k)
    ctx.out.csv("curve_distances.csv", ["curve"] + names, ([names[i]] + list(d[i]) for i in range(n)))
    rows = []
    for name, c in zip(names, curves):
        r = invariance_suite(c, k, ctx.rng)
        rows.append((name, r.translation, r.rotation, r.resampling, r.reparametrization, r.norm_translation,
                     r.norm_rotation))
    ctx.out.csv("curve_invariance.csv", ["curve", "translation", "rotation", "resampling", "reparametrization",
                                         "norm_translation", "norm_rotation"], rows)
    series = [{"x": np.append(c.vertices[:, 0], c.vertices[0, 0]), "y": np.append(c.vertices[:, 1], c.vertices[0, 1]),
               "label": nm} for nm, c in zip(names, curves)]
    ctx.out.text("curves.svg", svg.plot(series, title="curves", xlabel="x", ylabel="y", equal=True))


@experiment("isometry", "H^div and cone metrics talk",
            "H^div energy of a diffeomorphism path against its cone-metric energy", False,
            {"path": "log_bump", "n_values": [32, 64, 128, 256, 512], "steps": 40, "amp": 0.04, "drift": 0.3},
            {"path": "log_bump or rotation", "n_values": "grid sizes for the refinement study",
             "steps": "time steps of the path", "amp": "log-bump amplitude", "drift": "rotation speed"})
def _run_iso(ctx: Context):
    from .euler_arnold import hdiv_cone_energies, log_bump_path, rotation_path

    p = ctx.params
    if p["path"] not in ("log_bump", "rotation"):
        raise ConfigurationError("path must be 'log_bump' or 'rotation'")
    rows = []
    for n in p["n_values"]:
        if p["path"] == "log_bump":
            path = log_bump_path(int(n), p["steps"], amp=p["amp"], drift=p["drift"])
        else:
            path = rotation_path(int(n), p["steps"], speed=p["drift"])
        eh, ec = hdiv_cone_energies(path)
        rows.append((int(n), eh, ec, abs(eh - ec) / eh if eh else 0.0))
    ctx.out.csv("isometry.csv", ["n", "E_hdiv", "E_cone", "rel_diff"], rows)
    ctx.out.text("isometry.svg", svg.plot(
        [{"x": [r[0] for r in rows], "y": [max(r[3], 1e-17) for r in rows], "label": p["path"]}],
        title="relative energy difference", xlabel="n", ylabel="|E_hdiv - E_cone| / E_hdiv", logx=True, logy=True))


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------


def _check_type(name, default, value):
    if default is None:
        if value is not None and not isinstance(value, (int, float)):
            raise ConfigurationError(f"parameter {name!r} must be a number or null")
        return value
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigurationError(f"parameter {name!r} expects {type(default).__name__}, got {value!r}")
    return value


def resolve_config(raw: dict, experiment_name=None, seed=None, out=None, workers=1):
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    unknown = sorted(set(raw) - set(TOP_KEYS))
    if unknown:
        raise ConfigurationError(f"unknown config keys: {unknown}")
    name = raw.get("experiment", experiment_name)
    if experiment_name is not None and name != experiment_name:
        raise ConfigurationError(f"config names experiment {name!r} but {experiment_name!r} was requested")
    if name not in REGISTRY:
        raise ConfigurationError(f"unknown experiment {name!r}; see 'shapelab list'")
    exp = REGISTRY[name]
    man = raw.get("manifold")
    if exp.needs_manifold:
        if not man:
            raise ConfigurationError(f"experiment {name!r} needs a manifold spec")
        parse_manifold(man)  # validate early
    elif man is not None:
        raise ConfigurationError(f"experiment {name!r} does not take a manifold")
    params = dict(exp.defaults)
    given = raw.get("params", {})
    if not isinstance(given, dict):
        raise ConfigurationError("params must be an object")
    bad = sorted(set(given) - set(exp.defaults))
    if bad:
        raise ConfigurationError(f"unknown parameters for {name!r}: {bad}")
    for k, v in given.items():
        params[k] = _check_type(k, exp.defaults[k], v)
    s = seed if seed is not None else raw.get("seed", 0)
    if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < U64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    o = out if out is not None else raw.get("out")
    if not o:
        raise ConfigurationError("no output directory (use --out or the 'out' key)")
    if not isinstance(workers, int) or workers < 1:
        raise ConfigurationError("workers must be a positive integer")
    cfg = {"experiment": name, "seed": s, "params": params, "out": o, "workers": workers}
    if exp.needs_manifold:
        cfg["manifold"] = man
    return cfg


def run(cfg: dict):
    """Execute a resolved config; returns the list of files written."""
    exp = REGISTRY[cfg["experiment"]]
    os.makedirs(cfg["out"], exist_ok=True)
    out = Output(cfg["out"])
    sidecar = {k: v for k, v in cfg.items() if k != "out"}
    out.text("config.resolved.json", json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    m = parse_manifold(cfg["manifold"]) if exp.needs_manifold else None
    ctx = Context(m, cfg["params"], np.random.default_rng(cfg["seed"]), out, cfg["workers"])
    exp.runner(ctx)
    return out.files


def list_experiments():
    lines = []
    for name, e in REGISTRY.items():
        lines.append(f"{name:14s} [{e.talk}] {e.summary}" + (" (needs --manifold spec)" if e.needs_manifold else ""))
        for k, v in e.defaults.items():
            lines.append(f"    {k} = {json.dumps(v)}  {e.docs.get(k, '')}")
    return "\n".join(lines)


def build_parser():
    ap = argparse.ArgumentParser(prog="shapelab", description="geometric statistics and shape dynamics experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list experiments and their parameters")
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("experiment", nargs="?", help="experiment name (optional if given in the config)")
    r.add_argument("--config", help="JSON config file")
    r.add_argument("--seed", type=int, help="unsigned 64-bit seed (overrides the config)")
    r.add_argument("--out", help="output directory (overrides the config)")
    r.add_argument("--workers", type=int, default=1, help="worker count; experiments run serially, so "
                                                          "outputs do not depend on it")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print(list_experiments())
        return 0
    try:
        raw = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    raw = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigurationError(f"cannot read config: {exc}") from exc
        cfg = resolve_config(raw, args.experiment, args.seed, args.out, args.workers)
    except ShapeLabError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        files = run(cfg)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ShapeLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for f in files:
        print(os.path.join(cfg["out"], f))
    return 0


if __name__ == "__main__":
    sys.exit(main())
