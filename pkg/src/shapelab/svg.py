"""Minimal SVG line and scatter plots (no rendering dependencies)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

W, H, PAD = 640, 420, 56
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def _fmt(v):
    return f"{v:.2f}"


def _transform(vals, log):
    v = np.asarray(vals, dtype=float)
    if log:
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.where(v > 0, np.log10(v), np.nan)
    return v


def _range(arrs):
    finite = [a[np.isfinite(a)] for a in arrs]
    finite = [a for a in finite if a.size]
    if not finite:
        return 0.0, 1.0
    lo = min(float(a.min()) for a in finite)
    hi = max(float(a.max()) for a in finite)
    if hi - lo < 1e-300:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def plot(series, title="", xlabel="", ylabel="", logx=False, logy=False, equal=False):
    """series: list of dicts with keys x, y, and optionally label, kind ('line' or 'scatter')."""
    xs = [_transform(s["x"], logx) for s in series]
    ys = [_transform(s["y"], logy) for s in series]
    x0, x1 = _range(xs)
    y0, y1 = _range(ys)
    if equal:
        span = max(x1 - x0, y1 - y0)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        x0, x1, y0, y1 = cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2
    pw, ph = W - 2 * PAD, H - 2 * PAD

    def px(v):
        return PAD + (v - x0) / (x1 - x0) * pw

    def py(v):
        return H - PAD - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{PAD}" y="{PAD}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle" font-size="12">'
           f'{escape(xlabel + (" (log10)" if logx else ""))}</text>',
           f'<text x="14" y="{H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {H / 2})">'
           f'{escape(ylabel + (" (log10)" if logy else ""))}</text>']
    for k in range(5):
        tx = x0 + (x1 - x0) * k / 4
        ty = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{_fmt(px(tx))}" y="{H - PAD + 16}" text-anchor="middle" font-size="10">{tx:.3g}</text>')
        out.append(f'<text x="{PAD - 4}" y="{_fmt(py(ty) + 3)}" text-anchor="end" font-size="10">{ty:.3g}</text>')
    for i, (s, x, y) in enumerate(zip(series, xs, ys)):
        col = s.get("color", COLORS[i % len(COLORS)])
        ok = np.isfinite(x) & np.isfinite(y)
        if s.get("kind", "line") == "scatter":
            r = s.get("radius", 2.0)
            for a, b in zip(x[ok], y[ok]):
                out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="{r}" fill="{col}" fill-opacity="0.6"/>')
        elif ok.sum() >= 2:
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x[ok], y[ok]))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.2"/>')
        if s.get("label"):
            out.append(f'<text x="{W - PAD - 4}" y="{PAD + 14 + 14 * i}" text-anchor="end" font-size="11" '
                       f'fill="{col}">{escape(s["label"])}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

