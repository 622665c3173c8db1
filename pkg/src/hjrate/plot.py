"""Dependency-free SVG plot of gap/eps against log eps."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .rates import RateFit, RateTable

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 30, 60
N_CURVE = 101


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _padded(lo: float, hi: float) -> tuple:
    if hi - lo < 1e-12 * max(1.0, abs(lo), abs(hi)):
        return lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def render_svg(table: RateTable, fit: RateFit) -> str:
    if len(table) == 0:
        raise ValueError("table is empty")
    log_eps = np.log10(table.eps)
    ratio = table.gap / table.eps
    curve_x = curve_y = None
    if fit.basis:
        lo_e, hi_e = float(table.eps.min()), float(table.eps.max())
        grid = np.geomspace(lo_e, hi_e, N_CURVE) if hi_e > lo_e else np.array([lo_e])
        curve_x, curve_y = np.log10(grid), fit.predict(grid) / grid
    ys = ratio if curve_y is None else np.concatenate([ratio, curve_y])
    x0, x1 = _padded(float(log_eps.min()), float(log_eps.max()))
    y0, y1 = _padded(float(ys.min()), float(ys.max()))
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return TOP + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        x = sx(v)
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 20}" font-size="11" '
                   f'text-anchor="middle">{10**v:.3g}</text>')
    for v in _ticks(y0, y1):
        y = sy(v)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 15}" font-size="13" '
               'text-anchor="middle">epsilon (log scale)</text>')
    out.append(f'<text x="18" y="{TOP + ph / 2:.2f}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 18 {TOP + ph / 2:.2f})">gap / epsilon</text>')
    if curve_x is not None:
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(curve_x, curve_y))
        out.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>')
    for a, b in zip(log_eps, ratio):
        out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="4" fill="#d62728"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_plot(table: RateTable, fit: RateFit, path) -> Path:
    path = Path(path)
    path.write_text(render_svg(table, fit), encoding="utf-8", newline="\n")
    return path
