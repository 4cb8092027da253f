"""Minimal static SVG line/scatter plots, no plotting dependency.

Fixed 800x600 viewport with margins, 1-2-5 tick placement (decade ticks in
log mode), one polyline or marker set per series, and a small legend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

WIDTH = 800
HEIGHT = 600
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 80, 24, 40, 64


@dataclass
class Series:
    label: str
    xs: list
    ys: list
    scatter: bool = False


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    ticks = []
    e = math.floor(math.log10(lo))
    while 10.0**e <= hi * (1 + 1e-12):
        if 10.0**e >= lo * (1 - 1e-12):
            ticks.append(10.0**e)
        e += 1
    return ticks or [lo, hi]


def _fmt(v: float) -> str:
    if v != 0 and (abs(v) < 1e-3 or abs(v) >= 1e5):
        return f"{v:.0e}"
    return f"{v:g}"


def render_plot(
    series: list[Series],
    xlabel: str,
    ylabel: str,
    title: str = "",
    logy: bool = False,
) -> str:
    """Render series to an SVG document string."""
    xs_all = [x for s in series for x in s.xs]
    ys_all = [y for s in series for y in s.ys]
    if logy:
        ys_all = [y for y in ys_all if y > 0]
    if not xs_all or not ys_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if logy:
        y_lo = max(y_lo, 1e-300)
        if y_hi <= y_lo:
            y_hi = y_lo * 10
        ly_lo, ly_hi = math.log10(y_lo), math.log10(y_hi)
        if ly_hi - ly_lo < 1e-9:
            ly_lo -= 0.5
            ly_hi += 0.5
    elif y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    plot_w = WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        if logy:
            f = (math.log10(max(y, 1e-300)) - ly_lo) / (ly_hi - ly_lo)
        else:
            f = (y - y_lo) / (y_hi - y_lo)
        return HEIGHT - _MARGIN_B - f * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    axis_style = 'stroke="black" stroke-width="1"'
    out.append(
        f'<line x1="{_MARGIN_L}" y1="{HEIGHT - _MARGIN_B}" x2="{WIDTH - _MARGIN_R}" '
        f'y2="{HEIGHT - _MARGIN_B}" {axis_style}/>'
    )
    out.append(
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{HEIGHT - _MARGIN_B}" {axis_style}/>'
    )
    for t in _nice_ticks(x_lo, x_hi):
        x = px(t)
        out.append(
            f'<line x1="{x:.1f}" y1="{HEIGHT - _MARGIN_B}" x2="{x:.1f}" '
            f'y2="{HEIGHT - _MARGIN_B + 6}" {axis_style}/>'
        )
        out.append(
            f'<text x="{x:.1f}" y="{HEIGHT - _MARGIN_B + 22}" font-size="13" '
            f'text-anchor="middle">{_fmt(t)}</text>'
        )
    y_ticks = _log_ticks(y_lo, y_hi) if logy else _nice_ticks(y_lo, y_hi)
    for t in y_ticks:
        y = py(t)
        out.append(
            f'<line x1="{_MARGIN_L - 6}" y1="{y:.1f}" x2="{_MARGIN_L}" y2="{y:.1f}" {axis_style}/>'
        )
        out.append(
            f'<text x="{_MARGIN_L - 10}" y="{y + 4:.1f}" font-size="13" '
            f'text-anchor="end">{_fmt(t)}</text>'
        )
    out.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{HEIGHT - 16}" font-size="15" '
        f'text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="20" y="{_MARGIN_T + plot_h / 2:.1f}" font-size="15" text-anchor="middle" '
        f'transform="rotate(-90 20 {_MARGIN_T + plot_h / 2:.1f})">{ylabel}</text>'
    )
    if title:
        out.append(
            f'<text x="{WIDTH / 2}" y="24" font-size="16" text-anchor="middle">{title}</text>'
        )
    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        pts = [
            (px(x), py(y))
            for x, y in zip(s.xs, s.ys)
            if not logy or y > 0
        ]
        if not pts:
            continue
        if s.scatter:
            for x, y in pts:
                out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{color}"/>')
        else:
            path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(
                f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        if s.label:
            ly = _MARGIN_T + 18 * (i + 1)
            lx = WIDTH - _MARGIN_R - 150
            out.append(
                f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            out.append(f'<text x="{lx + 30}" y="{ly}" font-size="13">{s.label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
