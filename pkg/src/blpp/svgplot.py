"""Standalone SVG line plots; no external renderer required.

Byte-deterministic output: same data, same bytes.  Tail-curve plots draw
Wilson error bars; log-log plots label ticks at powers of two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InputError

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 36, 50
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


def _fmt(v: float) -> str:
    return f"{v:.6g}"


@dataclass
class Series:
    x: list
    y: list
    label: str = ""
    y_low: list | None = None   # error bar extents
    y_high: list | None = None
    dashed: bool = False


@dataclass
class Figure:
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    log_x: bool = False
    log_y: bool = False
    series: list = field(default_factory=list)


def _ticks_linear(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for m in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= m * mag:
            step = m * mag
            break
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-12 * max(1.0, abs(hi)):
        out.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return out


def _ticks_pow2(lo: float, hi: float) -> list[float]:
    """Ticks at powers of two covering [lo, hi] (both positive)."""
    e_lo = math.floor(math.log2(lo))
    e_hi = math.ceil(math.log2(hi))
    step = max(1, (e_hi - e_lo) // 8)
    return [2.0 ** e for e in range(e_lo, e_hi + 1, step)]


def _pow2_label(v: float) -> str:
    e = math.log2(v)
    if abs(e - round(e)) < 1e-9:
        return f"2^{int(round(e))}"
    return _fmt(v)


def render(fig: Figure) -> str:
    xs_all, ys_all = [], []
    for s in fig.series:
        xs_all.extend(s.x)
        ys_all.extend(s.y)
        if s.y_low is not None:
            ys_all.extend(s.y_low)
        if s.y_high is not None:
            ys_all.extend(s.y_high)
    if fig.log_x:
        xs_all = [v for v in xs_all if v > 0]
    if fig.log_y:
        ys_all = [v for v in ys_all if v > 0]

    def span(vals, log):
        if not vals:
            return (0.1, 1.0) if log else (0.0, 1.0)
        lo, hi = min(vals), max(vals)
        if log:
            if hi == lo:
                lo, hi = lo / 2, hi * 2
            return lo, hi
        pad = 0.05 * (hi - lo) if hi > lo else max(0.5, abs(hi) * 0.1)
        return lo - pad, hi + pad

    x0, x1 = span(xs_all, fig.log_x)
    y0, y1 = span(ys_all, fig.log_y)

    def tx(v: float) -> float:
        if fig.log_x:
            f = (math.log(v) - math.log(x0)) / (math.log(x1) - math.log(x0))
        else:
            f = (v - x0) / (x1 - x0)
        return MARGIN_L + f * (WIDTH - MARGIN_L - MARGIN_R)

    def ty(v: float) -> float:
        if fig.log_y:
            f = (math.log(v) - math.log(y0)) / (math.log(y1) - math.log(y0))
        else:
            f = (v - y0) / (y1 - y0)
        return HEIGHT - MARGIN_B - f * (HEIGHT - MARGIN_T - MARGIN_B)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="monospace" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="black"/>',
    ]
    if fig.title:
        out.append(f'<text x="{WIDTH // 2}" y="20" text-anchor="middle">{fig.title}</text>')
    x_ticks = _ticks_pow2(x0, x1) if fig.log_x else _ticks_linear(x0, x1)
    for t in x_ticks:
        if fig.log_x and not (x0 <= t <= x1):
            continue
        px = tx(t)
        out.append(f'<line x1="{px:.2f}" y1="{HEIGHT - MARGIN_B}" x2="{px:.2f}" '
                   f'y2="{HEIGHT - MARGIN_B + 5}" stroke="black"/>')
        label = _pow2_label(t) if fig.log_x else _fmt(t)
        out.append(f'<text x="{px:.2f}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle">{label}</text>')
    y_ticks = _ticks_pow2(y0, y1) if fig.log_y else _ticks_linear(y0, y1)
    for t in y_ticks:
        if fig.log_y and not (y0 <= t <= y1):
            continue
        py = ty(t)
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{py:.2f}" x2="{MARGIN_L}" y2="{py:.2f}" stroke="black"/>')
        label = _pow2_label(t) if fig.log_y else _fmt(t)
        out.append(f'<text x="{MARGIN_L - 8}" y="{py + 4:.2f}" text-anchor="end">{label}</text>')
    if fig.x_label:
        out.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle">{fig.x_label}</text>')
    if fig.y_label:
        out.append(f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {HEIGHT // 2})">{fig.y_label}</text>')

    for si, s in enumerate(fig.series):
        color = PALETTE[si % len(PALETTE)]
        pts = [(vx, vy) for vx, vy in zip(s.x, s.y)
               if (not fig.log_x or vx > 0) and (not fig.log_y or vy > 0)]
        if len(pts) >= 2:
            path = " ".join(f"{tx(vx):.2f},{ty(vy):.2f}" for vx, vy in pts)
            dash = ' stroke-dasharray="6 4"' if s.dashed else ""
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}"{dash}/>')
        for vx, vy in pts:
            out.append(f'<circle cx="{tx(vx):.2f}" cy="{ty(vy):.2f}" r="3" fill="{color}"/>')
        if s.y_low is not None and s.y_high is not None:
            for vx, lo_v, hi_v in zip(s.x, s.y_low, s.y_high):
                if fig.log_y:
                    lo_v = max(lo_v, y0)
                    if hi_v <= 0:
                        continue
                px = tx(vx)
                out.append(f'<line x1="{px:.2f}" y1="{ty(lo_v):.2f}" x2="{px:.2f}" '
                           f'y2="{ty(hi_v):.2f}" stroke="{color}"/>')
        if s.label:
            out.append(f'<text x="{WIDTH - MARGIN_R - 6}" y="{MARGIN_T + 16 + 14 * si}" '
                       f'text-anchor="end" fill="{color}">{s.label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def figure_from_csv(header: list[str], rows: list[list[str]], loglog: bool = False,
                    reference_exponent: float | None = None, title: str = "") -> Figure:
    """Heuristic plot for an estimator CSV.

    Tail tables (level, probability, wilson_low, wilson_high) get error bars;
    otherwise the first two numeric columns are plotted.  loglog labels ticks
    at powers of two.  A reference exponent draws a shape-only decay overlay
    through the first positive point.
    """
    cols = {name: i for i, name in enumerate(header)}
    fig = Figure(title=title, log_x=loglog, log_y=loglog)

    def col(name):
        return [float(r[cols[name]]) for r in rows]

    if {"level", "probability", "wilson_low", "wilson_high"} <= set(cols):
        if rows:
            fig.series.append(Series(x=col("level"), y=col("probability"),
                                     y_low=col("wilson_low"), y_high=col("wilson_high"),
                                     label="empirical"))
        fig.x_label, fig.y_label = "level", "exceedance probability"
        if reference_exponent is not None and rows:
            xs = [v for v, p in zip(col("level"), col("probability")) if v > 0 and p > 0]
            ps = [p for v, p in zip(col("level"), col("probability")) if v > 0 and p > 0]
            if xs:
                a = -math.log(ps[0]) / xs[0] ** reference_exponent
                fig.series.append(Series(x=xs, y=[math.exp(-a * v ** reference_exponent) for v in xs],
                                         label=f"shape only: exp(-a t^{_fmt(reference_exponent)})",
                                         dashed=True))
    else:
        if len(header) < 2:
            raise InputError("need at least two columns to plot")
        if rows:
            xs = [float(r[0]) for r in rows]
            ys = [float(r[1]) for r in rows]
            fig.series.append(Series(x=xs, y=ys, label=header[1]))
        fig.x_label, fig.y_label = header[0], header[1] if len(header) > 1 else ""
    return fig
