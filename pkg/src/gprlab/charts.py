"""Minimal hand-rolled SVG line charts.

One pure function: numeric series in, SVG text out. No file handles, no
global state, so the same inputs always produce byte-identical markup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

__all__ = ["Series", "line_chart"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    """One curve; ``ci`` holds optional half widths for a band around ys."""

    label: str
    xs: Sequence[float]
    ys: Sequence[float]
    ci: Optional[Sequence[float]] = None


def _nice_ticks(lo: float, hi: float, target: int = 5) -> List[float]:
    """Round tick positions at a 1/2/5 times power-of-ten spacing."""
    if hi <= lo:
        return [lo]
    span = hi - lo
    raw = span / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if span / step <= target:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _points(
    xs: Sequence[float], ys: Sequence[float]
) -> List[Tuple[float, float]]:
    return [
        (float(x), float(y))
        for x, y in zip(xs, ys)
        if math.isfinite(x) and math.isfinite(y)
    ]


def line_chart(
    series: Sequence[Series],
    *,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 640,
    height: int = 420,
) -> str:
    """Render series as polylines with axes, ticks, a legend, and translucent
    confidence bands where half widths are given."""
    if not series:
        raise ValueError("need at least one series")

    xs_all: List[float] = []
    ys_all: List[float] = []
    for s in series:
        if len(s.xs) != len(s.ys):
            raise ValueError(f"series {s.label!r}: xs and ys lengths differ")
        if s.ci is not None and len(s.ci) != len(s.ys):
            raise ValueError(f"series {s.label!r}: ci length differs from ys")
        for x, y in _points(s.xs, s.ys):
            xs_all.append(x)
            ys_all.append(y)
        if s.ci is not None:
            for x, y, h in zip(s.xs, s.ys, s.ci):
                if math.isfinite(y) and math.isfinite(h):
                    ys_all.extend([y - h, y + h])
    if not xs_all:
        raise ValueError("no finite data points to plot")

    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        pad = 0.5 if y_lo == 0 else abs(y_lo) * 0.1
        y_lo, y_hi = y_lo - pad, y_hi + pad
    y_pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    ml, mr, mt, mb = 62, 18, 34 if title else 16, 46
    pw, ph = width - ml - mr, height - mt - mb

    def px(x: float) -> float:
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y: float) -> float:
        return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out: List[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
            f'font-size="14">{escape(title)}</text>'
        )

    for t in _nice_ticks(x_lo, x_hi):
        cx = px(t)
        out.append(
            f'<line x1="{cx:.2f}" y1="{mt}" x2="{cx:.2f}" y2="{mt + ph}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{cx:.2f}" y="{mt + ph + 16}" text-anchor="middle">{_fmt(t)}</text>'
        )
    for t in _nice_ticks(y_lo, y_hi):
        cy = py(t)
        out.append(
            f'<line x1="{ml}" y1="{cy:.2f}" x2="{ml + pw}" y2="{cy:.2f}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{ml - 6}" y="{cy + 4:.2f}" text-anchor="end">{_fmt(t)}</text>'
        )
    out.append(
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" '
        f'stroke="#333333" stroke-width="1"/>'
    )
    if x_label:
        out.append(
            f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" '
            f'text-anchor="middle">{escape(x_label)}</text>'
        )
    if y_label:
        out.append(
            f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{escape(y_label)}</text>'
        )

    for idx, s in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        if s.ci is not None:
            band = [
                (x, y, h)
                for x, y, h in zip(s.xs, s.ys, s.ci)
                if math.isfinite(x) and math.isfinite(y) and math.isfinite(h)
            ]
            if len(band) >= 2:
                upper = [f"{px(x):.2f},{py(y + h):.2f}" for x, y, h in band]
                lower = [f"{px(x):.2f},{py(y - h):.2f}" for x, y, h in reversed(band)]
                out.append(
                    f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
                    f'fill-opacity="0.18" stroke="none"/>'
                )
        pts = _points(s.xs, s.ys)
        if len(pts) >= 2:
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            out.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                f'stroke-width="1.8"/>'
            )
        for x, y in pts:
            out.append(
                f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.2" fill="{color}"/>'
            )

    lx, ly = ml + pw - 8, mt + 10
    for idx, s in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        cy = ly + 16 * idx
        out.append(
            f'<line x1="{lx - 30}" y1="{cy}" x2="{lx - 12}" y2="{cy}" '
            f'stroke="{color}" stroke-width="2.5"/>'
        )
        out.append(
            f'<text x="{lx - 34}" y="{cy + 4}" text-anchor="end">{escape(s.label)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out)
