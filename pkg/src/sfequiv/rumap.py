"""Deterministic SVG rendering of the risk-utility map.

Utility runs along x in [0, 1]; risk along y, with the lower bound extended
below 0 whenever a point carries a negative rescaled risk.  The sample curve
is a polyline whose vertices are labelled with their fraction; synthetic
datasets are drawn as distinct markers with a legend.  Output contains no
timestamps or environment-dependent content, so reruns are byte-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .equivalence import format_fraction
from .sampling import RUCurve

WIDTH, HEIGHT = 720, 520
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 30, 30, 60

_MARKERS = ("square", "diamond", "triangle", "cross")
_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


@dataclass(frozen=True)
class RUPoint:
    """One dot on the map: a sample fraction or a synthetic dataset."""

    label: str
    utility: float
    risk: float
    kind: str  # "sample" | "synthetic"
    fraction: float | None = None


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class _Scale:
    def __init__(self, y_min: float, y_max: float):
        self.y_min, self.y_max = y_min, y_max

    def x(self, u: float) -> float:
        return MARGIN_L + u * (WIDTH - MARGIN_L - MARGIN_R)

    def y(self, r: float) -> float:
        span = self.y_max - self.y_min
        return HEIGHT - MARGIN_B - (r - self.y_min) / span * (HEIGHT - MARGIN_T - MARGIN_B)


def _marker(shape: str, x: float, y: float, color: str) -> str:
    s = 5.0
    if shape == "square":
        return (f'<rect class="synthetic-marker" x="{_fmt(x - s)}" y="{_fmt(y - s)}" '
                f'width="{_fmt(2 * s)}" height="{_fmt(2 * s)}" fill="{color}"/>')
    if shape == "diamond":
        pts = f"{_fmt(x)},{_fmt(y - s)} {_fmt(x + s)},{_fmt(y)} {_fmt(x)},{_fmt(y + s)} {_fmt(x - s)},{_fmt(y)}"
        return f'<polygon class="synthetic-marker" points="{pts}" fill="{color}"/>'
    if shape == "triangle":
        pts = f"{_fmt(x)},{_fmt(y - s)} {_fmt(x + s)},{_fmt(y + s)} {_fmt(x - s)},{_fmt(y + s)}"
        return f'<polygon class="synthetic-marker" points="{pts}" fill="{color}"/>'
    return (f'<path class="synthetic-marker" d="M {_fmt(x - s)} {_fmt(y - s)} L {_fmt(x + s)} {_fmt(y + s)} '
            f'M {_fmt(x - s)} {_fmt(y + s)} L {_fmt(x + s)} {_fmt(y - s)}" '
            f'stroke="{color}" stroke-width="2" fill="none"/>')


def render_rumap(curve: RUCurve, synthetic: list[RUPoint]) -> str:
    """SVG document (as a string) for one curve plus synthetic points."""
    risks = [p.mean_risk for p in curve.points] + [p.risk for p in synthetic]
    y_min = min(0.0, math.floor(min(risks) * 10) / 10) if risks else 0.0
    scale = _Scale(y_min, 1.0)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]

    # axes and ticks
    x0, x1 = scale.x(0.0), scale.x(1.0)
    y0, y1 = scale.y(scale.y_min), scale.y(1.0)
    parts.append(f'<g class="axes" stroke="#333" stroke-width="1">')
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}"/>')
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}"/>')
    parts.append('</g>')
    parts.append('<g class="ticks" font-family="sans-serif" font-size="11" fill="#333">')
    for i in range(11):
        u = i / 10
        parts.append(f'<text x="{_fmt(scale.x(u) - 8)}" y="{_fmt(y0 + 16)}">{u:.1f}</text>')
    tick = scale.y_min
    while tick <= 1.0 + 1e-9:
        parts.append(f'<text x="{_fmt(x0 - 34)}" y="{_fmt(scale.y(tick) + 4)}">{tick:.1f}</text>')
        tick = round(tick + 0.2, 10)
    parts.append(f'<text x="{_fmt((x0 + x1) / 2 - 20)}" y="{_fmt(HEIGHT - 14)}">utility</text>')
    parts.append(f'<text x="16" y="{_fmt((y0 + y1) / 2)}" transform="rotate(-90 16 {_fmt((y0 + y1) / 2)})">risk</text>')
    parts.append('</g>')

    if scale.y_min < 0:
        zero = scale.y(0.0)
        parts.append(f'<line class="zero-line" x1="{_fmt(x0)}" y1="{_fmt(zero)}" '
                     f'x2="{_fmt(x1)}" y2="{_fmt(zero)}" stroke="#bbb" stroke-dasharray="4 3"/>')

    # sample curve: connected vertices labelled by fraction
    pts = " ".join(f"{_fmt(scale.x(p.mean_utility))},{_fmt(scale.y(p.mean_risk))}"
                   for p in curve.points)
    parts.append(f'<polyline class="sample-curve" points="{pts}" fill="none" '
                 'stroke="#555" stroke-width="1.5"/>')
    parts.append('<g class="sample-labels" font-family="sans-serif" font-size="9" fill="#555">')
    for p in curve.points:
        parts.append(f'<text x="{_fmt(scale.x(p.mean_utility) + 4)}" '
                     f'y="{_fmt(scale.y(p.mean_risk) - 3)}">{format_fraction(p.fraction)}</text>')
    parts.append('</g>')

    if synthetic:
        parts.append('<g class="synthetic-points">')
        for i, p in enumerate(synthetic):
            shape = _MARKERS[i % len(_MARKERS)]
            color = _COLORS[i % len(_COLORS)]
            parts.append(_marker(shape, scale.x(p.utility), scale.y(p.risk), color))
            parts.append(f'<text x="{_fmt(scale.x(p.utility) + 7)}" y="{_fmt(scale.y(p.risk) + 4)}" '
                         f'font-family="sans-serif" font-size="10" fill="{color}">{p.label}</text>')
        parts.append('</g>')
        parts.append('<g class="legend" font-family="sans-serif" font-size="11">')
        lx, ly = MARGIN_L + 10, MARGIN_T + 6
        parts.append(f'<rect x="{_fmt(lx - 6)}" y="{_fmt(ly - 4)}" width="150" '
                     f'height="{_fmt(16.0 * len(synthetic) + 8)}" fill="white" stroke="#999"/>')
        for i, p in enumerate(synthetic):
            shape = _MARKERS[i % len(_MARKERS)]
            color = _COLORS[i % len(_COLORS)]
            cy = ly + 8 + 16.0 * i
            parts.append(_marker(shape, lx + 4, cy, color))
            parts.append(f'<text x="{_fmt(lx + 16)}" y="{_fmt(cy + 4)}" fill="#333">{p.label}</text>')
        parts.append('</g>')

    parts.append('</svg>')
    return "\n".join(parts) + "\n"


def write_rumap(curve: RUCurve, synthetic: list[RUPoint], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_rumap(curve, synthetic))
