"""Minimal self-contained SVG charts: line charts with bands, grouped bars.

Output depends only on the input numbers, so identical data gives identical
bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]

PANEL_W = 420
PANEL_H = 300
PAD_L, PAD_R, PAD_T, PAD_B = 64, 16, 36, 48


@dataclass
class Series:
    label: str
    x: list[float]
    y: list[float]
    band: list[float] | None = None  # symmetric half-width around y
    dashed: bool = False


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)
    # grouped bars: categories along x, one bar per group member
    categories: list[str] | None = None
    groups: dict[str, list[float]] | None = None


def _num(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi == lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


def _fmt_tick(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1000 or abs(v) < 0.01:
        return f"{v:.3g}"
    return f"{v:.4g}"


class _Frame:
    def __init__(self, ox: float, xlo: float, xhi: float, ylo: float, yhi: float):
        self.ox = ox
        self.xlo, self.xhi = xlo, (xhi if xhi > xlo else xlo + 1.0)
        self.ylo, self.yhi = ylo, (yhi if yhi > ylo else ylo + 1.0)
        self.w = PANEL_W - PAD_L - PAD_R
        self.h = PANEL_H - PAD_T - PAD_B

    def sx(self, x: float) -> float:
        return self.ox + PAD_L + (x - self.xlo) / (self.xhi - self.xlo) * self.w

    def sy(self, y: float) -> float:
        return PAD_T + self.h - (y - self.ylo) / (self.yhi - self.ylo) * self.h


def _finite(values) -> list[float]:
    return [v for v in values if math.isfinite(v)]


def _axes(out: list[str], fr: _Frame, panel: Panel, xticks: bool = True) -> None:
    x0, y0 = fr.ox + PAD_L, PAD_T + fr.h
    out.append(f'<rect x="{_num(x0)}" y="{PAD_T}" width="{fr.w}" height="{fr.h}" '
               'fill="none" stroke="#333" stroke-width="1"/>')
    for t in _nice_ticks(fr.ylo, fr.yhi):
        y = fr.sy(t)
        out.append(f'<line x1="{_num(x0)}" y1="{_num(y)}" x2="{_num(x0 + fr.w)}" y2="{_num(y)}" '
                   'stroke="#ddd" stroke-width="0.5"/>')
        out.append(f'<text x="{_num(x0 - 6)}" y="{_num(y + 4)}" font-size="11" '
                   f'text-anchor="end">{_fmt_tick(t)}</text>')
    if xticks:
        for t in _nice_ticks(fr.xlo, fr.xhi):
            x = fr.sx(t)
            out.append(f'<text x="{_num(x)}" y="{_num(y0 + 16)}" font-size="11" '
                       f'text-anchor="middle">{_fmt_tick(t)}</text>')
    out.append(f'<text x="{_num(x0 + fr.w / 2)}" y="{PAD_T - 14}" font-size="13" '
               f'text-anchor="middle" font-weight="bold">{escape(panel.title)}</text>')
    out.append(f'<text x="{_num(x0 + fr.w / 2)}" y="{_num(y0 + 36)}" font-size="12" '
               f'text-anchor="middle">{escape(panel.xlabel)}</text>')
    ly = PAD_T + fr.h / 2
    out.append(f'<text x="{_num(fr.ox + 14)}" y="{_num(ly)}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 {_num(fr.ox + 14)} {_num(ly)})">{escape(panel.ylabel)}</text>')


def _legend(out: list[str], fr: _Frame, labels: list[tuple[str, str, bool]]) -> None:
    x = fr.ox + PAD_L + 8
    for k, (label, color, dashed) in enumerate(labels):
        y = PAD_T + 14 + 14 * k
        dash = ' stroke-dasharray="5,3"' if dashed else ""
        out.append(f'<line x1="{_num(x)}" y1="{_num(y - 4)}" x2="{_num(x + 18)}" y2="{_num(y - 4)}" '
                   f'stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{_num(x + 24)}" y="{_num(y)}" font-size="11">{escape(label)}</text>')


def _line_panel(out: list[str], ox: float, panel: Panel) -> None:
    xs = _finite(v for s in panel.series for v in s.x)
    ys = []
    for s in panel.series:
        band = s.band or [0.0] * len(s.y)
        for y, b in zip(s.y, band):
            ys.extend(_finite([y - b if math.isfinite(b) else y, y + b if math.isfinite(b) else y]))
    if not xs or not ys:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    ylo, yhi = min(ys), max(ys)
    margin = 0.05 * (yhi - ylo or 1.0)
    fr = _Frame(ox, min(xs), max(xs), ylo - margin, yhi + margin)
    _axes(out, fr, panel)
    legend = []
    for k, s in enumerate(panel.series):
        color = COLORS[k % len(COLORS)]
        pts = [(x, y, b) for x, y, b in zip(s.x, s.y, s.band or [0.0] * len(s.y))
               if math.isfinite(x) and math.isfinite(y)]
        if s.band and pts:
            upper = [f"{_num(fr.sx(x))},{_num(fr.sy(y + (b if math.isfinite(b) else 0)))}" for x, y, b in pts]
            lower = [f"{_num(fr.sx(x))},{_num(fr.sy(y - (b if math.isfinite(b) else 0)))}" for x, y, b in reversed(pts)]
            out.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" '
                       'fill-opacity="0.18" stroke="none"/>')
        path = " ".join(f"{_num(fr.sx(x))},{_num(fr.sy(y))}" for x, y, _ in pts)
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>')
        legend.append((s.label, color, s.dashed))
    _legend(out, fr, legend)


def _bar_panel(out: list[str], ox: float, panel: Panel) -> None:
    cats = panel.categories or []
    groups = panel.groups or {}
    top = max([v for vals in groups.values() for v in vals] + [0.0])
    fr = _Frame(ox, 0.0, float(max(len(cats), 1)), 0.0, top * 1.08 if top > 0 else 1.0)
    _axes(out, fr, panel, xticks=False)
    slot = fr.w / max(len(cats), 1)
    bar_w = 0.8 * slot / max(len(groups), 1)
    legend = []
    for g, (name, vals) in enumerate(groups.items()):
        color = COLORS[g % len(COLORS)]
        for c, v in enumerate(vals):
            x = fr.ox + PAD_L + c * slot + 0.1 * slot + g * bar_w
            y = fr.sy(v)
            out.append(f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(bar_w)}" '
                       f'height="{_num(PAD_T + fr.h - y)}" fill="{color}"/>')
        legend.append((name, color, False))
    stride = max(1, math.ceil(len(cats) / 12))
    for c, label in enumerate(cats):
        if c % stride:
            continue
        x = fr.ox + PAD_L + (c + 0.5) * slot
        out.append(f'<text x="{_num(x)}" y="{_num(PAD_T + fr.h + 16)}" font-size="10" '
                   f'text-anchor="middle">{escape(label)}</text>')
    _legend(out, fr, legend)


def render_svg(title: str, panels: list[Panel]) -> str:
    width = PANEL_W * len(panels)
    height = PANEL_H + 24
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="Helvetica, Arial, sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="{height - 6}" font-size="12" text-anchor="middle" '
        f'fill="#555">{escape(title)}</text>',
    ]
    for k, panel in enumerate(panels):
        if panel.categories is not None:
            _bar_panel(out, k * PANEL_W, panel)
        else:
            _line_panel(out, k * PANEL_W, panel)
    out.append("</svg>")
    return "\n".join(out) + "\n"
