"""Minimal deterministic SVG line plots.

Polyline series in a fixed-size viewBox with auto-scaled axes, boundary
ticks, optional equal aspect and point markers.  Output is a plain string;
byte-identical for identical inputs.
"""

from __future__ import annotations

import math

import numpy as np

_PALETTE = ("#c0392b", "#2956b2", "#222222", "#1e8449", "#8e44ad", "#b9770e")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


class LinePlot:
    """Collects series/markers, then renders one SVG document."""

    def __init__(self, title: str = "", xlabel: str = "", ylabel: str = "",
                 width: int = 760, height: int = 480, equal_aspect: bool = False,
                 max_points: int = 4000):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.width, self.height = width, height
        self.equal_aspect = equal_aspect
        self.max_points = max_points
        self._series: list[tuple[np.ndarray, np.ndarray, str, float, bool, str]] = []
        self._markers: list[tuple[float, float, str, float]] = []

    def add_series(self, x, y, color: str | None = None, width: float = 1.2,
                   dashed: bool = False, label: str = ""):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        x, y = x[keep], y[keep]
        if x.size > self.max_points:
            stride = int(math.ceil(x.size / self.max_points))
            x = np.concatenate((x[::stride], x[-1:]))
            y = np.concatenate((y[::stride], y[-1:]))
        if color is None:
            color = _PALETTE[len(self._series) % len(_PALETTE)]
        self._series.append((x, y, color, width, dashed, label))

    def add_marker(self, x: float, y: float, color: str = "#000000",
                   radius: float = 4.0):
        self._markers.append((float(x), float(y), color, radius))

    def _limits(self):
        xs = [s[0] for s in self._series if s[0].size] + \
             [np.array([m[0]]) for m in self._markers]
        ys = [s[1] for s in self._series if s[1].size] + \
             [np.array([m[1]]) for m in self._markers]
        if not xs:
            return -1.0, 1.0, -1.0, 1.0
        x_lo = min(float(a.min()) for a in xs)
        x_hi = max(float(a.max()) for a in xs)
        y_lo = min(float(a.min()) for a in ys)
        y_hi = max(float(a.max()) for a in ys)
        if x_hi == x_lo:
            x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
        if y_hi == y_lo:
            y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
        pad_x = 0.04 * (x_hi - x_lo)
        pad_y = 0.04 * (y_hi - y_lo)
        return x_lo - pad_x, x_hi + pad_x, y_lo - pad_y, y_hi + pad_y

    def render(self) -> str:
        ml, mr, mt, mb = 64, 16, 34, 46
        pw, ph = self.width - ml - mr, self.height - mt - mb
        x_lo, x_hi, y_lo, y_hi = self._limits()
        if self.equal_aspect:
            sx, sy = pw / (x_hi - x_lo), ph / (y_hi - y_lo)
            s = min(sx, sy)
            cx, cy = 0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)
            x_lo, x_hi = cx - 0.5 * pw / s, cx + 0.5 * pw / s
            y_lo, y_hi = cy - 0.5 * ph / s, cy + 0.5 * ph / s

        def px(x):
            return ml + (x - x_lo) / (x_hi - x_lo) * pw

        def py(y):
            return mt + (y_hi - y) / (y_hi - y_lo) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" '
               f'viewBox="0 0 {self.width} {self.height}" '
               f'font-family="sans-serif" font-size="12">',
               f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
               f'fill="#ffffff" stroke="#555555" stroke-width="1"/>']
        if self.title:
            out.append(f'<text x="{self.width // 2}" y="20" '
                       f'text-anchor="middle" font-size="14">{self.title}</text>')
        for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
            xv = x_lo + frac * (x_hi - x_lo)
            yv = y_lo + frac * (y_hi - y_lo)
            out.append(f'<text x="{_fmt(px(xv))}" y="{self.height - mb + 16}" '
                       f'text-anchor="middle">{_tick_label(xv)}</text>')
            out.append(f'<text x="{ml - 6}" y="{_fmt(py(yv) + 4)}" '
                       f'text-anchor="end">{_tick_label(yv)}</text>')
            out.append(f'<line x1="{_fmt(px(xv))}" y1="{mt + ph}" '
                       f'x2="{_fmt(px(xv))}" y2="{mt + ph + 4}" stroke="#555555"/>')
            out.append(f'<line x1="{ml - 4}" y1="{_fmt(py(yv))}" '
                       f'x2="{ml}" y2="{_fmt(py(yv))}" stroke="#555555"/>')
        if self.xlabel:
            out.append(f'<text x="{self.width // 2}" y="{self.height - 10}" '
                       f'text-anchor="middle">{self.xlabel}</text>')
        if self.ylabel:
            out.append(f'<text x="16" y="{self.height // 2}" text-anchor="middle" '
                       f'transform="rotate(-90 16 {self.height // 2})">'
                       f'{self.ylabel}</text>')

        legend_y = mt + 14
        for x, y, color, width, dashed, label in self._series:
            pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
            dash = ' stroke-dasharray="6 4"' if dashed else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                       f'stroke-width="{width}"{dash}/>')
            if label:
                out.append(f'<line x1="{ml + pw - 120}" y1="{legend_y - 4}" '
                           f'x2="{ml + pw - 96}" y2="{legend_y - 4}" '
                           f'stroke="{color}" stroke-width="{width}"{dash}/>')
                out.append(f'<text x="{ml + pw - 90}" y="{legend_y}">{label}</text>')
                legend_y += 16
        for x, y, color, radius in self._markers:
            out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" '
                       f'r="{radius}" fill="none" stroke="{color}" '
                       f'stroke-width="1.5"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def split_wrapped(x, y, jump: float = math.pi):
    """Split a wrapped-angle path into continuous segments (for torus
    phase portraits): a new segment starts wherever either coordinate jumps
    by more than `jump`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        return []
    breaks = np.flatnonzero((np.abs(np.diff(x)) > jump) |
                            (np.abs(np.diff(y)) > jump)) + 1
    return [(xs, ys) for xs, ys in zip(np.split(x, breaks), np.split(y, breaks))
            if xs.size > 1]
