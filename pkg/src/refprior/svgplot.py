"""Minimal SVG 1.1 line plots: axes, polylines, legend. No plotting dependency.

Every figure is a fixed 800x600 viewBox with margins for tick labels and an
optional legend box in the upper right corner of the plot area. Curves with
non-finite points are split into finite segments rather than rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import ConfigError

WIDTH, HEIGHT = 800, 600
MARGIN = {"left": 72, "right": 24, "top": 44, "bottom": 58}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
FONT = "font-family=\"Helvetica, Arial, sans-serif\""

__all__ = ["Curve", "line_plot"]


@dataclass(frozen=True)
class Curve:
    x: np.ndarray
    y: np.ndarray
    label: str = ""
    color: str | None = None
    dashed: bool = False

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if x.size != y.size or x.size < 2:
            raise ConfigError("a curve needs matching x/y vectors of >= 2 points")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)


def _data_range(curves, pick, log: bool) -> tuple[float, float]:
    lo, hi = math.inf, -math.inf
    for c in curves:
        v = pick(c)
        keep = np.isfinite(v) & (np.isfinite(c.x) & np.isfinite(c.y))
        if log:
            keep &= v > 0
        if keep.any():
            lo = min(lo, float(v[keep].min()))
            hi = max(hi, float(v[keep].max()))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigError("nothing to plot: no finite data points")
    if lo == hi:
        pad = 0.5 if lo == 0 else abs(lo) * 0.05
        lo, hi = lo - pad, hi + pad
        if log:
            lo = hi / 10.0
    return lo, hi


def _nice_step(span: float, n: int) -> float:
    raw = span / max(n, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        first = math.ceil(math.log10(lo) - 1e-9)
        last = math.floor(math.log10(hi) + 1e-9)
        decades = [10.0 ** e for e in range(first, last + 1)]
        return decades if decades else [lo, hi]
    step = _nice_step(hi - lo, 5)
    first = math.ceil(lo / step - 1e-9)
    return [k * step for k in range(first, math.floor(hi / step + 1e-9) + 1)]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        s = f"{v:.1e}"
        mant, expo = s.split("e")
        return f"{mant}e{int(expo)}"
    out = f"{v:.6g}"
    return out


class _Scale:
    def __init__(self, lo: float, hi: float, px_lo: float, px_hi: float,
                 log: bool):
        if log and lo <= 0:
            raise ConfigError("log axis needs positive data")
        self.log = log
        self.lo = math.log10(lo) if log else lo
        self.hi = math.log10(hi) if log else hi
        self.px_lo, self.px_hi = px_lo, px_hi

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.log10(v) if self.log else v
        frac = (t - self.lo) / (self.hi - self.lo)
        return self.px_lo + frac * (self.px_hi - self.px_lo)


def _segments(xs: np.ndarray, ys: np.ndarray) -> list[str]:
    """Finite runs of a curve as SVG point strings."""
    finite = np.isfinite(xs) & np.isfinite(ys)
    out, pts = [], []
    for ok, px, py in zip(finite, xs, ys):
        if ok:
            pts.append(f"{px:.2f},{py:.2f}")
        elif len(pts) >= 2:
            out.append(" ".join(pts))
            pts = []
        else:
            pts = []
    if len(pts) >= 2:
        out.append(" ".join(pts))
    return out


def line_plot(curves, path, *, title: str = "", xlabel: str = "",
              ylabel: str = "", logx: bool = False, logy: bool = False,
              x_range: tuple[float, float] | None = None,
              y_range: tuple[float, float] | None = None) -> None:
    """Write an 800x600 SVG with the given curves, axes, ticks and legend."""
    curves = list(curves)
    if not curves:
        raise ConfigError("nothing to plot: no curves given")
    x_lo, x_hi = x_range or _data_range(curves, lambda c: c.x, logx)
    y_lo, y_hi = y_range or _data_range(curves, lambda c: c.y, logy)
    px = _Scale(x_lo, x_hi, MARGIN["left"], WIDTH - MARGIN["right"], logx)
    py = _Scale(y_lo, y_hi, HEIGHT - MARGIN["bottom"], MARGIN["top"], logy)
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        '<defs><clipPath id="plot">'
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}"/>'
        "</clipPath></defs>",
    ]
    if title:
        parts.append(f'<text x="{WIDTH / 2:.0f}" y="26" {FONT} font-size="17" '
                     f'text-anchor="middle">{escape(title)}</text>')

    # grid lines and ticks
    for tx in _ticks(x_lo, x_hi, logx):
        gx = float(px(tx))
        parts.append(f'<line x1="{gx:.2f}" y1="{y0}" x2="{gx:.2f}" y2="{y1}" '
                     'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{gx:.2f}" y="{y0 + 20}" {FONT} font-size="12" '
                     f'text-anchor="middle">{escape(_fmt(tx))}</text>')
    for ty in _ticks(y_lo, y_hi, logy):
        gy = float(py(ty))
        parts.append(f'<line x1="{x0}" y1="{gy:.2f}" x2="{x1}" y2="{gy:.2f}" '
                     'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{x0 - 8}" y="{gy + 4:.2f}" {FONT} font-size="12" '
                     f'text-anchor="end">{escape(_fmt(ty))}</text>')
    parts.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" '
                 f'height="{y0 - y1}" fill="none" stroke="black" stroke-width="1.2"/>')
    if xlabel:
        parts.append(f'<text x="{(x0 + x1) / 2:.0f}" y="{HEIGHT - 14}" {FONT} '
                     f'font-size="14" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cx, cy = 20, (y0 + y1) / 2
        parts.append(f'<text x="{cx}" y="{cy:.0f}" {FONT} font-size="14" '
                     f'text-anchor="middle" transform="rotate(-90 {cx} {cy:.0f})">'
                     f'{escape(ylabel)}</text>')

    parts.append('<g clip-path="url(#plot)">')
    for i, c in enumerate(curves):
        color = c.color or PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="7,4"' if c.dashed else ""
        for seg in _segments(px(c.x), py(c.y)):
            parts.append(f'<polyline points="{seg}" fill="none" '
                         f'stroke="{color}" stroke-width="1.8"{dash}/>')
    parts.append("</g>")

    labeled = [(i, c) for i, c in enumerate(curves) if c.label]
    if labeled:
        lh, pad = 19, 8
        box_w = 14 + 30 + 8 + max(len(c.label) for _, c in labeled) * 7
        box_h = 2 * pad + lh * len(labeled) - 6
        bx, by = x1 - box_w - 10, y1 + 10
        parts.append(f'<rect x="{bx}" y="{by}" width="{box_w}" height="{box_h}" '
                     'fill="white" fill-opacity="0.85" stroke="#999999"/>')
        for row, (i, c) in enumerate(labeled):
            color = c.color or PALETTE[i % len(PALETTE)]
            dash = ' stroke-dasharray="7,4"' if c.dashed else ""
            ly = by + pad + 6 + row * lh
            parts.append(f'<line x1="{bx + 8}" y1="{ly}" x2="{bx + 38}" y2="{ly}" '
                         f'stroke="{color}" stroke-width="1.8"{dash}/>')
            parts.append(f'<text x="{bx + 46}" y="{ly + 4}" {FONT} '
                         f'font-size="12">{escape(c.label)}</text>')
    parts.append("</svg>")

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
