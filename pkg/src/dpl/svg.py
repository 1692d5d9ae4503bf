"""Minimal self-contained SVG output: heatmaps, polylines and overlays.

Output is deterministic (fixed number formatting, no timestamps) so that
files can be diffed across runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

KINDS = ("heatmap", "curves", "overlay")
COLORMAPS = ("diverging_blue_red",)

BLUE = (33, 102, 172)
WHITE = (247, 247, 247)
RED = (178, 24, 43)
MISSING = (160, 160, 160)
CURVE_COLORS = ("#000000", "#1b9e77", "#d95f02", "#7570b3")


@dataclass(frozen=True)
class PlotSpec:
    kind: str = "heatmap"
    width: int = 640
    height: int = 480
    colormap: str = "diverging_blue_red"
    x_label: str = "tau"
    y_label: str = "rho"
    x_range: Optional[tuple] = None
    y_range: Optional[tuple] = None
    title: str = ""
    margin: int = 60

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.colormap not in COLORMAPS:
            raise ValueError(f"unknown colormap {self.colormap!r}")
        if self.width <= 2 * self.margin or self.height <= 2 * self.margin:
            raise ValueError("width and height must exceed twice the margin")
        for rng in (self.x_range, self.y_range):
            if rng is not None and not rng[1] > rng[0]:
                raise ValueError("plot ranges must be increasing")


def psi_color(psi: float) -> tuple:
    """Blue at psi = 0, white at |psi| = pi/2, red at |psi| = pi."""
    if not math.isfinite(psi):
        return MISSING
    d = abs(math.remainder(psi, 2 * math.pi)) / math.pi  # 0 .. 1
    if d <= 0.5:
        lo, hi, t = BLUE, WHITE, d / 0.5
    else:
        lo, hi, t = WHITE, RED, (d - 0.5) / 0.5
    return tuple(int(round(a + t * (b - a))) for a, b in zip(lo, hi))


def _hex(rgb) -> str:
    return "#%02x%02x%02x" % rgb


def _num(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Canvas:
    def __init__(self, spec: PlotSpec, x_range, y_range):
        self.spec = spec
        self.x0, self.x1 = map(float, x_range)
        self.y0, self.y1 = map(float, y_range)
        m = spec.margin
        self.left, self.right = m, spec.width - m / 2
        self.top, self.bottom = m / 2, spec.height - m
        self.parts = []

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def add(self, s: str):
        self.parts.append(s)

    def axes(self):
        s = self.spec
        self.add(f'<rect x="{_num(self.left)}" y="{_num(self.top)}" '
                 f'width="{_num(self.right - self.left)}" height="{_num(self.bottom - self.top)}" '
                 'fill="none" stroke="#000000" stroke-width="1"/>')
        for k in range(5):
            xv = self.x0 + k * (self.x1 - self.x0) / 4
            yv = self.y0 + k * (self.y1 - self.y0) / 4
            self.add(f'<text x="{_num(self.px(xv))}" y="{_num(self.bottom + 16)}" '
                     f'font-size="11" text-anchor="middle">{xv:.3g}</text>')
            self.add(f'<text x="{_num(self.left - 6)}" y="{_num(self.py(yv) + 4)}" '
                     f'font-size="11" text-anchor="end">{yv:.3g}</text>')
        cx = (self.left + self.right) / 2
        cy = (self.top + self.bottom) / 2
        self.add(f'<text x="{_num(cx)}" y="{_num(s.height - 20)}" font-size="13" '
                 f'text-anchor="middle">{escape(s.x_label)}</text>')
        self.add(f'<text x="18" y="{_num(cy)}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 18 {_num(cy)})">{escape(s.y_label)}</text>')
        if s.title:
            self.add(f'<text x="{_num(cx)}" y="{_num(self.top - 8)}" font-size="13" '
                     f'text-anchor="middle">{escape(s.title)}</text>')

    def render(self) -> str:
        s = self.spec
        head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{s.width}" height="{s.height}" '
                f'viewBox="0 0 {s.width} {s.height}">\n'
                f'<rect x="0" y="0" width="{s.width}" height="{s.height}" fill="#ffffff"/>\n')
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _edges(centres: np.ndarray) -> np.ndarray:
    c = np.asarray(centres, dtype=float)
    mid = (c[1:] + c[:-1]) / 2
    return np.concatenate([[c[0] - (mid[0] - c[0])], mid, [c[-1] + (c[-1] - mid[-1])]])


def _draw_heatmap(cv: _Canvas, xs, ys, psi):
    xe, ye = _edges(xs), _edges(ys)
    cv.add('<g shape-rendering="crispEdges">')
    for i in range(len(xs)):
        for j in range(len(ys)):
            x_a, x_b = cv.px(max(xe[i], cv.x0)), cv.px(min(xe[i + 1], cv.x1))
            y_a, y_b = cv.py(min(ye[j + 1], cv.y1)), cv.py(max(ye[j], cv.y0))
            cv.add(f'<rect x="{_num(x_a)}" y="{_num(y_a)}" width="{_num(x_b - x_a)}" '
                   f'height="{_num(y_b - y_a)}" fill="{_hex(psi_color(float(psi[i, j])))}"/>')
    cv.add("</g>")


def _draw_curves(cv: _Canvas, curves, color_offset=0):
    cv.add(f'<clipPath id="plot"><rect x="{_num(cv.left)}" y="{_num(cv.top)}" '
           f'width="{_num(cv.right - cv.left)}" height="{_num(cv.bottom - cv.top)}"/></clipPath>')
    cv.add('<g clip-path="url(#plot)">')
    for n, curve in enumerate(curves):
        pts = np.asarray(curve, dtype=float)
        if len(pts) < 2:
            continue
        d = "M " + " L ".join(f"{_num(cv.px(x))} {_num(cv.py(y))}" for x, y in pts)
        color = CURVE_COLORS[(n + color_offset) % len(CURVE_COLORS)] if color_offset else "#000000"
        cv.add(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    cv.add("</g>")


def heatmap(spec: PlotSpec, xs: Sequence[float], ys: Sequence[float], psi: np.ndarray) -> str:
    """One rectangle per cell, coloured by ``psi[i, j]`` at ``(xs[i], ys[j])``."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    psi = np.asarray(psi, float)
    if psi.shape != (len(xs), len(ys)):
        raise ValueError("psi must have shape (len(xs), len(ys))")
    x_range = spec.x_range or (float(xs[0]), float(xs[-1]))
    y_range = spec.y_range or (float(ys[0]), float(ys[-1]))
    if spec.x_range and (xs[0] < x_range[0] - 1e-9 or xs[-1] > x_range[1] + 1e-9):
        raise ValueError("x_range does not cover the data grid")
    if spec.y_range and (ys[0] < y_range[0] - 1e-9 or ys[-1] > y_range[1] + 1e-9):
        raise ValueError("y_range does not cover the data grid")
    cv = _Canvas(spec, x_range, y_range)
    _draw_heatmap(cv, xs, ys, psi)
    cv.axes()
    return cv.render()


def curves(spec: PlotSpec, polylines: Sequence, x_range=None, y_range=None) -> str:
    """Polylines (``(n, 2)`` arrays) drawn as paths."""
    x_range = spec.x_range or x_range
    y_range = spec.y_range or y_range
    if x_range is None or y_range is None:
        pts = [np.asarray(p, float) for p in polylines if len(p)]
        pts = np.concatenate(pts) if pts else np.zeros((1, 2))
        x_range = x_range or _span(pts[:, 0])
        y_range = y_range or _span(pts[:, 1])
    cv = _Canvas(spec, x_range, y_range)
    _draw_curves(cv, polylines, color_offset=1)
    cv.axes()
    return cv.render()


def _span(v) -> tuple:
    lo, hi = float(v.min()), float(v.max())
    return (lo, hi) if hi > lo else (lo - 1.0, lo + 1.0)


def overlay(spec: PlotSpec, xs, ys, psi, polylines) -> str:
    """Heatmap with boundary curves drawn on top."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    x_range = spec.x_range or (float(xs[0]), float(xs[-1]))
    y_range = spec.y_range or (float(ys[0]), float(ys[-1]))
    cv = _Canvas(spec, x_range, y_range)
    _draw_heatmap(cv, xs, ys, np.asarray(psi, float))
    _draw_curves(cv, polylines)
    cv.axes()
    return cv.render()


def write_svg(text: str, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
