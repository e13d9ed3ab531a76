"""Minimal SVG line plots and heatmaps, no plotting library required."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=110, top=40, bottom=55)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]
# viridis anchors
_CMAP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)


def _color(v: float) -> str:
    v = min(max(v, 0.0), 1.0) * (len(_CMAP) - 1)
    i = min(int(v), len(_CMAP) - 2)
    rgb = _CMAP[i] + (v - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, n)


class _Frame:
    def __init__(self, xlim, ylim):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1
        self.pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return MARGIN["left"] + (np.asarray(x) - self.x0) / (self.x1 - self.x0) * self.pw

    def py(self, y):
        return MARGIN["top"] + (1 - (np.asarray(y) - self.y0) / (self.y1 - self.y0)) * self.ph

    def axes(self, xlabel, ylabel, title) -> list[str]:
        L, T = MARGIN["left"], MARGIN["top"]
        out = [f'<rect x="{L}" y="{T}" width="{self.pw}" height="{self.ph}" fill="none" stroke="black"/>']
        for x in _ticks(self.x0, self.x1):
            X = self.px(x)
            out.append(f'<line x1="{X:.1f}" y1="{T + self.ph}" x2="{X:.1f}" y2="{T + self.ph + 5}" stroke="black"/>')
            out.append(f'<text x="{X:.1f}" y="{T + self.ph + 20}" font-size="12" text-anchor="middle">{x:.3g}</text>')
        for y in _ticks(self.y0, self.y1):
            Y = self.py(y)
            out.append(f'<line x1="{L - 5}" y1="{Y:.1f}" x2="{L}" y2="{Y:.1f}" stroke="black"/>')
            out.append(f'<text x="{L - 8}" y="{Y + 4:.1f}" font-size="12" text-anchor="end">{y:.3g}</text>')
        out.append(f'<text x="{L + self.pw / 2}" y="{HEIGHT - 12}" font-size="14" text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="18" y="{T + self.ph / 2}" font-size="14" text-anchor="middle" '
                   f'transform="rotate(-90 18 {T + self.ph / 2})">{escape(ylabel)}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="24" font-size="15" text-anchor="middle">{escape(title)}</text>')
        return out


def _document(body: list[str]) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"


def line_plot(x, series: dict, xlabel="", ylabel="", title="", ylim=None) -> str:
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    if ylim is None:
        lo = min(float(v.min()) for v in ys) if ys else 0.0
        hi = max(float(v.max()) for v in ys) if ys else 1.0
        ylim = (lo, hi)
    fr = _Frame((float(x.min()), float(x.max())), ylim)
    body = fr.axes(xlabel, ylabel, title)
    for k, (name, y) in enumerate(zip(series, ys)):
        col = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(fr.px(x), fr.py(y)))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.8"/>')
        ly = MARGIN["top"] + 14 + 18 * k
        lx = WIDTH - MARGIN["right"] + 10
        body.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{col}" stroke-width="2"/>')
        body.append(f'<text x="{lx + 22}" y="{ly}" font-size="12">{escape(str(name))}</text>')
    return _document(body)


def heatmap(x, y, Z, xlabel="", ylabel="", title="", zlim=(0.0, 1.0)) -> str:
    """Z has shape (len(y), len(x)); cells are centred on the grid points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    fr = _Frame((float(x.min()), float(x.max())), (float(y.min()), float(y.max())))
    dx = fr.pw / max(len(x) - 1, 1)
    dy = fr.ph / max(len(y) - 1, 1)
    z0, z1 = zlim
    body = []
    for j, yv in enumerate(y):
        for i, xv in enumerate(x):
            v = (Z[j, i] - z0) / (z1 - z0) if z1 > z0 else 0.0
            body.append(f'<rect x="{fr.px(xv) - dx / 2:.2f}" y="{fr.py(yv) - dy / 2:.2f}" '
                        f'width="{dx + 0.3:.2f}" height="{dy + 0.3:.2f}" fill="{_color(v)}"/>')
    body.append(f'<rect x="0" y="0" width="{MARGIN["left"]}" height="{HEIGHT}" fill="white"/>')
    body.append(f'<rect x="{WIDTH - MARGIN["right"]}" y="0" width="{MARGIN["right"]}" height="{HEIGHT}" fill="white"/>')
    body.append(f'<rect x="0" y="0" width="{WIDTH}" height="{MARGIN["top"]}" fill="white"/>')
    body.append(f'<rect x="0" y="{HEIGHT - MARGIN["bottom"]}" width="{WIDTH}" height="{MARGIN["bottom"]}" fill="white"/>')
    body += fr.axes(xlabel, ylabel, title)
    bx = WIDTH - MARGIN["right"] + 25
    for k in range(50):
        v = k / 49
        yy = MARGIN["top"] + (1 - v) * fr.ph
        body.append(f'<rect x="{bx}" y="{yy - fr.ph / 49:.2f}" width="18" height="{fr.ph / 49 + 0.5:.2f}" fill="{_color(v)}"/>')
    for v in (0.0, 0.5, 1.0):
        yy = MARGIN["top"] + (1 - v) * fr.ph
        body.append(f'<text x="{bx + 24}" y="{yy + 4:.1f}" font-size="11">{z0 + v * (z1 - z0):.2g}</text>')
    return _document(body)


def write(path, svg: str) -> None:
    with open(path, "w") as fh:
        fh.write(svg)
