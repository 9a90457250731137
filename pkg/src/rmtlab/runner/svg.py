"""Minimal SVG charts: line/scatter plots, histograms and heat maps.

Output is plain text with fixed float formatting so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import numpy as np

__all__ = ["line_plot", "histogram_plot", "heatmap"]

W, H = 640, 420
PAD = 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{_esc(title)}</text>',
    ]


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Axes:
    def __init__(self, xlo, xhi, ylo, yhi):
        if xhi == xlo:
            xhi = xlo + 1.0
        if yhi == ylo:
            yhi = ylo + 1.0
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi

    def x(self, v):
        return PAD + (v - self.xlo) / (self.xhi - self.xlo) * (W - 2 * PAD)

    def y(self, v):
        return H - PAD - (v - self.ylo) / (self.yhi - self.ylo) * (H - 2 * PAD)

    def frame(self, xlabel: str, ylabel: str) -> list[str]:
        out = [f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
               'fill="none" stroke="black"/>']
        for v in np.linspace(self.xlo, self.xhi, 5):
            out.append(f'<text x="{_f(self.x(v))}" y="{H - PAD + 16}" text-anchor="middle" '
                       f'font-family="sans-serif" font-size="11">{v:.3g}</text>')
        for v in np.linspace(self.ylo, self.yhi, 5):
            out.append(f'<text x="{PAD - 6}" y="{_f(self.y(v) + 4)}" text-anchor="end" '
                       f'font-family="sans-serif" font-size="11">{v:.3g}</text>')
        out.append(f'<text x="{W / 2}" y="{H - 14}" text-anchor="middle" font-family="sans-serif" '
                   f'font-size="12">{_esc(xlabel)}</text>')
        out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" font-family="sans-serif" font-size="12" '
                   f'transform="rotate(-90 16 {H / 2})">{_esc(ylabel)}</text>')
        return out


def line_plot(series, title: str = "", xlabel: str = "x", ylabel: str = "y",
              logx: bool = False, logy: bool = False) -> str:
    """``series`` is a list of (xs, ys, label, style) with style 'line' or 'points'."""
    tx = np.log10 if logx else (lambda a: a)
    ty = np.log10 if logy else (lambda a: a)
    data = [(tx(np.asarray(xs, float)), ty(np.asarray(ys, float)), label, style)
            for xs, ys, label, style in series]
    allx = np.concatenate([d[0] for d in data])
    ally = np.concatenate([d[1] for d in data])
    ax = _Axes(allx.min(), allx.max(), ally.min(), ally.max())
    out = _header(title) + ax.frame(("log10 " if logx else "") + xlabel, ("log10 " if logy else "") + ylabel)
    for i, (xs, ys, label, style) in enumerate(data):
        color = COLORS[i % len(COLORS)]
        if style == "points":
            for x, y in zip(xs, ys):
                out.append(f'<circle cx="{_f(ax.x(x))}" cy="{_f(ax.y(y))}" r="3" fill="{color}"/>')
        else:
            pts = " ".join(f"{_f(ax.x(x))},{_f(ax.y(y))}" for x, y in zip(xs, ys))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{W - PAD - 4}" y="{PAD + 16 + 14 * i}" text-anchor="end" fill="{color}" '
                   f'font-family="sans-serif" font-size="12">{_esc(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def histogram_plot(edges, density, curve=None, title: str = "", xlabel: str = "x") -> str:
    """Bars of ``density`` over ``edges`` with an optional (xs, ys) overlay."""
    edges = np.asarray(edges, float)
    density = np.asarray(density, float)
    ymax = density.max()
    if curve is not None:
        ymax = max(ymax, float(np.max(curve[1])))
    ax = _Axes(edges[0], edges[-1], 0.0, ymax * 1.05 if ymax > 0 else 1.0)
    out = _header(title) + ax.frame(xlabel, "density")
    for lo, hi, d in zip(edges[:-1], edges[1:], density):
        out.append(f'<rect x="{_f(ax.x(lo))}" y="{_f(ax.y(d))}" width="{_f(ax.x(hi) - ax.x(lo))}" '
                   f'height="{_f(ax.y(0) - ax.y(d))}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>')
    if curve is not None:
        pts = " ".join(f"{_f(ax.x(x))},{_f(ax.y(y))}" for x, y in zip(*curve))
        out.append(f'<polyline points="{pts}" fill="none" stroke="#d62728" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap(values: np.ndarray, extent: tuple[float, float, float, float], title: str = "") -> str:
    """Cell colours from white (<= 0) to dark blue (max); row 0 is the bottom row."""
    values = np.asarray(values, float)
    ny, nx = values.shape
    x0, x1, y0, y1 = extent
    ax = _Axes(x0, x1, y0, y1)
    vmax = values.max() if values.max() > 0 else 1.0
    out = _header(title) + ax.frame("Re", "Im")
    cw = (W - 2 * PAD) / nx
    ch = (H - 2 * PAD) / ny
    for j in range(ny):
        for i in range(nx):
            t = min(max(values[j, i] / vmax, 0.0), 1.0)
            if t <= 0:
                continue
            r, g, b = (int(255 - t * (255 - c)) for c in (8, 48, 107))
            out.append(f'<rect x="{_f(PAD + i * cw)}" y="{_f(H - PAD - (j + 1) * ch)}" '
                       f'width="{_f(cw)}" height="{_f(ch)}" fill="rgb({r},{g},{b})"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
