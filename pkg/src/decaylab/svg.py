"""Tiny flat SVG line plots for report bundles.

Only what the reports need: line series on linear or log axes, dashed
guide lines with a prescribed slope (in the transformed coordinates, so a
power law is a straight guide on a log-log plot), decade ticks and a
legend.  No external renderer is involved; files are plain SVG 1.1.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot", "loglog_plot"]

_W, _H = 680, 460
_ML, _MR, _MT, _MB = 78, 24, 40, 56
_COLORS = ("#1f6fb2", "#c4432b", "#3a8f3a", "#8256b0", "#b08a2e", "#3aa0a0")


def _transform(vals, log):
    v = np.asarray(vals, dtype=np.float64)
    if log:
        good = v > 0
        out = np.full(v.shape, np.nan)
        out[good] = np.log10(v[good])
        return out
    return v


def _ticks(lo, hi, log):
    if log:
        first, last = math.ceil(lo - 1e-9), math.floor(hi + 1e-9)
        if last < first:
            return [(lo, f"1e{lo:.1f}"), (hi, f"1e{hi:.1f}")]
        out = []
        for k in range(first, last + 1):
            out.append((float(k), f"1e{k:d}"))
        return out
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, 5)
    return [(float(x), f"{x:.3g}") for x in raw]


def line_plot(
    path,
    series,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
    guides=(),
) -> None:
    """Write one plot.

    ``series`` is a list of (x, y, label); ``guides`` a list of
    (slope, x0, y0, label) straight lines through (x0, y0) in the
    transformed coordinates.  Nonpositive data on a log axis is dropped.
    """
    xs, ys = [], []
    clean = []
    for x, y, label in series:
        tx, ty = _transform(x, logx), _transform(y, logy)
        good = ~(np.isnan(tx) | np.isnan(ty))
        if not np.any(good):
            continue
        clean.append((tx[good], ty[good], label))
        xs.append(tx[good])
        ys.append(ty[good])
    if not clean:
        raise ValueError("nothing to plot: every point was dropped")
    x_lo = min(float(t.min()) for t in xs)
    x_hi = max(float(t.max()) for t in xs)
    y_lo = min(float(t.min()) for t in ys)
    y_hi = max(float(t.max()) for t in ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.04 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    width, height = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * width

    def py(y):
        return _MT + (y_hi - y) / (y_hi - y_lo) * height

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="monospace" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{width}" height="{height}" '
        'fill="none" stroke="#444"/>',
    ]
    if title:
        parts.append(
            f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" '
            f'font-size="14">{escape(title)}</text>'
        )
    for xv, lab in _ticks(x_lo, x_hi, logx):
        if not x_lo <= xv <= x_hi:
            continue
        parts.append(
            f'<line x1="{px(xv):.2f}" y1="{_MT + height}" '
            f'x2="{px(xv):.2f}" y2="{_MT + height + 5}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{px(xv):.2f}" y="{_MT + height + 20}" '
            f'text-anchor="middle">{escape(lab)}</text>'
        )
    for yv, lab in _ticks(y_lo, y_hi, logy):
        if not y_lo <= yv <= y_hi:
            continue
        parts.append(
            f'<line x1="{_ML - 5}" y1="{py(yv):.2f}" x2="{_ML}" '
            f'y2="{py(yv):.2f}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{_ML - 9}" y="{py(yv) + 4:.2f}" '
            f'text-anchor="end">{escape(lab)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{_ML + width / 2:.1f}" y="{_H - 14}" '
            f'text-anchor="middle">{escape(xlabel)}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="18" y="{_MT + height / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 18 {_MT + height / 2:.1f})">'
            f"{escape(ylabel)}</text>"
        )

    for slope, x0, y0, label in guides:
        gx0 = math.log10(x0) if logx else x0
        gy0 = math.log10(y0) if logy else y0
        pts = []
        for gx in (x_lo, x_hi):
            gy = gy0 + slope * (gx - gx0)
            pts.append((px(gx), py(min(max(gy, y_lo), y_hi))))
        parts.append(
            f'<line x1="{pts[0][0]:.2f}" y1="{pts[0][1]:.2f}" '
            f'x2="{pts[1][0]:.2f}" y2="{pts[1][1]:.2f}" stroke="#888" '
            'stroke-dasharray="6 4"/>'
        )
        if label:
            parts.append(
                f'<text x="{pts[1][0] - 4:.2f}" y="{pts[1][1] - 6:.2f}" '
                f'text-anchor="end" fill="#666">{escape(label)}</text>'
            )

    for i, (tx, ty, label) in enumerate(clean):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx, ty))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            'stroke-width="1.6"/>'
        )
        ly = _MT + 16 + 16 * i
        lx = _ML + width - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="1.6"/>'
        )
        parts.append(f'<text x="{lx + 28}" y="{ly}">{escape(str(label))}</text>')

    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def loglog_plot(path, series, **kw) -> None:
    kw.setdefault("logx", True)
    kw.setdefault("logy", True)
    line_plot(path, series, **kw)
