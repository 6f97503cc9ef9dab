"""Minimal deterministic SVG line plots (no plotting dependency).

Fixed-size polyline renderings with axes derived from the data extents; every
float is formatted identically on every platform so repeated runs produce
byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

W, H = 840, 320
MARGIN = 46
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#17becf", "#7f7f7f", "#bcbd22", "#e377c2")


def _f(x: float) -> str:
    return format(float(x), ".3f")


def write_svg_lines(path: Path, t: np.ndarray, series: np.ndarray, title: str = ""):
    """Plot columns of ``series`` against ``t`` into a standalone SVG file."""
    series = np.atleast_2d(np.asarray(series, dtype=float))
    if series.shape[0] != t.shape[0]:
        series = series.T
    lo = float(np.min(series))
    hi = float(np.max(series))
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    t0, t1 = float(t[0]), float(t[-1])
    if t1 - t0 < 1e-12:
        t1 = t0 + 1.0

    def sx(x):
        return MARGIN + (x - t0) / (t1 - t0) * (W - 2 * MARGIN)

    def sy(y):
        return H - MARGIN - (y - lo) / (hi - lo) * (H - 2 * MARGIN)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{MARGIN}" y="{MARGIN}" width="{W - 2 * MARGIN}" '
           f'height="{H - 2 * MARGIN}" fill="none" stroke="#444"/>']
    if title:
        out.append(f'<text x="{MARGIN}" y="{MARGIN - 12}" font-family="monospace" '
                   f'font-size="13">{title}</text>')
    for label, val in (("t0", t0), ("t1", t1)):
        x = sx(val)
        out.append(f'<text x="{_f(x)}" y="{H - MARGIN + 16}" font-family="monospace" '
                   f'font-size="11" text-anchor="middle">{_f(val)}</text>')
    for val in (lo, hi):
        out.append(f'<text x="{MARGIN - 4}" y="{_f(sy(val) + 4)}" '
                   f'font-family="monospace" font-size="11" '
                   f'text-anchor="end">{format(val, ".4g")}</text>')

    for j in range(series.shape[1]):
        col = PALETTE[j % len(PALETTE)]
        pts = " ".join(f"{_f(sx(tt))},{_f(sy(vv))}"
                       for tt, vv in zip(t, series[:, j]))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" '
                   f'stroke-width="1"/>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
