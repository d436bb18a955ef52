"""Tiny SVG writers for landscape plots. No plotting library needed."""
from __future__ import annotations

import numpy as np

W, H, PAD = 480, 360, 40
MAX_CELLS = 160


def _header(width, height):
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>']


def line_plot(path, x, y, title="") -> None:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y)
    x0, x1 = x.min(), x.max()
    y0, y1 = y[ok].min(), y[ok].max()
    if y1 == y0:
        y1 = y0 + 1.0
    px = PAD + (x - x0) / (x1 - x0) * (W - 2 * PAD)
    py = H - PAD - (y - y0) / (y1 - y0) * (H - 2 * PAD)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b, g in zip(px, py, ok) if g)
    out = _header(W, H)
    out.append(f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
               'fill="none" stroke="black"/>')
    out.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
    out.append(f'<text x="{W / 2}" y="{PAD / 2}" text-anchor="middle" font-size="14">{title}</text>')
    out.append(f'<text x="{PAD}" y="{H - PAD / 3}" font-size="11">{x0:g}</text>')
    out.append(f'<text x="{W - PAD}" y="{H - PAD / 3}" text-anchor="end" font-size="11">{x1:g}</text>')
    out.append(f'<text x="4" y="{H - PAD}" font-size="11">{y0:.3g}</text>')
    out.append(f'<text x="4" y="{PAD + 10}" font-size="11">{y1:.3g}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")


def heatmap(path, grid, values, title="") -> None:
    """Grayscale heatmap of a square array; large grids are subsampled."""
    values = np.asarray(values, dtype=float)
    stride = max(1, int(np.ceil(len(grid) / MAX_CELLS)))
    V = values[::stride, ::stride]
    n = V.shape[0]
    ok = np.isfinite(V)
    lo, hi = V[ok].min(), V[ok].max()
    scale = (V - lo) / (hi - lo) if hi > lo else np.zeros_like(V)
    side = min(W, H) - 2 * PAD
    cell = side / n
    out = _header(side + 2 * PAD, side + 2 * PAD)
    for i in range(n):
        for j in range(n):
            if not ok[i, j]:
                color = "rgb(255,0,0)"
            else:
                g = int(round(255 * scale[i, j]))
                color = f"rgb({g},{g},{g})"
            # row i is the first free charge (x axis), column j the second (y axis, upwards)
            out.append(f'<rect x="{PAD + i * cell:.2f}" y="{PAD + (n - 1 - j) * cell:.2f}" '
                       f'width="{cell + 0.05:.2f}" height="{cell + 0.05:.2f}" fill="{color}"/>')
    out.append(f'<text x="{PAD + side / 2}" y="{PAD / 2}" text-anchor="middle" font-size="14">{title}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
