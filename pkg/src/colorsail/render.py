"""Rasterize a sail as a subdivided equilateral triangle.

Upright patches take the grid-point colors, inverted patches the downward
centroid colors; pixels outside the triangle stay white.
"""

from __future__ import annotations

import math

import numpy as np

from .rig import quantize_u8
from .sail import ColorSail, decode, upright_count


def _cell_to_index(j: np.ndarray, row: np.ndarray, upright: np.ndarray, s: int) -> np.ndarray:
    """Canonical grid index of the render cell at lattice (j, row)."""
    up = row * s - row * (row - 1) // 2 + j
    down = upright_count(s) + row * (s - 1) - row * (row - 1) // 2 + j
    return np.where(upright, up, down)


def render_sail(sail: ColorSail, size: int = 256) -> np.ndarray:
    """uint8 (H, W, 3) raster of the sail, point-up equilateral layout.

    v0 sits bottom-left, v1 bottom-right, v2 at the apex. The triangle is
    subdivided into s^2 patches colored by the decoded colors in canonical
    order.
    """
    if size < 4:
        raise ValueError("size must be >= 4")
    s = sail.subdivision
    colors = decode(sail, include_downward=True, clamp=True).colors
    w = size
    h = max(2, round(size * math.sqrt(3.0) / 2.0))
    ax, ay = 0.0, float(h)
    bx, by = float(w), float(h)
    cx, cy = w / 2.0, 0.0

    ys, xs = np.mgrid[0:h, 0:w]
    px = xs + 0.5
    py = ys + 0.5
    det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay)
    t1 = ((cy - ay) * (px - ax) + (ax - cx) * (py - ay)) / det
    t2 = ((ay - by) * (px - ax) + (bx - ax) * (py - ay)) / det
    t0 = 1.0 - t1 - t2
    inside = (t0 >= -1e-9) & (t1 >= -1e-9) & (t2 >= -1e-9)

    x = np.clip(t1, 0.0, 1.0) * s
    y = np.clip(t2, 0.0, 1.0) * s
    j = np.minimum(np.floor(x), s - 1).astype(np.intp)
    row = np.minimum(np.floor(y), s - 1).astype(np.intp)
    fx = x - j
    fy = y - row
    upright = fx + fy <= 1.0
    # inverted cells only exist for j + row <= s-2; boundary roundoff can
    # claim the outermost sliver, snap it back
    upright |= j + row > s - 2
    idx = _cell_to_index(j, row, upright, s)

    img = np.ones((h, w, 3))
    img[inside] = colors[idx[inside]]
    return quantize_u8(img)
