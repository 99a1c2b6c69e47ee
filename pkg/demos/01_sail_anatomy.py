"""Tour of the sail representation: grids, wind, focus, subdivision.

Writes a gallery of rendered sails into demos/out/.
"""

from pathlib import Path

import numpy as np

from colorsail import ColorSail, decode, enumerate_grid, render_sail
from colorsail.pngio import save_rgb_u8

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# A sail is 3 vertex colors, a focus point, a wind scalar, and a subdivision.
base = ColorSail(
    vertices=np.array([[0.93, 0.23, 0.15],   # warm red
                       [0.13, 0.33, 0.80],   # blue
                       [0.98, 0.86, 0.30]]),  # yellow
    focus=(1 / 3, 1 / 3),
    wind=0.0,
    subdivision=6,
)

# The subdivision grid: s points per edge, s*(s+1)/2 upright colors,
# s^2 once the inverted-patch centroids are included.
for s in (2, 4, 6, 10):
    pts = enumerate_grid(s)
    print(f"s={s:2d}: {len([p for p in pts if p.kind == 'upright']):3d} upright "
          f"+ {len([p for p in pts if p.kind == 'downward']):3d} downward = {len(pts):3d}")

# Decoding yields the ordered color set. Corners always equal the vertices.
dec = decode(base)
print("\nfirst three decoded colors:")
for gp, color in list(dec)[:3]:
    print(f"  grid ({gp.i},{gp.j}) {gp.kind:8s} -> {np.round(color, 3)}")

# Wind bends the patch out of the vertex plane; the sign flips the bulge.
for w in (-0.8, -0.3, 0.0, 0.3, 0.8):
    sail = ColorSail(base.vertices, base.focus, w, base.subdivision)
    save_rgb_u8(OUT / f"wind_{w:+.1f}.png", render_sail(sail, 220))
print(f"\nwind sweep written to {OUT}/wind_*.png")

# Dragging the focus toward a vertex biases the blend toward that color.
for name, focus in [("center", (1 / 3, 1 / 3)), ("v0", (0.8, 0.1)),
                    ("v1", (0.1, 0.8)), ("v2", (0.05, 0.05))]:
    sail = ColorSail(base.vertices, focus, 0.5, base.subdivision)
    save_rgb_u8(OUT / f"focus_{name}.png", render_sail(sail, 220))
print(f"focus sweep written to {OUT}/focus_*.png")

# Subdivision runs from 'a few swatches' to 'visually continuous'.
for s in (2, 3, 5, 9, 15):
    sail = ColorSail(base.vertices, base.focus, 0.4, s)
    save_rgb_u8(OUT / f"subdivision_{s:02d}.png", render_sail(sail, 220))
print(f"subdivision sweep written to {OUT}/subdivision_*.png")
