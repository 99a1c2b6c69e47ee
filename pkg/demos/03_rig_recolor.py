"""End to end: decompose an image into sail-backed regions, then recolor it.

Builds a synthetic two-region composite, fits a rig, saves the bundle, and
applies a few edits.
"""

from pathlib import Path

import numpy as np

from colorsail import ColorSail, RigConfig, build_mapping, decode, fit_rig, load_rig, recolor, save_rig
from colorsail.pngio import save_rgb_u8
from colorsail.rig import quantize_u8

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)
rng = np.random.default_rng(3)

# Synthetic design: a red-ish panel next to a blue-ish one.
left_sail = ColorSail(np.array([[0.92, 0.18, 0.12], [0.55, 0.05, 0.25], [1.0, 0.62, 0.25]]),
                      wind=0.25, subdivision=4)
right_sail = ColorSail(np.array([[0.10, 0.22, 0.85], [0.05, 0.50, 0.62], [0.35, 0.80, 1.0]]),
                       wind=-0.25, subdivision=4)
size = 64
image = np.zeros((size, size, 3))
for x in range(size):
    src = left_sail if x < size // 2 else right_sail
    colors = decode(src, clamp=True).colors
    for y in range(size):
        image[y, x] = colors[(x * 3 + y) % len(colors)]
save_rgb_u8(OUT / "composite.png", quantize_u8(image))

# Fit two soft masks, one sail each, then freeze the pixel mapping.
fit = fit_rig(image, 2, RigConfig(epochs=5, subdivision=4, seed=0))
print(f"fit: recon={fit.loss_recon:.4f} tv={fit.loss_tv:.5f} total={fit.loss_total:.4f}")
rig = build_mapping(image, fit)
bundle = OUT / "rig_bundle"
save_rig(rig, bundle)
print(f"bundle written to {bundle}")

# Recoloring = re-decode edited sails + frozen index lookup. No refit needed.
rig = load_rig(bundle)
save_rgb_u8(OUT / "recolor_none.png", recolor(rig))

edits = [
    {"sail": 0, "set": {"vertex0": [0.15, 0.75, 0.30]}},          # red -> green
    {"sail": 1, "set": {"wind": 0.6, "focus": [0.6, 0.2]}},       # re-blend blues
]
save_rgb_u8(OUT / "recolor_edited.png", recolor(rig, edits))
print("edits applied:", edits)

# Discreteness is also editable after the fact: collapse to chunky swatches.
save_rgb_u8(OUT / "recolor_chunky.png",
            recolor(rig, [{"sail": i, "set": {"subdivision": 2}} for i in range(2)]))
print("wrote recolor_none.png / recolor_edited.png / recolor_chunky.png")
