from pathlib import Path

import numpy as np

from colorsail.pngio import load_rgb, save_rgb_u8
from colorsail.render import render_sail
from colorsail.sail import ColorSail

GOLDEN_DIR = Path(__file__).parent / "golden"

IDENTITY = ColorSail(np.eye(3), focus=(1 / 3, 1 / 3), wind=0.0, subdivision=3)


def test_render_s2_four_patches():
    sail = ColorSail(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
                     wind=0.0, subdivision=2)
    img = render_sail(sail, size=64)
    colors = {tuple(c) for c in img.reshape(-1, 3)}
    colors.discard((255, 255, 255))  # background
    assert len(colors) == 4


def test_render_corner_pixels_pure():
    img = render_sail(IDENTITY, size=128)
    h, w = img.shape[:2]
    assert tuple(img[h - 2, 1]) == (255, 0, 0)        # bottom-left: v0
    assert tuple(img[h - 2, w - 2]) == (0, 255, 0)    # bottom-right: v1
    assert tuple(img[2, w // 2]) == (0, 0, 255)       # apex: v2


def test_render_deterministic():
    a = render_sail(IDENTITY, size=96)
    b = render_sail(IDENTITY, size=96)
    assert a.tobytes() == b.tobytes()


def test_render_golden_images(tmp_path):
    GOLDEN_DIR.mkdir(exist_ok=True)
    cases = {
        "flat_s3": IDENTITY,
        "wind_s5": ColorSail(
            np.array([[0.9, 0.2, 0.1], [0.1, 0.4, 0.9], [0.9, 0.9, 0.2]]),
            focus=(0.2, 0.5), wind=0.6, subdivision=5),
        "focus_s4": ColorSail(
            np.array([[0.2, 0.2, 0.2], [0.95, 0.95, 0.95], [0.8, 0.1, 0.5]]),
            focus=(0.7, 0.1), wind=-0.4, subdivision=4),
    }
    for name, sail in cases.items():
        got = render_sail(sail, size=96)
        golden = GOLDEN_DIR / f"{name}.png"
        if not golden.exists():
            save_rgb_u8(golden, got)  # first run freezes the golden
        stored, _ = load_rgb(golden)
        assert np.array_equal((stored * 255).round().astype(np.uint8), got), name
