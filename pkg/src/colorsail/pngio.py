"""PNG raster I/O. 8-bit channels map to v/255 floats internally."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def load_rgb(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Load a PNG as float RGB in [0, 1] plus the file's alpha channel if any."""
    with Image.open(path) as img:
        alpha = None
        if img.mode in ("RGBA", "LA", "PA"):
            rgba = np.asarray(img.convert("RGBA"), dtype=float) / 255.0
            return rgba[..., :3], rgba[..., 3]
        rgb = np.asarray(img.convert("RGB"), dtype=float) / 255.0
        return rgb, alpha


def save_rgb_u8(path, raster: np.ndarray) -> None:
    raster = np.asarray(raster)
    if raster.dtype != np.uint8 or raster.ndim != 3 or raster.shape[2] != 3:
        raise ValueError("expected a (H, W, 3) uint8 raster")
    Image.fromarray(raster, mode="RGB").save(Path(path), format="PNG")


def save_gray_u8(path, raster: np.ndarray) -> None:
    raster = np.asarray(raster)
    if raster.dtype != np.uint8 or raster.ndim != 2:
        raise ValueError("expected a (H, W) uint8 raster")
    Image.fromarray(raster, mode="L").save(Path(path), format="PNG")


def load_gray_u8(path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode != "L":
            img = img.convert("L")
        return np.asarray(img, dtype=np.uint8)


def save_gray_u16(path, raster: np.ndarray) -> None:
    raster = np.asarray(raster)
    if raster.dtype != np.uint16 or raster.ndim != 2:
        raise ValueError("expected a (H, W) uint16 raster")
    Image.fromarray(raster).save(Path(path), format="PNG")  # mode I;16


def load_gray_u16(path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValueError("expected a grayscale image")
    if arr.min() < 0 or arr.max() > 0xFFFF:
        raise ValueError("16-bit grayscale values out of range")
    return arr.astype(np.uint16)


def resize_bilinear(raster: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a float 2-D field to (width, height)."""
    w, h = size
    img = Image.fromarray(np.asarray(raster, dtype=np.float32), mode="F")
    return np.asarray(img.resize((w, h), Image.BILINEAR), dtype=float)


def resize_rgb(raster: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a float RGB raster in [0, 1] to (width, height)."""
    out = np.stack(
        [resize_bilinear(raster[..., c], size) for c in range(3)], axis=-1
    )
    return np.clip(out, 0.0, 1.0)
