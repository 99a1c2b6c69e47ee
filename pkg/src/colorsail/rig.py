"""Persistent recoloring rigs: sails + alpha masks + frozen pixel-to-color
index maps, with deterministic serialization.

A rig freezes, per sail, which decoded color each pixel maps to (computed
once against the original image). Editing a sail re-decodes it and the frozen
indices drive the recolor, so edits are instant and deterministic.

Bundle layout (one directory):
    manifest.json          version, dimensions, provenance, sail parameters
    alpha_<i>.png          8-bit grayscale mask per sail
    index_<i>.png          16-bit grayscale color-index map per sail
    reconstruction.png     recolor with no edits, for exact comparisons
    original.png           source pixels (sentinel fallback, editor display)
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .alpha import RigFit
from .pngio import (
    load_gray_u8,
    load_gray_u16,
    load_rgb,
    resize_bilinear,
    save_gray_u8,
    save_gray_u16,
    save_rgb_u8,
)
from .sail import ColorSail, decode, grid_barycentrics

RIG_VERSION = 1
UNMAPPED = 0xFFFF  # sentinel index: pixel keeps its original color


class RigError(Exception):
    """Base for rig bundle problems."""


class RigVersionError(RigError):
    pass


class RigFileError(RigError):
    pass


class RigDimensionError(RigError):
    pass


def quantize_u8(raster: np.ndarray) -> np.ndarray:
    """Shared 8-bit quantization: clamp to [0, 1], round half away from zero.

    Defined once so every consumer of the bundle format matches bit-for-bit.
    """
    return np.floor(np.clip(raster, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


@dataclass(frozen=True)
class RigEntry:
    sail: ColorSail
    alpha: np.ndarray    # (H, W) uint8
    index: np.ndarray    # (H, W) uint16, canonical grid indices or UNMAPPED


@dataclass(frozen=True)
class SailRig:
    width: int
    height: int
    image_sha256: str
    fit_config_digest: str
    entries: tuple[RigEntry, ...]
    original: np.ndarray | None = None  # (H, W, 3) float, when available
    version: int = RIG_VERSION


@dataclass(frozen=True)
class EditDelta:
    """Partial replacement of one sail's parameters."""

    sail: int
    vertices: dict[int, tuple[float, float, float]] | None = None
    focus: tuple[float, float] | None = None
    wind: float | None = None
    subdivision: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "EditDelta":
        if "sail" not in d:
            raise ValueError("edit is missing the 'sail' index")
        changes = d.get("set", {})
        vertices = {}
        for k in range(3):
            key = f"vertex{k}"
            if key in changes:
                val = changes[key]
                if not isinstance(val, (list, tuple)) or len(val) != 3:
                    raise ValueError(f"{key} must be an [r, g, b] triple")
                vertices[k] = tuple(float(c) for c in val)
        focus = changes.get("focus")
        if focus is not None:
            if not isinstance(focus, (list, tuple)) or len(focus) != 2:
                raise ValueError("focus must be a [p_u, p_v] pair")
            focus = (float(focus[0]), float(focus[1]))
        wind = changes.get("wind")
        sub = changes.get("subdivision")
        return cls(sail=int(d["sail"]), vertices=vertices or None, focus=focus,
                   wind=None if wind is None else float(wind),
                   subdivision=None if sub is None else int(sub))

    def apply(self, sail: ColorSail) -> ColorSail:
        v = np.array(sail.vertices)
        if self.vertices:
            for k, rgb in self.vertices.items():
                v[k] = rgb
        return ColorSail(
            vertices=v,
            focus=self.focus if self.focus is not None else sail.focus,
            wind=self.wind if self.wind is not None else sail.wind,
            subdivision=self.subdivision if self.subdivision is not None else sail.subdivision,
        )


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def image_digest(image: np.ndarray) -> str:
    """sha256 of the 8-bit RGB raster bytes, row-major."""
    return hashlib.sha256(quantize_u8(image).tobytes()).hexdigest()


def config_digest(config) -> str:
    blob = json.dumps({k: repr(v) for k, v in sorted(vars(config).items())},
                      sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _nearest_index(image_flat: np.ndarray, palette: np.ndarray) -> np.ndarray:
    d2 = (image_flat ** 2).sum(axis=1)[:, None] + (palette ** 2).sum(axis=1)[None, :] \
        - 2.0 * (image_flat @ palette.T)
    return np.argmin(d2, axis=1)


def build_mapping(image: np.ndarray, rigfit: RigFit) -> SailRig:
    """Freeze the rig: upsample the fitted masks to the image size and map
    every pixel, per sail, to its nearest decoded color (ties to the lowest
    canonical index)."""
    image = np.asarray(image, dtype=float)
    h, w = image.shape[:2]
    fit_h, fit_w = rigfit.fit_shape
    alphas = rigfit.alpha.alphas()
    entries = []
    flat = image.reshape(-1, 3)
    for i, sail in enumerate(rigfit.sails):
        a = alphas[..., i]
        if (fit_h, fit_w) != (h, w):
            a = np.clip(resize_bilinear(a, (w, h)), 0.0, 1.0)
        palette = decode(sail, include_downward=True, clamp=True).colors
        idx = _nearest_index(flat, palette).astype(np.uint16).reshape(h, w)
        entries.append(RigEntry(sail=sail, alpha=quantize_u8(a), index=idx))
    return SailRig(
        width=w, height=h,
        image_sha256=image_digest(image),
        fit_config_digest=config_digest(rigfit.config),
        entries=tuple(entries),
        original=image,
    )


# ---------------------------------------------------------------------------
# Recoloring
# ---------------------------------------------------------------------------

def recolor(rig: SailRig, edits=()) -> np.ndarray:
    """Apply edits and re-render: each pixel gets the alpha blend of its
    frozen color indices looked up in the (re-decoded, clamped) sails.

    Subdivision edits remap the frozen indices first. Unmapped sentinel
    pixels contribute the original pixel color. Output is uint8 (H, W, 3).
    """
    edited = rig
    for raw in edits:
        delta = raw if isinstance(raw, EditDelta) else EditDelta.from_dict(raw)
        if not 0 <= delta.sail < len(edited.entries):
            raise ValueError(f"edit references sail {delta.sail}, rig has {len(edited.entries)}")
        entry = edited.entries[delta.sail]
        if delta.subdivision is not None and delta.subdivision != entry.sail.subdivision:
            edited = remap_subdivision(edited, delta.sail, delta.subdivision)
            entry = edited.entries[delta.sail]
        new_sail = delta.apply(entry.sail)
        new_entries = list(edited.entries)
        new_entries[delta.sail] = replace(entry, sail=new_sail)
        edited = replace(edited, entries=tuple(new_entries))

    h, w = edited.height, edited.width
    acc = np.zeros((h * w, 3))
    for entry in edited.entries:
        palette = decode(entry.sail, include_downward=True, clamp=True).colors
        idx = entry.index.reshape(-1)
        a = (entry.alpha.astype(float) / 255.0).reshape(-1, 1)
        mapped = idx != UNMAPPED
        if mapped.all():
            colors = palette[idx]
        else:
            if edited.original is None:
                raise RigError("rig has unmapped pixels but no original image")
            colors = edited.original.reshape(-1, 3).copy()
            colors[mapped] = palette[idx[mapped]]
        acc += a * colors
    return quantize_u8(acc.reshape(h, w, 3))


def remap_subdivision(rig: SailRig, sail_index: int, new_s: int) -> SailRig:
    """Rewrite one sail's frozen indices onto a new subdivision grid by
    snapping each old grid point to the nearest new one (barycentric
    Euclidean distance, ties to the lowest index)."""
    entry = rig.entries[sail_index]
    old_s = entry.sail.subdivision
    if new_s == old_s:
        return rig
    old = grid_barycentrics(old_s, True)
    new = grid_barycentrics(new_s, True)
    d2 = ((old[:, None, :] - new[None, :, :]) ** 2).sum(axis=2)
    lut = np.argmin(d2, axis=1).astype(np.uint16)
    idx = entry.index
    remapped = np.where(idx == UNMAPPED, idx, lut[np.minimum(idx, len(lut) - 1)])
    new_sail = ColorSail(entry.sail.vertices, entry.sail.focus, entry.sail.wind, new_s)
    entries = list(rig.entries)
    entries[sail_index] = RigEntry(sail=new_sail, alpha=entry.alpha,
                                   index=remapped.astype(np.uint16))
    return replace(rig, entries=tuple(entries))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _manifest(rig: SailRig) -> dict:
    return {
        "version": rig.version,
        "width": rig.width,
        "height": rig.height,
        "image_sha256": rig.image_sha256,
        "sails": [
            {
                "vertices": [[float(c) for c in row] for row in e.sail.vertices],
                "focus": [e.sail.focus[0], e.sail.focus[1]],
                "wind": e.sail.wind,
                "subdivision": e.sail.subdivision,
                "alpha_file": f"alpha_{i}.png",
                "index_file": f"index_{i}.png",
            }
            for i, e in enumerate(rig.entries)
        ],
        "fit_config_digest": rig.fit_config_digest,
    }


def save_rig(rig: SailRig, path) -> None:
    """Write the bundle. Deterministic: identical rigs produce identical bytes."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_manifest(rig), indent=2) + "\n"
    (root / "manifest.json").write_text(text)
    for i, e in enumerate(rig.entries):
        save_gray_u8(root / f"alpha_{i}.png", e.alpha)
        save_gray_u16(root / f"index_{i}.png", e.index)
    save_rgb_u8(root / "reconstruction.png", recolor(rig))
    if rig.original is not None:
        save_rgb_u8(root / "original.png", quantize_u8(rig.original))


def load_rig(path) -> SailRig:
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise RigFileError(f"missing manifest.json in {root}")
    manifest = json.loads(manifest_path.read_text())
    version = manifest.get("version")
    if version != RIG_VERSION:
        raise RigVersionError(f"unsupported rig version {version!r}, expected {RIG_VERSION}")
    w, h = int(manifest["width"]), int(manifest["height"])
    entries = []
    for i, saildef in enumerate(manifest["sails"]):
        sail = ColorSail(
            vertices=np.array(saildef["vertices"], dtype=float),
            focus=(float(saildef["focus"][0]), float(saildef["focus"][1])),
            wind=float(saildef["wind"]),
            subdivision=int(saildef["subdivision"]),
        )
        alpha_path = root / saildef["alpha_file"]
        index_path = root / saildef["index_file"]
        if not alpha_path.exists():
            raise RigFileError(f"sail {i}: missing alpha file {saildef['alpha_file']}")
        if not index_path.exists():
            raise RigFileError(f"sail {i}: missing index file {saildef['index_file']}")
        alpha = load_gray_u8(alpha_path)
        index = load_gray_u16(index_path)
        if alpha.shape != (h, w):
            raise RigDimensionError(
                f"sail {i}: alpha is {alpha.shape[1]}x{alpha.shape[0]}, manifest says {w}x{h}")
        if index.shape != (h, w):
            raise RigDimensionError(
                f"sail {i}: index map is {index.shape[1]}x{index.shape[0]}, manifest says {w}x{h}")
        max_idx = sail.subdivision ** 2
        bad = (index >= max_idx) & (index != UNMAPPED)
        if bad.any():
            raise RigDimensionError(
                f"sail {i}: index map values exceed the {max_idx}-color grid")
        entries.append(RigEntry(sail=sail, alpha=alpha, index=index))
    original = None
    original_path = root / "original.png"
    if original_path.exists():
        original, _ = load_rgb(original_path)
    return SailRig(
        width=w, height=h,
        image_sha256=str(manifest["image_sha256"]),
        fit_config_digest=str(manifest["fit_config_digest"]),
        entries=tuple(entries),
        original=original,
        version=version,
    )
