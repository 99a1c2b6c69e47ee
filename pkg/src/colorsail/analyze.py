"""Corpus analytics: per-image colorfulness and patch-entropy statistics.

Patches are 32x32 crops of a 512-max-side resize, centers drawn from a
truncated Gaussian around the image center (sigma = quarter side) so the more
detailed central subject is sampled more often.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .colorimetry import build_histogram, colorfulness, hardness_label, histogram_entropy
from .pngio import load_rgb, resize_rgb

PATCH_SIZE = 32
RESIZE_MAX_SIDE = 512
PATCHES_PER_IMAGE = 64

CSV_COLUMNS = (
    ["file", "width", "height", "colorfulness", "patches", "entropy_mean"]
    + [f"entropy_{i}" for i in range(10)]
    + ["easy", "medium", "hard"]
)


def sample_patch_centers(rng, shape, count: int, patch: int):
    """Center-biased patch centers: truncated Gaussian, sigma = side / 4."""
    h, w = shape
    half = patch // 2
    lo_y, hi_y = half, h - (patch - half)
    lo_x, hi_x = half, w - (patch - half)
    centers = []
    for _ in range(count):
        cy = cx = None
        for _try in range(100):
            y = rng.normal(h / 2.0, h / 4.0)
            x = rng.normal(w / 2.0, w / 4.0)
            if lo_y <= y <= hi_y and lo_x <= x <= hi_x:
                cy, cx = y, x
                break
        if cy is None:
            cy = min(max(rng.normal(h / 2.0, h / 4.0), lo_y), hi_y)
            cx = min(max(rng.normal(w / 2.0, w / 4.0), lo_x), hi_x)
        centers.append((int(cy), int(cx)))
    return centers


def analyze_image(path, seed: int, patches: int = PATCHES_PER_IMAGE) -> dict:
    image, _ = load_rgb(path)
    h0, w0 = image.shape[:2]
    scale = RESIZE_MAX_SIDE / max(h0, w0)
    resized = resize_rgb(image, (max(1, round(w0 * scale)), max(1, round(h0 * scale))))
    h, w = resized.shape[:2]
    patch = min(PATCH_SIZE, h, w)

    rng = np.random.default_rng([seed, h0, w0])
    entropies = []
    for cy, cx in sample_patch_centers(rng, (h, w), patches, patch):
        y0 = min(max(cy - patch // 2, 0), h - patch)
        x0 = min(max(cx - patch // 2, 0), w - patch)
        tile = resized[y0:y0 + patch, x0:x0 + patch].reshape(-1, 3)
        entropies.append(histogram_entropy(build_histogram(tile, None, 10)))

    buckets = [0] * 10
    counts = {"easy": 0, "medium": 0, "hard": 0}
    for e in entropies:
        buckets[min(int(e), 9)] += 1
        counts[hardness_label(e)] += 1
    row = {
        "file": Path(path).name,
        "width": w0,
        "height": h0,
        "colorfulness": repr(float(colorfulness(image))),
        "patches": len(entropies),
        "entropy_mean": repr(float(np.mean(entropies))),
    }
    for i, b in enumerate(buckets):
        row[f"entropy_{i}"] = b
    row.update(counts)
    return row


def analyze_directory(directory, out_csv, seed: int, log=print) -> int:
    """Analyze every PNG in a directory into a CSV; unreadable files are
    skipped with a warning. Returns the number of rows written."""
    files = sorted(Path(directory).glob("*.png"))
    rows = []
    for f in files:
        try:
            rows.append(analyze_image(f, seed))
        except Exception as exc:  # unreadable or malformed image
            log(f"warning: skipping {f.name}: {exc}")
    with open(out_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return len(rows)
