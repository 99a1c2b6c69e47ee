"""Color-space conversion, RGB histograms with soft votes, and corpus analytics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sail import DecodedSail

DEFAULT_BINS = 10

# sRGB (D65, 2 degree observer) linear RGB -> XYZ.
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_WHITE = np.array([0.95047, 1.0, 1.08883])
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0


class EmptyDistributionError(ValueError):
    """Histogram built from zero total weight."""


@dataclass(frozen=True)
class LabColor:
    L: float
    a: float
    b: float


def _srgb_linearize(c: np.ndarray) -> np.ndarray:
    return np.where(c > 0.04045, ((c + 0.055) / 1.055) ** 2.4, c / 12.92)


def rgb_array_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Vectorized sRGB [0,1] -> CIELAB. Input shape (..., 3), same shape out."""
    rgb = np.asarray(rgb, dtype=float)
    xyz = _srgb_linearize(rgb) @ _RGB_TO_XYZ.T / _WHITE
    f = np.where(xyz > _LAB_EPS, np.cbrt(xyz), (_LAB_KAPPA * xyz + 16.0) / 116.0)
    out = np.empty_like(rgb)
    out[..., 0] = 116.0 * f[..., 1] - 16.0
    out[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    out[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return out


def srgb_to_lab(rgb) -> LabColor:
    """Convert one sRGB triple with channels in [0, 1] to CIELAB (D65)."""
    rgb = np.asarray(rgb, dtype=float)
    if rgb.shape != (3,):
        raise ValueError("srgb_to_lab expects a single RGB triple")
    if rgb.min() < 0.0 or rgb.max() > 1.0:
        raise ValueError("channels must be in [0, 1]")
    lab = rgb_array_to_lab(rgb)
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColorHistogram:
    """n x n x n RGB histogram. Bin for channel c is min(floor(c*n), n-1)."""

    n: int
    masses: np.ndarray  # (n, n, n), >= 0
    normalized: bool

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.shape != (self.n, self.n, self.n):
            raise ValueError(f"masses must have shape {(self.n,) * 3}")
        object.__setattr__(self, "masses", m)

    def total(self) -> float:
        return float(self.masses.sum())

    def normalize(self) -> "ColorHistogram":
        if self.normalized:
            return self
        t = self.total()
        if t <= 0.0:
            raise EmptyDistributionError("histogram has zero total mass")
        return ColorHistogram(self.n, self.masses / t, True)

    def occupied(self) -> tuple[np.ndarray, np.ndarray]:
        """Centers (k, 3) and masses (k,) of the occupied bins, index order."""
        idx = np.argwhere(self.masses > 0.0)
        centers = (idx + 0.5) / self.n
        return centers, self.masses[idx[:, 0], idx[:, 1], idx[:, 2]]


def bin_indices(colors: np.ndarray, n: int) -> np.ndarray:
    """Integer (…, 3) bin coordinates; out-of-range channels land in edge bins."""
    return np.clip(np.floor(np.asarray(colors, dtype=float) * n), 0, n - 1).astype(np.intp)


def build_histogram(colors: np.ndarray, weights=None, n: int = DEFAULT_BINS) -> ColorHistogram:
    """Accumulate weighted color votes into a normalized histogram.

    colors: (P, 3) RGB in [0, 1]; weights: (P,) nonnegative or None for 1s.
    Raises EmptyDistributionError when no weight arrives at all.
    """
    colors = np.asarray(colors, dtype=float).reshape(-1, 3)
    if n < 1:
        raise ValueError("n must be >= 1")
    if colors.shape[0] == 0:
        raise EmptyDistributionError("no pixels")
    if weights is None:
        weights = np.ones(colors.shape[0])
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.shape[0] != colors.shape[0]:
        raise ValueError("weights length must match colors")
    if np.any(weights < 0.0):
        raise ValueError("weights must be >= 0")
    total = weights.sum()
    if total <= 0.0:
        raise EmptyDistributionError("all weights are zero")
    idx = bin_indices(colors, n)
    flat = (idx[:, 0] * n + idx[:, 1]) * n + idx[:, 2]
    masses = np.bincount(flat, weights=weights, minlength=n ** 3).reshape(n, n, n)
    return ColorHistogram(n, masses / total, True)


def sail_histogram(decoded: DecodedSail, n: int = DEFAULT_BINS) -> ColorHistogram:
    """Histogram of a decoded sail, every color voting with weight 1/|colors|."""
    colors = decoded.colors
    if colors.shape[0] == 0:
        raise EmptyDistributionError("decoded sail has no colors")
    return build_histogram(np.clip(colors, 0.0, 1.0), None, n)


def patchmax_histogram(image: np.ndarray, patch_size: int = 8, n: int = DEFAULT_BINS) -> ColorHistogram:
    """Per-bin maximum over per-patch normalized histograms, renormalized.

    Tiles the image with patch_size x patch_size blocks (ragged edge tiles
    kept), so every color that dominates some small patch reaches a maximal
    bin value even if it is rare globally.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 3 or image.shape[2] != 3 or image.size == 0:
        raise ValueError("image must be a nonempty (H, W, 3) array")
    if patch_size < 1:
        raise ValueError("patch_size must be >= 1")
    h, w = image.shape[:2]
    best = np.zeros((n, n, n))
    for y0 in range(0, h, patch_size):
        for x0 in range(0, w, patch_size):
            tile = image[y0:y0 + patch_size, x0:x0 + patch_size].reshape(-1, 3)
            hist = build_histogram(tile, None, n)
            np.maximum(best, hist.masses, out=best)
    return ColorHistogram(n, best / best.sum(), True)


def histogram_entropy(hist: ColorHistogram) -> float:
    """Shannon entropy of a normalized histogram, in bits."""
    if not hist.normalized:
        hist = hist.normalize()
    p = hist.masses[hist.masses > 0.0]
    return float(-(p * np.log2(p)).sum())


def hardness_label(entropy: float) -> str:
    """Patch difficulty from histogram entropy: easy < 1.5 bits, hard > 3 bits."""
    if entropy < 1.5:
        return "easy"
    if entropy > 3.0:
        return "hard"
    return "medium"


# ---------------------------------------------------------------------------
# Colorfulness
# ---------------------------------------------------------------------------

def colorfulness(image: np.ndarray) -> float:
    """Hasler-Suesstrunk opponent-channel colorfulness on the 0-255 scale.

    rg = R - G, yb = (R + G)/2 - B;
    M = sqrt(var(rg) + var(yb)) + 0.3 * sqrt(mean(rg)^2 + mean(yb)^2),
    population statistics over all pixels.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 3 or image.shape[2] != 3 or image.size == 0:
        raise ValueError("image must be a nonempty (H, W, 3) array")
    x = image.reshape(-1, 3) * 255.0
    rg = x[:, 0] - x[:, 1]
    yb = 0.5 * (x[:, 0] + x[:, 1]) - x[:, 2]
    std = np.sqrt(rg.var() + yb.var())
    mean = np.sqrt(rg.mean() ** 2 + yb.mean() ** 2)
    return float(std + 0.3 * mean)
