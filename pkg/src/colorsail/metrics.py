"""Loss and evaluation functions over color sets, histograms, and sails."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .colorimetry import ColorHistogram, rgb_array_to_lab, sail_histogram
from .sail import ColorSail, decode

DEFAULT_LAMBDA_KL = 1e-4
DEFAULT_DELTA = 10.0
KL_EPSILON = 1e-8


@dataclass(frozen=True)
class FitLoss:
    """Loss breakdown for one sail against one target distribution."""

    e_l2: float
    e_kl: float
    r_percent: float
    combined: float
    lambda_kl: float


def _check_targets(colors, weights):
    colors = np.asarray(colors, dtype=float).reshape(-1, 3)
    if colors.shape[0] == 0:
        raise ValueError("targets must be nonempty")
    if weights is None:
        weights = np.ones(colors.shape[0])
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.shape[0] != colors.shape[0]:
        raise ValueError("weights length must match targets")
    if np.any(weights < 0.0) or weights.sum() <= 0.0:
        raise ValueError("weights must be >= 0 with positive total")
    return colors, weights


def _check_palette(palette):
    palette = np.asarray(palette, dtype=float).reshape(-1, 3)
    if palette.shape[0] == 0:
        raise ValueError("palette must be nonempty")
    return palette


def e_l2(targets, weights, palette) -> float:
    """Greedy reconstruction loss: weighted mean over targets of the distance
    to the nearest palette color (plain Euclidean, channels in [0, 1])."""
    targets, weights = _check_targets(targets, weights)
    palette = _check_palette(palette)
    d = np.linalg.norm(targets[:, None, :] - palette[None, :, :], axis=2)
    nearest = d.min(axis=1)
    return float((weights * nearest).sum() / weights.sum())


def r_percent(targets, weights, palette, delta: float = DEFAULT_DELTA) -> float:
    """Weighted fraction of targets whose nearest palette color (nearest in
    CIELAB) lies within CIELAB distance delta. E_% is 1 - r_percent."""
    if delta <= 0.0:
        raise ValueError("delta must be > 0")
    targets, weights = _check_targets(targets, weights)
    palette = _check_palette(palette)
    lab_t = rgb_array_to_lab(np.clip(targets, 0.0, 1.0))
    lab_p = rgb_array_to_lab(np.clip(palette, 0.0, 1.0))
    d = np.linalg.norm(lab_t[:, None, :] - lab_p[None, :, :], axis=2)
    hit = d.min(axis=1) < delta
    return float((weights * hit).sum() / weights.sum())


def e_kl(sail_hist: ColorHistogram, image_hist: ColorHistogram,
         epsilon: float = KL_EPSILON) -> float:
    """KL divergence of the sail histogram from the (smoothed) image histogram.

    Natural log; the image histogram gets epsilon added to every bin and is
    renormalized, so bins unsupported by the image stay finite. The image
    histogram is expected to be the patch-max histogram.
    """
    if sail_hist.n != image_hist.n:
        raise ValueError(f"histogram sizes differ: {sail_hist.n} vs {image_hist.n}")
    s = sail_hist.normalize().masses
    y = image_hist.normalize().masses
    y = (y + epsilon) / (y + epsilon).sum()
    mask = s > 0.0
    return float((s[mask] * np.log(s[mask] / y[mask])).sum())


def combined_loss(targets, weights, sail: ColorSail, image_hist: ColorHistogram,
                  lambda_kl: float = DEFAULT_LAMBDA_KL,
                  delta: float = DEFAULT_DELTA) -> FitLoss:
    """Full loss breakdown: decode the sail (expanded set, unclamped), then
    e_l2 + lambda * e_kl, with r_percent reported alongside."""
    decoded = decode(sail, include_downward=True, clamp=False)
    l2 = e_l2(targets, weights, decoded.colors)
    kl = e_kl(sail_histogram(decoded, image_hist.n), image_hist)
    rp = r_percent(targets, weights, decoded.colors, delta)
    return FitLoss(e_l2=l2, e_kl=kl, r_percent=rp,
                   combined=l2 + lambda_kl * kl, lambda_kl=lambda_kl)
