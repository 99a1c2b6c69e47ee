"""Soft image decomposition: split an image into alpha-weighted regions, each
governed by one sail, by optimizing per-pixel logits and sail parameters
against a reconstruction objective.

Reconstruction replaces every pixel with the alpha blend of each region's
nearest sail color; total variation keeps the masks spatially coherent and a
tempered softmax pushes them toward binary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .colorimetry import build_histogram, rgb_array_to_lab
from .fit import DEFAULT_SEED, Adam, FitConfig, _kmeans, fit_sail, init_sail, project_params
from .metrics import DEFAULT_LAMBDA_KL
from .pngio import resize_bilinear, resize_rgb
from .sail import ColorSail, N_PARAMS, _decode_params, _decode_vjp

DEFAULT_TAU = 1.0 / 3.0
DEFAULT_TV_WEIGHT = 1e-3
# Per-mask penalty against the selection score's 0-255 mean-distance units.
# A mask-count step changes that objective by single digits on genuinely
# multi-region images, so the penalty lives on the same scale.
DEFAULT_KAPPA_ALPHA = 5.0
DEFAULT_CANDIDATES = (2, 3, 4, 5)
MAX_FIT_SIDE = 256


@dataclass(frozen=True)
class RigConfig:
    tau: float = DEFAULT_TAU
    tv_weight: float = DEFAULT_TV_WEIGHT
    learning_rate: float = 1e-3
    epochs: int = 8
    logit_steps: int = 50            # Adam steps on logits+sails per epoch
    sail_inner_iterations: int = 200  # histogram-refit budget per epoch
    init_fit_iterations: int = 350
    init_restarts: int = 1
    mask_init_tries: int = 2         # k-means seeds in the candidate pool
    init_lambda_kl: float = 1e-2     # stronger KL during the initial sail fits
    beam_logit_steps: int = 40       # short scouting epoch per pool candidate
    subdivision: int = 5
    lambda_kl: float = DEFAULT_LAMBDA_KL
    histogram_n: int = 10
    kappa_alpha: float = DEFAULT_KAPPA_ALPHA
    max_side: int = MAX_FIT_SIDE
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.learning_rate <= 0 or self.epochs < 1 or self.logit_steps < 1:
            raise ValueError("invalid optimization settings")


@dataclass(frozen=True)
class AlphaField:
    """Per-pixel logits with tempered-softmax alphas summing to 1."""

    logits: np.ndarray  # (H, W, N)
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        z = np.asarray(self.logits, dtype=float)
        if z.ndim != 3:
            raise ValueError("logits must have shape (H, W, N)")
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        object.__setattr__(self, "logits", z)

    @property
    def n_alpha(self) -> int:
        return self.logits.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.logits.shape[0], self.logits.shape[1]

    def alphas(self) -> np.ndarray:
        return tempered_softmax(self.logits, self.tau)

    @classmethod
    def from_alphas(cls, alphas: np.ndarray, tau: float = DEFAULT_TAU) -> "AlphaField":
        """Logits reproducing given per-pixel weights (normalized first)."""
        a = np.asarray(alphas, dtype=float)
        a = a / np.maximum(a.sum(axis=-1, keepdims=True), 1e-12)
        return cls(logits=tau * np.log(np.maximum(a, 1e-12)), tau=tau)


@dataclass(frozen=True)
class RigFit:
    alpha: AlphaField
    sails: tuple[ColorSail, ...]
    reconstruction: np.ndarray  # (H, W, 3) float in [0, 1]
    loss_recon: float
    loss_tv: float
    loss_total: float
    epoch_losses: tuple[float, ...]
    n_alpha: int
    config: RigConfig
    fit_shape: tuple[int, int]  # (H, W) the optimization ran at


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def tempered_softmax(z: np.ndarray, tau: float) -> np.ndarray:
    """softmax(z / tau) along the last axis, max-subtracted for stability."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    z = np.asarray(z, dtype=float) / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _sail_palettes(sails) -> list[np.ndarray]:
    return [np.clip(_decode_params(s.to_params(), s.subdivision, True), 0.0, 1.0)
            for s in sails]


def _nearest_to_image(image_flat: np.ndarray, palette: np.ndarray) -> np.ndarray:
    d2 = (image_flat ** 2).sum(axis=1)[:, None] + (palette ** 2).sum(axis=1)[None, :] \
        - 2.0 * (image_flat @ palette.T)
    return np.argmin(d2, axis=1)


def reconstruct(image: np.ndarray, alphas: AlphaField, sails) -> np.ndarray:
    """Alpha-blend, per pixel, each sail's nearest decoded color to the pixel.

    Sails are decoded expanded and clamped. Output is a float (H, W, 3) raster.
    """
    image = np.asarray(image, dtype=float)
    h, w = image.shape[:2]
    if alphas.shape != (h, w):
        raise ValueError("alpha field dimensions must match the image")
    if len(sails) != alphas.n_alpha:
        raise ValueError("need one sail per alpha mask")
    a = alphas.alphas()
    flat = image.reshape(-1, 3)
    out = np.zeros_like(flat)
    for i, palette in enumerate(_sail_palettes(sails)):
        idx = _nearest_to_image(flat, palette)
        out += a[..., i].reshape(-1, 1) * palette[idx]
    return out.reshape(h, w, 3)


def _tv_and_grad(a: np.ndarray):
    """Anisotropic total variation (mean over pixels and masks) of forward
    differences with replicate borders, plus its subgradient.

    The per-pixel contribution map is materialized and reduced with one
    np.sum so independent recomputations of the map reduce identically.
    """
    h, w, n = a.shape
    dx = a[:, 1:, :] - a[:, :-1, :]
    dy = a[1:, :, :] - a[:-1, :, :]
    terms = np.zeros_like(a)
    terms[:, :-1, :] += np.abs(dx)
    terms[:-1, :, :] += np.abs(dy)
    denom = h * w * n
    tv = terms.sum() / denom
    grad = np.zeros_like(a)
    sx = np.sign(dx) / denom
    sy = np.sign(dy) / denom
    grad[:, 1:, :] += sx
    grad[:, :-1, :] -= sx
    grad[1:, :, :] += sy
    grad[:-1, :, :] -= sy
    return tv, grad


def tv_penalty(alphas: AlphaField) -> float:
    """Total variation of the alpha masks; 0 for constant masks."""
    tv, _ = _tv_and_grad(alphas.alphas())
    return float(tv)


# ---------------------------------------------------------------------------
# Joint fit
# ---------------------------------------------------------------------------

def _winner_logits(win: np.ndarray, h: int, w: int, n_alpha: int) -> np.ndarray:
    logits = np.zeros((h * w, n_alpha))
    logits[np.arange(h * w), win] = 2.0
    return logits.reshape(h, w, n_alpha)


def _init_logits(image: np.ndarray, n_alpha: int, seed: int) -> np.ndarray:
    """k-means over per-pixel CIELAB colors; winner logit +2, rest 0."""
    h, w = image.shape[:2]
    lab = rgb_array_to_lab(image.reshape(-1, 3))
    rng = np.random.default_rng(seed)
    uniq = np.unique(lab, axis=0)
    if uniq.shape[0] < n_alpha:
        # fewer distinct colors than masks: cycle the available ones
        centers = uniq[np.arange(n_alpha) % uniq.shape[0]]
    else:
        centers = _kmeans(lab, np.ones(lab.shape[0]), n_alpha, rng)
    d2 = ((lab[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    win = np.argmin(d2, axis=1)
    return _winner_logits(win, h, w, n_alpha)


def _linkage_logits(image: np.ndarray, n_alpha: int, histogram_n: int,
                    mass_frac: float) -> np.ndarray | None:
    """Alternative mask seed: single-linkage grouping of the high-mass
    histogram bins. Separated color clusters survive even when they are too
    elongated for k-means, because rare blend colors (thin region boundaries)
    fall below the mass threshold and cannot chain the groups together."""
    h, w = image.shape[:2]
    flat = image.reshape(-1, 3)
    hist = build_histogram(flat, None, histogram_n)
    centers, masses = hist.occupied()
    keep = masses >= mass_frac * masses.max()
    pts = centers[keep]
    if pts.shape[0] < n_alpha or pts.shape[0] > 400:
        return None
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    groups = [[i] for i in range(len(pts))]
    while len(groups) > n_alpha:
        best = None
        for x in range(len(groups)):
            for y in range(x + 1, len(groups)):
                d = min(d2[a, b] for a in groups[x] for b in groups[y])
                if best is None or d < best[0]:
                    best = (d, x, y)
        _, x, y = best
        groups[x] += groups[y]
        del groups[y]
    group_of = np.empty(len(pts), dtype=int)
    for gi, g in enumerate(groups):
        for c in g:
            group_of[c] = gi
    dp = ((flat[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    win = group_of[np.argmin(dp, axis=1)]
    return _winner_logits(win, h, w, n_alpha)


class _RigProblem:
    """State and objective for one joint logits+sails optimization."""

    def __init__(self, image, n_alpha, config: RigConfig):
        self.image = image
        self.h, self.w = image.shape[:2]
        self.flat = image.reshape(-1, 3)
        self.n_alpha = n_alpha
        self.config = config
        self.n_pix = self.h * self.w

    def unpack(self, params):
        n_logits = self.n_pix * self.n_alpha
        logits = params[:n_logits].reshape(self.h, self.w, self.n_alpha)
        sails = [params[n_logits + i * N_PARAMS: n_logits + (i + 1) * N_PARAMS]
                 for i in range(self.n_alpha)]
        return logits, sails

    def pack(self, logits, sail_params):
        return np.concatenate([logits.ravel()] + [p for p in sail_params])

    def project(self, params):
        n_logits = self.n_pix * self.n_alpha
        out = params.copy()
        for i in range(self.n_alpha):
            lo = n_logits + i * N_PARAMS
            out[lo:lo + N_PARAMS] = project_params(out[lo:lo + N_PARAMS])
        return out

    def loss_and_grad(self, params):
        cfg = self.config
        logits, sail_params = self.unpack(params)
        a = tempered_softmax(logits, cfg.tau)
        a_flat = a.reshape(-1, self.n_alpha)

        palettes = []
        assignments = []
        recon = np.zeros_like(self.flat)
        for i, sp in enumerate(sail_params):
            palette = np.clip(_decode_params(sp, cfg.subdivision, True), 0.0, 1.0)
            idx = _nearest_to_image(self.flat, palette)
            palettes.append(palette)
            assignments.append(idx)
            recon += a_flat[:, i:i + 1] * palette[idx]

        err = self.flat - recon
        dist = np.sqrt((err ** 2).sum(axis=1))
        loss_recon = float(dist.mean())
        unit = err / np.maximum(dist, 1e-12)[:, None]  # d dist / d recon = -unit

        tv, tv_grad = _tv_and_grad(a)
        loss = loss_recon + cfg.tv_weight * float(tv)

        # gradient wrt alphas
        g_a = np.empty_like(a_flat)
        for i in range(self.n_alpha):
            g_a[:, i] = -(unit * palettes[i][assignments[i]]).sum(axis=1) / self.n_pix
        g_a = g_a + cfg.tv_weight * tv_grad.reshape(-1, self.n_alpha)

        # tempered softmax backward
        inner = (g_a * a_flat).sum(axis=1, keepdims=True)
        g_logits = a_flat * (g_a - inner) / cfg.tau

        # gradient wrt sail parameters through the selected colors
        g_sails = []
        for i, sp in enumerate(sail_params):
            m = palettes[i].shape[0]
            wcot = -(a_flat[:, i:i + 1] * unit) / self.n_pix  # dL/d selected color
            g_pal = np.stack(
                [np.bincount(assignments[i], weights=wcot[:, c], minlength=m)
                 for c in range(3)], axis=1)
            # clamp kills the gradient outside the gamut
            raw = _decode_params(sp, cfg.subdivision, True)
            g_pal[(raw < 0.0) | (raw > 1.0)] = 0.0
            g_sails.append(_decode_vjp(sp, cfg.subdivision, g_pal))
        grad = np.concatenate([g_logits.ravel()] + g_sails)
        return loss, grad, (loss_recon, float(tv))

    def objective(self, params):
        loss, _, parts = self.loss_and_grad(params)
        return loss, parts


def _refit_sails(problem: _RigProblem, params, config: RigConfig):
    """Histogram refit proposals per sail, accepted only when the full
    objective improves."""
    logits, sail_params = problem.unpack(params)
    a = tempered_softmax(logits, config.tau).reshape(-1, problem.n_alpha)
    current, _ = problem.objective(params)
    fit_cfg = FitConfig(
        subdivision=config.subdivision, lambda_kl=config.lambda_kl,
        max_iterations=config.sail_inner_iterations, restarts=1,
        seed=config.seed, probe_iterations=0)
    for i in range(problem.n_alpha):
        weights = a[:, i]
        if weights.sum() <= 1e-9:
            continue  # collapsed mask, nothing to fit
        hist = build_histogram(problem.flat, weights, config.histogram_n)
        warm = ColorSail.from_params(sail_params[i], config.subdivision)
        res = fit_sail(hist, fit_cfg, init=warm)
        proposal = params.copy()
        n_logits = problem.n_pix * problem.n_alpha
        lo = n_logits + i * N_PARAMS
        proposal[lo:lo + N_PARAMS] = res.sail.to_params()
        value, _ = problem.objective(proposal)
        if value < current:
            params = proposal
            current = value
    return params, current


def _hard_reassign(problem: _RigProblem, params, config: RigConfig, current: float):
    """Propose winner-take-all logits from per-pixel nearest-sail errors,
    accepted only when the objective improves. Escapes mask/sail deadlocks
    once the sails are informative; the next epoch's refits adapt the sails."""
    _, sail_params = problem.unpack(params)
    errors = np.empty((problem.n_pix, problem.n_alpha))
    for i, sp in enumerate(sail_params):
        palette = np.clip(_decode_params(sp, config.subdivision, True), 0.0, 1.0)
        idx = _nearest_to_image(problem.flat, palette)
        errors[:, i] = np.sqrt(((problem.flat - palette[idx]) ** 2).sum(axis=1))
    win = np.argmin(errors, axis=1)
    logits = np.zeros((problem.n_pix, problem.n_alpha))
    logits[np.arange(problem.n_pix), win] = 2.0
    proposal = problem.pack(logits.reshape(problem.h, problem.w, problem.n_alpha),
                            list(sail_params))
    value, _ = problem.objective(proposal)
    if value < current:
        return proposal, value
    return params, current


def fit_rig(image: np.ndarray, n_alpha: int, config: RigConfig | None = None) -> RigFit:
    """Decompose an image into n_alpha soft masks, one sail per mask.

    Images larger than config.max_side on either side are fitted at reduced
    resolution (callers upsample the masks afterwards). Alternation: blocks of
    Adam steps over logits and sail parameters jointly, then per-sail
    histogram refits accepted only when they lower the objective. The
    epoch-end objective never increases (epochs ending worse restore the best
    state seen).
    """
    config = config or RigConfig()
    if not 1 <= n_alpha <= 8:
        raise ValueError("n_alpha must be in [1, 8]")
    image = np.asarray(image, dtype=float)
    h0, w0 = image.shape[:2]
    if max(h0, w0) > config.max_side:
        scale = config.max_side / max(h0, w0)
        image = resize_rgb(image, (max(1, round(w0 * scale)), max(1, round(h0 * scale))))

    problem = _RigProblem(image, n_alpha, config)
    # The stronger KL here stops an initial sail from bridging several color
    # clusters when its mask starts out mixed; unregularized greedy
    # reconstruction happily uses unrelated colors and derails mask learning.
    init_cfg = FitConfig(
        subdivision=config.subdivision, lambda_kl=config.init_lambda_kl,
        max_iterations=config.init_fit_iterations, restarts=config.init_restarts,
        seed=config.seed)

    # The color k-means behind the mask init is multimodal; pool several mask
    # seeds (k-means seeds plus linkage groupings of the histogram), fit the
    # initial sails for each, and run every candidate through one short
    # scouting epoch. The start objective alone misranks candidates (a bad
    # cut with over-stretched sails can score marginally better before any
    # optimization), so selection happens after the scout.
    pool = [_init_logits(image, n_alpha, config.seed + 7919 * attempt)
            for attempt in range(max(1, config.mask_init_tries))]
    for frac in (0.25, 0.08):
        cand = _linkage_logits(image, n_alpha, config.histogram_n, frac)
        if cand is not None:
            pool.append(cand)
    seen = set()
    candidates = []
    for logits in pool:
        key = logits.tobytes()
        if key in seen:
            continue
        seen.add(key)
        a0 = tempered_softmax(logits, config.tau).reshape(-1, n_alpha)
        sails = []
        for i in range(n_alpha):
            weights = a0[:, i]
            if weights.sum() <= 1e-9:
                sails.append(init_sail(build_histogram(problem.flat, None, config.histogram_n),
                                       config.seed, config.subdivision).to_params())
                continue
            hist = build_histogram(problem.flat, weights, config.histogram_n)
            sails.append(fit_sail(hist, init_cfg).sail.to_params())
        candidates.append(problem.pack(logits, sails))

    def run_epoch(params, adam, steps, best):
        best_value, best_params = best
        for _step in range(steps):
            loss, grad, _ = problem.loss_and_grad(params)
            if not math.isfinite(loss):
                params = best_params.copy()
                break
            if loss < best_value:
                best_value = loss
                best_params = params.copy()
            params = problem.project(adam.step(params, grad))
        params, value = _refit_sails(problem, params, config)
        params, value = _hard_reassign(problem, params, config, value)
        if value < best_value:
            best_value = value
            best_params = params.copy()
        else:
            params = best_params.copy()
        return params, (best_value, best_params)

    best_start = None
    for candidate in candidates:
        adam = Adam(candidate.size, config.learning_rate)
        value0, _ = problem.objective(candidate)
        params_c, (value_c, best_c) = run_epoch(
            candidate.copy(), adam, config.beam_logit_steps, (value0, candidate.copy()))
        if best_start is None or value_c < best_start[0]:
            best_start = (value_c, best_c, params_c, adam)

    best_value, best_params, params, adam = best_start
    epoch_losses = [best_value]
    for _epoch in range(config.epochs - 1):
        params, (best_value, best_params) = run_epoch(
            params, adam, config.logit_steps, (best_value, best_params))
        epoch_losses.append(best_value)

    logits, sail_params = problem.unpack(best_params)
    sails = tuple(ColorSail.from_params(p, config.subdivision) for p in sail_params)
    field = AlphaField(logits=logits, tau=config.tau)
    recon = reconstruct(image, field, sails)
    loss_recon = float(np.sqrt(((image - recon) ** 2).sum(axis=2)).mean())
    loss_tv = tv_penalty(field)
    return RigFit(
        alpha=field, sails=sails, reconstruction=recon,
        loss_recon=loss_recon, loss_tv=loss_tv,
        loss_total=loss_recon + config.tv_weight * loss_tv,
        epoch_losses=tuple(epoch_losses), n_alpha=n_alpha, config=config,
        fit_shape=(image.shape[0], image.shape[1]))


def fit_with_masks(image: np.ndarray, masks: np.ndarray,
                   config: RigConfig | None = None) -> RigFit:
    """Fit one sail per user-supplied mask; no logit optimization.

    masks: (H, W, N) nonnegative weights, normalized per pixel here. This is
    the refit path for corrected or hand-drawn regions.
    """
    config = config or RigConfig()
    image = np.asarray(image, dtype=float)
    masks = np.asarray(masks, dtype=float)
    if masks.ndim != 3 or masks.shape[:2] != image.shape[:2]:
        raise ValueError("masks must be (H, W, N) and match the image size")
    n_alpha = masks.shape[2]
    if not 1 <= n_alpha <= 8:
        raise ValueError("mask count must be in [1, 8]")

    h0, w0 = image.shape[:2]
    if max(h0, w0) > config.max_side:
        scale = config.max_side / max(h0, w0)
        size = (max(1, round(w0 * scale)), max(1, round(h0 * scale)))
        image = resize_rgb(image, size)
        masks = np.stack([np.clip(resize_bilinear(masks[..., i], size), 0.0, None)
                          for i in range(n_alpha)], axis=-1)

    field = AlphaField.from_alphas(masks, tau=config.tau)
    a = field.alphas().reshape(-1, n_alpha)
    flat = image.reshape(-1, 3)
    fit_cfg = FitConfig(subdivision=config.subdivision, lambda_kl=config.lambda_kl,
                        seed=config.seed)
    sails = []
    for i in range(n_alpha):
        weights = a[:, i]
        hist = build_histogram(flat, weights, config.histogram_n)
        sails.append(fit_sail(hist, fit_cfg).sail)
    sails = tuple(sails)
    recon = reconstruct(image, field, sails)
    loss_recon = float(np.sqrt(((image - recon) ** 2).sum(axis=2)).mean())
    loss_tv = tv_penalty(field)
    total = loss_recon + config.tv_weight * loss_tv
    return RigFit(alpha=field, sails=sails, reconstruction=recon,
                  loss_recon=loss_recon, loss_tv=loss_tv, loss_total=total,
                  epoch_losses=(total,), n_alpha=n_alpha, config=config,
                  fit_shape=(image.shape[0], image.shape[1]))


def rig_score(fit: RigFit, kappa_alpha: float) -> float:
    """Model-selection score: objective in 0-255 units plus per-mask penalty."""
    return 255.0 * fit.loss_total + kappa_alpha * fit.n_alpha


def select_n_alpha(image: np.ndarray, candidates=DEFAULT_CANDIDATES,
                   config: RigConfig | None = None) -> tuple[int, RigFit]:
    """Fit every candidate mask count and keep the best score; ties go to the
    smaller count."""
    config = config or RigConfig()
    cands = sorted(set(int(c) for c in candidates))
    if not cands:
        raise ValueError("candidates must be nonempty")
    best = None
    for n in cands:
        fit = fit_rig(image, n, config)
        score = rig_score(fit, config.kappa_alpha)
        if best is None or score < best[0]:
            best = (score, n, fit)
    return best[1], best[2]
