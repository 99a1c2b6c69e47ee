"""Fit a color sail to a color distribution by projected gradient descent.

The objective is the greedy nearest-color reconstruction loss over the
occupied histogram bin centers plus a small KL term pulling the decoded color
distribution toward the image's patch-max histogram. Inside the loop the KL
term uses a trilinear soft histogram of the decoded colors so that it has a
usable gradient; reported metrics always use the hard-binned histogram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .colorimetry import ColorHistogram, EmptyDistributionError
from .metrics import DEFAULT_LAMBDA_KL, FitLoss, combined_loss
from .sail import ColorSail, N_PARAMS

DEFAULT_SEED = 17


class NumericalError(RuntimeError):
    """Every restart diverged to a non-finite loss."""


@dataclass(frozen=True)
class FitConfig:
    subdivision: int = 5
    sweep: tuple[int, ...] | None = None
    lambda_kl: float = DEFAULT_LAMBDA_KL
    learning_rate: float = 1e-3
    max_iterations: int = 2000
    restarts: int = 5
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    tolerance: float = 1e-6
    tolerance_window: int = 50
    complexity_weight: float = 0.0  # per-subdivision penalty for sweep selection
    probe_iterations: int = 160     # short scouting descents seeding the restarts
    probe_learning_rate: float = 1e-2
    seed: int = DEFAULT_SEED
    record_params: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0 or self.tolerance <= 0 or self.tolerance_window <= 0:
            raise ValueError("rates and tolerances must be > 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class FitResult:
    sail: ColorSail
    loss: FitLoss
    iterations: int
    restart_index: int
    traces: tuple[np.ndarray, ...]       # internal loss per iteration, per restart
    restart_losses: tuple[float, ...]    # reported combined loss per restart (nan = aborted)
    param_traces: tuple[np.ndarray, ...] = ()


class Adam:
    """Plain Adam over a flat parameter vector."""

    def __init__(self, size, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(size)
        self.v = np.zeros(size)

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state(self):
        return self.t, self.m.copy(), self.v.copy()

    def restore(self, state):
        self.t, m, v = state[0], state[1].copy(), state[2].copy()
        self.m, self.v = m, v


# ---------------------------------------------------------------------------
# Parameter projection
# ---------------------------------------------------------------------------

def _project_focus(pu: float, pv: float) -> tuple[float, float]:
    """Euclidean projection onto {p_u >= 0, p_v >= 0, p_u + p_v <= 1}."""
    if pu >= 0.0 and pv >= 0.0 and pu + pv <= 1.0:
        return pu, pv
    best = None
    # edges: pv = 0, pu = 0, and pu + pv = 1
    for qu, qv in (
        (min(max(pu, 0.0), 1.0), 0.0),
        (0.0, min(max(pv, 0.0), 1.0)),
        (min(max((pu - pv + 1.0) / 2.0, 0.0), 1.0), None),
    ):
        if qv is None:
            qv = 1.0 - qu
        d = (pu - qu) ** 2 + (pv - qv) ** 2
        if best is None or d < best[0]:
            best = (d, qu, qv)
    return best[1], best[2]


def project_params(params: np.ndarray) -> np.ndarray:
    out = params.copy()
    out[:9] = np.clip(out[:9], 0.0, 1.0)
    out[9], out[10] = _project_focus(out[9], out[10])
    out[11] = min(max(out[11], -1.0), 1.0)
    return out


# ---------------------------------------------------------------------------
# Internal differentiable loss
# ---------------------------------------------------------------------------

_SOFT_EPS = 1e-12


class _Problem:
    """Cached pieces of one fitting problem: targets, weights, soft-KL prior,
    and the Bernstein matrix for the subdivision being fitted."""

    def __init__(self, s, targets, weights, log_smoothed, lambda_kl, n):
        self.s = s
        self.n = n
        self.lambda_kl = lambda_kl
        self.log_smoothed = None if log_smoothed is None else log_smoothed.ravel()
        self.targets = targets
        self.weights = weights / weights.sum()
        self.t2 = (targets ** 2).sum(axis=1)

    # -- soft trilinear histogram KL with gradient wrt colors ----------------

    _CORNERS = np.array([(dx, dy, dz) for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)])
    _CORNER_SIGNS = _CORNERS * 2.0 - 1.0  # (8, 3), -1 for the low corner

    def _soft_kl(self, colors):
        n = self.n
        m = colors.shape[0]
        pos = np.clip(colors, 0.0, 1.0) * n - 0.5
        idx0 = np.clip(np.floor(pos), 0, n - 2).astype(np.intp)
        frac = np.clip(pos - idx0, 0.0, 1.0)
        active = (pos > idx0) & (pos - idx0 < 1.0) & (colors > 0.0) & (colors < 1.0)

        corners = self._CORNERS                       # (8, 3)
        w_axis = np.where(corners[:, None, :] == 1, frac[None], 1.0 - frac[None])  # (8, m, 3)
        w_corner = w_axis[..., 0] * w_axis[..., 1] * w_axis[..., 2]                # (8, m)
        flat_idx = ((idx0[None, :, 0] + corners[:, 0, None]) * n
                    + idx0[None, :, 1] + corners[:, 1, None]) * n \
            + idx0[None, :, 2] + corners[:, 2, None]                               # (8, m)

        hist = np.bincount(flat_idx.ravel(), weights=w_corner.ravel() / m,
                           minlength=n ** 3)
        logs = np.log(hist + _SOFT_EPS)
        loss = float((hist * (logs - self.log_smoothed)).sum())
        dS = logs - self.log_smoothed + hist / (hist + _SOFT_EPS)

        cv = dS[flat_idx]                                                          # (8, m)
        grad = np.empty_like(colors)
        grad[:, 0] = ((cv * self._CORNER_SIGNS[:, 0, None])
                      * w_axis[..., 1] * w_axis[..., 2]).sum(axis=0)
        grad[:, 1] = ((cv * self._CORNER_SIGNS[:, 1, None])
                      * w_axis[..., 0] * w_axis[..., 2]).sum(axis=0)
        grad[:, 2] = ((cv * self._CORNER_SIGNS[:, 2, None])
                      * w_axis[..., 0] * w_axis[..., 1]).sum(axis=0)
        grad *= n / m
        grad[~active] = 0.0
        return loss, grad

    # -- fused loss + gradient ------------------------------------------------

    def loss_and_grad(self, params, assignment=None):
        from .sail import _decode_params, _decode_vjp

        colors = _decode_params(params, self.s, True)
        if assignment is None:
            d2mat = self.t2[:, None] + (colors ** 2).sum(axis=1)[None, :] \
                - 2.0 * (self.targets @ colors.T)
            assignment = np.argmin(d2mat, axis=1)
        diff = colors[assignment] - self.targets
        dist = np.sqrt((diff ** 2).sum(axis=1))
        loss = float((self.weights * dist).sum())

        unit = diff / np.maximum(dist, 1e-12)[:, None]
        scaled = self.weights[:, None] * unit
        m = colors.shape[0]
        g_colors = np.stack(
            [np.bincount(assignment, weights=scaled[:, c], minlength=m)
             for c in range(3)], axis=1)

        if self.lambda_kl > 0.0 and self.log_smoothed is not None:
            kl, g_kl = self._soft_kl(colors)
            loss += self.lambda_kl * kl
            g_colors = g_colors + self.lambda_kl * g_kl

        grad = _decode_vjp(params, self.s, g_colors)
        return loss, grad, assignment


def _loss_and_grad(params: np.ndarray, s: int, targets: np.ndarray,
                   weights: np.ndarray, log_smoothed: np.ndarray | None,
                   lambda_kl: float, n: int,
                   assignment: np.ndarray | None = None):
    """Internal loss and its gradient wrt the 12 sail parameters.

    The nearest-color assignment is recomputed unless one is passed in
    (finite-difference checks freeze it); the gradient treats it as constant,
    i.e. a subgradient of the min.
    """
    problem = _Problem(s, targets, weights, log_smoothed, lambda_kl, n)
    return problem.loss_and_grad(params, assignment)


def _log_smoothed(image_hist: ColorHistogram) -> np.ndarray:
    y = image_hist.normalize().masses
    y = (y + 1e-8) / (y + 1e-8).sum()
    return np.log(y)


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def _kmeans_once(points: np.ndarray, weights: np.ndarray, k: int, rng,
                 max_iter: int = 50):
    """One weighted k-means run with k-means++ seeding; deterministic given rng."""
    p = weights / weights.sum()
    centers = [points[rng.choice(len(points), p=p)]]
    for _ in range(k - 1):
        d2 = np.min(
            ((points[:, None, :] - np.array(centers)[None, :, :]) ** 2).sum(axis=2),
            axis=1,
        )
        mass = weights * d2
        if mass.sum() <= 0.0:
            centers.append(points[rng.choice(len(points), p=p)])
        else:
            centers.append(points[rng.choice(len(points), p=mass / mass.sum())])
    centers = np.array(centers)
    prev = None
    d2 = None
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = np.argmin(d2, axis=1)
        if prev is not None and np.array_equal(assign, prev):
            break
        prev = assign
        for c in range(k):
            sel = assign == c
            wsum = weights[sel].sum()
            if wsum > 0.0:
                centers[c] = (weights[sel, None] * points[sel]).sum(axis=0) / wsum
    inertia = float((weights * d2.min(axis=1)).sum())
    return centers, inertia


def _kmeans(points: np.ndarray, weights: np.ndarray, k: int, rng,
            max_iter: int = 50, n_init: int = 1) -> np.ndarray:
    """Weighted k-means; n_init > 1 keeps the best run by inertia.

    Callers that retry with different seeds want n_init=1: inertia-optimal
    clusterings are near-identical across seeds, which kills the diversity
    the retries exist for.
    """
    best = None
    for _ in range(n_init):
        centers, inertia = _kmeans_once(points, weights, k, rng, max_iter)
        if best is None or inertia < best[0]:
            best = (inertia, centers)
    return best[1]


def init_sail(hist: ColorHistogram, seed: int = DEFAULT_SEED,
              subdivision: int = 5) -> ColorSail:
    """Deterministic starting sail: vertices from weighted 3-means over the
    occupied bin centers, central focus, zero wind.

    With fewer than 3 occupied bins, centers are duplicated and jittered by
    up to half a bin per channel.
    """
    centers, masses = hist.occupied()
    if centers.shape[0] == 0:
        raise EmptyDistributionError("histogram has empty support")
    rng = np.random.default_rng(seed)
    n = hist.n
    if centers.shape[0] < 3:
        verts = np.array([centers[i % centers.shape[0]] for i in range(3)])
        for i in range(centers.shape[0], 3):
            verts[i] = verts[i] + rng.uniform(-0.5 / n, 0.5 / n, size=3)
        verts = np.clip(verts, 0.0, 1.0)
    else:
        verts = np.clip(_kmeans(centers, masses, 3, rng), 0.0, 1.0)
    return ColorSail(vertices=verts, focus=(1.0 / 3.0, 1.0 / 3.0), wind=0.0,
                     subdivision=subdivision)


def _random_restart_params(hist: ColorHistogram, restart: int, config: FitConfig) -> np.ndarray:
    rng = np.random.default_rng([config.seed, restart])
    centers, masses = hist.occupied()
    p = masses / masses.sum()
    picks = rng.choice(len(centers), size=3, p=p)
    verts = centers[picks] + rng.uniform(-0.5 / hist.n, 0.5 / hist.n, size=(3, 3))
    params = np.concatenate([
        np.clip(verts, 0.0, 1.0).ravel(),
        [1.0 / 3.0, 1.0 / 3.0, rng.uniform(-0.8, 0.8)],
    ])
    return params


# Focus positions and wind levels scouted before the full restarts; the focus
# and wind basins are strongly multimodal and plain descent rarely crosses
# them. Probes run from two vertex layouts: the k-means centers and an
# extremal (farthest-point) triple, since cluster centers sit inside the
# gamut while sail vertices belong near its extremes.
_PROBE_FOCI = ((1.0 / 3.0, 1.0 / 3.0), (0.12, 0.12), (0.7, 0.12), (0.12, 0.7))
_PROBE_WINDS = (-0.6, 0.0, 0.6)


def _extremal_vertices(hist: ColorHistogram) -> np.ndarray | None:
    """Farthest-point triple over the occupied bin centers (mass-weighted
    start). Deterministic; None when the support is too small."""
    centers, masses = hist.occupied()
    if centers.shape[0] < 3:
        return None
    mean = (masses[:, None] * centers).sum(axis=0) / masses.sum()
    v0 = centers[np.argmax(((centers - mean) ** 2).sum(axis=1))]
    v1 = centers[np.argmax(((centers - v0) ** 2).sum(axis=1))]
    d0 = ((centers - v0) ** 2).sum(axis=1)
    d1 = ((centers - v1) ** 2).sum(axis=1)
    v2 = centers[np.argmax(np.minimum(d0, d1))]
    return np.stack([v0, v1, v2])


def _short_descent(problem: "_Problem", params0: np.ndarray, iterations: int,
                   lr: float):
    adam = Adam(N_PARAMS, lr)
    params = params0.copy()
    best = (math.inf, params0)
    for _ in range(iterations):
        loss, grad, _ = problem.loss_and_grad(params)
        if not math.isfinite(loss):
            break
        if loss < best[0]:
            best = (loss, params.copy())
        params = project_params(adam.step(params, grad))
    return best


def _probe_starts(problem: "_Problem", hist: ColorHistogram,
                  base_params: np.ndarray, config: FitConfig) -> list[np.ndarray]:
    """Deterministic scouting tournament.

    Short, fast descents run from a grid of focus and wind values over both
    vertex layouts; the most promising endpoints then get a medium-length
    continuation before the final ranking, because the short stage alone
    misranks basins that start slow. Best endpoints first.
    """
    if config.probe_iterations <= 0:
        return []
    bases = [base_params]
    extremal = _extremal_vertices(hist)
    if extremal is not None:
        alt = base_params.copy()
        alt[:9] = extremal.ravel()
        bases.append(alt)
    scored = []
    for b, base in enumerate(bases):
        for fu, fv in _PROBE_FOCI:
            for wind in _PROBE_WINDS:
                if b == 0 and wind == 0.0 and (fu, fv) == _PROBE_FOCI[0]:
                    continue  # identical to the k-means restart
                p = base.copy()
                p[9], p[10], p[11] = fu, fv, wind
                loss, endp = _short_descent(problem, p, config.probe_iterations,
                                            config.probe_learning_rate)
                scored.append((loss, endp))
    scored.sort(key=lambda t: t[0])
    finals = []
    for _, p in scored[:8]:
        loss, endp = _short_descent(problem, p, 2 * config.probe_iterations,
                                    config.probe_learning_rate / 3.0)
        finals.append((loss, endp))
    finals.sort(key=lambda t: t[0])
    return [p for _, p in finals] + [p for _, p in scored[8:]]


# ---------------------------------------------------------------------------
# Fitting
# ---------------------------------------------------------------------------

def _run_restart(params0, problem: "_Problem", config: FitConfig):
    adam = Adam(N_PARAMS, config.learning_rate, config.beta1, config.beta2,
                config.adam_eps)
    params = params0.copy()
    trace = []
    ptrace = [params.copy()] if config.record_params else None
    best_loss = math.inf
    best_params = params.copy()
    aborted = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        loss, grad, _ = problem.loss_and_grad(params)
        if not math.isfinite(loss):
            aborted = True
            trace.append(math.nan)
            break
        trace.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_params = params.copy()
        params = project_params(adam.step(params, grad))
        if ptrace is not None:
            ptrace.append(params.copy())
        win = config.tolerance_window
        if len(trace) > win:
            prev = trace[-1 - win]
            if abs(prev - trace[-1]) / max(abs(prev), 1e-12) < config.tolerance:
                break
    return best_params, np.array(trace), aborted, it, ptrace


def fit_sail(hist: ColorHistogram, config: FitConfig | None = None,
             init: ColorSail | None = None) -> FitResult:
    """Fit one sail to a normalized color histogram.

    Targets are the occupied bin centers weighted by mass. Runs
    config.restarts independent projected-Adam descents (restart 0 from the
    k-means initialization, or from `init` when given) and returns the best
    by reported combined loss. Restarts hitting non-finite losses abort and
    show up as nan in restart_losses.
    """
    config = config or FitConfig()
    hist = hist.normalize()
    targets, weights = hist.occupied()
    if targets.shape[0] == 0:
        raise EmptyDistributionError("histogram has empty support")
    log_sm = _log_smoothed(hist) if config.lambda_kl > 0.0 else None
    s = config.subdivision
    problem = _Problem(s, targets, weights, log_sm, config.lambda_kl, hist.n)

    base_params = init.to_params() if init is not None else \
        init_sail(hist, config.seed, s).to_params()
    probes = []
    if config.restarts > 1 and init is None:
        probes = _probe_starts(problem, hist, base_params, config)

    best = None
    traces = []
    ptraces = []
    restart_losses = []
    for r in range(config.restarts):
        if r == 0:
            params0 = base_params
        elif r - 1 < len(probes):
            params0 = probes[r - 1]
        else:
            params0 = _random_restart_params(hist, r, config)
        params, trace, aborted, iters, ptrace = _run_restart(params0, problem, config)
        traces.append(trace)
        if ptrace is not None:
            ptraces.append(np.array(ptrace))
        if aborted:
            restart_losses.append(math.nan)
            continue
        sail = ColorSail.from_params(params, s)
        loss = combined_loss(targets, weights, sail, hist, config.lambda_kl)
        restart_losses.append(loss.combined)
        if best is None or loss.combined < best[0]:
            best = (loss.combined, sail, loss, iters, r)
    if best is None:
        raise NumericalError("all restarts aborted with non-finite losses")
    _, sail, loss, iters, r = best
    return FitResult(sail=sail, loss=loss, iterations=iters, restart_index=r,
                     traces=tuple(traces), restart_losses=tuple(restart_losses),
                     param_traces=tuple(ptraces))


def sweep_subdivision(hist: ColorHistogram, config: FitConfig) -> tuple[dict[int, FitResult], int]:
    """Fit independently for every subdivision in config.sweep and select the
    argmin of combined loss + complexity_weight * s (ties to the smaller s)."""
    if not config.sweep:
        raise ValueError("config.sweep must be a nonempty set of subdivisions")
    results: dict[int, FitResult] = {}
    for s in sorted(set(int(v) for v in config.sweep)):
        if s < 2:
            raise ValueError("sweep subdivisions must be >= 2")
        results[s] = fit_sail(hist, replace(config, subdivision=s, sweep=None))
    selected = None
    for s, res in sorted(results.items()):
        score = res.loss.combined + config.complexity_weight * s
        if selected is None or score < selected[0]:
            selected = (score, s)
    return results, selected[1]
