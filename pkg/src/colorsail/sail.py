"""Triangular color gamut geometry: subdivision grids, cubic Bezier triangle
interpolation, wind-displaced control nets, and decoding into discrete color sets.

A color sail is a triangular patch of RGB space with six degrees of freedom:
three vertex colors, a barycentric focus point, a wind scalar bending the patch
out of the vertex plane, and an integer subdivision level controlling how many
discrete colors the patch decodes to.

Everything here is a pure function over immutable values; decoding the same
sail twice yields bit-identical arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Gaussian falloff of the wind displacement: f(d^2) = FALLOFF_SCALE * exp(-d^2 / FALLOFF_VARIANCE),
# with d^2 the squared distance between a control point's barycentric coords and the focus.
FALLOFF_VARIANCE = 0.8
FALLOFF_SCALE = 0.25

# Slack for closed-interval checks on values produced by float arithmetic.
_VALIDATION_EPS = 1e-12

N_PARAMS = 12  # 9 vertex channels + p_u + p_v + wind


class InvalidSubdivisionError(ValueError):
    """Subdivision level below 2."""


# ---------------------------------------------------------------------------
# Control net tables
#
# Ten cubic Bezier triangle control points keyed by (i, j, k), i + j + k = 3.
# Each point's barycentric coordinates are affine in the focus (p_u, p_v):
#     u_q = _U_BASE[q] + p_u * _U_DPU[q] + p_v * _U_DPV[q]
# Corner points coincide with the vertices and are never wind-displaced.
# ---------------------------------------------------------------------------

CONTROL_KEYS = (
    (3, 0, 0),
    (0, 3, 0),
    (0, 0, 3),
    (1, 2, 0),
    (2, 1, 0),
    (1, 0, 2),
    (2, 0, 1),
    (0, 1, 2),
    (0, 2, 1),
    (1, 1, 1),
)

_U_BASE = np.array([
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (0.0, 1.0, 0.0),
    (1.0, 0.0, 0.0),
    (0.0, 0.0, 1.0),
    (0.0, 0.0, 1.0),
    (0.0, 0.0, 1.0),
    (0.0, 0.0, 1.0),
    (0.0, 0.0, 1.0),
])
_U_DPU = np.array([
    (0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0),
    (1.0, -1.0, 0.0),
    (0.0, 0.0, 0.0),
    (1.0, 0.0, -1.0),
    (1.0, 0.0, -1.0),
    (0.0, 0.0, 0.0),
    (0.0, 1.0, -1.0),
    (1.0, 0.0, -1.0),
])
_U_DPV = np.array([
    (0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0),
    (0.0, 0.0, 0.0),
    (-1.0, 1.0, 0.0),
    (0.0, 0.0, 0.0),
    (1.0, 0.0, -1.0),
    (0.0, 1.0, -1.0),
    (0.0, 1.0, -1.0),
    (0.0, 1.0, -1.0),
])
_IS_CORNER = np.array([True, True, True] + [False] * 7)
_DISPLACED = (~_IS_CORNER).astype(float)
_FOCUS_ROW = 9  # index of the (1,1,1) control point

# 3!/(i! j! k!) per control key.
_BERN_COEF = np.array(
    [6.0 / (math.factorial(i) * math.factorial(j) * math.factorial(k))
     for i, j, k in CONTROL_KEYS]
)
_KEY_ARR = np.array(CONTROL_KEYS, dtype=float)

for _a in (_U_BASE, _U_DPU, _U_DPV, _BERN_COEF, _KEY_ARR):
    _a.setflags(write=False)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ColorSail:
    """A six-degree-of-freedom triangular palette.

    vertices: (3, 3) array, rows are the RGB vertex colors, channels in [0, 1].
    focus: (p_u, p_v) barycentric point inside the closed simplex.
    wind: scalar in [-1, 1] bending the patch along the unnormalized triangle normal.
    subdivision: integer >= 2; the grid has subdivision points per triangle edge.
    """

    vertices: np.ndarray
    focus: tuple[float, float] = (1.0 / 3.0, 1.0 / 3.0)
    wind: float = 0.0
    subdivision: int = 5

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.shape != (3, 3):
            raise ValueError(f"vertices must be a 3x3 array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        if v.min() < -_VALIDATION_EPS or v.max() > 1.0 + _VALIDATION_EPS:
            raise ValueError("vertices: every channel must be in [0, 1]")
        object.__setattr__(self, "vertices", _as_readonly(np.clip(v, 0.0, 1.0)))

        pu, pv = float(self.focus[0]), float(self.focus[1])
        if not (math.isfinite(pu) and math.isfinite(pv)):
            raise ValueError("focus must be finite")
        if pu < -_VALIDATION_EPS or pv < -_VALIDATION_EPS or pu + pv > 1.0 + _VALIDATION_EPS:
            raise ValueError("focus: (p_u, p_v) must satisfy p_u >= 0, p_v >= 0, p_u + p_v <= 1")
        pu = min(max(pu, 0.0), 1.0)
        pv = min(max(pv, 0.0), 1.0 - pu)
        object.__setattr__(self, "focus", (pu, pv))

        w = float(self.wind)
        if not math.isfinite(w):
            raise ValueError("wind must be finite")
        if abs(w) > 1.0 + _VALIDATION_EPS:
            raise ValueError("wind must be in [-1, 1]")
        object.__setattr__(self, "wind", min(max(w, -1.0), 1.0))

        s = self.subdivision
        if not isinstance(s, (int, np.integer)) or isinstance(s, bool):
            raise ValueError("subdivision must be an integer")
        if s < 2:
            raise InvalidSubdivisionError(f"subdivision must be >= 2, got {s}")
        object.__setattr__(self, "subdivision", int(s))

    # -- canonical serialization ------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": [[float(c) for c in row] for row in self.vertices],
            "focus": [self.focus[0], self.focus[1]],
            "wind": self.wind,
            "subdivision": self.subdivision,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ColorSail":
        return cls(
            vertices=np.array(d["vertices"], dtype=float),
            focus=(float(d["focus"][0]), float(d["focus"][1])),
            wind=float(d["wind"]),
            subdivision=int(d["subdivision"]),
        )

    # -- flat parameter vector (used by the optimizer) --------------------------

    def to_params(self) -> np.ndarray:
        """Row-major vertices, then p_u, p_v, wind: a (12,) float vector."""
        return np.concatenate([self.vertices.ravel(), [self.focus[0], self.focus[1], self.wind]])

    @classmethod
    def from_params(cls, params: np.ndarray, subdivision: int) -> "ColorSail":
        p = np.asarray(params, dtype=float)
        return cls(
            vertices=p[:9].reshape(3, 3),
            focus=(p[9], p[10]),
            wind=p[11],
            subdivision=subdivision,
        )


@dataclass(frozen=True)
class GridPoint:
    """One lattice point of a subdivided triangle.

    (i, j) are integer lattice coordinates with barycentric
    (i, j, s-1-i-j) / (s-1) for upright points; downward points carry the
    centroid of their three upright neighbors.
    """

    i: int
    j: int
    kind: str  # "upright" | "downward"
    barycentric: np.ndarray

    @property
    def is_corner(self) -> bool:
        return self.kind == "upright" and np.max(self.barycentric) == 1.0


@dataclass(frozen=True)
class ControlNet:
    """The ten wind-displaced Bezier control points of a sail."""

    points: np.ndarray  # (10, 3), same order as CONTROL_KEYS
    normal: np.ndarray  # unnormalized triangle normal
    falloff: np.ndarray  # (10,) Gaussian falloff values f(d^2)


@dataclass(frozen=True)
class DecodedSail:
    """Ordered decoded colors with their grid points and the source sail."""

    grid: tuple[GridPoint, ...]
    colors: np.ndarray  # (m, 3)
    sail: ColorSail
    include_downward: bool

    def __len__(self) -> int:
        return len(self.grid)

    def __iter__(self):
        return iter(zip(self.grid, self.colors))


# ---------------------------------------------------------------------------
# Subdivision grid
# ---------------------------------------------------------------------------

def upright_count(s: int) -> int:
    return s * (s + 1) // 2


def downward_count(s: int) -> int:
    return s * (s - 1) // 2


@lru_cache(maxsize=None)
def _grid_cached(s: int, include_downward: bool):
    if s < 2:
        raise InvalidSubdivisionError(f"subdivision must be >= 2, got {s}")
    denom = float(s - 1)
    pts = []
    barys = []
    # Upright points, row by row: a row holds all points with equal third
    # barycentric index, scanning j upward within the row.
    for row in range(s):
        for j in range(s - row):
            i = s - 1 - row - j
            u = np.array([i, j, row], dtype=float) / denom
            pts.append(GridPoint(i=i, j=j, kind="upright", barycentric=_as_readonly(u)))
            barys.append(u)
    if include_downward:
        # Downward point (i, j) averages the upright barycentrics at
        # (i, j), (i+1, j), (i, j+1); same row-major traversal.
        for row in range(s - 1):
            for j in range(s - 1 - row):
                i = s - 2 - row - j
                k = s - 1 - i - j
                a = np.array([i, j, k], dtype=float) / denom
                b = np.array([i + 1, j, k - 1], dtype=float) / denom
                c = np.array([i, j + 1, k - 1], dtype=float) / denom
                u = (a + b + c) / 3.0
                pts.append(GridPoint(i=i, j=j, kind="downward", barycentric=_as_readonly(u)))
                barys.append(u)
    bary_arr = _as_readonly(np.array(barys))
    return tuple(pts), bary_arr


def enumerate_grid(s: int, include_downward: bool = True) -> list[GridPoint]:
    """Enumerate the sail grid in canonical index order.

    Upright points come first (s*(s+1)/2 of them), then, when requested, the
    downward centroids (s*(s-1)/2 more, for s^2 total). This order is the
    index contract every other module relies on.
    """
    pts, _ = _grid_cached(int(s), bool(include_downward))
    return list(pts)


def grid_barycentrics(s: int, include_downward: bool = True) -> np.ndarray:
    """(m, 3) barycentric coordinates of the canonical grid, read-only."""
    _, barys = _grid_cached(int(s), bool(include_downward))
    return barys


def corner_indices(s: int) -> tuple[int, int, int]:
    """Canonical grid indices of the three vertex colors (v0, v1, v2)."""
    return 0, s - 1, upright_count(s) - 1


# ---------------------------------------------------------------------------
# Bernstein basis and control points
# ---------------------------------------------------------------------------

def bernstein_basis(u0, u1) -> np.ndarray:
    """Cubic triangular Bernstein weights at (u0, u1), third coord implicit.

    Accepts scalars or broadcastable arrays; returns shape (..., 10) in
    CONTROL_KEYS order. Weights sum to 1 (partition of unity).
    """
    u0 = np.asarray(u0, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    u2 = 1.0 - u0 - u1
    if np.any(u0 < -_VALIDATION_EPS) or np.any(u1 < -_VALIDATION_EPS) or np.any(u2 < -_VALIDATION_EPS):
        raise ValueError("(u0, u1) must lie in the closed simplex u0, u1 >= 0, u0 + u1 <= 1")
    u0 = np.clip(u0, 0.0, 1.0)
    u1 = np.clip(u1, 0.0, 1.0)
    u2 = np.clip(u2, 0.0, 1.0)
    powers = (
        u0[..., None] ** _KEY_ARR[:, 0]
        * u1[..., None] ** _KEY_ARR[:, 1]
        * u2[..., None] ** _KEY_ARR[:, 2]
    )
    return _BERN_COEF * powers


@lru_cache(maxsize=None)
def _bernstein_matrix(s: int, include_downward: bool) -> np.ndarray:
    g = grid_barycentrics(s, include_downward)
    return _as_readonly(bernstein_basis(g[:, 0], g[:, 1]))


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _control_geometry(params: np.ndarray):
    """Control barycentrics, squared focus distances, falloff, and normal."""
    pu, pv = params[9], params[10]
    u = _U_BASE + pu * _U_DPU + pv * _U_DPV  # (10, 3)
    e = u - u[_FOCUS_ROW]
    d2 = np.einsum("qc,qc->q", e, e)
    f = FALLOFF_SCALE * np.exp(-d2 / FALLOFF_VARIANCE)
    v = params[:9].reshape(3, 3)
    n = _cross(v[1] - v[0], v[2] - v[0])
    return u, d2, f, v, n


def _control_points(params: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    u, d2, f, v, n = _control_geometry(params)
    w = params[11]
    pts = u @ v + (_DISPLACED * f)[:, None] * (w * n)
    return pts, n, f


def control_points(sail: ColorSail) -> ControlNet:
    """Wind-displaced Bezier control net of a sail.

    Non-corner points are displaced along the unnormalized triangle normal by
    f(d^2) * wind; corner points always equal the vertex colors. A degenerate
    triangle (zero normal) decodes flat; it is not an error.
    """
    pts, n, f = _control_points(sail.to_params())
    return ControlNet(points=_as_readonly(pts), normal=_as_readonly(n), falloff=_as_readonly(f))


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------

def _decode_params(params: np.ndarray, s: int, include_downward: bool) -> np.ndarray:
    B = _bernstein_matrix(s, include_downward)
    pts, _, _ = _control_points(params)
    return B @ pts


def decode(sail: ColorSail, include_downward: bool = True, clamp: bool = False) -> DecodedSail:
    """Decode a sail into its ordered discrete color set.

    Each grid point's color is the Bezier triangle evaluated at its
    barycentric coordinates. With clamp=True channels are clipped to [0, 1]
    (rendering/recoloring); fitting decodes unclamped.
    """
    colors = _decode_params(sail.to_params(), sail.subdivision, include_downward)
    if clamp:
        colors = np.clip(colors, 0.0, 1.0)
    grid, _ = _grid_cached(sail.subdivision, include_downward)
    return DecodedSail(grid=grid, colors=_as_readonly(colors), sail=sail,
                       include_downward=include_downward)


def _decode_jacobian_params(params: np.ndarray, s: int, include_downward: bool) -> np.ndarray:
    """(m, 3, 12) derivative of every decoded color wrt the parameter vector."""
    B = _bernstein_matrix(s, include_downward)
    u, d2, f, v, n = _control_geometry(params)
    w = params[11]
    m = B.shape[0]

    J = np.zeros((m, 3, N_PARAMS))
    chi_f = _DISPLACED * f          # (10,)
    g_w = B @ chi_f                 # (m,)  Bernstein-blended falloff
    W = B @ u                       # (m, 3) effective barycentric weights

    # d(normal)/d(vertex t, channel c): e_c x (edge vector) per the cross product.
    eye = np.eye(3)
    dn = np.empty((3, 3, 3))
    for c in range(3):
        dn[0, c] = _cross(eye[c], v[1] - v[2])
        dn[1, c] = _cross(eye[c], v[2] - v[0])
        dn[2, c] = -_cross(eye[c], v[1] - v[0])

    # Vertices: planar term W[p, t] on the matching channel, plus the wind
    # term through the normal's dependence on the vertices.
    for t in range(3):
        for c in range(3):
            col = 3 * t + c
            J[:, c, col] += W[:, t]
            J[:, :, col] += np.outer(g_w * w, dn[t, c])

    # Focus: control barycentrics and falloff distances are affine in (p_u, p_v).
    df_dd2 = -f / FALLOFF_VARIANCE
    e = u - u[_FOCUS_ROW]
    for col, du in ((9, _U_DPU), (10, _U_DPV)):
        de = du - du[_FOCUS_ROW]
        dd2 = 2.0 * np.einsum("qc,qc->q", e, de)
        dP = du @ v + (w * (_DISPLACED * df_dd2 * dd2))[:, None] * n
        J[:, :, col] = B @ dP

    # Wind: falloff-weighted normal blend.
    J[:, :, 11] = np.outer(g_w, n)
    return J


def decode_jacobian(sail: ColorSail, include_downward: bool = True) -> np.ndarray:
    """Analytic (m, 3, 12) Jacobian of decode wrt (vertices row-major, p_u, p_v, wind).

    Finite for degenerate triangles too: the normal is never normalized, so
    all terms stay polynomial or Gaussian-smooth.
    """
    return _decode_jacobian_params(sail.to_params(), sail.subdivision, include_downward)


def _decode_vjp(params: np.ndarray, s: int, g_colors: np.ndarray,
                include_downward: bool = True) -> np.ndarray:
    """Pull a (m, 3) color cotangent back to the 12 parameters in closed form.

    Equivalent to contracting g_colors with the full Jacobian, without
    materializing it; this is the optimizer's hot path.
    """
    B = _bernstein_matrix(s, include_downward)
    u, d2, f, v, n_vec = _control_geometry(params)
    w = params[11]
    chi_f = _DISPLACED * f
    e = u - u[_FOCUS_ROW]

    GP = B.T @ g_colors                    # (10, 3)
    h = chi_f @ GP                         # cotangent of w * n
    grad = np.empty(N_PARAMS)
    grad[:9] = (u.T @ GP).ravel()
    grad[0:3] += w * _cross(v[1] - v[2], h)
    grad[3:6] += w * _cross(v[2] - v[0], h)
    grad[6:9] += w * _cross(h, v[1] - v[0])
    df_dd2 = -f / FALLOFF_VARIANCE
    for col, du in ((9, _U_DPU), (10, _U_DPV)):
        de = du - du[_FOCUS_ROW]
        dd2 = 2.0 * np.einsum("qc,qc->q", e, de)
        dP = du @ v + (w * (_DISPLACED * df_dd2 * dd2))[:, None] * n_vec
        grad[col] = float((GP * dP).sum())
    grad[11] = float(h @ n_vec)
    return grad
