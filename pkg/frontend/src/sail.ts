/**
 * Color sail decoding: subdivision grids, cubic Bernstein interpolation,
 * wind-displaced control points. Mirrors the reference pipeline bit-for-bit
 * where IEEE semantics allow (same operation order, float64 throughout).
 */

export interface SailParams {
  vertices: number[][]; // [3][3] rows v0, v1, v2
  focus: [number, number];
  wind: number;
  subdivision: number;
}

export const FALLOFF_VARIANCE = 0.8;
export const FALLOFF_SCALE = 0.25;

// Control table: ten points keyed by (i+j+k = 3), barycentrics affine in the
// focus. Corner points are pinned to the vertices and never displaced.
const U_BASE: number[][] = [
  [1, 0, 0], [0, 1, 0], [0, 0, 1],
  [0, 1, 0], [1, 0, 0], [0, 0, 1], [0, 0, 1], [0, 0, 1], [0, 0, 1], [0, 0, 1],
];
const U_DPU: number[][] = [
  [0, 0, 0], [0, 0, 0], [0, 0, 0],
  [1, -1, 0], [0, 0, 0], [1, 0, -1], [1, 0, -1], [0, 0, 0], [0, 1, -1], [1, 0, -1],
];
const U_DPV: number[][] = [
  [0, 0, 0], [0, 0, 0], [0, 0, 0],
  [0, 0, 0], [-1, 1, 0], [0, 0, 0], [1, 0, -1], [0, 1, -1], [0, 1, -1], [0, 1, -1],
];
const DISPLACED = [0, 0, 0, 1, 1, 1, 1, 1, 1, 1];
const KEYS: number[][] = [
  [3, 0, 0], [0, 3, 0], [0, 0, 3],
  [1, 2, 0], [2, 1, 0], [1, 0, 2], [2, 0, 1], [0, 1, 2], [0, 2, 1], [1, 1, 1],
];
const FACT = [1, 1, 2, 6];
const COEF = KEYS.map(([i, j, k]) => 6 / (FACT[i] * FACT[j] * FACT[k]));
const FOCUS_ROW = 9;

export function uprightCount(s: number): number {
  return (s * (s + 1)) / 2;
}

export function gridSize(s: number): number {
  return s * s;
}

/** Barycentric coordinates of the canonical grid, upright rows first. */
export function gridBarycentrics(s: number): Float64Array {
  if (s < 2) throw new Error(`subdivision must be >= 2, got ${s}`);
  const denom = s - 1;
  const out = new Float64Array(gridSize(s) * 3);
  let p = 0;
  for (let row = 0; row < s; row++) {
    for (let j = 0; j < s - row; j++) {
      const i = s - 1 - row - j;
      out[p++] = i / denom;
      out[p++] = j / denom;
      out[p++] = row / denom;
    }
  }
  for (let row = 0; row < s - 1; row++) {
    for (let j = 0; j < s - 1 - row; j++) {
      const i = s - 2 - row - j;
      const k = s - 1 - i - j;
      for (let c = 0; c < 3; c++) {
        const a = [i, j, k][c] / denom;
        const b = [i + 1, j, k - 1][c] / denom;
        const d = [i, j + 1, k - 1][c] / denom;
        out[p++] = (a + b + d) / 3;
      }
    }
  }
  return out;
}

const bernsteinCache = new Map<number, Float64Array>();

/** Bernstein weight matrix (m x 10) for the subdivision grid. */
export function bernsteinMatrix(s: number): Float64Array {
  const hit = bernsteinCache.get(s);
  if (hit) return hit;
  const g = gridBarycentrics(s);
  const m = gridSize(s);
  const out = new Float64Array(m * 10);
  for (let p = 0; p < m; p++) {
    const u0 = g[p * 3];
    const u1 = g[p * 3 + 1];
    const u2 = 1 - u0 - u1;
    for (let q = 0; q < 10; q++) {
      out[p * 10 + q] =
        COEF[q] * Math.pow(u0, KEYS[q][0]) * Math.pow(u1, KEYS[q][1]) * Math.pow(u2, KEYS[q][2]);
    }
  }
  bernsteinCache.set(s, out);
  return out;
}

/** The ten wind-displaced control points, flattened (10 x 3). */
export function controlPoints(sail: SailParams): Float64Array {
  const [pu, pv] = sail.focus;
  const w = sail.wind;
  const v = sail.vertices;
  const e0 = [v[1][0] - v[0][0], v[1][1] - v[0][1], v[1][2] - v[0][2]];
  const e1 = [v[2][0] - v[0][0], v[2][1] - v[0][1], v[2][2] - v[0][2]];
  const n = [
    e0[1] * e1[2] - e0[2] * e1[1],
    e0[2] * e1[0] - e0[0] * e1[2],
    e0[0] * e1[1] - e0[1] * e1[0],
  ];
  const pts = new Float64Array(30);
  const focusU = [
    U_BASE[FOCUS_ROW][0] + pu * U_DPU[FOCUS_ROW][0] + pv * U_DPV[FOCUS_ROW][0],
    U_BASE[FOCUS_ROW][1] + pu * U_DPU[FOCUS_ROW][1] + pv * U_DPV[FOCUS_ROW][1],
    U_BASE[FOCUS_ROW][2] + pu * U_DPU[FOCUS_ROW][2] + pv * U_DPV[FOCUS_ROW][2],
  ];
  for (let q = 0; q < 10; q++) {
    const u = [
      U_BASE[q][0] + pu * U_DPU[q][0] + pv * U_DPV[q][0],
      U_BASE[q][1] + pu * U_DPU[q][1] + pv * U_DPV[q][1],
      U_BASE[q][2] + pu * U_DPU[q][2] + pv * U_DPV[q][2],
    ];
    const ex = u[0] - focusU[0];
    const ey = u[1] - focusU[1];
    const ez = u[2] - focusU[2];
    const d2 = ex * ex + ey * ey + ez * ez;
    const f = FALLOFF_SCALE * Math.exp(-d2 / FALLOFF_VARIANCE);
    const disp = DISPLACED[q] * f * w;
    for (let c = 0; c < 3; c++) {
      pts[q * 3 + c] =
        u[0] * v[0][c] + u[1] * v[1][c] + u[2] * v[2][c] + disp * n[c];
    }
  }
  return pts;
}

/** Decode the full expanded color set, flattened (s^2 x 3). */
export function decodeColors(sail: SailParams, clamp = false): Float64Array {
  const s = sail.subdivision;
  const B = bernsteinMatrix(s);
  const P = controlPoints(sail);
  const m = gridSize(s);
  const out = new Float64Array(m * 3);
  for (let p = 0; p < m; p++) {
    for (let c = 0; c < 3; c++) {
      let acc = 0;
      for (let q = 0; q < 10; q++) acc += B[p * 10 + q] * P[q * 3 + c];
      out[p * 3 + c] = clamp ? Math.min(Math.max(acc, 0), 1) : acc;
    }
  }
  return out;
}

/** Shared 8-bit quantization: clamp then round half away from zero. */
export function quantizeU8(x: number): number {
  return Math.floor(Math.min(Math.max(x, 0), 1) * 255 + 0.5);
}

export function validateSail(sail: SailParams): string | null {
  if (!Array.isArray(sail.vertices) || sail.vertices.length !== 3)
    return "vertices: expected 3 rows";
  for (const row of sail.vertices) {
    if (!Array.isArray(row) || row.length !== 3) return "vertices: expected RGB triples";
    for (const c of row) {
      if (!Number.isFinite(c) || c < -1e-12 || c > 1 + 1e-12)
        return "vertices: every channel must be in [0, 1]";
    }
  }
  const [pu, pv] = sail.focus;
  if (!Number.isFinite(pu) || !Number.isFinite(pv) || pu < -1e-12 || pv < -1e-12 || pu + pv > 1 + 1e-12)
    return "focus: (p_u, p_v) must satisfy p_u >= 0, p_v >= 0, p_u + p_v <= 1";
  if (!Number.isFinite(sail.wind) || Math.abs(sail.wind) > 1 + 1e-12)
    return "wind must be in [-1, 1]";
  if (!Number.isInteger(sail.subdivision) || sail.subdivision < 2)
    return "subdivision must be an integer >= 2";
  return null;
}
