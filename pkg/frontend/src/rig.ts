/**
 * Rig bundle parsing, validation, and recoloring with frozen index maps.
 *
 * A bundle is a manifest plus, per sail, an 8-bit alpha mask and a 16-bit
 * color-index map. Recoloring re-decodes the (possibly edited) sails and
 * looks colors up through the frozen indices; the editor never mutates the
 * masks or maps.
 */

import { decodePng, toGray16, toGray8, toRGB8 } from "./png.js";
import {
  decodeColors,
  gridBarycentrics,
  gridSize,
  quantizeU8,
  SailParams,
  validateSail,
} from "./sail.js";

export const RIG_VERSION = 1;
export const UNMAPPED = 0xffff;

export interface RigEntry {
  sail: SailParams;
  alpha: Uint8Array;  // H*W
  index: Uint16Array; // H*W
}

export interface Rig {
  width: number;
  height: number;
  imageSha256: string;
  fitConfigDigest: string;
  entries: RigEntry[];
  original: Uint8Array | null;       // H*W*3 or null
  reconstruction: Uint8Array | null; // H*W*3 or null (stored render)
}

export interface EditSet {
  vertex0?: [number, number, number];
  vertex1?: [number, number, number];
  vertex2?: [number, number, number];
  focus?: [number, number];
  wind?: number;
  subdivision?: number;
}

export interface Edit {
  sail: number;
  set: EditSet;
}

export class BundleError extends Error {}

function need<T>(obj: Record<string, unknown>, field: string): T {
  if (!(field in obj)) throw new BundleError(`manifest: missing field '${field}'`);
  return obj[field] as T;
}

function parseSailDef(def: Record<string, unknown>, index: number): SailParams {
  const sail: SailParams = {
    vertices: need<number[][]>(def, "vertices"),
    focus: need<[number, number]>(def, "focus"),
    wind: need<number>(def, "wind"),
    subdivision: need<number>(def, "subdivision"),
  };
  const problem = validateSail(sail);
  if (problem) throw new BundleError(`manifest: sails[${index}]: ${problem}`);
  return sail;
}

/**
 * Assemble a rig from bundle files ({name -> bytes}), validating the schema
 * and every referenced raster. Errors name the offending field or file.
 */
export async function loadBundle(files: Map<string, Uint8Array>): Promise<Rig> {
  const manifestBytes = files.get("manifest.json");
  if (!manifestBytes) throw new BundleError("missing file 'manifest.json'");
  let manifest: Record<string, unknown>;
  try {
    manifest = JSON.parse(new TextDecoder().decode(manifestBytes));
  } catch (e) {
    throw new BundleError(`manifest.json is not valid JSON: ${(e as Error).message}`);
  }
  const version = need<number>(manifest, "version");
  if (version !== RIG_VERSION) {
    throw new BundleError(`manifest: unsupported version ${version}, expected ${RIG_VERSION}`);
  }
  const width = need<number>(manifest, "width");
  const height = need<number>(manifest, "height");
  const sha = need<string>(manifest, "image_sha256");
  const digest = need<string>(manifest, "fit_config_digest");
  const sails = need<Record<string, unknown>[]>(manifest, "sails");
  if (!Array.isArray(sails) || sails.length === 0) {
    throw new BundleError("manifest: 'sails' must be a nonempty list");
  }

  const entries: RigEntry[] = [];
  for (let i = 0; i < sails.length; i++) {
    const def = sails[i];
    const sail = parseSailDef(def, i);
    const alphaFile = need<string>(def, "alpha_file");
    const indexFile = need<string>(def, "index_file");
    const alphaBytes = files.get(alphaFile);
    if (!alphaBytes) throw new BundleError(`sails[${i}]: missing file '${alphaFile}'`);
    const indexBytes = files.get(indexFile);
    if (!indexBytes) throw new BundleError(`sails[${i}]: missing file '${indexFile}'`);
    const alphaPng = await decodePng(alphaBytes);
    if (alphaPng.width !== width || alphaPng.height !== height) {
      throw new BundleError(
        `sails[${i}]: '${alphaFile}' is ${alphaPng.width}x${alphaPng.height}, manifest says ${width}x${height}`);
    }
    const indexPng = await decodePng(indexBytes);
    if (indexPng.width !== width || indexPng.height !== height) {
      throw new BundleError(
        `sails[${i}]: '${indexFile}' is ${indexPng.width}x${indexPng.height}, manifest says ${width}x${height}`);
    }
    const index = toGray16(indexPng);
    const maxIdx = gridSize(sail.subdivision);
    for (let p = 0; p < index.length; p++) {
      if (index[p] >= maxIdx && index[p] !== UNMAPPED) {
        throw new BundleError(`sails[${i}]: '${indexFile}' has indices beyond the ${maxIdx}-color grid`);
      }
    }
    entries.push({ sail, alpha: toGray8(alphaPng), index });
  }

  let original: Uint8Array | null = null;
  const originalBytes = files.get("original.png");
  if (originalBytes) original = toRGB8(await decodePng(originalBytes));
  let reconstruction: Uint8Array | null = null;
  const reconBytes = files.get("reconstruction.png");
  if (reconBytes) reconstruction = toRGB8(await decodePng(reconBytes));

  return { width, height, imageSha256: sha, fitConfigDigest: digest, entries, original, reconstruction };
}

export function applyEdit(sail: SailParams, set: EditSet): SailParams {
  const next: SailParams = {
    vertices: sail.vertices.map((r) => [...r]),
    focus: [...sail.focus] as [number, number],
    wind: sail.wind,
    subdivision: sail.subdivision,
  };
  if (set.vertex0) next.vertices[0] = [...set.vertex0];
  if (set.vertex1) next.vertices[1] = [...set.vertex1];
  if (set.vertex2) next.vertices[2] = [...set.vertex2];
  if (set.focus) next.focus = [...set.focus] as [number, number];
  if (set.wind !== undefined) next.wind = set.wind;
  if (set.subdivision !== undefined) next.subdivision = set.subdivision;
  const problem = validateSail(next);
  if (problem) throw new BundleError(problem);
  return next;
}

/** Snap table from one subdivision's grid onto another's (nearest point,
 * ties to the lowest index). */
export function remapTable(oldS: number, newS: number): Uint16Array {
  const oldG = gridBarycentrics(oldS);
  const newG = gridBarycentrics(newS);
  const nOld = gridSize(oldS);
  const nNew = gridSize(newS);
  const lut = new Uint16Array(nOld);
  for (let a = 0; a < nOld; a++) {
    let bestJ = 0;
    let bestD = Infinity;
    for (let b = 0; b < nNew; b++) {
      let d = 0;
      for (let c = 0; c < 3; c++) {
        const diff = oldG[a * 3 + c] - newG[b * 3 + c];
        d += diff * diff;
      }
      if (d < bestD) {
        bestD = d;
        bestJ = b;
      }
    }
    lut[a] = bestJ;
  }
  return lut;
}

/**
 * Recolor with frozen indices. Subdivision changes remap indices through the
 * snap table first; unmapped pixels fall back to the original colors.
 * Returns quantized interleaved RGB (H*W*3).
 */
export function recolor(rig: Rig, edits: Edit[]): Uint8Array {
  const perSail = rig.entries.map((e) => ({
    sail: e.sail,
    index: e.index,
  }));
  for (const edit of edits) {
    if (edit.sail < 0 || edit.sail >= perSail.length) {
      throw new BundleError(`edit references sail ${edit.sail}, rig has ${perSail.length}`);
    }
    const slot = perSail[edit.sail];
    const set = edit.set ?? {};
    if (set.subdivision !== undefined && set.subdivision !== slot.sail.subdivision) {
      const lut = remapTable(slot.sail.subdivision, set.subdivision);
      const remapped = new Uint16Array(slot.index.length);
      for (let p = 0; p < slot.index.length; p++) {
        remapped[p] = slot.index[p] === UNMAPPED ? UNMAPPED : lut[slot.index[p]];
      }
      slot.index = remapped;
      slot.sail = applyEdit(slot.sail, { subdivision: set.subdivision });
    }
    slot.sail = applyEdit(slot.sail, set);
  }

  const n = rig.width * rig.height;
  const acc = new Float64Array(n * 3);
  for (let i = 0; i < perSail.length; i++) {
    const palette = decodeColors(perSail[i].sail, true);
    const index = perSail[i].index;
    const alpha = rig.entries[i].alpha;
    for (let p = 0; p < n; p++) {
      const a = alpha[p] / 255;
      const idx = index[p];
      if (idx === UNMAPPED) {
        if (!rig.original) throw new BundleError("rig has unmapped pixels but no original image");
        acc[p * 3] += a * (rig.original[p * 3] / 255);
        acc[p * 3 + 1] += a * (rig.original[p * 3 + 1] / 255);
        acc[p * 3 + 2] += a * (rig.original[p * 3 + 2] / 255);
      } else {
        acc[p * 3] += a * palette[idx * 3];
        acc[p * 3 + 1] += a * palette[idx * 3 + 1];
        acc[p * 3 + 2] += a * palette[idx * 3 + 2];
      }
    }
  }
  const out = new Uint8Array(n * 3);
  for (let i = 0; i < out.length; i++) out[i] = quantizeU8(acc[i]);
  return out;
}
