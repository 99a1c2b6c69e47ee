/**
 * Minimal PNG decoder for the rig bundle's rasters: 8-bit RGB/RGBA,
 * 8-bit grayscale alphas, and 16-bit grayscale index maps (which browser
 * canvases would truncate to 8 bits). Non-interlaced only; inflate is
 * delegated to DecompressionStream, available in browsers and node.
 */

export interface PngImage {
  width: number;
  height: number;
  bitDepth: number;
  colorType: number;
  /** Unfiltered raw scanline bytes, big-endian samples. */
  data: Uint8Array;
}

const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];
const CHANNELS: Record<number, number> = { 0: 1, 2: 3, 4: 2, 6: 4 };

async function inflate(data: Uint8Array): Promise<Uint8Array> {
  const ds = new DecompressionStream("deflate");
  const stream = new Blob([data as BlobPart]).stream().pipeThrough(ds);
  const buf = await new Response(stream).arrayBuffer();
  return new Uint8Array(buf);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export async function decodePng(bytes: Uint8Array): Promise<PngImage> {
  if (bytes.length < 8 || SIGNATURE.some((v, i) => bytes[i] !== v)) {
    throw new Error("not a PNG file");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let pos = 8;
  let width = 0, height = 0, bitDepth = 0, colorType = 0;
  const idat: Uint8Array[] = [];
  while (pos + 8 <= bytes.length) {
    const len = view.getUint32(pos);
    const type = String.fromCharCode(bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]);
    const body = bytes.subarray(pos + 8, pos + 8 + len);
    if (type === "IHDR") {
      width = view.getUint32(pos + 8);
      height = view.getUint32(pos + 12);
      bitDepth = bytes[pos + 16];
      colorType = bytes[pos + 17];
      const interlace = bytes[pos + 20];
      if (interlace !== 0) throw new Error("interlaced PNG not supported");
      if (!(bitDepth === 8 || bitDepth === 16)) {
        throw new Error(`unsupported bit depth ${bitDepth}`);
      }
      if (!(colorType in CHANNELS)) throw new Error(`unsupported color type ${colorType}`);
    } else if (type === "IDAT") {
      idat.push(body);
    } else if (type === "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (!width || !height) throw new Error("missing IHDR");
  const total = idat.reduce((n, c) => n + c.length, 0);
  const joined = new Uint8Array(total);
  let off = 0;
  for (const c of idat) {
    joined.set(c, off);
    off += c.length;
  }
  const raw = await inflate(joined);

  const channels = CHANNELS[colorType];
  const bpp = (bitDepth / 8) * channels;
  const stride = width * bpp;
  if (raw.length < (stride + 1) * height) throw new Error("truncated PNG data");
  const out = new Uint8Array(stride * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const src = (stride + 1) * y + 1;
    const dst = stride * y;
    for (let x = 0; x < stride; x++) {
      const cur = raw[src + x];
      const left = x >= bpp ? out[dst + x - bpp] : 0;
      const up = y > 0 ? out[dst + x - stride] : 0;
      const upLeft = y > 0 && x >= bpp ? out[dst + x - stride - bpp] : 0;
      let val: number;
      switch (filter) {
        case 0: val = cur; break;
        case 1: val = cur + left; break;
        case 2: val = cur + up; break;
        case 3: val = cur + ((left + up) >> 1); break;
        case 4: val = cur + paeth(left, up, upLeft); break;
        default: throw new Error(`bad filter ${filter}`);
      }
      out[dst + x] = val & 0xff;
    }
  }
  return { width, height, bitDepth, colorType, data: out };
}

/** 8-bit grayscale plane. */
export function toGray8(img: PngImage): Uint8Array {
  if (img.colorType !== 0 || img.bitDepth !== 8) {
    throw new Error("expected an 8-bit grayscale PNG");
  }
  return img.data;
}

/** 16-bit grayscale plane (PNG stores big-endian). */
export function toGray16(img: PngImage): Uint16Array {
  if (img.colorType !== 0 || img.bitDepth !== 16) {
    throw new Error("expected a 16-bit grayscale PNG");
  }
  const n = img.width * img.height;
  const out = new Uint16Array(n);
  for (let i = 0; i < n; i++) {
    out[i] = (img.data[i * 2] << 8) | img.data[i * 2 + 1];
  }
  return out;
}

/** Interleaved 8-bit RGB, alpha dropped if present. */
export function toRGB8(img: PngImage): Uint8Array {
  if (img.bitDepth !== 8) throw new Error("expected an 8-bit PNG");
  const n = img.width * img.height;
  const out = new Uint8Array(n * 3);
  if (img.colorType === 2) {
    out.set(img.data);
  } else if (img.colorType === 6) {
    for (let i = 0; i < n; i++) {
      out[i * 3] = img.data[i * 4];
      out[i * 3 + 1] = img.data[i * 4 + 1];
      out[i * 3 + 2] = img.data[i * 4 + 2];
    }
  } else if (img.colorType === 0) {
    for (let i = 0; i < n; i++) {
      out[i * 3] = out[i * 3 + 1] = out[i * 3 + 2] = img.data[i];
    }
  } else {
    throw new Error(`unsupported color type ${img.colorType} for RGB`);
  }
  return out;
}
