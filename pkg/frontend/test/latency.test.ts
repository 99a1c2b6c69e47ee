import { describe, expect, it } from "vitest";
import { Rig, recolor } from "../src/rig.js";
import { gridSize, SailParams } from "../src/sail.js";

/** Synthetic 512x512 rig: worst-case preview workload. */
function syntheticRig(nSails: number, s: number): Rig {
  const width = 512;
  const height = 512;
  const n = width * height;
  const entries = [];
  let seed = 12345;
  const rand = () => {
    seed = (seed * 1103515245 + 12345) & 0x7fffffff;
    return seed / 0x7fffffff;
  };
  for (let i = 0; i < nSails; i++) {
    const sail: SailParams = {
      vertices: [
        [rand(), rand(), rand()],
        [rand(), rand(), rand()],
        [rand(), rand(), rand()],
      ],
      focus: [0.3, 0.3],
      wind: 0.4,
      subdivision: s,
    };
    const alpha = new Uint8Array(n);
    const index = new Uint16Array(n);
    const m = gridSize(s);
    for (let p = 0; p < n; p++) {
      alpha[p] = i === p % nSails ? 255 : 0;
      index[p] = p % m;
    }
    entries.push({ sail, alpha, index });
  }
  return {
    width, height,
    imageSha256: "0".repeat(64),
    fitConfigDigest: "0".repeat(64),
    entries,
    original: null,
    reconstruction: null,
  };
}

describe("preview latency", () => {
  it("slider-to-preview recolor at 512px: median of 50 gestures <= 100 ms", () => {
    const rig = syntheticRig(3, 8);
    recolor(rig, []); // warm up JIT and caches
    const times: number[] = [];
    for (let g = 0; g < 50; g++) {
      const wind = -0.9 + (1.8 * g) / 49;
      const t0 = performance.now();
      recolor(rig, [{ sail: 0, set: { wind } }]);
      times.push(performance.now() - t0);
    }
    times.sort((a, b) => a - b);
    const median = times[25];
    expect(median).toBeLessThanOrEqual(100);
  });
});
