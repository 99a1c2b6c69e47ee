import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";
import { decodeColors, SailParams } from "../src/sail.js";

const here = dirname(fileURLToPath(import.meta.url));

interface Case {
  sail: {
    vertices: number[][];
    focus: [number, number];
    wind: number;
    subdivision: number;
  };
  colors: number[][];
}

describe("decoder parity with the reference pipeline", () => {
  const cases: Case[] = JSON.parse(
    readFileSync(join(here, "fixtures", "decode_parity.json"), "utf8"),
  );

  it("has the full fixture", () => {
    expect(cases.length).toBe(1000);
  });

  it("matches every decoded color within 1e-6 per channel", () => {
    let worst = 0;
    for (const c of cases) {
      const sail: SailParams = c.sail;
      const got = decodeColors(sail, false);
      expect(got.length).toBe(c.colors.length * 3);
      for (let p = 0; p < c.colors.length; p++) {
        for (let ch = 0; ch < 3; ch++) {
          const d = Math.abs(got[p * 3 + ch] - c.colors[p][ch]);
          if (d > worst) worst = d;
        }
      }
    }
    expect(worst).toBeLessThan(1e-6);
  });
});
