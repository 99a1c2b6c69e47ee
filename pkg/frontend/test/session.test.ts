import { describe, expect, it } from "vitest";
import { loadBundle } from "../src/rig.js";
import { EditorSession } from "../src/session.js";
import { bundleFiles } from "./rig.test.js";

async function freshSession(): Promise<EditorSession> {
  return new EditorSession(await loadBundle(bundleFiles("b02")));
}

describe("editor session", () => {
  it("starts with no pending edits", async () => {
    const s = await freshSession();
    expect(s.exportEdits()).toEqual([]);
    expect(s.canUndo()).toBe(false);
    expect(s.canRedo()).toBe(false);
  });

  it("undo/redo are strict inverses", async () => {
    const s = await freshSession();
    const original = s.current[0].wind;
    s.edit(0, { wind: 0.5 });
    s.edit(0, { wind: -0.25 });
    expect(s.current[0].wind).toBe(-0.25);
    expect(s.undo()).toBe(true);
    expect(s.current[0].wind).toBe(0.5);
    expect(s.redo()).toBe(true);
    expect(s.current[0].wind).toBe(-0.25);
    expect(s.undo()).toBe(true);
    expect(s.undo()).toBe(true);
    expect(s.current[0].wind).toBe(original);
    expect(s.canUndo()).toBe(false);
  });

  it("new edits clear the redo stack", async () => {
    const s = await freshSession();
    s.edit(0, { wind: 0.5 });
    s.undo();
    expect(s.canRedo()).toBe(true);
    s.edit(0, { wind: 0.9 });
    expect(s.canRedo()).toBe(false);
  });

  it("undo-all exports an empty edit list", async () => {
    const s = await freshSession();
    s.edit(0, { wind: 0.5 });
    s.edit(1, { vertex0: [0.2, 0.4, 0.6] });
    s.edit(0, { focus: [0.1, 0.3] });
    expect(s.exportEdits().length).toBeGreaterThan(0);
    while (s.undo()) { /* unwind */ }
    expect(s.exportEdits()).toEqual([]);
  });

  it("exports consolidated edits in the shared schema", async () => {
    const s = await freshSession();
    s.edit(0, { wind: 0.5 });
    s.edit(0, { wind: 0.75 });
    s.edit(1, { vertex2: [0, 0, 0] });
    const edits = s.exportEdits();
    expect(edits).toEqual([
      { sail: 0, set: { wind: 0.75 } },
      { sail: 1, set: { vertex2: [0, 0, 0] } },
    ]);
  });

  it("rejects invalid gestures without corrupting state", async () => {
    const s = await freshSession();
    expect(() => s.edit(0, { wind: 2.0 })).toThrow(/wind/);
    expect(s.exportEdits()).toEqual([]);
  });

  it("exported manifest carries the current parameters", async () => {
    const s = await freshSession();
    s.edit(0, { wind: 0.625 });
    const manifest = s.exportManifest() as { sails: { wind: number }[]; version: number };
    expect(manifest.version).toBe(1);
    expect(manifest.sails[0].wind).toBe(0.625);
  });

  it("never mutates the loaded masks or maps", async () => {
    const s = await freshSession();
    const alphaBefore = Uint8Array.from(s.rig.entries[0].alpha);
    const indexBefore = Uint16Array.from(s.rig.entries[0].index);
    s.edit(0, { subdivision: 9, wind: 0.4 });
    expect(Array.from(s.rig.entries[0].alpha)).toEqual(Array.from(alphaBefore));
    expect(Array.from(s.rig.entries[0].index)).toEqual(Array.from(indexBefore));
  });
});
