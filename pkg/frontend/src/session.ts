/**
 * Editor session state: current sail parameters, selection, and an
 * undo/redo stack of gestures. Pure data logic, no DOM.
 */

import { Edit, EditSet, Rig, applyEdit } from "./rig.js";
import { SailParams } from "./sail.js";

interface Gesture {
  sail: number;
  before: SailParams;
  after: SailParams;
}

function cloneSail(s: SailParams): SailParams {
  return {
    vertices: s.vertices.map((r) => [...r]),
    focus: [...s.focus] as [number, number],
    wind: s.wind,
    subdivision: s.subdivision,
  };
}

function sailsEqual(a: SailParams, b: SailParams): boolean {
  return (
    a.wind === b.wind &&
    a.subdivision === b.subdivision &&
    a.focus[0] === b.focus[0] &&
    a.focus[1] === b.focus[1] &&
    a.vertices.every((row, i) => row.every((c, j) => c === b.vertices[i][j]))
  );
}

export class EditorSession {
  readonly rig: Rig;
  readonly baseline: SailParams[];
  current: SailParams[];
  selected = 0;
  private undoStack: Gesture[] = [];
  private redoStack: Gesture[] = [];

  constructor(rig: Rig) {
    this.rig = rig;
    this.baseline = rig.entries.map((e) => cloneSail(e.sail));
    this.current = rig.entries.map((e) => cloneSail(e.sail));
  }

  get nSails(): number {
    return this.current.length;
  }

  /** Apply one control gesture to a sail; push it onto the undo stack. */
  edit(sail: number, set: EditSet): void {
    const before = cloneSail(this.current[sail]);
    const after = applyEdit(this.current[sail], set);
    if (sailsEqual(before, after)) return;
    this.current[sail] = after;
    this.undoStack.push({ sail, before, after });
    this.redoStack = [];
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): boolean {
    const g = this.undoStack.pop();
    if (!g) return false;
    this.current[g.sail] = cloneSail(g.before);
    this.redoStack.push(g);
    return true;
  }

  redo(): boolean {
    const g = this.redoStack.pop();
    if (!g) return false;
    this.current[g.sail] = cloneSail(g.after);
    this.undoStack.push(g);
    return true;
  }

  /** Net edits vs the loaded rig, one entry per changed sail, in the edits
   * JSON schema shared with the batch tool. Undoing everything exports []. */
  exportEdits(): Edit[] {
    const edits: Edit[] = [];
    for (let i = 0; i < this.current.length; i++) {
      const base = this.baseline[i];
      const cur = this.current[i];
      if (sailsEqual(base, cur)) continue;
      const set: EditSet = {};
      // subdivision first: the batch tool remaps indices before other fields
      if (cur.subdivision !== base.subdivision) set.subdivision = cur.subdivision;
      for (let v = 0; v < 3; v++) {
        if (cur.vertices[v].some((c, j) => c !== base.vertices[v][j])) {
          const key = `vertex${v}` as keyof EditSet;
          (set as Record<string, unknown>)[key] = [...cur.vertices[v]];
        }
      }
      if (cur.focus[0] !== base.focus[0] || cur.focus[1] !== base.focus[1]) {
        set.focus = [...cur.focus] as [number, number];
      }
      if (cur.wind !== base.wind) set.wind = cur.wind;
      edits.push({ sail: i, set });
    }
    return edits;
  }

  /** Manifest of the updated bundle: same layout, current sail parameters. */
  exportManifest(): Record<string, unknown> {
    return {
      version: 1,
      width: this.rig.width,
      height: this.rig.height,
      image_sha256: this.rig.imageSha256,
      sails: this.current.map((s, i) => ({
        vertices: s.vertices.map((r) => [...r]),
        focus: [...s.focus],
        wind: s.wind,
        subdivision: s.subdivision,
        alpha_file: `alpha_${i}.png`,
        index_file: `index_${i}.png`,
      })),
      fit_config_digest: this.rig.fitConfigDigest,
    };
  }
}
