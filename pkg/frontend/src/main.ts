/**
 * Editor shell: load a rig bundle via drag-drop or file picker, edit sail
 * parameters with live recoloring, export edits / PNG / updated bundle.
 */

import { BundleError, Edit, Rig, loadBundle, recolor } from "./rig.js";
import { decodeColors, gridSize, quantizeU8, uprightCount } from "./sail.js";
import { EditorSession } from "./session.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let session: EditorSession | null = null;
let bundleFiles: Map<string, Uint8Array> | null = null;
let hoverHighlight = -1;
let renderQueued = false;

// ---------------------------------------------------------------------------
// Bundle loading
// ---------------------------------------------------------------------------

async function filesFromList(list: FileList | File[]): Promise<Map<string, Uint8Array>> {
  const map = new Map<string, Uint8Array>();
  for (const f of Array.from(list)) {
    map.set(f.name, new Uint8Array(await f.arrayBuffer()));
  }
  return map;
}

async function openBundle(files: Map<string, Uint8Array>): Promise<void> {
  const status = $("status");
  try {
    const rig = await loadBundle(files);
    session = new EditorSession(rig);
    bundleFiles = files;
    hoverHighlight = -1;
    status.textContent =
      `loaded ${rig.width}x${rig.height}, ${rig.entries.length} sail(s)`;
    status.className = "ok";
    buildSailList();
    buildControls();
    schedulePreview();
  } catch (err) {
    session = null;
    bundleFiles = null;
    status.textContent = err instanceof BundleError
      ? `bundle rejected: ${err.message}`
      : `failed to load: ${(err as Error).message}`;
    status.className = "error";
  }
}

// ---------------------------------------------------------------------------
// Preview rendering (coalesced per animation frame)
// ---------------------------------------------------------------------------

function schedulePreview(): void {
  if (renderQueued) return;
  renderQueued = true;
  requestAnimationFrame(() => {
    renderQueued = false;
    renderPreview();
    renderSailWidget();
  });
}

function currentEdits(): Edit[] {
  return session ? session.exportEdits() : [];
}

function renderPreview(): void {
  if (!session) return;
  const rig = session.rig;
  const canvas = $("preview") as unknown as HTMLCanvasElement;
  canvas.width = rig.width;
  canvas.height = rig.height;
  const ctx = canvas.getContext("2d")!;
  const edits = currentEdits();
  // With no edits show the stored reconstruction byte-for-byte when present.
  const rgb = edits.length === 0 && rig.reconstruction
    ? rig.reconstruction
    : recolor(rig, edits);
  const img = ctx.createImageData(rig.width, rig.height);
  const n = rig.width * rig.height;
  for (let p = 0; p < n; p++) {
    img.data[p * 4] = rgb[p * 3];
    img.data[p * 4 + 1] = rgb[p * 3 + 1];
    img.data[p * 4 + 2] = rgb[p * 3 + 2];
    img.data[p * 4 + 3] = 255;
  }
  if (hoverHighlight >= 0 && hoverHighlight < rig.entries.length) {
    const alpha = rig.entries[hoverHighlight].alpha;
    for (let p = 0; p < n; p++) {
      if (alpha[p] > 127) {  // region where this sail dominates (> 0.5)
        img.data[p * 4] = Math.min(255, img.data[p * 4] + 70);
        img.data[p * 4 + 1] = Math.min(255, img.data[p * 4 + 1] + 70);
      }
    }
  }
  ctx.putImageData(img, 0, 0);
}

/** Draw the selected sail as a subdivided triangle for color picking. */
function renderSailWidget(): void {
  if (!session) return;
  const canvas = $("sailview") as unknown as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const W = canvas.width;
  const H = canvas.height;
  ctx.clearRect(0, 0, W, H);
  const sail = session.current[session.selected];
  const s = sail.subdivision;
  const colors = decodeColors(sail, true);
  const ax = 8, ay = H - 8, bx = W - 8, by = H - 8, cx = W / 2, cy = 8;

  const upright = (row: number, j: number) => row * s - (row * (row - 1)) / 2 + j;
  const downward = (row: number, j: number) =>
    uprightCount(s) + row * (s - 1) - (row * (row - 1)) / 2 + j;
  const corner = (j: number, row: number): [number, number] => {
    const t1 = j / s, t2 = row / s, t0 = 1 - t1 - t2;
    return [t0 * ax + t1 * bx + t2 * cx, t0 * ay + t1 * by + t2 * cy];
  };
  const fillTri = (pts: [number, number][], idx: number) => {
    const c = idx * 3;
    ctx.fillStyle = `rgb(${quantizeU8(colors[c])},${quantizeU8(colors[c + 1])},${quantizeU8(colors[c + 2])})`;
    ctx.strokeStyle = ctx.fillStyle;
    ctx.beginPath();
    ctx.moveTo(pts[0][0], pts[0][1]);
    ctx.lineTo(pts[1][0], pts[1][1]);
    ctx.lineTo(pts[2][0], pts[2][1]);
    ctx.closePath();
    ctx.fill();
    ctx.stroke();
  };
  for (let row = 0; row < s; row++) {
    for (let j = 0; j < s - row; j++) {
      fillTri([corner(j, row), corner(j + 1, row), corner(j, row + 1)], upright(row, j));
      if (j < s - 1 - row) {
        fillTri([corner(j + 1, row), corner(j + 1, row + 1), corner(j, row + 1)],
                downward(row, j));
      }
    }
  }
  // focus marker
  const [pu, pv] = sail.focus;
  const t2 = 1 - pu - pv;
  const fx = pu * ax + pv * bx + t2 * cx;
  const fy = pu * ay + pv * by + t2 * cy;
  ctx.beginPath();
  ctx.arc(fx, fy, 5, 0, Math.PI * 2);
  ctx.strokeStyle = "#fff";
  ctx.lineWidth = 2;
  ctx.stroke();
  ctx.beginPath();
  ctx.arc(fx, fy, 5, 0, Math.PI * 2);
  ctx.strokeStyle = "#000";
  ctx.lineWidth = 1;
  ctx.stroke();
}

// ---------------------------------------------------------------------------
// Controls
// ---------------------------------------------------------------------------

function buildSailList(): void {
  if (!session) return;
  const list = $("saillist");
  list.innerHTML = "";
  session.current.forEach((_, i) => {
    const btn = document.createElement("button");
    btn.textContent = `sail ${i}`;
    btn.className = i === session!.selected ? "sel" : "";
    btn.onclick = () => {
      session!.selected = i;
      buildSailList();
      buildControls();
      schedulePreview();
    };
    btn.onmouseenter = () => {
      hoverHighlight = i;
      schedulePreview();
    };
    btn.onmouseleave = () => {
      hoverHighlight = -1;
      schedulePreview();
    };
    list.appendChild(btn);
  });
}

function hexToRgb(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [((v >> 16) & 255) / 255, ((v >> 8) & 255) / 255, (v & 255) / 255];
}

function rgbToHex(rgb: number[]): string {
  const h = rgb.map((c) => quantizeU8(c).toString(16).padStart(2, "0")).join("");
  return `#${h}`;
}

function buildControls(): void {
  if (!session) return;
  const sail = session.current[session.selected];
  for (let v = 0; v < 3; v++) {
    const input = $(`vertex${v}`) as unknown as HTMLInputElement;
    input.value = rgbToHex(sail.vertices[v]);
    input.oninput = () => {
      const key = `vertex${v}` as "vertex0" | "vertex1" | "vertex2";
      gestureEdit({ [key]: hexToRgb(input.value) });
    };
  }
  const wind = $("wind") as unknown as HTMLInputElement;
  wind.value = String(sail.wind);
  wind.oninput = () => gestureEdit({ wind: parseFloat(wind.value) });
  const sub = $("subdivision") as unknown as HTMLInputElement;
  sub.value = String(sail.subdivision);
  sub.oninput = () => gestureEdit({ subdivision: parseInt(sub.value, 10) });
  $("windval").textContent = sail.wind.toFixed(2);
  $("subval").textContent = String(sail.subdivision);
  $("focusval").textContent = `(${sail.focus[0].toFixed(2)}, ${sail.focus[1].toFixed(2)})`;
}

function gestureEdit(set: Record<string, unknown>): void {
  if (!session) return;
  try {
    session.edit(session.selected, set);
  } catch {
    return; // widget ranges keep values valid; ignore anything else
  }
  buildControls();
  schedulePreview();
}

/** Focus dragging: clicks on the sail widget move the focus point. */
function wireFocusDrag(): void {
  const canvas = $("sailview") as unknown as HTMLCanvasElement;
  let dragging = false;
  const apply = (ev: MouseEvent) => {
    if (!session) return;
    const rect = canvas.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
    const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
    const ax = 8, ay = canvas.height - 8, bx = canvas.width - 8,
      by = canvas.height - 8, cx = canvas.width / 2, cy = 8;
    const det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    let pu = 1 - ((cy - ay) * (x - ax) + (ax - cx) * (y - ay)) / det
      - ((ay - by) * (x - ax) + (bx - ax) * (y - ay)) / det;
    let pv = ((cy - ay) * (x - ax) + (ax - cx) * (y - ay)) / det;
    pu = Math.min(Math.max(pu, 0), 1);
    pv = Math.min(Math.max(pv, 0), 1 - pu);
    gestureEdit({ focus: [pu, pv] });
  };
  canvas.onmousedown = (ev) => {
    dragging = true;
    apply(ev);
  };
  canvas.onmousemove = (ev) => {
    if (dragging) apply(ev);
  };
  window.addEventListener("mouseup", () => {
    dragging = false;
  });
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

function download(name: string, blob: Blob): void {
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = name;
  a.click();
  URL.revokeObjectURL(a.href);
}

function exportEditsJson(): void {
  if (!session) return;
  const text = JSON.stringify(session.exportEdits(), null, 2) + "\n";
  download("edits.json", new Blob([text], { type: "application/json" }));
}

function exportPng(): void {
  if (!session) return;
  const rig = session.rig;
  const rgb = recolor(rig, currentEdits());
  const canvas = document.createElement("canvas");
  canvas.width = rig.width;
  canvas.height = rig.height;
  const ctx = canvas.getContext("2d")!;
  const img = ctx.createImageData(rig.width, rig.height);
  for (let p = 0; p < rig.width * rig.height; p++) {
    img.data[p * 4] = rgb[p * 3];
    img.data[p * 4 + 1] = rgb[p * 3 + 1];
    img.data[p * 4 + 2] = rgb[p * 3 + 2];
    img.data[p * 4 + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  canvas.toBlob((b) => b && download("recolored.png", b), "image/png");
}

function exportBundle(): void {
  if (!session || !bundleFiles) return;
  // masks and index maps are never mutated: pass the original bytes through
  const manifest = JSON.stringify(session.exportManifest(), null, 2) + "\n";
  download("manifest.json", new Blob([manifest], { type: "application/json" }));
  for (const [name, bytes] of bundleFiles) {
    if (name === "manifest.json") continue;
    download(name, new Blob([bytes as BlobPart], { type: "image/png" }));
  }
}

// ---------------------------------------------------------------------------
// Wiring
// ---------------------------------------------------------------------------

function init(): void {
  const drop = $("drop");
  drop.ondragover = (ev) => {
    ev.preventDefault();
    drop.classList.add("hover");
  };
  drop.ondragleave = () => drop.classList.remove("hover");
  drop.ondrop = async (ev) => {
    ev.preventDefault();
    drop.classList.remove("hover");
    if (ev.dataTransfer?.files?.length) {
      await openBundle(await filesFromList(ev.dataTransfer.files));
    }
  };
  const picker = $("picker") as unknown as HTMLInputElement;
  picker.onchange = async () => {
    if (picker.files?.length) await openBundle(await filesFromList(picker.files));
  };
  $("undo").onclick = () => {
    if (session?.undo()) {
      buildControls();
      schedulePreview();
    }
  };
  $("redo").onclick = () => {
    if (session?.redo()) {
      buildControls();
      schedulePreview();
    }
  };
  $("export-edits").onclick = exportEditsJson;
  $("export-png").onclick = exportPng;
  $("export-bundle").onclick = exportBundle;
  wireFocusDrag();
}

init();
