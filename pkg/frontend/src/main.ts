/** Browser wiring: file loading, mouse drag, keyboard, export download. */

import { OrbitCamera } from "./camera.js";
import { EditorCore, Vec3 } from "./editor.js";
import { Renderer } from "./render.js";

const CONSISTENCY_LIMIT = 1e-9;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("viewport");
const banner = el<HTMLDivElement>("banner");
const status = el<HTMLDivElement>("status");
const fileInput = el<HTMLInputElement>("bundle-file");
const undoButton = el<HTMLButtonElement>("undo");
const redoButton = el<HTMLButtonElement>("redo");
const exportButton = el<HTMLButtonElement>("export");

const camera = new OrbitCamera();
const renderer = new Renderer(canvas, camera);
let editor: EditorCore | null = null;

type AxisLock = "x" | "y" | "z" | null;
let axisLock: AxisLock = null;
let dragging: { index: number; startDisp: Vec3; lastX: number; lastY: number }
  | null = null;
let orbiting: { lastX: number; lastY: number } | null = null;

function showBanner(message: string, isError: boolean): void {
  banner.textContent = message;
  banner.className = isError ? "banner error" : "banner";
  banner.style.display = message ? "block" : "none";
}

function refreshStatus(): void {
  if (!editor) {
    status.textContent = "no bundle loaded";
    return;
  }
  const sel = editor.selected === null ? "none" : `#${editor.selected}`;
  const lock = axisLock ? ` | axis lock: ${axisLock.toUpperCase()}` : "";
  status.textContent =
    `${editor.nVertices.toLocaleString()} vertices, ` +
    `${editor.nControlPoints} control points | selected: ${sel}${lock} | ` +
    "drag points to deform, right-drag to orbit, wheel to zoom, " +
    "hold X/Y/Z to lock an axis, Ctrl+Z to undo";
  undoButton.disabled = !editor.canUndo;
  redoButton.disabled = !editor.canRedo;
  exportButton.disabled = false;
}

function redraw(): void {
  if (editor) renderer.draw(editor);
  refreshStatus();
}

function fitCamera(core: EditorCore): void {
  const lo: Vec3 = [Infinity, Infinity, Infinity];
  const hi: Vec3 = [-Infinity, -Infinity, -Infinity];
  for (let j = 0; j < core.nControlPoints; j++) {
    const p = core.movedPoint(j);
    for (let a = 0; a < 3; a++) {
      lo[a] = Math.min(lo[a], p[a]);
      hi[a] = Math.max(hi[a], p[a]);
    }
  }
  camera.fitTo(lo, hi);
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  try {
    const parsed = JSON.parse(await file.text());
    editor = new EditorCore(parsed);
    fitCamera(editor);
    showBanner("", false);
  } catch (err) {
    editor = null;
    showBanner(`failed to load bundle: ${(err as Error).message}`, true);
  }
  redraw();
});

canvas.addEventListener("mousedown", (ev) => {
  if (!editor) return;
  const rect = canvas.getBoundingClientRect();
  const x = ev.clientX - rect.left;
  const y = ev.clientY - rect.top;
  if (ev.button === 2 || ev.shiftKey) {
    orbiting = { lastX: x, lastY: y };
    return;
  }
  const picked = renderer.pick(x, y);
  editor.selected = picked;
  if (picked !== null) {
    dragging = { index: picked, startDisp: editor.displacement(picked),
                 lastX: x, lastY: y };
  }
  redraw();
});

canvas.addEventListener("mousemove", (ev) => {
  const rect = canvas.getBoundingClientRect();
  const x = ev.clientX - rect.left;
  const y = ev.clientY - rect.top;
  if (orbiting) {
    camera.yaw += (x - orbiting.lastX) * 0.01;
    camera.pitch += (y - orbiting.lastY) * 0.01;
    camera.pitch = Math.max(-1.5, Math.min(1.5, camera.pitch));
    orbiting = { lastX: x, lastY: y };
    redraw();
    return;
  }
  if (!editor || !dragging) return;
  const delta = camera.worldDelta(x - dragging.lastX, y - dragging.lastY,
    canvas.width);
  const current = editor.displacement(dragging.index);
  const next: Vec3 = [current[0], current[1], current[2]];
  for (let a = 0; a < 3; a++) {
    if (axisLock === null || "xyz"[a] === axisLock) next[a] += delta[a];
  }
  // live preview; the whole drag lands as one undo entry on mouseup
  editor.previewDisplacement(dragging.index, next);
  dragging.lastX = x;
  dragging.lastY = y;
  redraw();
});

canvas.addEventListener("mouseup", () => {
  if (editor && dragging) {
    editor.commitDrag(dragging.index, dragging.startDisp);
  }
  dragging = null;
  orbiting = null;
  redraw();
});

canvas.addEventListener("contextmenu", (ev) => ev.preventDefault());

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  camera.zoom *= ev.deltaY < 0 ? 1.1 : 1 / 1.1;
  redraw();
});

window.addEventListener("keydown", (ev) => {
  if (ev.key === "x" || ev.key === "y" || ev.key === "z") {
    axisLock = ev.key;
    refreshStatus();
  } else if ((ev.ctrlKey || ev.metaKey) && ev.key.toLowerCase() === "z") {
    ev.preventDefault();
    if (!editor) return;
    if (ev.shiftKey) editor.redo();
    else editor.undo();
    redraw();
  }
});

window.addEventListener("keyup", (ev) => {
  if (ev.key === axisLock) {
    axisLock = null;
    refreshStatus();
  }
});

undoButton.addEventListener("click", () => {
  editor?.undo();
  redraw();
});

redoButton.addEventListener("click", () => {
  editor?.redo();
  redraw();
});

exportButton.addEventListener("click", () => {
  if (!editor) return;
  const blob = new Blob([editor.exportDelta() + "\n"],
    { type: "application/json" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "delta.json";
  link.click();
  URL.revokeObjectURL(link.href);
});

// periodic display-consistency check against a full recomputation
setInterval(() => {
  if (!editor) return;
  const worst = editor.consistencyCheck();
  if (worst > CONSISTENCY_LIMIT) {
    showBanner(`display inconsistency ${worst.toExponential(2)} exceeds ` +
      `${CONSISTENCY_LIMIT}; please report this`, true);
  }
}, 5000);

redraw();
