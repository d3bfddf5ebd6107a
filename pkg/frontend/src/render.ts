/** Canvas renderer: mesh vertices as points, lattice lines, control points. */

import { OrbitCamera } from "./camera.js";
import { EditorCore, Vec3 } from "./editor.js";

export interface ScreenPoint {
  x: number;
  y: number;
  index: number;
}

export class Renderer {
  private readonly ctx: CanvasRenderingContext2D;
  controlScreen: ScreenPoint[] = [];

  constructor(private readonly canvas: HTMLCanvasElement,
              readonly camera: OrbitCamera) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.ctx = ctx;
  }

  draw(editor: EditorCore): void {
    const { width, height } = this.canvas;
    const ctx = this.ctx;
    ctx.fillStyle = "#13161b";
    ctx.fillRect(0, 0, width, height);

    // mesh vertices
    ctx.fillStyle = "#7fb2d9";
    const v = editor.vertices;
    for (let q = 0; q < editor.nVertices; q++) {
      const p = this.camera.project([v[q * 3], v[q * 3 + 1], v[q * 3 + 2]],
        width, height);
      ctx.fillRect(p[0], p[1], 1.4, 1.4);
    }

    // lattice lines between index-adjacent control points
    const dims = editor.bundle.lattice.dims;
    const [l, m, n] = dims;
    const gj = m + 1;
    const gk = n + 1;
    const flat = (i: number, j: number, k: number) => (i * gj + j) * gk + k;
    ctx.strokeStyle = "rgba(240, 170, 70, 0.35)";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let i = 0; i <= l; i++) {
      for (let j = 0; j <= m; j++) {
        for (let k = 0; k <= n; k++) {
          const a = this.projectControl(editor, flat(i, j, k), width, height);
          if (i < l) this.edge(a, this.projectControl(editor, flat(i + 1, j, k), width, height));
          if (j < m) this.edge(a, this.projectControl(editor, flat(i, j + 1, k), width, height));
          if (k < n) this.edge(a, this.projectControl(editor, flat(i, j, k + 1), width, height));
        }
      }
    }
    ctx.stroke();

    // control points (selected highlighted)
    this.controlScreen = [];
    for (let j = 0; j < editor.nControlPoints; j++) {
      const p = this.projectControl(editor, j, width, height);
      this.controlScreen.push({ x: p[0], y: p[1], index: j });
      ctx.fillStyle = j === editor.selected ? "#ff5470" : "#f0aa46";
      const r = j === editor.selected ? 4 : 2.5;
      ctx.fillRect(p[0] - r, p[1] - r, 2 * r, 2 * r);
    }
  }

  private projectControl(editor: EditorCore, index: number,
                         width: number, height: number): Vec3 {
    return this.camera.project(editor.movedPoint(index), width, height);
  }

  private edge(a: Vec3, b: Vec3): void {
    this.ctx.moveTo(a[0], a[1]);
    this.ctx.lineTo(b[0], b[1]);
  }

  /** nearest control point within `radius` pixels, or null */
  pick(x: number, y: number, radius = 9): number | null {
    let best: number | null = null;
    let bestDist = radius * radius;
    for (const p of this.controlScreen) {
      const d = (p.x - x) ** 2 + (p.y - y) ** 2;
      if (d <= bestDist) {
        bestDist = d;
        best = p.index;
      }
    }
    return best;
  }
}
