/** Editor state: bundle, mutable displacement copy, undo/redo, export.
 *
 * The displayed vertices always equal coeffs * (P0 + delta) for the current
 * delta; an edit recomputes exactly the rows supported by the moved control
 * point. The face list is never touched.
 */

import { SparseRows } from "./sparse.js";
import { Bundle, validateBundle } from "./types.js";

export type Vec3 = [number, number, number];

interface UndoEntry {
  index: number;
  previous: Vec3;
  next: Vec3;
}

export class EditorCore {
  readonly bundle: Bundle;
  readonly rows: SparseRows;
  readonly nVertices: number;
  readonly nControlPoints: number;
  /** base control point positions, flat [x0,y0,z0, x1, ...] */
  readonly basePoints: Float64Array;
  /** current displacements, same layout */
  readonly delta: Float64Array;
  /** displayed vertex positions, updated incrementally */
  readonly vertices: Float64Array;
  private readonly moved: Float64Array;
  private undoStack: UndoEntry[] = [];
  private redoStack: UndoEntry[] = [];
  selected: number | null = null;

  constructor(data: unknown) {
    this.bundle = validateBundle(data);
    const points = this.bundle.lattice.points;
    this.nControlPoints = points.length;
    this.nVertices = this.bundle.mesh.vertices.length;
    this.rows = new SparseRows(this.bundle.coeffs.indices,
      this.bundle.coeffs.values, this.nControlPoints);
    this.basePoints = new Float64Array(this.nControlPoints * 3);
    this.delta = new Float64Array(this.nControlPoints * 3);
    this.moved = new Float64Array(this.nControlPoints * 3);
    for (let j = 0; j < this.nControlPoints; j++) {
      for (let a = 0; a < 3; a++) {
        this.basePoints[j * 3 + a] = points[j][a];
        this.delta[j * 3 + a] = this.bundle.delta[j][a];
        this.moved[j * 3 + a] = points[j][a] + this.bundle.delta[j][a];
      }
    }
    this.vertices = new Float64Array(this.nVertices * 3);
    this.rows.recomputeAll(this.moved, this.vertices);
  }

  displacement(index: number): Vec3 {
    const j3 = index * 3;
    return [this.delta[j3], this.delta[j3 + 1], this.delta[j3 + 2]];
  }

  movedPoint(index: number): Vec3 {
    const j3 = index * 3;
    return [this.moved[j3], this.moved[j3 + 1], this.moved[j3 + 2]];
  }

  private applyDisplacement(index: number, disp: Vec3): void {
    const j3 = index * 3;
    for (let a = 0; a < 3; a++) {
      const value = isFinite(disp[a]) ? disp[a] : 0;
      this.delta[j3 + a] = value;
      this.moved[j3 + a] = this.basePoints[j3 + a] + value;
    }
    for (const q of this.rows.columnRows[index]) {
      this.rows.recomputeRow(q, this.moved, this.vertices);
    }
  }

  /** Move one control point to an absolute displacement, recording undo. */
  dragControlPoint(index: number, disp: Vec3): void {
    if (index < 0 || index >= this.nControlPoints) {
      throw new RangeError(`control point ${index} out of range`);
    }
    const previous = this.displacement(index);
    this.applyDisplacement(index, disp);
    this.undoStack.push({ index, previous, next: this.displacement(index) });
    this.redoStack = [];
  }

  /** Apply without recording undo; used for live previews during a drag. */
  previewDisplacement(index: number, disp: Vec3): void {
    if (index < 0 || index >= this.nControlPoints) {
      throw new RangeError(`control point ${index} out of range`);
    }
    this.applyDisplacement(index, disp);
  }

  /** Record a finished drag (started at `previous`) as one undo entry. */
  commitDrag(index: number, previous: Vec3): void {
    this.undoStack.push({ index, previous, next: this.displacement(index) });
    this.redoStack = [];
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  get canRedo(): boolean {
    return this.redoStack.length > 0;
  }

  undo(): boolean {
    const entry = this.undoStack.pop();
    if (!entry) return false;
    this.applyDisplacement(entry.index, entry.previous);
    this.redoStack.push(entry);
    return true;
  }

  redo(): boolean {
    const entry = this.redoStack.pop();
    if (!entry) return false;
    this.applyDisplacement(entry.index, entry.next);
    this.undoStack.push(entry);
    return true;
  }

  /** Max |incremental - full recomputation| over all vertex coordinates. */
  consistencyCheck(): number {
    const fresh = new Float64Array(this.nVertices * 3);
    this.rows.recomputeAll(this.moved, fresh);
    let worst = 0;
    for (let i = 0; i < fresh.length; i++) {
      const d = Math.abs(fresh[i] - this.vertices[i]);
      if (d > worst) worst = d;
    }
    return worst;
  }

  /** Displacement field JSON accepted by the deform command. */
  exportDelta(): string {
    const rows: number[][] = [];
    for (let j = 0; j < this.nControlPoints; j++) {
      rows.push([this.delta[j * 3], this.delta[j * 3 + 1], this.delta[j * 3 + 2]]);
    }
    return JSON.stringify({ delta: rows });
  }
}
