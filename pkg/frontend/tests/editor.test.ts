import { describe, expect, it } from "vitest";

import { EditorCore, Vec3 } from "../src/editor.js";
import { SparseRows } from "../src/sparse.js";
import { BundleFormatError } from "../src/types.js";
import { cloneBundle, mulberry32, tinyBundle } from "./helpers.js";

describe("bundle validation", () => {
  it("accepts a well-formed bundle", () => {
    const core = new EditorCore(tinyBundle());
    expect(core.nVertices).toBe(3);
    expect(core.nControlPoints).toBe(12);
  });

  it("rejects a wrong version", () => {
    const bad = cloneBundle(tinyBundle());
    bad.version = 99;
    expect(() => new EditorCore(bad)).toThrow(BundleFormatError);
    expect(() => new EditorCore(bad)).toThrow(/version/);
  });

  it("rejects out-of-range coefficient indices", () => {
    const bad = cloneBundle(tinyBundle());
    bad.coeffs.indices[0] = [99];
    expect(() => new EditorCore(bad)).toThrow(/outside/);
  });

  it("rejects mismatched delta length", () => {
    const bad = cloneBundle(tinyBundle());
    bad.delta = [[0, 0, 0]];
    expect(() => new EditorCore(bad)).toThrow(/delta/);
  });

  it("rejects non-finite vertices", () => {
    const bad = cloneBundle(tinyBundle());
    bad.mesh.vertices[0] = [0, Number.NaN, 0];
    expect(() => new EditorCore(bad)).toThrow(/finite/);
  });
});

describe("initial state", () => {
  it("reproduces the stored mesh from coeffs * P0", () => {
    const core = new EditorCore(tinyBundle());
    const v = core.vertices;
    expect([v[0], v[1], v[2]]).toEqual([0, 0, 0]);
    expect([v[3], v[4], v[5]]).toEqual([2, 1, 1]);
    expect([v[6], v[7], v[8]]).toEqual([0.5, 0.5, 0.5]);
  });

  it("shows a pre-deformed mesh when the bundle carries a nonzero field", () => {
    const bundle = cloneBundle(tinyBundle());
    bundle.delta[0] = [0, 0, 10];
    const core = new EditorCore(bundle);
    expect(core.vertices[2]).toBe(10);
    expect(core.vertices[8]).toBeCloseTo(0.5 + 1.25, 12);
  });
});

describe("dragging", () => {
  it("moves only supported vertices, scaled by the coefficient", () => {
    const core = new EditorCore(tinyBundle());
    const before = Float64Array.from(core.vertices);
    core.dragControlPoint(3, [0, 0, 4]); // corner (0,1,1): only the center row
    expect(core.vertices[8]).toBeCloseTo(before[8] + 0.125 * 4, 14);
    // corner vertices are untouched, bit for bit
    expect(core.vertices[0]).toBe(before[0]);
    expect(core.vertices[3]).toBe(before[3]);
  });

  it("drag back to zero restores the mesh bitwise", () => {
    const core = new EditorCore(tinyBundle());
    const before = Float64Array.from(core.vertices);
    core.dragControlPoint(5, [0.3, -0.7, 0.9]);
    core.dragControlPoint(5, [0, 0, 0]);
    expect(Array.from(core.vertices)).toEqual(Array.from(before));
  });

  it("dragging an empty-support point leaves the mesh unchanged", () => {
    const core = new EditorCore(tinyBundle());
    const before = Float64Array.from(core.vertices);
    core.dragControlPoint(9, [5, 5, 5]); // (2,0,1): referenced by no row
    expect(Array.from(core.vertices)).toEqual(Array.from(before));
  });

  it("clamps non-finite displacements to zero", () => {
    const core = new EditorCore(tinyBundle());
    core.dragControlPoint(0, [Number.POSITIVE_INFINITY, 0, 1]);
    expect(core.displacement(0)).toEqual([0, 0, 1]);
  });

  it("rejects out-of-range indices", () => {
    const core = new EditorCore(tinyBundle());
    expect(() => core.dragControlPoint(12, [0, 0, 0])).toThrow(RangeError);
  });
});

describe("undo/redo", () => {
  it("undo restores the exact prior displacement entry", () => {
    const core = new EditorCore(tinyBundle());
    core.dragControlPoint(3, [0.1, 0.2, 0.3]);
    core.dragControlPoint(3, [1, 1, 1]);
    expect(core.undo()).toBe(true);
    expect(core.displacement(3)).toEqual([0.1, 0.2, 0.3]);
    expect(core.undo()).toBe(true);
    expect(core.displacement(3)).toEqual([0, 0, 0]);
    expect(core.undo()).toBe(false);
  });

  it("undo/redo are exact inverses on the displacement field", () => {
    const core = new EditorCore(tinyBundle());
    const rand = mulberry32(99);
    for (let step = 0; step < 30; step++) {
      core.dragControlPoint(Math.floor(rand() * core.nControlPoints),
        [rand() - 0.5, rand() - 0.5, rand() - 0.5]);
    }
    const snapshot = Float64Array.from(core.delta);
    const meshSnapshot = Float64Array.from(core.vertices);
    for (let i = 0; i < 30; i++) expect(core.undo()).toBe(true);
    expect(Array.from(core.delta)).toEqual(
      Array.from(new Float64Array(core.delta.length)));
    for (let i = 0; i < 30; i++) expect(core.redo()).toBe(true);
    expect(Array.from(core.delta)).toEqual(Array.from(snapshot));
    expect(Array.from(core.vertices)).toEqual(Array.from(meshSnapshot));
  });

  it("a new drag clears the redo stack", () => {
    const core = new EditorCore(tinyBundle());
    core.dragControlPoint(3, [1, 0, 0]);
    core.undo();
    core.dragControlPoint(4, [0, 1, 0]);
    expect(core.canRedo).toBe(false);
  });

  it("preview + commit records a single undo entry", () => {
    const core = new EditorCore(tinyBundle());
    const start = core.displacement(3);
    core.previewDisplacement(3, [0.5, 0, 0]);
    core.previewDisplacement(3, [1.0, 0, 0]);
    core.commitDrag(3, start);
    expect(core.displacement(3)).toEqual([1, 0, 0]);
    core.undo();
    expect(core.displacement(3)).toEqual([0, 0, 0]);
    expect(core.canUndo).toBe(false);
  });
});

describe("display consistency", () => {
  it("incremental vertices equal full recomputation after 100 random drags", () => {
    const core = new EditorCore(tinyBundle());
    const rand = mulberry32(7);
    for (let step = 0; step < 100; step++) {
      const index = Math.floor(rand() * core.nControlPoints);
      core.dragControlPoint(index,
        [4 * (rand() - 0.5), 4 * (rand() - 0.5), 4 * (rand() - 0.5)]);
    }
    expect(core.consistencyCheck()).toBeLessThanOrEqual(1e-9);
  });

  it("faces are never mutated", () => {
    const bundle = tinyBundle();
    const core = new EditorCore(bundle);
    const facesBefore = JSON.stringify(bundle.mesh.faces);
    core.dragControlPoint(0, [9, 9, 9]);
    expect(JSON.stringify(core.bundle.mesh.faces)).toBe(facesBefore);
  });
});

describe("export", () => {
  it("zero-edit session exports the bundle's original field", () => {
    const bundle = cloneBundle(tinyBundle());
    bundle.delta[2] = [0.25, 0, -0.5];
    const core = new EditorCore(bundle);
    const parsed = JSON.parse(core.exportDelta()) as { delta: number[][] };
    expect(parsed.delta).toEqual(bundle.delta);
  });

  it("undo-all then export equals the original field", () => {
    const bundle = cloneBundle(tinyBundle());
    bundle.delta[1] = [1, 2, 3];
    const core = new EditorCore(bundle);
    const rand = mulberry32(3);
    for (let i = 0; i < 12; i++) {
      core.dragControlPoint(Math.floor(rand() * core.nControlPoints),
        [rand(), rand(), rand()]);
    }
    while (core.undo()) { /* unwind everything */ }
    const parsed = JSON.parse(core.exportDelta()) as { delta: number[][] };
    expect(parsed.delta).toEqual(bundle.delta);
  });
});

describe("sparse rows", () => {
  it("builds the transpose column index", () => {
    const rows = new SparseRows([[0, 2], [2], []], [[0.5, 0.5], [1], []], 3);
    expect(Array.from(rows.columnRows[0])).toEqual([0]);
    expect(Array.from(rows.columnRows[1])).toEqual([]);
    expect(Array.from(rows.columnRows[2])).toEqual([0, 1]);
  });

  it("coefficient lookup returns zero when absent", () => {
    const rows = new SparseRows([[1]], [[0.75]], 2);
    expect(rows.coefficient(0, 1)).toBe(0.75);
    expect(rows.coefficient(0, 0)).toBe(0);
  });
});
