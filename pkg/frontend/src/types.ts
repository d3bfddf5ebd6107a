/** Bundle schema produced by the `ffdmesh export-bundle` command. */

export const SUPPORTED_VERSION = 1;

export interface BundleMesh {
  vertices: number[][];
  faces: number[][];
}

export interface BundleLattice {
  dims: [number, number, number];
  degree: number;
  kind: string;
  box: { origin: number[]; lengths: number[] };
  axis_map: number[];
  points: number[][];
}

export interface Bundle {
  version: number;
  mesh: BundleMesh;
  lattice: BundleLattice;
  coeffs: { indices: number[][]; values: number[][] };
  delta: number[][];
  pose?: { scale: number; rotation: number[][]; translation: number[] };
}

export class BundleFormatError extends Error {}

function fail(message: string): never {
  throw new BundleFormatError(message);
}

function isNumberTriples(rows: unknown, label: string): number[][] {
  if (!Array.isArray(rows)) fail(`${label} must be an array`);
  for (const row of rows as unknown[]) {
    if (!Array.isArray(row) || row.length !== 3) {
      fail(`${label} entries must be [x, y, z] triples`);
    }
    for (const x of row as unknown[]) {
      if (typeof x !== "number" || !isFinite(x)) {
        fail(`${label} contains a non-finite value`);
      }
    }
  }
  return rows as number[][];
}

/** Validate the parsed JSON; throws BundleFormatError without partial state. */
export function validateBundle(data: unknown): Bundle {
  if (typeof data !== "object" || data === null) fail("bundle must be an object");
  const b = data as Record<string, unknown>;
  if (b.version !== SUPPORTED_VERSION) {
    fail(`unsupported bundle version ${String(b.version)}; expected ${SUPPORTED_VERSION}`);
  }
  const mesh = b.mesh as BundleMesh | undefined;
  if (!mesh) fail("bundle is missing 'mesh'");
  const vertices = isNumberTriples(mesh.vertices, "mesh.vertices");
  if (!Array.isArray(mesh.faces)) fail("mesh.faces must be an array");
  const lattice = b.lattice as BundleLattice | undefined;
  if (!lattice) fail("bundle is missing 'lattice'");
  const points = isNumberTriples(lattice.points, "lattice.points");
  const coeffs = b.coeffs as Bundle["coeffs"] | undefined;
  if (!coeffs || !Array.isArray(coeffs.indices) || !Array.isArray(coeffs.values)) {
    fail("bundle is missing sparse 'coeffs'");
  }
  if (coeffs.indices.length !== vertices.length || coeffs.values.length !== vertices.length) {
    fail("coeffs must have one row per vertex");
  }
  const m = points.length;
  for (let q = 0; q < coeffs.indices.length; q++) {
    const idx = coeffs.indices[q];
    const val = coeffs.values[q];
    if (!Array.isArray(idx) || !Array.isArray(val) || idx.length !== val.length) {
      fail(`coeffs row ${q} has mismatched indices/values`);
    }
    for (const j of idx) {
      if (typeof j !== "number" || j < 0 || j >= m || !Number.isInteger(j)) {
        fail(`coeffs row ${q} references control point ${String(j)} outside [0, ${m})`);
      }
    }
  }
  const delta = isNumberTriples(b.delta ?? [], "delta");
  if (delta.length !== m) fail(`delta must have one entry per control point (${m})`);
  return data as Bundle;
}
