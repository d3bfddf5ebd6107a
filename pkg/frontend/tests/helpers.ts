/** Shared test utilities: a tiny hand-built bundle and a seeded PRNG. */

import { Bundle } from "../src/types.js";

/** Deterministic 32-bit PRNG so scripted edit sessions are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** A 2x1x1 trilinear lattice over 3 vertices with hand-written rows. */
export function tinyBundle(): Bundle {
  // control points of a [0,2]x[0,1]x[0,1] box split into two cells along x
  const points: number[][] = [];
  for (let i = 0; i <= 2; i++) {
    for (let j = 0; j <= 1; j++) {
      for (let k = 0; k <= 1; k++) {
        points.push([i, j, k]);
      }
    }
  }
  // vertices at two cell corners and one cell center
  const vertices = [
    [0, 0, 0],
    [2, 1, 1],
    [0.5, 0.5, 0.5],
  ];
  // rows: corner = single control point; center = 8 equal weights on cell 0
  const indices = [
    [0],
    [11],
    [0, 1, 2, 3, 4, 5, 6, 7],
  ];
  const values = [
    [1],
    [1],
    [0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125],
  ];
  return {
    version: 1,
    mesh: { vertices, faces: [[0, 1, 2]] },
    lattice: {
      dims: [2, 1, 1],
      degree: 1,
      kind: "bspline",
      box: { origin: [0, 0, 0], lengths: [2, 1, 1] },
      axis_map: [0, 1, 2],
      points,
    },
    coeffs: { indices, values },
    delta: points.map(() => [0, 0, 0]),
  };
}

export function cloneBundle(b: Bundle): Bundle {
  return JSON.parse(JSON.stringify(b)) as Bundle;
}
