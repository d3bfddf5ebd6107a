/** Sparse row storage for the vertex/control-point coefficient matrix.
 *
 * Deformed vertices are recomputed row by row, always from scratch and in
 * the stored entry order, so the displayed mesh is a pure function of the
 * current displacement field: re-dragging a point back to its previous
 * value restores the previous vertices bit for bit.
 */

export class SparseRows {
  readonly nRows: number;
  readonly nCols: number;
  private readonly rowIndices: Int32Array[];
  private readonly rowValues: Float64Array[];
  /** rows touched by each control point (the transpose index) */
  readonly columnRows: Int32Array[];

  constructor(indices: number[][], values: number[][], nCols: number) {
    this.nRows = indices.length;
    this.nCols = nCols;
    this.rowIndices = indices.map((r) => Int32Array.from(r));
    this.rowValues = values.map((r) => Float64Array.from(r));
    const counts = new Int32Array(nCols);
    for (const row of this.rowIndices) {
      for (const j of row) counts[j]++;
    }
    this.columnRows = Array.from({ length: nCols },
      (_, j) => new Int32Array(counts[j]));
    const cursor = new Int32Array(nCols);
    for (let q = 0; q < this.nRows; q++) {
      for (const j of this.rowIndices[q]) {
        this.columnRows[j][cursor[j]++] = q;
      }
    }
  }

  /** coefficient of one control point in one row (0 when absent) */
  coefficient(row: number, col: number): number {
    const idx = this.rowIndices[row];
    for (let r = 0; r < idx.length; r++) {
      if (idx[r] === col) return this.rowValues[row][r];
    }
    return 0;
  }

  /** out[row] = sum_r value_r * moved[index_r], in stored order */
  recomputeRow(row: number, moved: Float64Array, out: Float64Array): void {
    const idx = this.rowIndices[row];
    const val = this.rowValues[row];
    let x = 0;
    let y = 0;
    let z = 0;
    for (let r = 0; r < idx.length; r++) {
      const c = val[r];
      const j3 = idx[r] * 3;
      x += c * moved[j3];
      y += c * moved[j3 + 1];
      z += c * moved[j3 + 2];
    }
    const q3 = row * 3;
    out[q3] = x;
    out[q3 + 1] = y;
    out[q3 + 2] = z;
  }

  recomputeAll(moved: Float64Array, out: Float64Array): void {
    for (let q = 0; q < this.nRows; q++) this.recomputeRow(q, moved, out);
  }
}
