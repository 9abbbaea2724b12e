/** Reader for legacy ASCII VTK unstructured grids as written by the
 * stochstokes field exporter: triangle connectivity plus per-point velocity
 * vectors and pressure scalars.  Only the subset of the format the solver
 * emits is supported; anything else fails with a message naming the
 * offending section. */

export interface VtkGrid {
  title: string;
  /** x, y, z per point. */
  points: Float64Array;
  nPoints: number;
  /** Three point indices per triangle. */
  triangles: Uint32Array;
  nTriangles: number;
  /** Per-point 3-vectors, keyed by field name. */
  vectors: Map<string, Float64Array>;
  /** Per-point scalars, keyed by field name. */
  scalars: Map<string, Float64Array>;
}

class TokenCursor {
  private tokens: string[];
  private pos = 0;

  constructor(text: string) {
    this.tokens = text.split(/\s+/).filter((t) => t.length > 0);
  }

  next(context: string): string {
    if (this.pos >= this.tokens.length) {
      throw new Error(`unexpected end of file while reading ${context}`);
    }
    return this.tokens[this.pos++];
  }

  peek(): string | null {
    return this.pos < this.tokens.length ? this.tokens[this.pos] : null;
  }

  number(context: string): number {
    const token = this.next(context);
    const value = Number(token);
    if (Number.isNaN(value)) {
      throw new Error(`expected a number while reading ${context}, got '${token}'`);
    }
    return value;
  }

  integer(context: string): number {
    const value = this.number(context);
    if (!Number.isInteger(value) || value < 0) {
      throw new Error(`expected a non-negative integer in ${context}, got ${value}`);
    }
    return value;
  }

  expect(keyword: string): void {
    const token = this.next(`keyword ${keyword}`);
    if (token !== keyword) {
      throw new Error(`expected '${keyword}', got '${token}'`);
    }
  }
}

export function parseVtk(content: string): VtkGrid {
  const lines = content.split(/\r?\n/);
  if (lines.length < 4 || !lines[0].startsWith('# vtk DataFile')) {
    throw new Error("not a legacy VTK file (missing '# vtk DataFile' header)");
  }
  const title = lines[1].trim();
  const format = lines[2].trim();
  if (format !== 'ASCII') {
    throw new Error(`only ASCII VTK is supported, file says '${format}'`);
  }

  const cursor = new TokenCursor(lines.slice(3).join('\n'));
  cursor.expect('DATASET');
  const datasetType = cursor.next('dataset type');
  if (datasetType !== 'UNSTRUCTURED_GRID') {
    throw new Error(`only UNSTRUCTURED_GRID is supported, got '${datasetType}'`);
  }

  cursor.expect('POINTS');
  const nPoints = cursor.integer('POINTS count');
  cursor.next('POINTS data type');
  const points = new Float64Array(3 * nPoints);
  for (let i = 0; i < 3 * nPoints; i++) {
    points[i] = cursor.number(`POINTS entry ${i}`);
  }

  cursor.expect('CELLS');
  const nCells = cursor.integer('CELLS count');
  const cellListSize = cursor.integer('CELLS list size');
  const connectivity: number[] = [];
  let consumed = 0;
  const cellSizes: number[] = [];
  for (let c = 0; c < nCells; c++) {
    const size = cursor.integer(`cell ${c} size`);
    cellSizes.push(size);
    consumed += 1 + size;
    for (let j = 0; j < size; j++) {
      const idx = cursor.integer(`cell ${c} vertex ${j}`);
      if (idx >= nPoints) {
        throw new Error(`cell ${c} references point ${idx} of ${nPoints}`);
      }
      connectivity.push(idx);
    }
  }
  if (consumed !== cellListSize) {
    throw new Error(
      `CELLS section announces ${cellListSize} entries but contains ${consumed}`,
    );
  }

  cursor.expect('CELL_TYPES');
  const nTypes = cursor.integer('CELL_TYPES count');
  if (nTypes !== nCells) {
    throw new Error(`CELL_TYPES count ${nTypes} does not match CELLS count ${nCells}`);
  }
  for (let c = 0; c < nCells; c++) {
    const type = cursor.integer(`cell type ${c}`);
    if (type !== 5 || cellSizes[c] !== 3) {
      throw new Error(
        `only triangle cells (type 5) are supported; cell ${c} has type ` +
          `${type} with ${cellSizes[c]} vertices`,
      );
    }
  }
  const triangles = Uint32Array.from(connectivity);

  const vectors = new Map<string, Float64Array>();
  const scalars = new Map<string, Float64Array>();
  if (cursor.peek() !== null) {
    cursor.expect('POINT_DATA');
    const nData = cursor.integer('POINT_DATA count');
    if (nData !== nPoints) {
      throw new Error(
        `POINT_DATA count ${nData} does not match POINTS count ${nPoints}`,
      );
    }
    while (cursor.peek() !== null) {
      const kind = cursor.next('point data section');
      if (kind === 'VECTORS') {
        const name = cursor.next('VECTORS name');
        cursor.next('VECTORS data type');
        const data = new Float64Array(3 * nPoints);
        for (let i = 0; i < 3 * nPoints; i++) {
          data[i] = cursor.number(`VECTORS ${name} entry ${i}`);
        }
        vectors.set(name, data);
      } else if (kind === 'SCALARS') {
        const name = cursor.next('SCALARS name');
        cursor.next('SCALARS data type');
        let nComp = 1;
        if (cursor.peek() !== 'LOOKUP_TABLE') {
          nComp = cursor.integer('SCALARS component count');
        }
        if (nComp !== 1) {
          throw new Error(`SCALARS ${name} has ${nComp} components, expected 1`);
        }
        cursor.expect('LOOKUP_TABLE');
        cursor.next('LOOKUP_TABLE name');
        const data = new Float64Array(nPoints);
        for (let i = 0; i < nPoints; i++) {
          data[i] = cursor.number(`SCALARS ${name} entry ${i}`);
        }
        scalars.set(name, data);
      } else {
        throw new Error(`unsupported point data section '${kind}'`);
      }
    }
  }

  return {
    title,
    points,
    nPoints,
    triangles,
    nTriangles: nCells,
    vectors,
    scalars,
  };
}
