/** Piecewise-linear velocity/pressure field over a triangulation, built from
 * parsed VTK point data.  Provides point evaluation (via a uniform bin grid
 * over the triangles), per-triangle curl, and the interior curl integral
 * used to certify a vortex. */

import { VtkGrid } from './vtk.js';

export interface Bounds {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

const BARY_TOL = 1e-9;

export class TriangleField {
  readonly bounds: Bounds;
  private grid: VtkGrid;
  private velocity: Float64Array | null;
  private pressure: Float64Array | null;
  private binsPerSide: number;
  private bins: number[][];

  constructor(grid: VtkGrid) {
    this.grid = grid;
    if (grid.nTriangles === 0) {
      throw new Error('field needs at least one triangle');
    }
    this.velocity = grid.vectors.get('velocity') ?? null;
    this.pressure = grid.scalars.get('pressure') ?? null;

    let x0 = Infinity;
    let x1 = -Infinity;
    let y0 = Infinity;
    let y1 = -Infinity;
    for (let i = 0; i < grid.nPoints; i++) {
      x0 = Math.min(x0, grid.points[3 * i]);
      x1 = Math.max(x1, grid.points[3 * i]);
      y0 = Math.min(y0, grid.points[3 * i + 1]);
      y1 = Math.max(y1, grid.points[3 * i + 1]);
    }
    if (!(x1 > x0) || !(y1 > y0)) {
      throw new Error('degenerate point cloud: zero extent');
    }
    this.bounds = { x0, x1, y0, y1 };

    this.binsPerSide = Math.max(
      1,
      Math.min(128, Math.floor(Math.sqrt(grid.nTriangles))),
    );
    this.bins = Array.from({ length: this.binsPerSide * this.binsPerSide }, () => []);
    for (let t = 0; t < grid.nTriangles; t++) {
      const [ax, ay, bx, by, cx, cy] = this.corners(t);
      const lo = this.binIndex(Math.min(ax, bx, cx), Math.min(ay, by, cy));
      const hi = this.binIndex(Math.max(ax, bx, cx), Math.max(ay, by, cy));
      for (let by2 = lo[1]; by2 <= hi[1]; by2++) {
        for (let bx2 = lo[0]; bx2 <= hi[0]; bx2++) {
          this.bins[by2 * this.binsPerSide + bx2].push(t);
        }
      }
    }
  }

  get hasVelocity(): boolean {
    return this.velocity !== null;
  }

  get hasPressure(): boolean {
    return this.pressure !== null;
  }

  get nTriangles(): number {
    return this.grid.nTriangles;
  }

  triangleCorners(t: number): Array<[number, number]> {
    const [ax, ay, bx, by, cx, cy] = this.corners(t);
    return [
      [ax, ay],
      [bx, by],
      [cx, cy],
    ];
  }

  private corners(t: number): [number, number, number, number, number, number] {
    const p = this.grid.points;
    const [a, b, c] = [
      this.grid.triangles[3 * t],
      this.grid.triangles[3 * t + 1],
      this.grid.triangles[3 * t + 2],
    ];
    return [p[3 * a], p[3 * a + 1], p[3 * b], p[3 * b + 1], p[3 * c], p[3 * c + 1]];
  }

  private binIndex(x: number, y: number): [number, number] {
    const { x0, x1, y0, y1 } = this.bounds;
    const bx = Math.min(
      this.binsPerSide - 1,
      Math.max(0, Math.floor(((x - x0) / (x1 - x0)) * this.binsPerSide)),
    );
    const by = Math.min(
      this.binsPerSide - 1,
      Math.max(0, Math.floor(((y - y0) / (y1 - y0)) * this.binsPerSide)),
    );
    return [bx, by];
  }

  /** Triangle index and barycentric coordinates at (x, y), or null when the
   * point lies outside the triangulation. */
  locate(x: number, y: number): { triangle: number; lambda: [number, number, number] } | null {
    const { x0, x1, y0, y1 } = this.bounds;
    if (x < x0 - BARY_TOL || x > x1 + BARY_TOL || y < y0 - BARY_TOL || y > y1 + BARY_TOL) {
      return null;
    }
    const [bx, by] = this.binIndex(x, y);
    for (const t of this.bins[by * this.binsPerSide + bx]) {
      const lambda = this.barycentric(t, x, y);
      if (lambda !== null) {
        return { triangle: t, lambda };
      }
    }
    return null;
  }

  private barycentric(t: number, x: number, y: number): [number, number, number] | null {
    const [ax, ay, bx, by, cx, cy] = this.corners(t);
    const det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    if (det === 0) return null;
    const l1 = ((bx - x) * (cy - y) - (cx - x) * (by - y)) / det;
    const l2 = ((cx - x) * (ay - y) - (ax - x) * (cy - y)) / det;
    const l3 = 1 - l1 - l2;
    if (l1 < -BARY_TOL || l2 < -BARY_TOL || l3 < -BARY_TOL) return null;
    return [l1, l2, l3];
  }

  velocityAt(x: number, y: number): [number, number] | null {
    if (this.velocity === null) {
      throw new Error("grid has no 'velocity' vector field");
    }
    const hit = this.locate(x, y);
    if (hit === null) return null;
    const v = this.velocity;
    let vx = 0;
    let vy = 0;
    for (let j = 0; j < 3; j++) {
      const p = this.grid.triangles[3 * hit.triangle + j];
      vx += hit.lambda[j] * v[3 * p];
      vy += hit.lambda[j] * v[3 * p + 1];
    }
    return [vx, vy];
  }

  pressureAt(x: number, y: number): number | null {
    if (this.pressure === null) {
      throw new Error("grid has no 'pressure' scalar field");
    }
    const hit = this.locate(x, y);
    if (hit === null) return null;
    let value = 0;
    for (let j = 0; j < 3; j++) {
      value += hit.lambda[j] * this.pressure[this.grid.triangles[3 * hit.triangle + j]];
    }
    return value;
  }

  triangleArea(t: number): number {
    const [ax, ay, bx, by, cx, cy] = this.corners(t);
    return 0.5 * Math.abs((bx - ax) * (cy - ay) - (cx - ax) * (by - ay));
  }

  triangleCentroid(t: number): [number, number] {
    const [ax, ay, bx, by, cx, cy] = this.corners(t);
    return [(ax + bx + cx) / 3, (ay + by + cy) / 3];
  }

  /** Curl of the piecewise-linear velocity on triangle t (a constant). */
  triangleCurl(t: number): number {
    if (this.velocity === null) {
      throw new Error("grid has no 'velocity' vector field");
    }
    const [ax, ay, bx, by, cx, cy] = this.corners(t);
    const det = (bx - ax) * (cy - ay) - (cx - ax) * (by - ay);
    if (det === 0) return 0;
    // Gradients of the barycentric hat functions.
    const g1 = [(by - cy) / det, (cx - bx) / det];
    const g2 = [(cy - ay) / det, (ax - cx) / det];
    const g3 = [(ay - by) / det, (bx - ax) / det];
    const v = this.velocity;
    const idx = [
      this.grid.triangles[3 * t],
      this.grid.triangles[3 * t + 1],
      this.grid.triangles[3 * t + 2],
    ];
    const grads = [g1, g2, g3];
    let dvydx = 0;
    let dvxdy = 0;
    for (let j = 0; j < 3; j++) {
      dvydx += grads[j][0] * v[3 * idx[j] + 1];
      dvxdy += grads[j][1] * v[3 * idx[j]];
    }
    return dvydx - dvxdy;
  }

  /** Integral of the curl over all triangles whose centroid lies in the
   * given region; defaults to the central 60% of the domain.  A rotating
   * core makes this circulation measurably nonzero. */
  curlIntegral(region?: Bounds): number {
    const r = region ?? this.interiorRegion();
    let total = 0;
    for (let t = 0; t < this.grid.nTriangles; t++) {
      const [cx, cy] = this.triangleCentroid(t);
      if (cx >= r.x0 && cx <= r.x1 && cy >= r.y0 && cy <= r.y1) {
        total += this.triangleCurl(t) * this.triangleArea(t);
      }
    }
    return total;
  }

  interiorRegion(): Bounds {
    const { x0, x1, y0, y1 } = this.bounds;
    const mx = 0.2 * (x1 - x0);
    const my = 0.2 * (y1 - y0);
    return { x0: x0 + mx, x1: x1 - mx, y0: y0 + my, y1: y1 - my };
  }
}
