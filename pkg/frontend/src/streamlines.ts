/** Streamline tracing on a piecewise-linear velocity field.  Integrates the
 * normalized direction field with fixed-step RK4 so the polyline advances at
 * constant arc length regardless of speed, stopping at the domain boundary,
 * at stagnation points, or when the path returns to its seed (a closed
 * orbit). */

import { Bounds, TriangleField } from './field.js';

export interface StreamlineOptions {
  /** Arc-length step; default is 1/400 of the shorter domain side. */
  stepSize?: number;
  maxSteps?: number;
  /** Speeds below this count as stagnation; default 1e-12. */
  minSpeed?: number;
}

export interface Streamline {
  seed: [number, number];
  points: Array<[number, number]>;
  closed: boolean;
}

export function seedGrid(bounds: Bounds, n = 16): Array<[number, number]> {
  const seeds: Array<[number, number]> = [];
  for (let j = 0; j < n; j++) {
    for (let i = 0; i < n; i++) {
      seeds.push([
        bounds.x0 + ((i + 0.5) / n) * (bounds.x1 - bounds.x0),
        bounds.y0 + ((j + 0.5) / n) * (bounds.y1 - bounds.y0),
      ]);
    }
  }
  return seeds;
}

function direction(
  field: TriangleField,
  x: number,
  y: number,
  minSpeed: number,
): [number, number] | null {
  const v = field.velocityAt(x, y);
  if (v === null) return null;
  const speed = Math.hypot(v[0], v[1]);
  if (speed < minSpeed) return null;
  return [v[0] / speed, v[1] / speed];
}

export function traceStreamline(
  field: TriangleField,
  seed: [number, number],
  options: StreamlineOptions = {},
): Streamline {
  const { bounds } = field;
  const ds =
    options.stepSize ??
    Math.min(bounds.x1 - bounds.x0, bounds.y1 - bounds.y0) / 400;
  const maxSteps = options.maxSteps ?? 4000;
  const minSpeed = options.minSpeed ?? 1e-12;

  const points: Array<[number, number]> = [seed];
  let [x, y] = seed;
  let closed = false;
  for (let step = 0; step < maxSteps; step++) {
    const k1 = direction(field, x, y, minSpeed);
    if (k1 === null) break;
    const k2 = direction(field, x + 0.5 * ds * k1[0], y + 0.5 * ds * k1[1], minSpeed);
    if (k2 === null) break;
    const k3 = direction(field, x + 0.5 * ds * k2[0], y + 0.5 * ds * k2[1], minSpeed);
    if (k3 === null) break;
    const k4 = direction(field, x + ds * k3[0], y + ds * k3[1], minSpeed);
    if (k4 === null) break;
    x += (ds / 6) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    y += (ds / 6) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    if (field.locate(x, y) === null) break;
    points.push([x, y]);
    if (step >= 10 && Math.hypot(x - seed[0], y - seed[1]) < 0.75 * ds) {
      points.push([seed[0], seed[1]]);
      closed = true;
      break;
    }
  }
  return { seed, points, closed };
}

/** Streamlines from every seed, dropping those that never left their seed
 * (stagnant field); a zero field therefore yields an empty list. */
export function traceAll(
  field: TriangleField,
  seeds: Array<[number, number]>,
  options: StreamlineOptions = {},
): Streamline[] {
  return seeds
    .map((seed) => traceStreamline(field, seed, options))
    .filter((line) => line.points.length >= 2);
}
