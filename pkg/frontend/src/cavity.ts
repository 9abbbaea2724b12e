/** SVG renderings of a velocity/pressure snapshot: pressure heatmap,
 * velocity magnitude with quiver arrows, and streamlines.  Each renderer
 * takes a TriangleField built from one VTK file and returns standalone
 * markup; renderCavity bundles all three plus the vortex diagnostics. */

import { TriangleField } from './field.js';
import { Streamline, seedGrid, traceAll } from './streamlines.js';
import {
  divergingColor,
  linearScale,
  polygon,
  polyline,
  sequentialColor,
  svgDocument,
  tag,
  text,
} from './svg.js';

export interface CavityRenderOptions {
  width?: number;
  /** Streamline seeds per side of the uniform grid; default 16. */
  seeds?: number;
  title?: string;
}

export interface VortexStats {
  /** Curl integral over the central region of the domain. */
  curlInterior: number;
  closedStreamlines: number;
  totalStreamlines: number;
}

export interface CavityPlots {
  pressure: string;
  velocity: string;
  streamlines: string;
  stats: VortexStats;
}

interface Frame {
  width: number;
  height: number;
  toX: (x: number) => number;
  toY: (y: number) => number;
  body: string[];
}

const MARGIN = { left: 44, right: 16, top: 30, bottom: 36 };

function makeFrame(field: TriangleField, width: number, title: string): Frame {
  const { x0, x1, y0, y1 } = field.bounds;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = plotW * ((y1 - y0) / (x1 - x0));
  const height = plotH + MARGIN.top + MARGIN.bottom;
  const toX = linearScale([x0, x1], [MARGIN.left, width - MARGIN.right]);
  const toY = linearScale([y0, y1], [height - MARGIN.bottom, MARGIN.top]);
  const body: string[] = [
    tag('rect', { x: 0, y: 0, width, height, fill: 'white' }),
    text(MARGIN.left, 19, title, { 'font-size': 13, fill: '#333333' }),
  ];
  return { width, height, toX, toY, body };
}

function frameBorder(frame: Frame, field: TriangleField): string {
  const { x0, x1, y0, y1 } = field.bounds;
  return polyline(
    [
      [frame.toX(x0), frame.toY(y0)],
      [frame.toX(x1), frame.toY(y0)],
      [frame.toX(x1), frame.toY(y1)],
      [frame.toX(x0), frame.toY(y1)],
      [frame.toX(x0), frame.toY(y0)],
    ],
    { stroke: '#222222', 'stroke-width': 1 },
  );
}

function triangleFill(
  frame: Frame,
  field: TriangleField,
  value: (t: number) => number,
  color: (t01: number) => string,
  lo: number,
  hi: number,
): void {
  const span = hi - lo || 1;
  for (let t = 0; t < field.nTriangles; t++) {
    const corners = field
      .triangleCorners(t)
      .map(([x, y]) => [frame.toX(x), frame.toY(y)] as [number, number]);
    const t01 = (value(t) - lo) / span;
    frame.body.push(
      polygon(corners, { fill: color(t01), stroke: 'none', class: 'cell' }),
    );
  }
}

function colorBar(
  frame: Frame,
  color: (t01: number) => string,
  lo: number,
  hi: number,
): void {
  const x = frame.width - MARGIN.right - 10;
  const yTop = MARGIN.top;
  const yBot = frame.height - MARGIN.bottom;
  const n = 24;
  for (let i = 0; i < n; i++) {
    const y1 = yBot + ((yTop - yBot) * i) / n;
    const y2 = yBot + ((yTop - yBot) * (i + 1)) / n;
    frame.body.push(
      tag('rect', {
        x,
        y: Math.min(y1, y2),
        width: 8,
        height: Math.abs(y2 - y1) + 0.5,
        fill: color((i + 0.5) / n),
      }),
    );
  }
  frame.body.push(
    text(x + 4, yBot + 14, lo.toPrecision(2), {
      'text-anchor': 'middle',
      'font-size': 10,
    }),
  );
  frame.body.push(
    text(x + 4, yTop - 6, hi.toPrecision(2), {
      'text-anchor': 'middle',
      'font-size': 10,
    }),
  );
}

export function renderPressureHeatmap(
  field: TriangleField,
  options: CavityRenderOptions = {},
): string {
  if (!field.hasPressure) {
    throw new Error("grid has no 'pressure' scalar field to plot");
  }
  const frame = makeFrame(field, options.width ?? 520, options.title ?? 'pressure');
  const values: number[] = [];
  for (let t = 0; t < field.nTriangles; t++) {
    values.push(centroidPressure(field, t));
  }
  const maxAbs = Math.max(...values.map(Math.abs), 1e-300);
  triangleFill(
    frame,
    field,
    (t) => values[t],
    divergingColor,
    -maxAbs,
    maxAbs,
  );
  colorBar(frame, divergingColor, -maxAbs, maxAbs);
  frame.body.push(frameBorder(frame, field));
  return svgDocument(frame.width, frame.height, frame.body);
}

function centroidPressure(field: TriangleField, t: number): number {
  const [cx, cy] = field.triangleCentroid(t);
  return field.pressureAt(cx, cy) ?? 0;
}

export function renderVelocityPlot(
  field: TriangleField,
  options: CavityRenderOptions = {},
): string {
  if (!field.hasVelocity) {
    throw new Error("grid has no 'velocity' vector field to plot");
  }
  const frame = makeFrame(
    field,
    options.width ?? 520,
    options.title ?? 'velocity magnitude and direction',
  );
  const speeds: number[] = [];
  for (let t = 0; t < field.nTriangles; t++) {
    const [cx, cy] = field.triangleCentroid(t);
    const v = field.velocityAt(cx, cy) ?? [0, 0];
    speeds.push(Math.hypot(v[0], v[1]));
  }
  const maxSpeed = Math.max(...speeds, 1e-300);
  triangleFill(frame, field, (t) => speeds[t], sequentialColor, 0, maxSpeed);
  colorBar(frame, sequentialColor, 0, maxSpeed);

  const { x0, x1, y0, y1 } = field.bounds;
  const nArrows = 20;
  const cell = Math.min(x1 - x0, y1 - y0) / nArrows;
  const pixPerUnit = Math.abs(frame.toX(x0 + 1) - frame.toX(x0));
  for (let j = 0; j < nArrows; j++) {
    for (let i = 0; i < nArrows; i++) {
      const x = x0 + ((i + 0.5) / nArrows) * (x1 - x0);
      const y = y0 + ((j + 0.5) / nArrows) * (y1 - y0);
      const v = field.velocityAt(x, y);
      if (v === null) continue;
      const speed = Math.hypot(v[0], v[1]);
      if (speed < 1e-300) continue;
      const len = 0.8 * cell * (speed / maxSpeed);
      const dx = (v[0] / speed) * len;
      const dy = (v[1] / speed) * len;
      const tipX = frame.toX(x + dx);
      const tipY = frame.toY(y + dy);
      frame.body.push(
        polyline(
          [
            [frame.toX(x), frame.toY(y)],
            [tipX, tipY],
          ],
          { stroke: '#222222', 'stroke-width': 0.8, class: 'quiver' },
        ),
      );
      const headLen = 0.3 * len * pixPerUnit;
      const angle = Math.atan2(tipY - frame.toY(y), tipX - frame.toX(x));
      for (const side of [2.6, -2.6]) {
        frame.body.push(
          polyline(
            [
              [tipX, tipY],
              [
                tipX - headLen * Math.cos(angle + side),
                tipY - headLen * Math.sin(angle + side),
              ],
            ],
            { stroke: '#222222', 'stroke-width': 0.8 },
          ),
        );
      }
    }
  }
  frame.body.push(frameBorder(frame, field));
  return svgDocument(frame.width, frame.height, frame.body);
}

export function renderStreamlinePlot(
  field: TriangleField,
  lines: Streamline[],
  stats: VortexStats,
  options: CavityRenderOptions = {},
): string {
  const frame = makeFrame(field, options.width ?? 520, options.title ?? 'streamlines');
  for (const line of lines) {
    const pts = line.points.map(
      ([x, y]) => [frame.toX(x), frame.toY(y)] as [number, number],
    );
    frame.body.push(
      polyline(pts, {
        stroke: line.closed ? '#b2182b' : '#2166ac',
        'stroke-width': line.closed ? 1.4 : 0.9,
        class: line.closed ? 'streamline closed' : 'streamline',
      }),
    );
  }
  frame.body.push(frameBorder(frame, field));
  frame.body.push(
    text(
      MARGIN.left,
      frame.height - 12,
      `interior curl integral ${stats.curlInterior.toExponential(3)}, ` +
        `${stats.closedStreamlines} closed of ${stats.totalStreamlines} streamlines`,
      { 'font-size': 11, fill: '#555555', class: 'vortex-stats' },
    ),
  );
  return svgDocument(frame.width, frame.height, frame.body);
}

export function renderCavity(
  field: TriangleField,
  options: CavityRenderOptions = {},
): CavityPlots {
  const nSeeds = options.seeds ?? 16;
  const lines = field.hasVelocity
    ? traceAll(field, seedGrid(field.bounds, nSeeds))
    : [];
  const stats: VortexStats = {
    curlInterior: field.hasVelocity ? field.curlIntegral() : 0,
    closedStreamlines: lines.filter((l) => l.closed).length,
    totalStreamlines: lines.length,
  };
  return {
    pressure: renderPressureHeatmap(field, options),
    velocity: renderVelocityPlot(field, options),
    streamlines: renderStreamlinePlot(field, lines, stats, options),
    stats,
  };
}
