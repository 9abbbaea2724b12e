/** Log-log convergence plots from study CSVs.
 *
 * The figure shows one marker series per requested statistic, the fitted
 * power law taken from the CSV's rate rows, and a dashed reference line of
 * prescribed slope anchored at the first data point.  The slope printed in
 * the legend is the file's fitted slope verbatim; this module never refits
 * the data for display, only as a consistency check reported on stderr.
 */

import {
  LevelRow,
  RateFit,
  StudyCsv,
  levelSeries,
  rateFit,
  studyName,
} from './csv.js';
import { fitLogLog } from './fit.js';
import {
  Scale,
  logScale,
  logTicks,
  polyline,
  svgDocument,
  tag,
  text,
  tickLabel,
} from './svg.js';

export interface RatePlotOptions {
  /** Statistics to draw; default just "au". */
  statistics?: string[];
  /** Slope of the dashed reference line; default 0.5. */
  referenceSlope?: number;
  width?: number;
  height?: number;
  /** Tolerance for the stderr refit cross-check; default 1e-9. */
  crossCheckTol?: number;
}

export interface SeriesPlot {
  statistic: string;
  rows: LevelRow[];
  fit: RateFit;
  /** Refit of the level data done here, reported on stderr only. */
  crossCheck: { slope: number; deviation: number };
}

export interface RatePlot {
  svg: string;
  study: string;
  series: SeriesPlot[];
  /** Anchor of the reference line: first data point of the first series. */
  referencePoint: { k: number; value: number };
  referenceSlope: number;
}

const SERIES_COLORS: Record<string, string> = {
  au: '#1f77b4',
  bu: '#ff7f0e',
  ap: '#2ca02c',
  bp: '#d62728',
};

const STATISTIC_LABELS: Record<string, string> = {
  au: 'velocity L2',
  bu: 'velocity H1',
  ap: 'time-avg pressure L2',
  bp: 'pressure L2',
};

export function plotRates(csv: StudyCsv, options: RatePlotOptions = {}): RatePlot {
  const statistics = options.statistics ?? ['au'];
  const referenceSlope = options.referenceSlope ?? 0.5;
  const width = options.width ?? 560;
  const height = options.height ?? 420;
  const tol = options.crossCheckTol ?? 1e-9;
  if (statistics.length === 0) {
    throw new Error('no statistics requested');
  }

  const study = studyName(csv);
  const series: SeriesPlot[] = statistics.map((statistic) => {
    const rows = levelSeries(csv, statistic);
    if (rows.length < 2) {
      throw new Error(
        `statistic '${statistic}' has ${rows.length} level(s); ` +
          'need at least 2 for a rate plot',
      );
    }
    const fit = rateFit(csv, study, statistic);
    const refit = fitLogLog(
      rows.map((row) => row.k),
      rows.map((row) => row.value),
    );
    const deviation = Math.abs(refit.slope - fit.slope);
    console.error(
      `cross-check ${study}/${statistic}: refit slope ${refit.slope} ` +
        `vs file slope ${fit.slope} (|diff| = ${deviation.toExponential(3)})`,
    );
    if (deviation > tol) {
      console.error(
        `warning: ${study}/${statistic} refit deviates from the file's ` +
          `slope by more than ${tol}`,
      );
    }
    return { statistic, rows, fit, crossCheck: { slope: refit.slope, deviation } };
  });

  const first = series[0].rows[0];
  const referencePoint = { k: first.k, value: first.value };

  const allK = series.flatMap((s) => s.rows.map((row) => row.k));
  const allV = series.flatMap((s) => s.rows.map((row) => row.value));
  const refV = allK.map(
    (k) => referencePoint.value * (k / referencePoint.k) ** referenceSlope,
  );
  const kLo = Math.min(...allK);
  const kHi = Math.max(...allK);
  const vLo = Math.min(...allV, ...refV);
  const vHi = Math.max(...allV, ...refV);

  const margin = { left: 64, right: 16, top: 28, bottom: 46 };
  const x = logScale([kLo / 1.2, kHi * 1.2], [margin.left, width - margin.right]);
  const y = logScale([vLo / 1.4, vHi * 1.4], [height - margin.bottom, margin.top]);

  const body: string[] = [];
  body.push(tag('rect', { x: 0, y: 0, width, height, fill: 'white' }));
  body.push(...drawAxes(x, y, width, height, margin));

  const refLine = [kLo, kHi].map(
    (k) =>
      [x(k), y(referencePoint.value * (k / referencePoint.k) ** referenceSlope)] as [
        number,
        number,
      ],
  );
  body.push(
    polyline(refLine, {
      stroke: '#888888',
      'stroke-dasharray': '6 4',
      'stroke-width': 1.2,
      class: 'reference-line',
    }),
  );

  for (const s of series) {
    const color = SERIES_COLORS[s.statistic] ?? '#333333';
    const ks = s.rows.map((row) => row.k);
    const fitted = [Math.min(...ks), Math.max(...ks)].map(
      (k) =>
        [x(k), y(Math.exp(s.fit.intercept) * k ** s.fit.slope)] as [number, number],
    );
    body.push(
      polyline(fitted, { stroke: color, 'stroke-width': 1.6, class: 'fit-line' }),
    );
    for (const row of s.rows) {
      body.push(
        tag('circle', {
          cx: x(row.k),
          cy: y(row.value),
          r: 4,
          fill: color,
          class: `marker-${s.statistic}`,
        }),
      );
    }
  }

  body.push(...drawLegend(series, referenceSlope, width, margin));
  body.push(
    text(width / 2, height - 10, 'time step k', {
      'text-anchor': 'middle',
      'font-size': 13,
    }),
  );
  body.push(
    text(16, height / 2, 'error', {
      'text-anchor': 'middle',
      'font-size': 13,
      transform: `rotate(-90 16 ${height / 2})`,
    }),
  );
  body.push(
    text(margin.left, 18, `${study} study, seed ${csv.seed ?? '?'}`, {
      'font-size': 12,
      fill: '#555555',
    }),
  );

  return {
    svg: svgDocument(width, height, body),
    study,
    series,
    referencePoint,
    referenceSlope,
  };
}

function drawAxes(
  x: Scale,
  y: Scale,
  width: number,
  height: number,
  margin: { left: number; right: number; top: number; bottom: number },
): string[] {
  const out: string[] = [];
  const x0 = margin.left;
  const x1 = width - margin.right;
  const y0 = height - margin.bottom;
  const y1 = margin.top;
  out.push(
    polyline(
      [
        [x0, y1],
        [x0, y0],
        [x1, y0],
      ],
      { stroke: '#222222', 'stroke-width': 1 },
    ),
  );
  for (const v of logTicks(x.domain[0], x.domain[1])) {
    const px = x(v);
    out.push(polyline([[px, y0], [px, y0 + 5]], { stroke: '#222222', 'stroke-width': 1 }));
    out.push(
      text(px, y0 + 18, tickLabel(v), { 'text-anchor': 'middle', 'font-size': 11 }),
    );
  }
  for (const v of logTicks(y.domain[0], y.domain[1])) {
    const py = y(v);
    out.push(polyline([[x0 - 5, py], [x0, py]], { stroke: '#222222', 'stroke-width': 1 }));
    out.push(
      text(x0 - 8, py + 4, tickLabel(v), { 'text-anchor': 'end', 'font-size': 11 }),
    );
  }
  return out;
}

function drawLegend(
  series: SeriesPlot[],
  referenceSlope: number,
  width: number,
  margin: { left: number; right: number; top: number; bottom: number },
): string[] {
  const out: string[] = [];
  const lineHeight = 18;
  const x0 = width - margin.right - 230;
  const y0 = margin.top + 8;
  const entries = series.length + 1;
  out.push(
    tag('rect', {
      x: x0 - 8,
      y: y0 - 14,
      width: 238,
      height: entries * lineHeight + 8,
      fill: 'white',
      stroke: '#cccccc',
      class: 'legend',
    }),
  );
  series.forEach((s, i) => {
    const yy = y0 + i * lineHeight;
    const color = SERIES_COLORS[s.statistic] ?? '#333333';
    out.push(tag('circle', { cx: x0, cy: yy - 4, r: 4, fill: color }));
    const label = STATISTIC_LABELS[s.statistic] ?? s.statistic;
    out.push(
      text(x0 + 10, yy, `${label}: slope ${s.fit.slope.toFixed(3)}`, {
        'font-size': 12,
        class: `legend-${s.statistic}`,
      }),
    );
  });
  const yy = y0 + series.length * lineHeight;
  out.push(
    polyline(
      [
        [x0 - 5, yy - 4],
        [x0 + 5, yy - 4],
      ],
      { stroke: '#888888', 'stroke-dasharray': '6 4', 'stroke-width': 1.2 },
    ),
  );
  out.push(
    text(x0 + 10, yy, `reference slope ${referenceSlope}`, { 'font-size': 12 }),
  );
  return out;
}
