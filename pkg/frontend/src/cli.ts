#!/usr/bin/env node
/** Command line entry: renders study CSVs and cavity VTK files to SVG.
 *
 *     stochstokes-plots plot-rates results/temporal.csv --stat au,ap --out rates.svg
 *     stochstokes-plots plot-cavity results/cavity_mean.vtk --out-dir plots
 */

import { mkdirSync, readFileSync, realpathSync, writeFileSync } from 'node:fs';
import { basename, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { TriangleField } from './field.js';
import { parseStudyCsv } from './csv.js';
import { plotRates } from './rates.js';
import { renderCavity } from './cavity.js';
import { parseVtk } from './vtk.js';

const USAGE = `usage:
  stochstokes-plots plot-rates <study.csv> [--stat au[,ap,...]] [--ref-slope S] [--out FILE.svg]
  stochstokes-plots plot-cavity <field.vtk> [more.vtk ...] [--out-dir DIR] [--seeds N]`;

interface Parsed {
  positional: string[];
  flags: Map<string, string>;
}

function parseArgs(argv: string[]): Parsed {
  const positional: string[] = [];
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg.startsWith('--')) {
      const value = argv[i + 1];
      if (value === undefined || value.startsWith('--')) {
        throw new Error(`flag ${arg} needs a value`);
      }
      flags.set(arg.slice(2), value);
      i++;
    } else {
      positional.push(arg);
    }
  }
  return { positional, flags };
}

function runPlotRates(args: Parsed): void {
  if (args.positional.length !== 1) {
    throw new Error('plot-rates takes exactly one CSV file');
  }
  const csvPath = args.positional[0];
  const statistics = (args.flags.get('stat') ?? 'au').split(',');
  const referenceSlope = Number(args.flags.get('ref-slope') ?? '0.5');
  if (Number.isNaN(referenceSlope)) {
    throw new Error(`cannot parse --ref-slope '${args.flags.get('ref-slope')}'`);
  }
  const outPath = args.flags.get('out') ?? 'rates.svg';
  const csv = parseStudyCsv(readFileSync(csvPath, 'utf8'));
  const plot = plotRates(csv, { statistics, referenceSlope });
  writeFileSync(outPath, plot.svg);
  for (const s of plot.series) {
    console.log(`${plot.study}/${s.statistic}: slope ${s.fit.slopeRaw}`);
  }
  console.log(outPath);
}

function runPlotCavity(args: Parsed): void {
  if (args.positional.length === 0) {
    throw new Error('plot-cavity needs at least one VTK file');
  }
  const outDir = args.flags.get('out-dir') ?? '.';
  const seeds = Number(args.flags.get('seeds') ?? '16');
  if (!Number.isInteger(seeds) || seeds < 1) {
    throw new Error(`--seeds must be a positive integer, got '${args.flags.get('seeds')}'`);
  }
  mkdirSync(outDir, { recursive: true });
  for (const vtkPath of args.positional) {
    const grid = parseVtk(readFileSync(vtkPath, 'utf8'));
    const field = new TriangleField(grid);
    const plots = renderCavity(field, { seeds, title: grid.title });
    const stem = basename(vtkPath).replace(/\.vtk$/i, '');
    for (const [suffix, svg] of [
      ['pressure', plots.pressure],
      ['velocity', plots.velocity],
      ['streamlines', plots.streamlines],
    ] as const) {
      const outPath = join(outDir, `${stem}_${suffix}.svg`);
      writeFileSync(outPath, svg);
      console.log(outPath);
    }
    console.log(
      `${stem}: interior curl integral ${plots.stats.curlInterior.toExponential(6)}, ` +
        `${plots.stats.closedStreamlines} closed of ${plots.stats.totalStreamlines} streamlines`,
    );
  }
}

export function main(argv: string[]): number {
  try {
    const [command, ...rest] = argv;
    if (command === 'plot-rates') {
      runPlotRates(parseArgs(rest));
    } else if (command === 'plot-cavity') {
      runPlotCavity(parseArgs(rest));
    } else {
      console.error(USAGE);
      return 2;
    }
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 2;
  }
}

function invokedDirectly(): boolean {
  if (process.argv[1] === undefined) return false;
  try {
    return realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  process.exit(main(process.argv.slice(2)));
}

