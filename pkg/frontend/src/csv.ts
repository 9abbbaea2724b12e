/**
 * Reader for the study CSV files written by the stochstokes command line
 * tool.  The files are plain comma-separated text with two leading comment
 * lines pinning the seed and the configuration hash:
 *
 *     # seed = 12345
 *     # config = sha256:...
 *     study,k,h,n_p,statistic,value,ci_low,ci_high,seed
 *     temporal,0.125,0.0625,200,au,0.0019,...,...,12345
 *     ...
 *     temporal/au,,,200,slope,0.473,,,12345
 *
 * Level rows carry one error statistic per (k, h) level; rate rows (empty
 * k and h fields, study qualified as "study/statistic") carry the fitted
 * slope, intercept, and residual.  Rate values keep their verbatim text so
 * downstream consumers can reuse the file's numbers bit for bit.
 */

export const CSV_COLUMNS = [
  'study',
  'k',
  'h',
  'n_p',
  'statistic',
  'value',
  'ci_low',
  'ci_high',
  'seed',
] as const;

export const LEVEL_STATISTICS = ['au', 'bu', 'ap', 'bp'] as const;
export type LevelStatistic = (typeof LEVEL_STATISTICS)[number];

export interface LevelRow {
  study: string;
  k: number;
  h: number;
  nP: number;
  statistic: string;
  value: number;
  ciLow: number;
  ciHigh: number;
  seed: string;
}

export interface RateRow {
  study: string;
  nP: number;
  statistic: string;
  value: number;
  /** Verbatim value field from the file. */
  raw: string;
  seed: string;
}

export interface StudyCsv {
  seed: string | null;
  configHash: string | null;
  levels: LevelRow[];
  rates: RateRow[];
}

export interface RateFit {
  slope: number;
  slopeRaw: string;
  intercept: number;
  residual: number;
}

function parseNumber(text: string, where: string): number {
  const value = Number(text);
  if (text.trim() === '' || Number.isNaN(value)) {
    throw new Error(`cannot parse number '${text}' in ${where}`);
  }
  return value;
}

export function parseStudyCsv(text: string): StudyCsv {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  let seed: string | null = null;
  let configHash: string | null = null;
  let headerIndex = -1;
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line.startsWith('#')) {
      const seedMatch = line.match(/^#\s*seed\s*=\s*(.+)$/);
      if (seedMatch) seed = seedMatch[1].trim();
      const configMatch = line.match(/^#\s*config\s*=\s*(.+)$/);
      if (configMatch) configHash = configMatch[1].trim();
      continue;
    }
    headerIndex = i;
    break;
  }
  if (headerIndex < 0) {
    throw new Error('CSV has no header row');
  }
  const header = lines[headerIndex].split(',').map((c) => c.trim());
  const missing = CSV_COLUMNS.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new Error(`CSV header is missing columns: ${missing.join(', ')}`);
  }
  const col = new Map(header.map((name, i) => [name, i]));
  const field = (cells: string[], name: string): string =>
    cells[col.get(name)!] ?? '';

  const levels: LevelRow[] = [];
  const rates: RateRow[] = [];
  for (let i = headerIndex + 1; i < lines.length; i++) {
    const cells = lines[i].split(',');
    if (cells.length < header.length) {
      throw new Error(
        `row ${i + 1} has ${cells.length} fields, expected ${header.length}`,
      );
    }
    const where = `row ${i + 1}`;
    const kText = field(cells, 'k');
    if (kText.trim() === '') {
      rates.push({
        study: field(cells, 'study'),
        nP: parseNumber(field(cells, 'n_p'), where),
        statistic: field(cells, 'statistic'),
        value: parseNumber(field(cells, 'value'), where),
        raw: field(cells, 'value'),
        seed: field(cells, 'seed'),
      });
    } else {
      levels.push({
        study: field(cells, 'study'),
        k: parseNumber(kText, where),
        h: parseNumber(field(cells, 'h'), where),
        nP: parseNumber(field(cells, 'n_p'), where),
        statistic: field(cells, 'statistic'),
        value: parseNumber(field(cells, 'value'), where),
        ciLow: parseNumber(field(cells, 'ci_low'), where),
        ciHigh: parseNumber(field(cells, 'ci_high'), where),
        seed: field(cells, 'seed'),
      });
    }
  }
  return { seed, configHash, levels, rates };
}

/** Level rows of one statistic, in file order (coarse to fine for the
 * studies the tool writes). */
export function levelSeries(csv: StudyCsv, statistic: string): LevelRow[] {
  const rows = csv.levels.filter((row) => row.statistic === statistic);
  if (rows.length === 0) {
    const present = [...new Set(csv.levels.map((row) => row.statistic))];
    throw new Error(
      `no level rows for statistic '${statistic}' ` +
        `(file has: ${present.join(', ') || 'none'})`,
    );
  }
  return rows;
}

/** The study name shared by all level rows, e.g. "temporal". */
export function studyName(csv: StudyCsv): string {
  const names = [...new Set(csv.levels.map((row) => row.study))];
  if (names.length !== 1) {
    throw new Error(
      `expected level rows from exactly one study, found: ${names.join(', ')}`,
    );
  }
  return names[0];
}

/** The slope/intercept/residual rows for "study/statistic", with the slope's
 * verbatim file text preserved. */
export function rateFit(
  csv: StudyCsv,
  study: string,
  statistic: string,
): RateFit {
  const qualified = `${study}/${statistic}`;
  const rows = csv.rates.filter((row) => row.study === qualified);
  if (rows.length === 0) {
    const present = [...new Set(csv.rates.map((row) => row.study))];
    throw new Error(
      `no rate rows for '${qualified}' ` +
        `(file has: ${present.join(', ') || 'none'})`,
    );
  }
  const byName = new Map(rows.map((row) => [row.statistic, row]));
  for (const need of ['slope', 'intercept', 'residual']) {
    if (!byName.has(need)) {
      throw new Error(`rate rows for '${qualified}' are missing '${need}'`);
    }
  }
  return {
    slope: byName.get('slope')!.value,
    slopeRaw: byName.get('slope')!.raw,
    intercept: byName.get('intercept')!.value,
    residual: byName.get('residual')!.value,
  };
}
