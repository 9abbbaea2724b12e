import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { fileURLToPath } from 'node:url';

import { afterEach, describe, expect, it, vi } from 'vitest';

import { parseStudyCsv } from '../src/csv.js';
import { plotRates } from '../src/rates.js';

const FIXTURES = fileURLToPath(new URL('./fixtures', import.meta.url));

function loadFixture(name: string) {
  return readFileSync(join(FIXTURES, name), 'utf8');
}

afterEach(() => {
  vi.restoreAllMocks();
});

describe('rate plots', () => {
  it('renders the exact sqrt-k study with legend slope 0.500', () => {
    vi.spyOn(console, 'error').mockImplementation(() => {});
    const text = loadFixture('synthetic_sqrtk.csv');
    const csv = parseStudyCsv(text);
    const plot = plotRates(csv, { statistics: ['au'] });
    expect(plot.svg).toContain('slope 0.500');
    expect(plot.svg).toContain('reference slope 0.5');
  });

  it('displays the slope from the file bit for bit', () => {
    vi.spyOn(console, 'error').mockImplementation(() => {});
    const text = loadFixture('synthetic_sqrtk.csv');
    const csv = parseStudyCsv(text);
    const plot = plotRates(csv, { statistics: ['au'] });
    const slopeRow = csv.rates.find(
      (r) => r.study === 'temporal/au' && r.statistic === 'slope',
    )!;
    // The plotted slope is the parsed file value, not a refit.
    expect(Object.is(plot.series[0].fit.slope, slopeRow.value)).toBe(true);
    expect(plot.series[0].fit.slopeRaw).toBe(slopeRow.raw);
    // The file's verbatim text appears in the raw CSV exactly once per row.
    expect(text).toContain(`slope,${slopeRow.raw},`);
    // And the legend rounds that same number to three decimals.
    expect(plot.svg).toContain(`slope ${slopeRow.value.toFixed(3)}`);
  });

  it('anchors the reference line at the first data point', () => {
    vi.spyOn(console, 'error').mockImplementation(() => {});
    const csv = parseStudyCsv(loadFixture('synthetic_sqrtk.csv'));
    const plot = plotRates(csv);
    const first = csv.levels.find((r) => r.statistic === 'au')!;
    expect(plot.referencePoint.k).toBe(first.k);
    expect(plot.referencePoint.value).toBe(first.value);
  });

  it('prints the refit cross-check to stderr and stays within 1e-12', () => {
    const calls: string[] = [];
    vi.spyOn(console, 'error').mockImplementation((msg: string) => {
      calls.push(String(msg));
    });
    const csv = parseStudyCsv(loadFixture('synthetic_sqrtk.csv'));
    const plot = plotRates(csv, { statistics: ['au'] });
    expect(calls.some((c) => c.includes('cross-check temporal/au'))).toBe(true);
    expect(plot.series[0].crossCheck.deviation).toBeLessThan(1e-12);
  });

  it('rejects single-level input', () => {
    const single = `# seed = 1
# config = sha256:00
study,k,h,n_p,statistic,value,ci_low,ci_high,seed
temporal,0.125,0.0625,1,au,0.25,0.2,0.3,1
temporal/au,,,1,slope,0.5,,,1
temporal/au,,,1,intercept,0.0,,,1
temporal/au,,,1,residual,0.0,,,1
`;
    expect(() => plotRates(parseStudyCsv(single))).toThrow(
      /has 1 level\(s\); need at least 2/,
    );
  });

  it('renders a real temporal study with several statistics', () => {
    vi.spyOn(console, 'error').mockImplementation(() => {});
    const csv = parseStudyCsv(loadFixture('temporal_small.csv'));
    const plot = plotRates(csv, { statistics: ['au', 'ap'] });
    expect(plot.series).toHaveLength(2);
    expect(plot.svg).toContain('class="marker-au"');
    expect(plot.svg).toContain('class="marker-ap"');
    expect(plot.svg).toContain('class="reference-line"');
    expect(plot.svg).toContain('class="fit-line"');
    for (const s of plot.series) {
      expect(Number.isFinite(s.fit.slope)).toBe(true);
    }
  });
});
