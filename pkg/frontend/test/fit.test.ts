import { describe, expect, it } from 'vitest';

import { fitLogLog } from '../src/fit.js';

describe('log-log least squares', () => {
  it('recovers an exact power law', () => {
    const ks = [1 / 8, 1 / 16, 1 / 32, 1 / 64];
    const errors = ks.map((k) => 2 * Math.sqrt(k));
    const fit = fitLogLog(ks, errors);
    expect(fit.slope).toBeCloseTo(0.5, 12);
    expect(fit.intercept).toBeCloseTo(Math.log(2), 12);
    expect(fit.residual).toBeLessThan(1e-12);
  });

  it('is insensitive to point order', () => {
    const a = fitLogLog([0.1, 0.2, 0.4], [1, 2, 4]);
    const b = fitLogLog([0.4, 0.1, 0.2], [4, 1, 2]);
    expect(a.slope).toBeCloseTo(b.slope, 14);
  });

  it('rejects degenerate input', () => {
    expect(() => fitLogLog([1], [1])).toThrow(/at least 2 points/);
    expect(() => fitLogLog([1, 2], [1])).toThrow(/mismatched lengths/);
    expect(() => fitLogLog([1, 1], [1, 2])).toThrow(/distinct x values/);
    expect(() => fitLogLog([1, 2], [0, 1])).toThrow(/positive data/);
  });
});
