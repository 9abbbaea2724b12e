/** Least-squares line through (log x, log y), used only to cross-check the
 * fitted rates shipped inside the CSV files; the plots themselves always
 * display the file's numbers. */

export interface LogLogFit {
  slope: number;
  intercept: number;
  residual: number;
}

export function fitLogLog(xs: number[], ys: number[]): LogLogFit {
  if (xs.length !== ys.length) {
    throw new Error(`mismatched lengths: ${xs.length} vs ${ys.length}`);
  }
  if (xs.length < 2) {
    throw new Error(`need at least 2 points to fit, got ${xs.length}`);
  }
  for (const v of [...xs, ...ys]) {
    if (!(v > 0)) {
      throw new Error(`log-log fit needs positive data, got ${v}`);
    }
  }
  const lx = xs.map(Math.log);
  const ly = ys.map(Math.log);
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx === 0) {
    throw new Error('log-log fit needs at least two distinct x values');
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ss = 0;
  for (let i = 0; i < n; i++) {
    const r = ly[i] - (slope * lx[i] + intercept);
    ss += r * r;
  }
  return { slope, intercept, residual: Math.sqrt(ss / n) };
}
