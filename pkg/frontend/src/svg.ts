/** Minimal SVG string building: element helpers, linear/log scales, and a
 * small color ramp.  No DOM, no dependencies; plots are assembled as plain
 * markup so tests can inspect the output textually. */

export type Attrs = Record<string, string | number>;

export function escapeText(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;');
}

export function tag(name: string, attrs: Attrs, children?: string[]): string {
  const parts = Object.entries(attrs).map(
    ([key, value]) => `${key}="${typeof value === 'number' ? fmt(value) : value}"`,
  );
  const open = parts.length > 0 ? `<${name} ${parts.join(' ')}` : `<${name}`;
  if (children === undefined || children.length === 0) {
    return `${open}/>`;
  }
  return `${open}>${children.join('')}</${name}>`;
}

export function text(x: number, y: number, content: string, attrs: Attrs = {}): string {
  return tag('text', { x, y, ...attrs }, [escapeText(content)]);
}

/** Coordinates rounded to 0.01 px keep files small and diffs stable. */
export function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`non-finite coordinate in SVG output: ${value}`);
  }
  const rounded = Math.round(value * 100) / 100;
  return String(rounded);
}

export function svgDocument(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    ...body,
    '</svg>',
    '',
  ].join('\n');
}

export function polyline(points: Array<[number, number]>, attrs: Attrs): string {
  const coords = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(' ');
  return tag('polyline', { points: coords, fill: 'none', ...attrs });
}

export function polygon(points: Array<[number, number]>, attrs: Attrs): string {
  const coords = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(' ');
  return tag('polygon', { points: coords, ...attrs });
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  if (span === 0) {
    throw new Error('degenerate scale domain');
  }
  const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const inner = linearScale([Math.log10(domain[0]), Math.log10(domain[1])], range);
  const scale = ((value: number) => inner(Math.log10(value))) as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

/** Decade ticks (powers of ten) covering [lo, hi]; if fewer than two fall
 * inside, falls back to 1-2-5 mantissa ticks so short ranges still get
 * readable axes. */
export function logTicks(lo: number, hi: number): number[] {
  const e0 = Math.ceil(Math.log10(lo) - 1e-9);
  const e1 = Math.floor(Math.log10(hi) + 1e-9);
  const decades: number[] = [];
  for (let e = e0; e <= e1; e++) decades.push(10 ** e);
  if (decades.length >= 2) return decades;
  const ticks: number[] = [];
  for (let e = Math.floor(Math.log10(lo)); e <= Math.ceil(Math.log10(hi)); e++) {
    for (const m of [1, 2, 5]) {
      const v = m * 10 ** e;
      if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) ticks.push(v);
    }
  }
  return ticks;
}

export function tickLabel(value: number): string {
  const e = Math.log10(value);
  if (Number.isInteger(e) && (e < -3 || e > 3)) return `1e${e}`;
  return value.toPrecision(3).replace(/\.?0+$/, '').replace(/\.?0+e/, 'e');
}

/** Piecewise-linear ramp through dark blue, teal, yellow; t in [0, 1]. */
export function sequentialColor(t: number): string {
  const stops: Array<[number, [number, number, number]]> = [
    [0.0, [68, 1, 84]],
    [0.33, [49, 104, 142]],
    [0.66, [53, 183, 121]],
    [1.0, [253, 231, 37]],
  ];
  return rampColor(Math.min(1, Math.max(0, t)), stops);
}

/** Blue through white to red, for signed fields like pressure; t in [0, 1]
 * with 0.5 at zero. */
export function divergingColor(t: number): string {
  const stops: Array<[number, [number, number, number]]> = [
    [0.0, [33, 102, 172]],
    [0.5, [247, 247, 247]],
    [1.0, [178, 24, 43]],
  ];
  return rampColor(Math.min(1, Math.max(0, t)), stops);
}

function rampColor(
  t: number,
  stops: Array<[number, [number, number, number]]>,
): string {
  for (let i = 1; i < stops.length; i++) {
    const [t1, c1] = stops[i];
    if (t <= t1) {
      const [t0, c0] = stops[i - 1];
      const s = t1 === t0 ? 0 : (t - t0) / (t1 - t0);
      const rgb = c0.map((a, j) => Math.round(a + s * (c1[j] - a)));
      return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
    }
  }
  const last = stops[stops.length - 1][1];
  return `rgb(${last[0]},${last[1]},${last[2]})`;
}
