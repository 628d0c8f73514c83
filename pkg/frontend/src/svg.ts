/** SVG string assembly: fixed-precision numbers so output bytes are stable. */

/** Coordinate with two decimals; "-0.00" is normalized to "0.00". */
export function px(value: number): string {
  const s = value.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

/** Short value label (three significant digits, no exponent for small spans). */
export function label(value: number): string {
  if (Number.isNaN(value)) return "n/a";
  if (value === 0) return "0";
  const formatted = Number(value.toPrecision(3));
  return String(formatted);
}

/** Compact axis label for horizons: 1000 -> "1k", 31623 -> "31.6k". */
export function compactInt(value: number): string {
  if (Math.abs(value) >= 1_000_000)
    return `${label(value / 1_000_000)}M`;
  if (Math.abs(value) >= 1000) return `${label(value / 1000)}k`;
  return String(value);
}

export function escapeText(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export interface TextOptions {
  anchor?: "start" | "middle" | "end";
  size?: number;
  fill?: string;
  bold?: boolean;
  rotate?: { cx: number; cy: number; deg: number };
}

export function textEl(x: number, y: number, content: string, opts: TextOptions = {}): string {
  const attrs = [
    `x="${px(x)}"`,
    `y="${px(y)}"`,
    `font-size="${opts.size ?? 11}"`,
    `fill="${opts.fill ?? "#222"}"`,
  ];
  if (opts.anchor) attrs.push(`text-anchor="${opts.anchor}"`);
  if (opts.bold) attrs.push('font-weight="bold"');
  if (opts.rotate)
    attrs.push(
      `transform="rotate(${opts.rotate.deg} ${px(opts.rotate.cx)} ${px(opts.rotate.cy)})"`,
    );
  return `<text ${attrs.join(" ")}>${escapeText(content)}</text>`;
}

export function line(
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  stroke: string,
  width = 1,
  dash?: string,
): string {
  const d = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<line x1="${px(x1)}" y1="${px(y1)}" x2="${px(x2)}" y2="${px(y2)}" stroke="${stroke}" stroke-width="${width}"${d}/>`;
}

export function polyline(points: Array<[number, number]>, stroke: string, width = 2): string {
  const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
  return `<polyline points="${pts}" fill="none" stroke="${stroke}" stroke-width="${width}" stroke-linejoin="round"/>`;
}

export function polygon(points: Array<[number, number]>, fill: string, opacity: number): string {
  const pts = points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
  return `<polygon points="${pts}" fill="${fill}" fill-opacity="${opacity}" stroke="none"/>`;
}

export function rect(
  x: number,
  y: number,
  w: number,
  h: number,
  fill: string,
  stroke?: string,
): string {
  const s = stroke ? ` stroke="${stroke}" stroke-width="0.5"` : "";
  return `<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(h)}" fill="${fill}"${s}/>`;
}

export function document(width: number, height: number, body: string[]): string {
  return [
    '<?xml version="1.0" encoding="UTF-8"?>',
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="sans-serif">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

/** Tick positions at a "nice" step (1/2/5 x 10^k), covering [lo, hi]. */
export function niceTicks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const rough = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  let step = mag;
  for (const mult of [1, 2, 5, 10]) {
    if (mag * mult >= rough) {
      step = mag * mult;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

const COLOR_STOPS: Array<[number, number, number]> = [
  [0x44, 0x01, 0x54],
  [0x3b, 0x52, 0x8b],
  [0x21, 0x91, 0x8c],
  [0x5e, 0xc9, 0x62],
  [0xfd, 0xe7, 0x25],
];

/** Dark-to-bright sequential colormap on t in [0, 1]. */
export function heatColor(t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (COLOR_STOPS.length - 1);
  const i = Math.min(COLOR_STOPS.length - 2, Math.floor(pos));
  const frac = pos - i;
  const a = COLOR_STOPS[i]!;
  const b = COLOR_STOPS[i + 1]!;
  const mix = (j: 0 | 1 | 2) => Math.round(a[j] + (b[j] - a[j]) * frac);
  return rgbHex(mix(0), mix(1), mix(2));
}

export function colorStops(): ReadonlyArray<[number, number, number]> {
  return COLOR_STOPS;
}

/** Readable text color against a #rrggbb background. */
export function contrastColor(hex: string): string {
  const r = parseInt(hex.slice(1, 3), 16);
  const g = parseInt(hex.slice(3, 5), 16);
  const b = parseInt(hex.slice(5, 7), 16);
  const luminance = (0.299 * r + 0.587 * g + 0.114 * b) / 255;
  return luminance > 0.55 ? "#111111" : "#ffffff";
}

function rgbHex(r: number, g: number, b: number): string {
  const h = (v: number) => v.toString(16).padStart(2, "0");
  return `#${h(r)}${h(g)}${h(b)}`;
}
