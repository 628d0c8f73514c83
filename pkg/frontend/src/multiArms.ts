/** Total-utility-vs-horizon figure: mean lines, IQR bands, benchmark lines.
 *
 * All statistics arrive precomputed in the bundle; this module only maps
 * them to coordinates.
 */

import { numericCell, Table } from "./csv";
import { BundleDataError } from "./errors";
import { MULTI_ARMS_SERIES } from "./schema";
import * as svg from "./svg";

interface SeriesPoint {
  T: number;
  mean: number;
  q1: number;
  q3: number;
}

type SeriesName = (typeof MULTI_ARMS_SERIES)[number];

const WIDTH = 720;
const HEIGHT = 460;
const MARGIN = { top: 42, right: 24, bottom: 52, left: 76 };

/** Paired line/band colors; the benchmark lines are black by design. */
const STYLE: Record<SeriesName, { color: string; label: string; dash?: string }> = {
  alg: { color: "#1f77b4", label: "adaptive policy" },
  best_fixed: { color: "#ff7f0e", label: "best fixed source" },
  greedy: { color: "#2ca02c", label: "greedy baseline" },
  opt: { color: "#000000", label: "benchmark rate" },
  static_opt: { color: "#000000", label: "static benchmark rate", dash: "6 4" },
};

const BAND_SERIES: SeriesName[] = ["alg", "best_fixed", "greedy"];
const LINE_SERIES: SeriesName[] = ["opt", "static_opt"];

export function parseMultiArms(table: Table): Map<SeriesName, SeriesPoint[]> {
  const known = new Set<string>(MULTI_ARMS_SERIES);
  const bySeries = new Map<SeriesName, SeriesPoint[]>();
  table.rows.forEach((row, i) => {
    const line = table.lineNo[i]!;
    const series = row[0]!;
    if (!known.has(series)) {
      throw new BundleDataError(`unknown series ${JSON.stringify(series)}`, line);
    }
    const T = numericCell(row[1]!, "T", line);
    if (!Number.isInteger(T) || T <= 0) {
      throw new BundleDataError(`T must be a positive integer, got ${row[1]}`, line);
    }
    const point: SeriesPoint = {
      T,
      mean: numericCell(row[2]!, "mean", line),
      q1: numericCell(row[3]!, "q1", line),
      q3: numericCell(row[4]!, "q3", line),
    };
    const name = series as SeriesName;
    const list = bySeries.get(name) ?? [];
    list.push(point);
    bySeries.set(name, list);
  });
  for (const name of MULTI_ARMS_SERIES) {
    const list = bySeries.get(name);
    if (!list || list.length === 0) {
      throw new BundleDataError(`series ${JSON.stringify(name)} has no rows`);
    }
    list.sort((a, b) => a.T - b.T);
    for (let i = 1; i < list.length; i++) {
      if (list[i]!.T === list[i - 1]!.T) {
        throw new BundleDataError(`series ${name}: duplicate horizon T=${list[i]!.T}`);
      }
    }
  }
  return bySeries;
}

export function renderMultiArms(table: Table): string {
  const data = parseMultiArms(table);

  let tMin = Infinity;
  let tMax = -Infinity;
  let vMin = Infinity;
  let vMax = -Infinity;
  for (const points of data.values()) {
    for (const pt of points) {
      tMin = Math.min(tMin, pt.T);
      tMax = Math.max(tMax, pt.T);
      vMin = Math.min(vMin, pt.mean, pt.q1, pt.q3);
      vMax = Math.max(vMax, pt.mean, pt.q1, pt.q3);
    }
  }
  const pad = (vMax - vMin || 1) * 0.06;
  vMin -= pad;
  vMax += pad;

  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const logMin = Math.log10(tMin);
  const logSpan = Math.log10(tMax) - logMin || 1;
  const x = (t: number) => MARGIN.left + ((Math.log10(t) - logMin) / logSpan) * innerW;
  const y = (v: number) => MARGIN.top + (1 - (v - vMin) / (vMax - vMin)) * innerH;

  const body: string[] = [];
  body.push(
    svg.textEl(WIDTH / 2, 22, "Total utility vs horizon", {
      anchor: "middle",
      size: 15,
      bold: true,
    }),
  );

  // gridlines + y axis
  for (const tick of svg.niceTicks(vMin, vMax)) {
    const ty = y(tick);
    body.push(svg.line(MARGIN.left, ty, WIDTH - MARGIN.right, ty, "#e5e5e5"));
    body.push(svg.textEl(MARGIN.left - 8, ty + 4, svg.label(tick), { anchor: "end" }));
  }
  // x axis ticks at the horizons present in the bundle
  const horizons = [...new Set([...data.values()].flat().map((p) => p.T))].sort(
    (a, b) => a - b,
  );
  for (const t of horizons) {
    const tx = x(t);
    body.push(svg.line(tx, HEIGHT - MARGIN.bottom, tx, HEIGHT - MARGIN.bottom + 5, "#222"));
    body.push(
      svg.textEl(tx, HEIGHT - MARGIN.bottom + 18, svg.compactInt(t), { anchor: "middle" }),
    );
  }
  body.push(
    svg.line(MARGIN.left, HEIGHT - MARGIN.bottom, WIDTH - MARGIN.right, HEIGHT - MARGIN.bottom, "#222"),
  );
  body.push(svg.line(MARGIN.left, MARGIN.top, MARGIN.left, HEIGHT - MARGIN.bottom, "#222"));
  body.push(
    svg.textEl(WIDTH / 2, HEIGHT - 14, "horizon T (log scale)", { anchor: "middle", size: 12 }),
  );
  body.push(
    svg.textEl(20, HEIGHT / 2, "total utility", {
      anchor: "middle",
      size: 12,
      rotate: { cx: 20, cy: HEIGHT / 2, deg: -90 },
    }),
  );

  // interquartile bands first, so every line draws on top of them
  for (const name of BAND_SERIES) {
    const points = data.get(name)!;
    if (points.length < 2) continue;
    const upper: Array<[number, number]> = points.map((p) => [x(p.T), y(p.q3)]);
    const lower: Array<[number, number]> = [...points]
      .reverse()
      .map((p) => [x(p.T), y(p.q1)]);
    body.push(svg.polygon([...upper, ...lower], STYLE[name].color, 0.15));
  }
  for (const name of LINE_SERIES) {
    const points = data.get(name)!;
    const style = STYLE[name];
    body.push(
      `<g stroke-dasharray="${style.dash ?? "none"}">` +
        svg.polyline(points.map((p) => [x(p.T), y(p.mean)]), style.color, 1.5) +
        "</g>",
    );
  }
  for (const name of BAND_SERIES) {
    const points = data.get(name)!;
    body.push(svg.polyline(points.map((p) => [x(p.T), y(p.mean)]), STYLE[name].color, 2));
  }

  // legend, top-left inside the plot area
  const legendX = MARGIN.left + 12;
  let legendY = MARGIN.top + 14;
  for (const name of [...BAND_SERIES, ...LINE_SERIES]) {
    const style = STYLE[name];
    body.push(
      `<g stroke-dasharray="${style.dash ?? "none"}">` +
        svg.line(legendX, legendY - 4, legendX + 26, legendY - 4, style.color, 2) +
        "</g>",
    );
    body.push(svg.textEl(legendX + 34, legendY, style.label));
    legendY += 16;
  }

  return svg.document(WIDTH, HEIGHT, body);
}
