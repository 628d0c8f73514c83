/** Sensitivity figure: a 2x2 grid of heat maps over the (r, p) sweep. */

import { numericCell, Table } from "./csv";
import { BundleDataError } from "./errors";
import * as svg from "./svg";

interface Cell {
  r: number;
  p: number;
  values: Record<QuantityKey, number>;
}

type QuantityKey =
  | "pi_star"
  | "p_pos_given_alloc"
  | "fairness_utility_ratio"
  | "info_cost_utility_ratio";

const PANELS: Array<{ key: QuantityKey; title: string }> = [
  { key: "pi_star", title: "pair-purchase weight" },
  { key: "p_pos_given_alloc", title: "P(a=+1 | allocated)" },
  { key: "fairness_utility_ratio", title: "fairness / utility" },
  { key: "info_cost_utility_ratio", title: "info cost / utility" },
];

/** Column index per quantity in the sensitivity schema. */
const COLUMN: Record<QuantityKey, number> = {
  pi_star: 3,
  p_pos_given_alloc: 6,
  fairness_utility_ratio: 7,
  info_cost_utility_ratio: 8,
};

const CELL_W = 78;
const CELL_H = 46;
const PANEL_GAP_X = 56;
const PANEL_GAP_Y = 74;
const MARGIN = { top: 54, left: 64, right: 28, bottom: 56 };

export function parseSensitivity(table: Table): {
  rs: number[];
  ps: number[];
  cells: Map<string, Cell>;
} {
  const cells = new Map<string, Cell>();
  table.rows.forEach((row, i) => {
    const line = table.lineNo[i]!;
    const r = numericCell(row[0]!, "r", line);
    const p = numericCell(row[1]!, "p", line);
    numericCell(row[2]!, "rate", line); // must be a finite number even if unplotted
    const cell: Cell = {
      r,
      p,
      values: {
        pi_star: numericCell(row[COLUMN.pi_star]!, "pi_star", line),
        p_pos_given_alloc: numericCell(row[COLUMN.p_pos_given_alloc]!, "p_pos_given_alloc", line, true),
        fairness_utility_ratio: numericCell(
          row[COLUMN.fairness_utility_ratio]!,
          "fairness_utility_ratio",
          line,
          true,
        ),
        info_cost_utility_ratio: numericCell(
          row[COLUMN.info_cost_utility_ratio]!,
          "info_cost_utility_ratio",
          line,
          true,
        ),
      },
    };
    const key = `${r}|${p}`;
    if (cells.has(key)) {
      throw new BundleDataError(`duplicate grid point r=${r} p=${p}`, line);
    }
    cells.set(key, cell);
  });
  if (cells.size === 0) throw new BundleDataError("sensitivity bundle has no rows");
  const rs = [...new Set([...cells.values()].map((c) => c.r))].sort((a, b) => a - b);
  const ps = [...new Set([...cells.values()].map((c) => c.p))].sort((a, b) => a - b);
  for (const r of rs) {
    for (const p of ps) {
      if (!cells.has(`${r}|${p}`)) {
        throw new BundleDataError(`grid point r=${r} p=${p} is missing`);
      }
    }
  }
  return { rs, ps, cells };
}

export function renderSensitivity(table: Table): string {
  const { rs, ps, cells } = parseSensitivity(table);
  const panelW = rs.length * CELL_W;
  const panelH = ps.length * CELL_H;
  const width = MARGIN.left + 2 * panelW + PANEL_GAP_X + MARGIN.right;
  const height = MARGIN.top + 2 * panelH + PANEL_GAP_Y + MARGIN.bottom;

  const body: string[] = [];
  const defs: string[] = [];
  body.push(
    svg.textEl(width / 2, 24, "Benchmark sensitivity over (r, p)", {
      anchor: "middle",
      size: 15,
      bold: true,
    }),
  );

  PANELS.forEach((panel, idx) => {
    const col = idx % 2;
    const row = Math.floor(idx / 2);
    const x0 = MARGIN.left + col * (panelW + PANEL_GAP_X);
    const y0 = MARGIN.top + row * (panelH + PANEL_GAP_Y);

    const values = [...cells.values()]
      .map((c) => c.values[panel.key])
      .filter((v) => !Number.isNaN(v));
    const lo = values.length > 0 ? Math.min(...values) : 0;
    const hi = values.length > 0 ? Math.max(...values) : 1;
    const span = hi - lo;
    const t = (v: number) => (span > 0 ? (v - lo) / span : 0.5);

    body.push(svg.textEl(x0 + panelW / 2, y0 - 10, panel.title, { anchor: "middle", size: 12, bold: true }));
    ps.forEach((p, pi) => {
      rs.forEach((r, ri) => {
        const cell = cells.get(`${r}|${p}`)!;
        const value = cell.values[panel.key];
        const cx = x0 + ri * CELL_W;
        // low p at the bottom row, like a conventional y axis
        const cy = y0 + (ps.length - 1 - pi) * CELL_H;
        const fill = Number.isNaN(value) ? "#cccccc" : svg.heatColor(t(value));
        body.push(svg.rect(cx, cy, CELL_W, CELL_H, fill, "#ffffff"));
        body.push(
          svg.textEl(cx + CELL_W / 2, cy + CELL_H / 2 + 4, svg.label(value), {
            anchor: "middle",
            fill: Number.isNaN(value) ? "#333333" : svg.contrastColor(fill),
            size: 11,
          }),
        );
      });
    });
    // axis tick labels
    rs.forEach((r, ri) => {
      body.push(
        svg.textEl(x0 + ri * CELL_W + CELL_W / 2, y0 + panelH + 14, svg.label(r), {
          anchor: "middle",
        }),
      );
    });
    ps.forEach((p, pi) => {
      const cy = y0 + (ps.length - 1 - pi) * CELL_H + CELL_H / 2 + 4;
      body.push(svg.textEl(x0 - 8, cy, svg.label(p), { anchor: "end" }));
    });
    body.push(
      svg.textEl(x0 + panelW / 2, y0 + panelH + 30, "penalty scale r", {
        anchor: "middle",
        size: 11,
      }),
    );
    body.push(
      svg.textEl(x0 - 44, y0 + panelH / 2, "price p", {
        anchor: "middle",
        size: 11,
        rotate: { cx: x0 - 44, cy: y0 + panelH / 2, deg: -90 },
      }),
    );

    // per-panel color scale
    const gradId = `grad-${idx}`;
    const stops = svg.colorStops();
    defs.push(
      `<linearGradient id="${gradId}" x1="0" y1="0" x2="1" y2="0">` +
        stops
          .map((rgb, i) => {
            const offset = ((100 * i) / (stops.length - 1)).toFixed(0);
            const hex = `#${rgb.map((v) => v.toString(16).padStart(2, "0")).join("")}`;
            return `<stop offset="${offset}%" stop-color="${hex}"/>`;
          })
          .join("") +
        "</linearGradient>",
    );
    const barY = y0 + panelH + 38;
    body.push(
      `<rect x="${svg.px(x0)}" y="${svg.px(barY)}" width="${svg.px(panelW)}" height="8" fill="url(#${gradId})"/>`,
    );
    body.push(svg.textEl(x0, barY + 19, svg.label(lo), { anchor: "start", size: 10 }));
    body.push(svg.textEl(x0 + panelW, barY + 19, svg.label(hi), { anchor: "end", size: 10 }));
  });

  body.unshift(`<defs>${defs.join("")}</defs>`);
  return svg.document(width, height, body);
}
