/** Bundle-to-SVG dispatch. */

import { parseCsv } from "./csv";
import { SchemaMismatchError } from "./errors";
import { renderMultiArms } from "./multiArms";
import { renderSensitivity } from "./sensitivity";
import {
  detectFigure,
  FigureName,
  MULTI_ARMS_COLUMNS,
  requireSchema,
  SENSITIVITY_COLUMNS,
} from "./schema";

export interface Rendered {
  figure: FigureName;
  svg: string;
}

/**
 * Render a bundle to SVG text. `figure` pins the expected schema; when
 * omitted the header decides (and must match exactly one schema).
 */
export function renderBundle(text: string, figure?: FigureName): Rendered {
  const table = parseCsv(text);
  let resolved: FigureName;
  if (figure !== undefined) {
    requireSchema(table.header, figure);
    resolved = figure;
  } else {
    const detected = detectFigure(table.header);
    if (detected === null) {
      // report against the closer schema so the diff is useful
      const expected =
        table.header[0] === "series" ? MULTI_ARMS_COLUMNS : SENSITIVITY_COLUMNS;
      throw new SchemaMismatchError(
        table.header[0] === "series" ? "multi_arms" : "sensitivity",
        expected,
        table.header,
      );
    }
    resolved = detected;
  }
  const svg = resolved === "multi_arms" ? renderMultiArms(table) : renderSensitivity(table);
  return { figure: resolved, svg };
}
