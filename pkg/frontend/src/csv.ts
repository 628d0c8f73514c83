/** Minimal strict CSV reader for the bundle formats.
 *
 * The bundles are machine-written: comma-separated, no quoting, no escaping,
 * one header row, uniform field counts. Anything else is rejected loudly
 * rather than guessed at.
 */

import { CsvError } from "./errors";

export interface Table {
  header: string[];
  /** Data rows, in file order; `lineNo[i]` is the 1-based source line. */
  rows: string[][];
  lineNo: number[];
}

export function parseCsv(text: string): Table {
  const lines = text.split("\n");
  // one trailing newline is fine; intermediate blank lines are not
  if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  if (lines.length === 0) throw new CsvError("empty file");
  const header = splitLine(lines[0]!, 1);
  const rows: string[][] = [];
  const lineNo: number[] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = splitLine(lines[i]!, i + 1);
    if (fields.length !== header.length) {
      throw new CsvError(
        `expected ${header.length} fields, got ${fields.length}`,
        i + 1,
      );
    }
    rows.push(fields);
    lineNo.push(i + 1);
  }
  return { header, rows, lineNo };
}

function splitLine(raw: string, line: number): string[] {
  const text = raw.endsWith("\r") ? raw.slice(0, -1) : raw;
  if (text === "") throw new CsvError("blank line", line);
  if (text.includes('"'))
    throw new CsvError("quoted fields are not part of the bundle format", line);
  return text.split(",");
}

/** Parse one numeric cell; `allowNaN` admits the literal "nan" (undefined cells). */
export function numericCell(
  value: string,
  column: string,
  line: number,
  allowNaN = false,
): number {
  if (allowNaN && value.toLowerCase() === "nan") return NaN;
  const parsed = Number(value);
  if (value.trim() === "" || Number.isNaN(parsed) || !Number.isFinite(parsed)) {
    throw new CsvError(`column ${column}: not a finite number: ${JSON.stringify(value)}`, line);
  }
  return parsed;
}
