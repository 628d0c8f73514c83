/** Error taxonomy: schema problems exit 2 at the CLI, everything else 1. */

/** The bundle's header row does not match the documented schema. */
export class SchemaMismatchError extends Error {
  constructor(
    readonly figure: string,
    readonly expected: readonly string[],
    readonly got: readonly string[],
  ) {
    super(
      `bundle does not match the ${figure} schema\n${columnDiff(expected, got)}`,
    );
    this.name = "SchemaMismatchError";
  }
}

/** The header matched but a data row is unusable. */
export class BundleDataError extends Error {
  constructor(message: string, readonly line?: number) {
    super(line === undefined ? message : `line ${line}: ${message}`);
    this.name = "BundleDataError";
  }
}

/** Raw CSV structure problems (field counts, empty input). */
export class CsvError extends Error {
  constructor(message: string, readonly line?: number) {
    super(line === undefined ? message : `line ${line}: ${message}`);
    this.name = "CsvError";
  }
}

/** Human-readable column diff for schema mismatch messages. */
export function columnDiff(
  expected: readonly string[],
  got: readonly string[],
): string {
  const exp = new Set(expected);
  const have = new Set(got);
  const missing = expected.filter((c) => !have.has(c));
  const unexpected = got.filter((c) => !exp.has(c));
  const parts = [
    `  expected: ${expected.join(",")}`,
    `  got:      ${got.join(",")}`,
  ];
  if (missing.length > 0) parts.push(`  missing:    ${missing.join(", ")}`);
  if (unexpected.length > 0)
    parts.push(`  unexpected: ${unexpected.join(", ")}`);
  if (missing.length === 0 && unexpected.length === 0)
    parts.push("  (same columns, wrong order)");
  return parts.join("\n");
}
