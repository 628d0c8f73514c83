/** The two documented bundle schemas and header validation. */

import { SchemaMismatchError } from "./errors";

export const MULTI_ARMS_COLUMNS = ["series", "T", "mean", "q1", "q3"] as const;

export const SENSITIVITY_COLUMNS = [
  "r",
  "p",
  "rate",
  "pi_star",
  "lam_star",
  "gap",
  "p_pos_given_alloc",
  "fairness_utility_ratio",
  "info_cost_utility_ratio",
  "instance",
] as const;

export const MULTI_ARMS_SERIES = [
  "alg",
  "best_fixed",
  "greedy",
  "opt",
  "static_opt",
] as const;

export type FigureName = "multi_arms" | "sensitivity";

const SCHEMAS: Record<FigureName, readonly string[]> = {
  multi_arms: MULTI_ARMS_COLUMNS,
  sensitivity: SENSITIVITY_COLUMNS,
};

function matches(header: readonly string[], expected: readonly string[]): boolean {
  return (
    header.length === expected.length &&
    header.every((col, i) => col === expected[i])
  );
}

/** Which figure this header belongs to, or null if it matches neither. */
export function detectFigure(header: readonly string[]): FigureName | null {
  for (const name of Object.keys(SCHEMAS) as FigureName[]) {
    if (matches(header, SCHEMAS[name])) return name;
  }
  return null;
}

/** Assert the header matches `figure`'s schema (throws with a column diff). */
export function requireSchema(header: readonly string[], figure: FigureName): void {
  const expected = SCHEMAS[figure];
  if (!matches(header, expected)) {
    throw new SchemaMismatchError(figure, expected, header);
  }
}
