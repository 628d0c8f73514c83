#!/usr/bin/env node
/** fig-render --bundle <csv> --out <svg> [--figure multi_arms|sensitivity]
 *
 * Renders an experiment bundle to a self-contained SVG. The output file is
 * written only after rendering fully succeeds, so a schema violation never
 * leaves a partial or stale-looking artifact behind. Exit codes: 0 success,
 * 1 unexpected failure, 2 bad usage / unreadable bundle / schema mismatch.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { BundleDataError, CsvError, SchemaMismatchError } from "./errors";
import { renderBundle } from "./render";
import { FigureName } from "./schema";

const USAGE =
  "usage: fig-render --bundle <bundle.csv> --out <figure.svg> [--figure multi_arms|sensitivity]";

interface Args {
  bundle: string;
  out: string;
  figure?: FigureName;
}

export function parseArgs(argv: string[]): Args {
  let bundle: string | undefined;
  let out: string | undefined;
  let figure: FigureName | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i]!;
    const next = () => {
      const v = argv[++i];
      if (v === undefined) throw new UsageError(`${arg} needs a value`);
      return v;
    };
    if (arg === "--bundle") bundle = next();
    else if (arg === "--out") out = next();
    else if (arg === "--figure") {
      const v = next();
      if (v !== "multi_arms" && v !== "sensitivity") {
        throw new UsageError(`unknown figure ${JSON.stringify(v)}`);
      }
      figure = v;
    } else if (arg === "--help" || arg === "-h") throw new HelpRequested();
    else throw new UsageError(`unknown argument ${JSON.stringify(arg)}`);
  }
  if (!bundle || !out) throw new UsageError("--bundle and --out are required");
  return { bundle, out, figure };
}

class UsageError extends Error {}
class HelpRequested extends Error {}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof HelpRequested) {
      process.stdout.write(USAGE + "\n");
      return 0;
    }
    process.stderr.write(`${(err as Error).message}\n${USAGE}\n`);
    return 2;
  }
  let text: string;
  try {
    text = fs.readFileSync(args.bundle, "utf8");
  } catch (err) {
    process.stderr.write(`cannot read bundle: ${(err as Error).message}\n`);
    return 2;
  }
  try {
    const { svg, figure } = renderBundle(text, args.figure);
    fs.mkdirSync(path.dirname(path.resolve(args.out)), { recursive: true });
    fs.writeFileSync(args.out, svg);
    process.stdout.write(`${figure} -> ${args.out}\n`);
    return 0;
  } catch (err) {
    if (
      err instanceof SchemaMismatchError ||
      err instanceof CsvError ||
      err instanceof BundleDataError
    ) {
      process.stderr.write(`${err.message}\n`);
      return 2;
    }
    process.stderr.write(`render failed: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
