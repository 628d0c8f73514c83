export { parseCsv, numericCell } from "./csv";
export type { Table } from "./csv";
export { BundleDataError, CsvError, SchemaMismatchError, columnDiff } from "./errors";
export { renderBundle } from "./render";
export type { Rendered } from "./render";
export { renderMultiArms, parseMultiArms } from "./multiArms";
export { renderSensitivity, parseSensitivity } from "./sensitivity";
export {
  MULTI_ARMS_COLUMNS,
  MULTI_ARMS_SERIES,
  SENSITIVITY_COLUMNS,
  detectFigure,
  requireSchema,
} from "./schema";
export type { FigureName } from "./schema";
