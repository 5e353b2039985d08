export { parseCsv, requireColumns, numericColumn } from "./csv.js";
export type { Table } from "./csv.js";
export { render, renderPaths, renderSmseSlope, renderPairedPaths } from "./figures.js";
export type { FigureKind, FigureSpec } from "./figures.js";
