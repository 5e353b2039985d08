import { parseCsv, requireColumns, numericColumn, Table } from "./csv.js";
import {
  axes,
  circles,
  document,
  extentOf,
  makeFrame,
  polyline,
  title as titleText,
} from "./svg.js";

export type FigureKind = "paths" | "smse-slope" | "paired-paths";

export interface FigureSpec {
  kind: FigureKind;
  /** CSV payloads, one string per input file, in input order. */
  inputs: string[];
  title?: string;
  /** paths kind only: keep a single scheme (e.g. PI or MTEM). */
  scheme?: string;
}

const SCHEME_COLORS: Record<string, string> = {
  PI: "#d62728",
  MTEM: "#1f77b4",
  TEM: "#2ca02c",
  COUPLED: "#9467bd",
};

const fallbackColor = (i: number) => ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"][i % 4];

/** One line per (scheme, sample) from rows of (sample, t, value, scheme). */
export function renderPaths(tables: Table[], heading = "", scheme?: string): string {
  const groups = new Map<string, { t: number[]; v: number[]; scheme: string }>();
  const allT: number[] = [];
  const allV: number[] = [];
  for (const table of tables) {
    requireColumns(table, ["sample", "t", "value", "scheme"]);
    for (const row of table.rows) {
      const rowScheme = String(row.scheme);
      if (scheme !== undefined && rowScheme !== scheme) continue;
      const key = `${rowScheme}/${row.sample}`;
      if (!groups.has(key)) groups.set(key, { t: [], v: [], scheme: rowScheme });
      const g = groups.get(key)!;
      const t = Number(row.t);
      const v = Number(row.value);
      if (!Number.isFinite(t) || !Number.isFinite(v)) continue;
      g.t.push(t);
      g.v.push(v);
      allT.push(t);
      allV.push(v);
    }
  }
  if (allT.length === 0) {
    throw new Error(
      scheme !== undefined
        ? `no rows with scheme '${scheme}' in the input`
        : "no plottable rows in the input",
    );
  }
  const xDomain = extentOf(allT, 0.02);
  const yDomain = extentOf(allV);
  const frame = makeFrame(xDomain, yDomain);
  const body: string[] = [axes(frame, xDomain, yDomain, "t", "value")];
  let colorIndex = 0;
  for (const g of groups.values()) {
    const color = SCHEME_COLORS[g.scheme] ?? fallbackColor(colorIndex++);
    body.push(polyline(frame, g.t, g.v, color));
  }
  body.push(titleText(frame, heading));
  return document(frame.width, frame.height, body.join("\n"));
}

/**
 * log2(smse) against q, plus a red dashed reference of slope -1 anchored at
 * the first data point.
 */
export function renderSmseSlope(tables: Table[], heading = ""): string {
  const qs: number[] = [];
  const logSmse: number[] = [];
  for (const table of tables) {
    requireColumns(table, ["q", "smse"]);
    const q = numericColumn(table, "q");
    const smse = numericColumn(table, "smse");
    smse.forEach((v, i) => {
      if (v <= 0) throw new Error(`smse must be positive to draw on a log scale (row ${i})`);
      qs.push(q[i]);
      logSmse.push(Math.log2(v));
    });
  }
  if (qs.length === 0) throw new Error("no plottable rows in the input");
  const refY = qs.map((q) => logSmse[0] - (q - qs[0]));
  const xDomain = extentOf(qs, 0.08);
  const yDomain = extentOf(logSmse.concat(refY));
  const frame = makeFrame(xDomain, yDomain);
  const body = [
    axes(frame, xDomain, yDomain, "q", "log2 SMSE"),
    polyline(frame, qs, refY, "#d62728", ' stroke-dasharray="6 4"'),
    polyline(frame, qs, logSmse, "#1f77b4"),
    circles(frame, qs, logSmse, "#1f77b4"),
    titleText(frame, heading),
  ];
  return document(frame.width, frame.height, body.join("\n"));
}

/** One panel per sample, each showing the exact and numerical paths. */
export function renderPairedPaths(tables: Table[], heading = ""): string {
  interface Panel {
    t: number[];
    exact: number[];
    mtem: number[];
  }
  const panels = new Map<string, Panel>();
  for (const table of tables) {
    requireColumns(table, ["sample", "t", "exact", "mtem"]);
    for (const row of table.rows) {
      const key = String(row.sample);
      if (!panels.has(key)) panels.set(key, { t: [], exact: [], mtem: [] });
      const p = panels.get(key)!;
      p.t.push(Number(row.t));
      p.exact.push(Number(row.exact));
      p.mtem.push(Number(row.mtem));
    }
  }
  if (panels.size === 0) throw new Error("no plottable rows in the input");

  const cols = Math.min(2, panels.size);
  const rows = Math.ceil(panels.size / cols);
  const panelW = 460;
  const panelH = 320;
  const width = cols * panelW;
  const height = rows * panelH + 24;
  const body: string[] = [];
  let index = 0;
  for (const [sample, p] of panels) {
    const col = index % cols;
    const row = Math.floor(index / cols);
    const xDomain = extentOf(p.t, 0.02);
    const yDomain = extentOf(p.exact.concat(p.mtem));
    const frame = makeFrame(xDomain, yDomain, panelW, panelH, col * panelW, row * panelH + 24);
    body.push(
      axes(frame, xDomain, yDomain, "t", "x"),
      polyline(frame, p.t, p.exact, "#1f77b4"),
      polyline(frame, p.t, p.mtem, "#ff7f0e", ' stroke-dasharray="5 3"'),
      titleText(frame, `sample ${sample}`),
    );
    index++;
  }
  if (heading) {
    body.push(
      `<text x="${width / 2}" y="16" font-size="14" font-weight="bold" text-anchor="middle">${heading}</text>`,
    );
  }
  return document(width, height, body.join("\n"));
}

/** Render a figure spec to an SVG string. */
export function render(spec: FigureSpec): string {
  const tables = spec.inputs.map(parseCsv);
  switch (spec.kind) {
    case "paths":
      return renderPaths(tables, spec.title ?? "", spec.scheme);
    case "smse-slope":
      return renderSmseSlope(tables, spec.title ?? "");
    case "paired-paths":
      return renderPairedPaths(tables, spec.title ?? "");
    default:
      throw new Error(`unknown figure kind '${spec.kind as string}'`);
  }
}
