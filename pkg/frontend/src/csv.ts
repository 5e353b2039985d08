import Papa from "papaparse";

/** A parsed CSV: column names plus one record per data row. */
export interface Table {
  columns: string[];
  rows: Record<string, number | string>[];
}

export function parseCsv(text: string): Table {
  const result = Papa.parse<Record<string, number | string>>(text, {
    header: true,
    skipEmptyLines: true,
    dynamicTyping: true,
  });
  if (result.errors.length > 0) {
    const first = result.errors[0];
    throw new Error(`CSV parse error at row ${first.row}: ${first.message}`);
  }
  const columns = result.meta.fields ?? [];
  return { columns, rows: result.data };
}

/** Throw if any required column is absent, naming the first missing one. */
export function requireColumns(table: Table, required: string[]): void {
  for (const name of required) {
    if (!table.columns.includes(name)) {
      throw new Error(`missing column '${name}' (found: ${table.columns.join(", ")})`);
    }
  }
}

export function numericColumn(table: Table, name: string): number[] {
  return table.rows.map((row) => {
    const v = Number(row[name]);
    if (!Number.isFinite(v)) {
      throw new Error(`column '${name}' contains a non-numeric value: ${row[name]}`);
    }
    return v;
  });
}
