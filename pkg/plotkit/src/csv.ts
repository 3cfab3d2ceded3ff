/**
 * Strict CSV reading for the solver's documented output schemas.
 *
 * A file is accepted only when its header matches the schema exactly;
 * anything else fails with an error naming the offending column, so a
 * schema drift upstream can never produce a silently wrong figure.
 */

export const SCHEMAS = {
  sweep: ["eps", "observable", "distance", "p_value", "pathwise_l2"],
  moments: ["statistic", "estimate", "half_width", "eps", "mode"],
  hoelder: ["dt", "value", "ratio"],
} as const;

export type FigureKind = keyof typeof SCHEMAS;

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string, kind: FigureKind): Table {
  const expected = SCHEMAS[kind];
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV input");
  }
  const header = lines[0].split(",");
  for (const column of expected) {
    if (!header.includes(column)) {
      throw new SchemaError(`missing column '${column}' for kind '${kind}'`);
    }
  }
  for (const column of header) {
    if (!(expected as readonly string[]).includes(column)) {
      throw new SchemaError(`unexpected column '${column}' for kind '${kind}'`);
    }
  }
  if (header.length !== expected.length) {
    throw new SchemaError(`duplicate columns in header for kind '${kind}'`);
  }
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const fields = lines[i].split(",");
    if (fields.length !== header.length) {
      throw new SchemaError(
        `row ${i} has ${fields.length} fields, expected ${header.length}`,
      );
    }
    rows.push(fields);
  }
  return { header, rows };
}

export function column(table: Table, name: string): string[] {
  const index = table.header.indexOf(name);
  if (index < 0) {
    throw new SchemaError(`missing column '${name}'`);
  }
  return table.rows.map((row) => row[index]);
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).map((field, i) => {
    if (field === "nan" || field === "NaN" || field === "") {
      return Number.NaN;
    }
    const value = Number(field);
    if (Number.isNaN(value)) {
      throw new SchemaError(`non-numeric value '${field}' in column '${name}' row ${i + 1}`);
    }
    return value;
  });
}
