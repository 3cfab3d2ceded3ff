import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { SchemaError, column, numericColumn, parseCsv } from "../src/csv.js";

const FIXTURES = join(import.meta.dirname, "fixtures");

function fixture(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf8");
}

describe("schema validation", () => {
  it("accepts the golden files", () => {
    expect(parseCsv(fixture("sweep.csv"), "sweep").rows.length).toBeGreaterThan(0);
    expect(parseCsv(fixture("stats.csv"), "moments").rows.length).toBeGreaterThan(0);
    expect(parseCsv(fixture("hoelder.csv"), "hoelder").rows.length).toBeGreaterThan(0);
  });

  it("names the missing column", () => {
    const corrupted = fixture("sweep.csv").replace("p_value", "pvalue");
    expect(() => parseCsv(corrupted, "sweep")).toThrowError(/missing column 'p_value'/);
  });

  it("rejects extra columns", () => {
    const text = "dt,value,ratio,extra\n1,2,3,4\n";
    expect(() => parseCsv(text, "hoelder")).toThrowError(/unexpected column 'extra'/);
  });

  it("rejects a header from another kind", () => {
    expect(() => parseCsv(fixture("hoelder.csv"), "sweep")).toThrowError(SchemaError);
  });

  it("rejects ragged rows", () => {
    const text = "dt,value,ratio\n0.1,2\n";
    expect(() => parseCsv(text, "hoelder")).toThrowError(/row 1 has 2 fields/);
  });

  it("rejects empty input", () => {
    expect(() => parseCsv("", "sweep")).toThrowError(/empty/);
  });
});

describe("column extraction", () => {
  it("parses numeric columns and keeps NaN sentinels", () => {
    const table = parseCsv("eps,observable,distance,p_value,pathwise_l2\n0.5,energy,0.1,0.9,nan\n", "sweep");
    expect(numericColumn(table, "distance")).toEqual([0.1]);
    expect(numericColumn(table, "pathwise_l2")[0]).toBeNaN();
    expect(column(table, "observable")).toEqual(["energy"]);
  });

  it("rejects non-numeric data in numeric columns", () => {
    const table = parseCsv("dt,value,ratio\nabc,1,2\n", "hoelder");
    expect(() => numericColumn(table, "dt")).toThrowError(/non-numeric/);
  });
});
