import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import {
  SchemaError,
  loadStrategyCsv,
  loadSweepCsv,
  loadTraceCsv,
} from "../src/schemas.js";

const fixture = (name: string) => readFileSync(join(__dirname, "fixtures", name), "utf8");

function dropColumn(csv: string, column: string): string {
  const lines = csv.trim().split("\n");
  const header = lines[0].split(",");
  const idx = header.indexOf(column);
  return lines
    .map((line) => {
      const cells = line.split(",");
      cells.splice(idx, 1);
      return cells.join(",");
    })
    .join("\n");
}

describe("trace csv", () => {
  it("parses the deterministic best trace", () => {
    const rows = loadTraceCsv(fixture("trace_best.csv"));
    expect(rows).toHaveLength(10);
    expect(rows[0].attacked).toBe(1);
    expect(rows[0].trusted).toBe(true);
    expect(rows[1].executed).toBe("HUMAN");
    expect(rows[0].executed_correct).toBeNull(); // expected-loss trace
    expect(rows[9].reliance_after).toBeLessThan(0.7);
  });

  it("names a missing column", () => {
    const broken = dropColumn(fixture("trace_best.csv"), "reliance_after");
    expect(() => loadTraceCsv(broken)).toThrow(SchemaError);
    expect(() => loadTraceCsv(broken)).toThrow(/missing column.*reliance_after/);
  });

  it("rejects a malformed boolean", () => {
    const text = fixture("trace_best.csv").replace("true", "maybe");
    expect(() => loadTraceCsv(text)).toThrow(/expected true\/false/);
  });
});

describe("strategy csv", () => {
  it("parses the replicated study", () => {
    const rows = loadStrategyCsv(fixture("strategies.csv"));
    expect(rows.length).toBe(1024); // every placement of budgets 0..10
    expect(new Set(rows.map((r) => r.n_attacks)).size).toBe(11);
    for (const row of rows.slice(0, 50)) {
      expect(row.as_min).toBeLessThanOrEqual(row.as_mean);
      expect(row.as_mean).toBeLessThanOrEqual(row.as_max);
    }
  });

  it("parses the deterministic two-attack table", () => {
    const rows = loadStrategyCsv(fixture("det_k2.csv"));
    expect(rows).toHaveLength(45);
    expect(rows.every((r) => r.n_replications === 0)).toBe(true);
    const best = rows.reduce((a, b) => (b.as_mean > a.as_mean ? b : a));
    expect(best.mask).toBe("1000000001");
    expect(best.as_mean).toBeCloseTo(0.35, 12);
  });

  it("names a missing column", () => {
    const broken = dropColumn(fixture("strategies.csv"), "as_mean");
    expect(() => loadStrategyCsv(broken)).toThrow(/missing column.*as_mean/);
  });

  it("rejects a bad mask", () => {
    const text = fixture("det_k2.csv").replace("1000000001", "10000a0001");
    expect(() => loadStrategyCsv(text)).toThrow(/bitstring/);
  });
});

describe("sweep csv", () => {
  it("parses a sensitivity sweep", () => {
    const rows = loadSweepCsv(fixture("model_acc.csv"));
    expect(rows.length).toBe(4 * 11);
    expect(new Set(rows.map((r) => r.value))).toEqual(new Set(["0.2", "0.4", "0.6", "0.8"]));
    expect(rows.every((r) => r.parameter === "model_acc")).toBe(true);
  });

  it("names a missing column", () => {
    const broken = dropColumn(fixture("model_acc.csv"), "best_mask");
    expect(() => loadSweepCsv(broken)).toThrow(/missing column.*best_mask/);
  });

  it("rejects empty files", () => {
    expect(() => loadSweepCsv("parameter,value,n_attacks,mean_as,std_as,max_as,best_mask,n_samples\n")).toThrow(
      /no data rows/,
    );
  });
});
