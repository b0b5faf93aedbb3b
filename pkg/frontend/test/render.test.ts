import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, describe, expect, it } from "vitest";
import { run } from "../src/cli.js";
import {
  attackCountDistribution,
  relianceTrajectories,
  sensitivityPanel,
} from "../src/figures.js";
import { renderSvg } from "../src/render.js";
import { loadStrategyCsv, loadSweepCsv, loadTraceCsv } from "../src/schemas.js";

const fixturePath = (name: string) => join(__dirname, "fixtures", name);
const fixture = (name: string) => readFileSync(fixturePath(name), "utf8");

const scratch = mkdtempSync(join(tmpdir(), "figures-"));
afterAll(() => rmSync(scratch, { recursive: true, force: true }));

describe("figure builders", () => {
  it("attack count distribution: one box per budget plus best markers", () => {
    const option = attackCountDistribution(loadStrategyCsv(fixture("strategies.csv")));
    const [boxes, markers] = option.series as any[];
    expect(boxes.type).toBe("boxplot");
    expect(boxes.data).toHaveLength(11);
    for (const [min, q1, median, q3, max] of boxes.data) {
      expect(min).toBeLessThanOrEqual(q1);
      expect(q1).toBeLessThanOrEqual(median);
      expect(median).toBeLessThanOrEqual(q3);
      expect(q3).toBeLessThanOrEqual(max);
    }
    expect(markers.type).toBe("scatter");
    expect(markers.data).toHaveLength(11);
    // Red markers sit on each budget's best mean, mirroring the summary.
    const summary = JSON.parse(fixture("strategies.summary.json"));
    const bestByK = new Map(
      summary.by_attack_count.map((e: any) => [e.n_attacks, e.best_mean]),
    );
    markers.data.forEach(([i, v]: [number, number]) => {
      expect(v).toBeCloseTo(bestByK.get(i) as number, 9);
    });
  });

  it("reliance trajectories: two labeled series with attack annotations", () => {
    const option = relianceTrajectories([
      { label: "best", rows: loadTraceCsv(fixture("trace_best.csv")) },
      { label: "worst", rows: loadTraceCsv(fixture("trace_worst.csv")) },
    ]);
    const series = option.series as any[];
    const best = series.find((s) => s.name === "best");
    const worst = series.find((s) => s.name === "worst");
    expect(best.markPoint.data).toHaveLength(2); // first-and-last plan
    expect(worst.markPoint.data).toHaveLength(2); // consecutive plan
    expect(best.data).toHaveLength(10);
    // Untrusted task renders hollow.
    expect(best.data[1].symbol).toBe("emptyCircle");
    expect(best.data[0].symbol).toBe("circle");
    const scoreSeries = series.filter((s) => String(s.name).endsWith(" d"));
    expect(scoreSeries).toHaveLength(2);
  });

  it("sensitivity panel: one curve per value with an optimal-k highlight", () => {
    const option = sensitivityPanel(loadSweepCsv(fixture("model_acc.csv")));
    const series = option.series as any[];
    expect(series).toHaveLength(4);
    for (const s of series) {
      expect(s.data).toHaveLength(11);
      expect(s.markPoint.data).toHaveLength(1);
      const ys = s.data.map(([, y]: [string, number]) => y);
      const [coordK, coordY] = s.markPoint.data[0].coord;
      expect(coordY).toBe(Math.max(...ys));
      const bestIndex = ys.indexOf(Math.max(...ys));
      expect(coordK).toBe(s.data[bestIndex][0]);
    }
  });

  it("sensitivity panel refuses mixed parameters", () => {
    const rows = loadSweepCsv(fixture("model_acc.csv"));
    const mixed = [...rows, { ...rows[0], parameter: "human_acc" }];
    expect(() => sensitivityPanel(mixed)).toThrow(/single swept parameter/);
  });
});

describe("rendering", () => {
  it("produces an svg document", () => {
    const svg = renderSvg(sensitivityPanel(loadSweepCsv(fixture("reliance_threshold.csv"))));
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("</svg>");
    expect(svg).toContain("reliance_threshold=0.1");
  });

  it("is stable across repeated renders of identical inputs", () => {
    const option = () => attackCountDistribution(loadStrategyCsv(fixture("strategies.csv")));
    const first = renderSvg(option());
    const second = renderSvg(option());
    expect(second).toBe(first);
  });
});

describe("cli", () => {
  it("renders all three figures end to end", () => {
    const cases: [string, string[]][] = [
      ["attack_count_dist", [fixturePath("strategies.csv")]],
      ["reliance_trajectories", [fixturePath("trace_best.csv"), fixturePath("trace_worst.csv")]],
      ["sensitivity_panel", [fixturePath("model_acc.csv")]],
    ];
    for (const [figure, inputs] of cases) {
      const out = join(scratch, `${figure}.svg`);
      const argv = [figure, ...inputs.flatMap((p) => ["--input", p]), "--out", out];
      expect(run(argv)).toBe(0);
      expect(readFileSync(out, "utf8")).toContain("</svg>");
    }
  });

  it("re-rendering identical inputs yields identical bytes", () => {
    const a = join(scratch, "stable-a.svg");
    const b = join(scratch, "stable-b.svg");
    const argv = (out: string) => [
      "reliance_trajectories",
      "--input",
      fixturePath("trace_best.csv"),
      "--input",
      fixturePath("trace_worst.csv"),
      "--out",
      out,
    ];
    expect(run(argv(a))).toBe(0);
    expect(run(argv(b))).toBe(0);
    expect(readFileSync(a)).toEqual(readFileSync(b));
  });

  it("fails loudly on schema mismatch, naming the column", () => {
    const out = join(scratch, "never.svg");
    const code = run(["attack_count_dist", "--input", fixturePath("trace_best.csv"), "--out", out]);
    expect(code).toBe(1);
    expect(() => readFileSync(out)).toThrow(); // nothing written
  });

  it("rejects unknown figure ids and missing flags", () => {
    expect(run(["not_a_figure", "--input", "x", "--out", "y"])).toBe(1);
    expect(run(["sensitivity_panel", "--out", "y"])).toBe(1);
    expect(run(["sensitivity_panel", "--input", fixturePath("model_acc.csv")])).toBe(1);
  });

  it("exits 1 on a missing input file", () => {
    expect(
      run(["sensitivity_panel", "--input", "/nope/missing.csv", "--out", join(scratch, "x.svg")]),
    ).toBe(1);
  });
});
