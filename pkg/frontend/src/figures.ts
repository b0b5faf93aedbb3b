/**
 * Figure builders: each returns an echarts option object from validated rows.
 * Numbers are taken from the inputs; the only derived quantities are the
 * order statistics that define boxplot glyphs.
 */

import type { EChartsOption } from "echarts";
import { SchemaError, StrategyRow, SweepRow, TraceRow } from "./schemas.js";

const PALETTE = ["#3b6fb6", "#e07b39", "#4c9f70", "#b05cc5", "#c94f4f", "#7f7f7f"];
const BEST_MARKER = "#d62728";

function quantile(sorted: number[], p: number): number {
  // Linear interpolation between order statistics, matching the producer.
  if (sorted.length === 1) return sorted[0];
  const pos = (sorted.length - 1) * p;
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  if (lo === hi) return sorted[lo];
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo);
}

function boxFrom(values: number[]): [number, number, number, number, number] {
  const sorted = [...values].sort((a, b) => a - b);
  return [
    sorted[0],
    quantile(sorted, 0.25),
    quantile(sorted, 0.5),
    quantile(sorted, 0.75),
    sorted[sorted.length - 1],
  ];
}

/** Boxplot of per-strategy mean scores by attack count, best strategy marked. */
export function attackCountDistribution(rows: StrategyRow[], title?: string): EChartsOption {
  const byCount = new Map<number, number[]>();
  for (const row of rows) {
    const bucket = byCount.get(row.n_attacks) ?? [];
    bucket.push(row.as_mean);
    byCount.set(row.n_attacks, bucket);
  }
  const counts = [...byCount.keys()].sort((a, b) => a - b);
  const boxes = counts.map((k) => boxFrom(byCount.get(k)!));
  const bestMarkers = counts.map((k) => Math.max(...byCount.get(k)!));

  return {
    animation: false,
    title: { text: title ?? "Attack score distribution by number of attacks", left: "center" },
    grid: { left: 60, right: 24, top: 48, bottom: 48 },
    xAxis: {
      type: "category",
      data: counts.map(String),
      name: "number of attacks",
      nameLocation: "middle",
      nameGap: 30,
    },
    yAxis: { type: "value", name: "attack score", nameLocation: "middle", nameGap: 42 },
    series: [
      {
        name: "strategy means",
        type: "boxplot",
        data: boxes,
        itemStyle: { color: "#cfe0f2", borderColor: PALETTE[0] },
      },
      {
        name: "best strategy",
        type: "scatter",
        data: bestMarkers.map((v, i) => [i, v]),
        symbolSize: 10,
        itemStyle: { color: BEST_MARKER },
      },
    ],
    legend: { bottom: 0, data: ["strategy means", "best strategy"] },
  };
}

interface TrajectorySummary {
  tasks: number[];
  mean: number[];
  lo: number[];
  hi: number[];
  attackedTasks: number[];
  meanScore: number[];
  trusted: boolean[];
}

function summarizeTrace(rows: TraceRow[]): TrajectorySummary {
  const byTask = new Map<number, TraceRow[]>();
  for (const row of rows) {
    const bucket = byTask.get(row.task_index) ?? [];
    bucket.push(row);
    byTask.set(row.task_index, bucket);
  }
  const tasks = [...byTask.keys()].sort((a, b) => a - b);
  const mean: number[] = [];
  const lo: number[] = [];
  const hi: number[] = [];
  const meanScore: number[] = [];
  const trusted: boolean[] = [];
  const attackedTasks: number[] = [];
  for (const t of tasks) {
    const bucket = byTask.get(t)!;
    const reliance = bucket.map((r) => r.reliance_before);
    const scores = bucket.map((r) => r.d_i);
    mean.push(reliance.reduce((a, b) => a + b, 0) / reliance.length);
    lo.push(Math.min(...reliance));
    hi.push(Math.max(...reliance));
    meanScore.push(scores.reduce((a, b) => a + b, 0) / scores.length);
    trusted.push(bucket.every((r) => r.trusted));
    if (bucket.some((r) => r.attacked === 1)) attackedTasks.push(t);
  }
  return { tasks, mean, lo, hi, attackedTasks, meanScore, trusted };
}

/**
 * Reliance trajectories (top) and evaluation scores (bottom) for two traces,
 * attack timings annotated with pins. Hollow points mark untrusted tasks.
 */
export function relianceTrajectories(
  labeled: { label: string; rows: TraceRow[] }[],
  title?: string,
): EChartsOption {
  if (labeled.length === 0) {
    throw new SchemaError("reliance_trajectories: at least one trace input required");
  }
  const summaries = labeled.map(({ label, rows }) => ({ label, summary: summarizeTrace(rows) }));
  const tasks = summaries[0].summary.tasks;

  const relianceSeries = summaries.flatMap(({ label, summary }, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const main = {
      name: label,
      type: "line" as const,
      xAxisIndex: 0,
      yAxisIndex: 0,
      data: summary.mean.map((v, i) => ({
        value: [String(tasks[i]), v],
        symbol: summary.trusted[i] ? "circle" : "emptyCircle",
        symbolSize: 8,
      })),
      lineStyle: { color },
      itemStyle: { color },
      markPoint: {
        symbol: "pin",
        symbolSize: 28,
        label: { formatter: "atk", fontSize: 9 },
        itemStyle: { color },
        data: summary.attackedTasks.map((t) => ({
          name: `attack@${t}`,
          coord: [String(t), summary.mean[tasks.indexOf(t)]],
        })),
      },
    };
    if (summary.lo.every((v, i) => v === summary.hi[i])) return [main];
    const bandBase = {
      name: `${label} span`,
      type: "line" as const,
      xAxisIndex: 0,
      yAxisIndex: 0,
      data: summary.lo.map((v, i) => [String(tasks[i]), v]),
      lineStyle: { opacity: 0 },
      symbol: "none",
      stack: `${label}-band`,
      silent: true,
    };
    const bandTop = {
      ...bandBase,
      data: summary.hi.map((v, i) => [String(tasks[i]), v - summary.lo[i]]),
      areaStyle: { color, opacity: 0.15 },
    };
    return [main, bandBase, bandTop];
  });

  const scoreSeries = summaries.map(({ label, summary }, idx) => ({
    name: `${label} d`,
    type: "line" as const,
    xAxisIndex: 1,
    yAxisIndex: 1,
    data: summary.meanScore.map((v, i) => [String(tasks[i]), v]),
    lineStyle: { color: PALETTE[idx % PALETTE.length], type: "dashed" as const },
    itemStyle: { color: PALETTE[idx % PALETTE.length] },
  }));

  return {
    animation: false,
    title: { text: title ?? "Reliance and evaluation scores across tasks", left: "center" },
    grid: [
      { left: 64, right: 24, top: 48, height: "34%" },
      { left: 64, right: 24, bottom: 56, height: "30%" },
    ],
    xAxis: [
      { type: "category", gridIndex: 0, data: tasks.map(String), name: "task" },
      { type: "category", gridIndex: 1, data: tasks.map(String), name: "task" },
    ],
    yAxis: [
      { type: "value", gridIndex: 0, name: "reliance", min: 0, max: 1 },
      { type: "value", gridIndex: 1, name: "evaluation score", min: 0, max: 1 },
    ],
    series: [...relianceSeries, ...scoreSeries],
    legend: { bottom: 0, data: summaries.map((s) => s.label) },
  };
}

/** One curve per parameter value; the optimal attack count is highlighted. */
export function sensitivityPanel(rows: SweepRow[], title?: string): EChartsOption {
  const parameters = new Set(rows.map((r) => r.parameter));
  if (parameters.size !== 1) {
    throw new SchemaError(
      `sensitivity_panel: expected a single swept parameter, got: ${[...parameters].join(", ")}`,
    );
  }
  const parameter = rows[0].parameter;
  const byValue = new Map<string, SweepRow[]>();
  for (const row of rows) {
    const bucket = byValue.get(row.value) ?? [];
    bucket.push(row);
    byValue.set(row.value, bucket);
  }
  const counts = [...new Set(rows.map((r) => r.n_attacks))].sort((a, b) => a - b);

  const series = [...byValue.entries()].map(([value, bucket], idx) => {
    const sorted = [...bucket].sort((a, b) => a.n_attacks - b.n_attacks);
    const best = sorted.reduce((acc, row) => (row.mean_as > acc.mean_as ? row : acc));
    const color = PALETTE[idx % PALETTE.length];
    return {
      name: `${parameter}=${value}`,
      type: "line" as const,
      data: sorted.map((r) => [String(r.n_attacks), r.mean_as]),
      lineStyle: { color },
      itemStyle: { color },
      markPoint: {
        symbol: "circle",
        symbolSize: 14,
        itemStyle: { color, borderColor: "#222", borderWidth: 1.5 },
        label: { show: false },
        data: [{ name: "optimal", coord: [String(best.n_attacks), best.mean_as] }],
      },
    };
  });

  return {
    animation: false,
    title: { text: title ?? `Attack score vs. number of attacks (${parameter})`, left: "center" },
    grid: { left: 60, right: 24, top: 48, bottom: 72 },
    xAxis: {
      type: "category",
      data: counts.map(String),
      name: "number of attacks",
      nameLocation: "middle",
      nameGap: 30,
    },
    yAxis: { type: "value", name: "mean attack score", nameLocation: "middle", nameGap: 42 },
    series,
    legend: { bottom: 0 },
  };
}
