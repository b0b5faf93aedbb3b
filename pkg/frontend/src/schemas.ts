/**
 * Input schemas for the three figure kinds.
 *
 * Every loader validates the header row first (so a missing column fails
 * loudly, naming the column) and then validates and coerces each record.
 */

import Papa from "papaparse";
import { z } from "zod";

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

const floatField = (name: string) =>
  z.string().transform((raw, ctx) => {
    const value = Number(raw);
    if (raw.trim() === "" || !Number.isFinite(value)) {
      ctx.addIssue({ code: z.ZodIssueCode.custom, message: `${name}: not a number: '${raw}'` });
      return z.NEVER;
    }
    return value;
  });

const intField = (name: string) =>
  z.string().transform((raw, ctx) => {
    const value = Number(raw);
    if (!Number.isInteger(value)) {
      ctx.addIssue({ code: z.ZodIssueCode.custom, message: `${name}: not an integer: '${raw}'` });
      return z.NEVER;
    }
    return value;
  });

const boolField = (name: string) =>
  z.string().transform((raw, ctx) => {
    if (raw === "true") return true;
    if (raw === "false") return false;
    ctx.addIssue({ code: z.ZodIssueCode.custom, message: `${name}: expected true/false, got '${raw}'` });
    return z.NEVER;
  });

const maskField = (name: string) =>
  z.string().regex(/^[01]+$/, `${name}: expected a 0/1 bitstring`);

export const traceRowSchema = z.object({
  episode_id: z.string(),
  task_index: intField("task_index"),
  attacked: intField("attacked").refine((v) => v === 0 || v === 1, "attacked: expected 0 or 1"),
  reliance_before: floatField("reliance_before"),
  trusted: boolField("trusted"),
  assessment_passed: boolField("assessment_passed"),
  executed: z.enum(["MODEL", "ATTACKED_MODEL", "HUMAN", "FALLBACK"]),
  executed_correct: z
    .string()
    .transform((raw, ctx) => {
      if (raw === "") return null;
      if (raw === "true") return true;
      if (raw === "false") return false;
      ctx.addIssue({
        code: z.ZodIssueCode.custom,
        message: `executed_correct: expected true/false/empty, got '${raw}'`,
      });
      return z.NEVER;
    }),
  as_i: floatField("as_i"),
  d_i: floatField("d_i"),
  reliance_after: floatField("reliance_after"),
});

export const strategyRowSchema = z.object({
  strategy_id: intField("strategy_id"),
  mask: maskField("mask"),
  n_attacks: intField("n_attacks"),
  as_mean: floatField("as_mean"),
  as_std: floatField("as_std"),
  as_max: floatField("as_max"),
  as_min: floatField("as_min"),
  n_replications: intField("n_replications"),
});

export const sweepRowSchema = z.object({
  parameter: z.string().min(1),
  value: z.string().min(1),
  n_attacks: intField("n_attacks"),
  mean_as: floatField("mean_as"),
  std_as: floatField("std_as"),
  max_as: floatField("max_as"),
  best_mask: maskField("best_mask"),
  n_samples: intField("n_samples"),
});

export type TraceRow = z.infer<typeof traceRowSchema>;
export type StrategyRow = z.infer<typeof strategyRowSchema>;
export type SweepRow = z.infer<typeof sweepRowSchema>;

const REQUIRED_COLUMNS: Record<string, string[]> = {
  trace: [
    "episode_id",
    "task_index",
    "attacked",
    "reliance_before",
    "trusted",
    "assessment_passed",
    "executed",
    "executed_correct",
    "as_i",
    "d_i",
    "reliance_after",
  ],
  strategy: [
    "strategy_id",
    "mask",
    "n_attacks",
    "as_mean",
    "as_std",
    "as_max",
    "as_min",
    "n_replications",
  ],
  sweep: [
    "parameter",
    "value",
    "n_attacks",
    "mean_as",
    "std_as",
    "max_as",
    "best_mask",
    "n_samples",
  ],
};

function parseCsv(kind: keyof typeof REQUIRED_COLUMNS, text: string): Record<string, string>[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${kind} csv: parse error at row ${first.row}: ${first.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  const missing = REQUIRED_COLUMNS[kind].filter((col) => !fields.includes(col));
  if (missing.length > 0) {
    throw new SchemaError(`${kind} csv: missing column(s): ${missing.join(", ")}`);
  }
  if (parsed.data.length === 0) {
    throw new SchemaError(`${kind} csv: no data rows`);
  }
  return parsed.data;
}

function validateRows<S extends z.ZodTypeAny>(
  kind: string,
  rows: Record<string, string>[],
  schema: S,
): z.infer<S>[] {
  return rows.map((row, index) => {
    const result = schema.safeParse(row);
    if (!result.success) {
      const issue = result.error.issues[0];
      const where = issue.path.length > 0 ? `${issue.path.join(".")}: ` : "";
      throw new SchemaError(`${kind} csv: row ${index + 1}: ${where}${issue.message}`);
    }
    return result.data;
  });
}

export function loadTraceCsv(text: string): TraceRow[] {
  return validateRows("trace", parseCsv("trace", text), traceRowSchema);
}

export function loadStrategyCsv(text: string): StrategyRow[] {
  return validateRows("strategy", parseCsv("strategy", text), strategyRowSchema);
}

export function loadSweepCsv(text: string): SweepRow[] {
  return validateRows("sweep", parseCsv("sweep", text), sweepRowSchema);
}
