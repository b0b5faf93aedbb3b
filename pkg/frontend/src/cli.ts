#!/usr/bin/env node
/**
 * Figure renderer CLI.
 *
 *   reliance-sim-figures attack_count_dist    --input strategies.csv --out fig2.svg
 *   reliance-sim-figures reliance_trajectories --input best.csv --input worst.csv --out fig3.svg
 *   reliance-sim-figures sensitivity_panel    --input model_acc.csv --out fig4a.svg
 *
 * Exit codes: 0 success, 1 input/schema error, 2 runtime error. Inputs are
 * never modified; the SVG is written via temp file + rename.
 */

import { mkdtempSync, readFileSync, renameSync, rmSync, writeFileSync } from "node:fs";
import { basename, dirname, join } from "node:path";
import { attackCountDistribution, relianceTrajectories, sensitivityPanel } from "./figures.js";
import { renderSvg } from "./render.js";
import { SchemaError, loadStrategyCsv, loadSweepCsv, loadTraceCsv } from "./schemas.js";

export const FIGURE_IDS = ["attack_count_dist", "reliance_trajectories", "sensitivity_panel"] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

export interface CliArgs {
  figure: FigureId;
  inputs: string[];
  out: string;
  width?: number;
  height?: number;
  title?: string;
}

export class UsageError extends Error {}

export function parseArgs(argv: string[]): CliArgs {
  if (argv.length === 0 || argv[0] === "--help" || argv[0] === "-h") {
    throw new UsageError(
      `usage: reliance-sim-figures <${FIGURE_IDS.join("|")}> --input FILE [--input FILE] --out FILE ` +
        "[--width N] [--height N] [--title TEXT]",
    );
  }
  const [figure, ...rest] = argv;
  if (!(FIGURE_IDS as readonly string[]).includes(figure)) {
    throw new UsageError(`unknown figure id '${figure}'; expected one of: ${FIGURE_IDS.join(", ")}`);
  }
  const args: CliArgs = { figure: figure as FigureId, inputs: [], out: "" };
  for (let i = 0; i < rest.length; i += 1) {
    const flag = rest[i];
    const take = (): string => {
      const value = rest[i + 1];
      if (value === undefined) throw new UsageError(`${flag}: missing value`);
      i += 1;
      return value;
    };
    switch (flag) {
      case "--input":
        args.inputs.push(take());
        break;
      case "--out":
        args.out = take();
        break;
      case "--width":
        args.width = Number(take());
        break;
      case "--height":
        args.height = Number(take());
        break;
      case "--title":
        args.title = take();
        break;
      default:
        throw new UsageError(`unknown flag '${flag}'`);
    }
  }
  if (args.inputs.length === 0) throw new UsageError("--input: at least one input file required");
  if (!args.out) throw new UsageError("--out: output path required");
  if (args.figure === "reliance_trajectories" && args.inputs.length > 2) {
    throw new UsageError("reliance_trajectories: give one or two trace files (e.g. best, worst)");
  }
  if (args.figure !== "reliance_trajectories" && args.inputs.length !== 1) {
    throw new UsageError(`${args.figure}: exactly one input file expected`);
  }
  return args;
}

function traceLabel(path: string, index: number): string {
  const stem = basename(path).replace(/\.[^.]+$/, "");
  return stem || `trace ${index + 1}`;
}

export function buildFigure(args: CliArgs): string {
  const read = (path: string): string => readFileSync(path, "utf8");
  let option;
  if (args.figure === "attack_count_dist") {
    option = attackCountDistribution(loadStrategyCsv(read(args.inputs[0])), args.title);
  } else if (args.figure === "sensitivity_panel") {
    option = sensitivityPanel(loadSweepCsv(read(args.inputs[0])), args.title);
  } else {
    const labeled = args.inputs.map((path, idx) => ({
      label: traceLabel(path, idx),
      rows: loadTraceCsv(read(path)),
    }));
    option = relianceTrajectories(labeled, args.title);
  }
  return renderSvg(option, { width: args.width, height: args.height });
}

function writeAtomically(path: string, text: string): void {
  const dir = dirname(path) || ".";
  const tmpDir = mkdtempSync(join(dir, ".fig-"));
  const tmpFile = join(tmpDir, "out.svg");
  try {
    writeFileSync(tmpFile, text);
    renameSync(tmpFile, path);
  } finally {
    rmSync(tmpDir, { recursive: true, force: true });
  }
}

export function run(argv: string[]): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(err.message);
      return 1;
    }
    throw err;
  }
  try {
    const svg = buildFigure(args);
    writeAtomically(args.out, svg);
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || (err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${(err as Error).message}`);
      return 1;
    }
    console.error(`runtime error: ${(err as Error).message}`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
