#!/usr/bin/env node
/** Render one figure from simulator artifacts.
 *
 * Usage:
 *   mpmheat-figures <kind> --input a.csv[,b.csv,...] --out figure.svg
 *                   [--title "..."] [--oracle curve.csv] [--probe x,y[,z]]
 *
 * kinds: profile | radial | contour | convergence | history
 */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { readConvergenceCsv, readSnapshot } from "./csv.js";
import {
  PLOT_KINDS, PlotJob, PlotKind,
  plotContour, plotConvergence, plotHistory, plotProfile, plotRadial,
} from "./plots.js";

export function parseArgs(argv: string[]): PlotJob {
  if (argv.length === 0) {
    throw new Error(`usage: mpmheat-figures <${PLOT_KINDS.join("|")}> --input ... --out ...`);
  }
  const kind = argv[0] as PlotKind;
  if (!PLOT_KINDS.includes(kind)) {
    throw new Error(`unknown plot kind '${argv[0]}'; expected one of ${PLOT_KINDS.join(", ")}`);
  }
  const job: PlotJob = { kind, inputs: [], out: "" };
  for (let i = 1; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) throw new Error(`missing value for ${flag}`);
    switch (flag) {
      case "--input":
        job.inputs = value.split(",");
        break;
      case "--out":
        job.out = value;
        break;
      case "--title":
        job.title = value;
        break;
      case "--oracle":
        job.oracle = value;
        break;
      case "--probe":
        job.probe = value.split(",").map(Number);
        break;
      default:
        throw new Error(`unknown flag '${flag}'`);
    }
  }
  if (job.inputs.length === 0) throw new Error("--input is required");
  if (!job.out) throw new Error("--out is required");
  for (const p of [...job.inputs, ...(job.oracle ? [job.oracle] : [])]) {
    if (!existsSync(p)) throw new Error(`input does not exist: ${p}`);
  }
  return job;
}

export function renderJob(job: PlotJob): string {
  switch (job.kind) {
    case "profile":
      return plotProfile(job.inputs.map(readSnapshot), job.oracle, job.title);
    case "radial":
      return plotRadial(job.inputs.map(readSnapshot), job.title);
    case "contour": {
      if (job.inputs.length !== 1) throw new Error("contour plot takes exactly one snapshot");
      return plotContour(readSnapshot(job.inputs[0]), job.title);
    }
    case "convergence": {
      if (job.inputs.length !== 1) throw new Error("convergence plot takes exactly one CSV");
      return plotConvergence(readConvergenceCsv(job.inputs[0]), job.title);
    }
    case "history":
      return plotHistory(job.inputs.map(readSnapshot), job.probe ?? [0, 0, 0], job.title);
  }
}

export function main(argv: string[]): number {
  let job: PlotJob;
  try {
    job = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  try {
    const svg = renderJob(job);
    mkdirSync(dirname(job.out) || ".", { recursive: true });
    writeFileSync(job.out, svg);
    console.log(job.out);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

import { pathToFileURL } from "node:url";

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
