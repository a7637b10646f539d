import assert from "node:assert/strict";
import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, statSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";

import { readConvergenceCsv, readSnapshot, timeFromFilename } from "../src/csv.js";
import { fitConvergenceRate } from "../src/fit.js";
import {
  plotContour, plotConvergence, plotHistory, plotProfile, plotRadial, probeHistory,
} from "../src/plots.js";
import { main, parseArgs } from "../src/cli.js";

const here = fileURLToPath(new URL(".", import.meta.url));
const samples = join(here, "..", "..", "samples");
const rodSnaps = ["rod-constant_t0p1.csv", "rod-constant_t0p5.csv", "rod-constant_t1.csv"]
  .map((f) => join(samples, f));
const ringSnaps = ["ring_t0p1.csv", "ring_t1.csv"].map((f) => join(samples, f));
const fanSnaps = ["fan_t0p2.csv", "fan_t0p4.csv", "fan_t0p6.csv", "fan_t0p8.csv", "fan_t1.csv"]
  .map((f) => join(samples, f));
const convergenceCsv = join(samples, "rod_convergence.csv");

function tmp(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "figs-")), name);
}

test("time tag parsing", () => {
  assert.equal(timeFromFilename("out/ring_t0p5.csv"), 0.5);
  assert.equal(timeFromFilename("rod-constant_t1.csv"), 1);
  assert.equal(timeFromFilename("notes.csv"), null);
});

test("snapshot reader enforces schema", () => {
  const snap = readSnapshot(rodSnaps[0]);
  assert.equal(snap.time, 0.1);
  assert.ok(snap.rows > 100);
  assert.equal(snap.columns.x.length, snap.rows);

  const bad = tmp("bad.csv");
  writeFileSync(bad, "x,y\n1,2\n");
  assert.throws(() => readSnapshot(bad), /unexpected snapshot header/);

  const empty = tmp("empty.csv");
  writeFileSync(empty, "");
  assert.throws(() => readSnapshot(empty), /empty snapshot/);

  const headerOnly = tmp("header.csv");
  writeFileSync(headerOnly, readFileSync(rodSnaps[0], "utf8").split("\n")[0] + "\n");
  assert.throws(() => readSnapshot(headerOnly), /no particles/);
});

test("convergence fit matches the simulator's published rate to 2 decimals", () => {
  const table = readConvergenceCsv(convergenceCsv);
  assert.ok(table.h.length >= 3);
  assert.notEqual(table.rate, null);
  const { rate } = fitConvergenceRate(table.h, table.rmse);
  assert.equal(rate.toFixed(2), (table.rate as number).toFixed(2));
});

test("fit recovers exact power laws", () => {
  const h = [0.4, 0.2, 0.1, 0.05];
  const e2 = h.map((v) => 3 * v * v);
  assert.ok(Math.abs(fitConvergenceRate(h, e2).rate - 2) < 1e-12);
  assert.throws(() => fitConvergenceRate([0.1, 0.2], [1, 2]), /at least 3/);
});

test("convergence figure annotates the fitted slope", () => {
  const table = readConvergenceCsv(convergenceCsv);
  const svg = plotConvergence(table);
  const { rate } = fitConvergenceRate(table.h, table.rmse);
  assert.ok(svg.includes(`slope = ${rate.toFixed(2)}`));
  assert.ok(svg.includes("<polygon"));  // order-2 reference triangle
  assert.throws(() => plotConvergence({ h: [0.1], rmse: [1], l2: [1], rate: null }), /at least 3/);
});

test("profile figure: one series per snapshot plus oracle overlay", () => {
  const snaps = rodSnaps.map(readSnapshot);
  const oracle = tmp("oracle.csv");
  writeFileSync(oracle, "x,temperature\n0,1\n10,0\n");
  const svg = plotProfile(snaps, oracle);
  assert.equal((svg.match(/<polyline/g) ?? []).length, snaps.length + 1);
  for (const t of ["t = 0.1 s", "t = 0.5 s", "t = 1 s", "reference"]) {
    assert.ok(svg.includes(t), t);
  }
  assert.throws(() => plotProfile([]), /at least one snapshot/);
});

test("radial and contour figures render the sample data", () => {
  const radial = plotRadial(ringSnaps.map(readSnapshot));
  assert.ok(radial.includes("<circle"));
  const contour = plotContour(readSnapshot(fanSnaps[4]));
  const dotCount = (contour.match(/<circle/g) ?? []).length;
  assert.equal(dotCount, readSnapshot(fanSnaps[4]).rows);
});

test("history probes the particle nearest the requested point", () => {
  const snaps = fanSnaps.map(readSnapshot);
  const pts = probeHistory(snaps, [0, 0]);
  assert.deepEqual(pts.map((p) => p.time), [0.2, 0.4, 0.6, 0.8, 1]);
  // convective cooling: center history decreases
  for (let i = 1; i < pts.length; i++) {
    assert.ok(pts[i].value <= pts[i - 1].value + 1e-9);
  }
  const svg = plotHistory(snaps, [0, 0]);
  assert.ok(svg.includes("<polyline"));
});

test("outputs are deterministic and inputs are untouched", () => {
  const before = readFileSync(convergenceCsv);
  const a = plotConvergence(readConvergenceCsv(convergenceCsv));
  const b = plotConvergence(readConvergenceCsv(convergenceCsv));
  assert.equal(a, b);
  assert.deepEqual(readFileSync(convergenceCsv), before);
  const c = plotContour(readSnapshot(fanSnaps[0]));
  const d = plotContour(readSnapshot(fanSnaps[0]));
  assert.equal(c, d);
});

test("CLI parses flags and writes figures for every kind", () => {
  const job = parseArgs(["profile", "--input", rodSnaps.join(","), "--out", "x.svg"]);
  assert.equal(job.inputs.length, 3);
  assert.throws(() => parseArgs(["volume", "--input", "a", "--out", "b"]), /unknown plot kind/);
  assert.throws(() => parseArgs(["profile", "--out", "b.svg"]), /--input is required/);
  assert.throws(
    () => parseArgs(["profile", "--input", "missing.csv", "--out", "b.svg"]),
    /does not exist/,
  );

  const cases: [string, string[]][] = [
    ["profile", ["profile", "--input", rodSnaps.join(",")]],
    ["radial", ["radial", "--input", ringSnaps.join(",")]],
    ["contour", ["contour", "--input", fanSnaps[4]]],
    ["convergence", ["convergence", "--input", convergenceCsv]],
    ["history", ["history", "--input", fanSnaps.join(","), "--probe", "0,0"]],
  ];
  for (const [kind, argv] of cases) {
    const out = tmp(`${kind}.svg`);
    assert.equal(main([...argv, "--out", out]), 0, kind);
    const svg = readFileSync(out, "utf8");
    assert.ok(svg.startsWith("<svg"), kind);
    assert.ok(statSync(out).size > 500, kind);
  }
});

test("CLI entry point runs as a subprocess", () => {
  const out = tmp("cli.svg");
  const bin = join(here, "..", "src", "cli.js");
  const stdout = execFileSync(process.execPath, [
    bin, "convergence", "--input", convergenceCsv, "--out", out,
  ], { encoding: "utf8" });
  assert.ok(stdout.includes(out));
  assert.ok(readFileSync(out, "utf8").includes("slope ="));
});
