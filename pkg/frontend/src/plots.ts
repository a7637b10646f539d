/** The five figure kinds, all rendered to deterministic SVG strings. */

import { readFileSync } from "node:fs";

import { colorByValue, viridis } from "./color.js";
import { ConvergenceTable, Snapshot } from "./csv.js";
import { fitConvergenceRate } from "./fit.js";
import { Figure, SERIES_COLORS } from "./svg.js";

export const PLOT_KINDS = ["profile", "radial", "contour", "convergence", "history"] as const;
export type PlotKind = (typeof PLOT_KINDS)[number];

export interface PlotJob {
  kind: PlotKind;
  inputs: string[];
  out: string;
  title?: string;
  /** optional two-column `x,temperature` CSV overlaid on profile plots */
  oracle?: string;
  /** probe location for history plots */
  probe?: number[];
}

function pad([lo, hi]: [number, number], frac = 0.05): [number, number] {
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - frac * span, hi + frac * span];
}

function extent(arrays: ArrayLike<number>[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const a of arrays) {
    for (let i = 0; i < a.length; i++) {
      if (a[i] < lo) lo = a[i];
      if (a[i] > hi) hi = a[i];
    }
  }
  return [lo, hi];
}

function seriesLabel(snap: Snapshot): string {
  return snap.time === null ? snap.path : `t = ${snap.time} s`;
}

/** sort indices by key without mutating the snapshot columns */
function order(keys: ArrayLike<number>): number[] {
  const idx = Array.from({ length: keys.length }, (_, i) => i);
  idx.sort((a, b) => keys[a] - keys[b] || a - b);
  return idx;
}

export function plotProfile(snapshots: Snapshot[], oraclePath?: string, title?: string): string {
  if (snapshots.length === 0) throw new Error("profile plot needs at least one snapshot");
  const xs = snapshots.map((s) => s.columns.x);
  const Ts = snapshots.map((s) => s.columns.temperature);
  const fig = new Figure(pad(extent(xs)), pad(extent(Ts)), {
    title: title ?? "temperature profile",
    xLabel: "x (m)",
    yLabel: "temperature (°C)",
  });
  const legend: { label: string; color: string }[] = [];
  snapshots.forEach((snap, k) => {
    const color = SERIES_COLORS[k % SERIES_COLORS.length];
    const idx = order(snap.columns.x);
    fig.polyline(
      idx.map((i) => snap.columns.x[i]),
      idx.map((i) => snap.columns.temperature[i]),
      color,
    );
    legend.push({ label: seriesLabel(snap), color });
  });
  if (oraclePath) {
    const rows = readFileSync(oraclePath, "utf8")
      .split("\n")
      .filter((l) => l.length > 0 && !l.startsWith("x,"))
      .map((l) => l.split(",").map(Number));
    fig.polyline(rows.map((r) => r[0]), rows.map((r) => r[1]), "#000000", 1.2, "5,4");
    legend.push({ label: "reference", color: "#000000" });
  }
  fig.legend(legend);
  return fig.render();
}

export function plotRadial(snapshots: Snapshot[], title?: string): string {
  if (snapshots.length === 0) throw new Error("radial plot needs at least one snapshot");
  const radii = snapshots.map((s) => {
    const { x, y, z } = s.columns;
    const r = new Float64Array(s.rows);
    for (let i = 0; i < s.rows; i++) r[i] = Math.hypot(x[i], y[i], z[i]);
    return r;
  });
  const Ts = snapshots.map((s) => s.columns.temperature);
  const fig = new Figure(pad(extent(radii)), pad(extent(Ts)), {
    title: title ?? "radial temperature",
    xLabel: "r (m)",
    yLabel: "temperature (°C)",
  });
  const legend: { label: string; color: string }[] = [];
  snapshots.forEach((snap, k) => {
    const color = SERIES_COLORS[k % SERIES_COLORS.length];
    fig.dots(Array.from(radii[k]), Array.from(snap.columns.temperature), color, 1.6);
    legend.push({ label: seriesLabel(snap), color });
  });
  fig.legend(legend);
  return fig.render();
}

export function plotContour(snap: Snapshot, title?: string): string {
  // particle scatter colored by temperature; honest to the MPM data
  const { x, y, temperature } = snap.columns;
  const fig = new Figure(pad(extent([x])), pad(extent([y])), {
    title: title ?? (snap.time === null ? "temperature field" : `temperature field, t = ${snap.time} s`),
    xLabel: "x (m)",
    yLabel: "y (m)",
  });
  const { colors, lo, hi } = colorByValue(temperature);
  fig.dots(Array.from(x), Array.from(y), colors, 2.2);
  // compact colorbar caption
  fig.text(fig.xScale.domain[0], fig.yScale.domain[1],
    ` ${lo.toFixed(1)} – ${hi.toFixed(1)} °C (${viridis(0)} → ${viridis(1)})`,
    { size: 11 });
  return fig.render();
}

export function plotConvergence(table: ConvergenceTable, title?: string): string {
  if (table.h.length < 3) throw new Error("convergence plot needs at least 3 (h, rmse) points");
  const { rate, intercept } = fitConvergenceRate(table.h, table.rmse);
  const hLo = Math.min(...table.h);
  const hHi = Math.max(...table.h);
  const eLo = Math.min(...table.rmse);
  const eHi = Math.max(...table.rmse);
  const fig = new Figure(
    [hLo / 1.5, hHi * 1.5],
    [eLo / 2.5, eHi * 2.5],
    { title: title ?? "mesh convergence", xLabel: "h (m)", yLabel: "RMSE (°C)", logX: true, logY: true },
  );
  fig.polyline(
    [hLo, hHi],
    [intercept * Math.pow(hLo, rate), intercept * Math.pow(hHi, rate)],
    "#999999", 1.2, "5,4",
  );
  fig.dots(table.h, table.rmse, "#1f77b4", 4);
  // order-2 reference triangle below the data
  const tx0 = hLo * 1.2;
  const tx1 = tx0 * 2;
  const ty0 = eLo / 1.8;
  fig.polygon([tx0, tx1, tx1], [ty0, ty0, ty0 * 4], "#333333");
  fig.text(tx1 * 1.1, ty0 * 1.8, "2", { size: 12 });
  fig.text(hLo, eHi * 1.6, `slope = ${rate.toFixed(2)}`, { size: 14 });
  return fig.render();
}

export interface HistoryPoint {
  time: number;
  value: number;
}

export function probeHistory(snapshots: Snapshot[], probe: number[]): HistoryPoint[] {
  const [px, py, pz] = [probe[0] ?? 0, probe[1] ?? 0, probe[2] ?? 0];
  const pts: HistoryPoint[] = [];
  for (const snap of snapshots) {
    if (snap.time === null) {
      throw new Error(`${snap.path}: history plots need times in file names ('..._t<tag>.csv')`);
    }
    const { x, y, z, temperature } = snap.columns;
    let best = 0;
    let bestD = Infinity;
    for (let i = 0; i < snap.rows; i++) {
      const d = (x[i] - px) ** 2 + (y[i] - py) ** 2 + (z[i] - pz) ** 2;
      if (d < bestD) {
        bestD = d;
        best = i;
      }
    }
    pts.push({ time: snap.time, value: temperature[best] });
  }
  pts.sort((a, b) => a.time - b.time);
  return pts;
}

export function plotHistory(snapshots: Snapshot[], probe: number[], title?: string): string {
  if (snapshots.length === 0) throw new Error("history plot needs at least one snapshot");
  const pts = probeHistory(snapshots, probe);
  const times = pts.map((p) => p.time);
  const vals = pts.map((p) => p.value);
  const fig = new Figure(pad([Math.min(0, ...times), Math.max(...times)]), pad(extent([vals])), {
    title: title ?? `probe history at (${probe.join(", ")})`,
    xLabel: "t (s)",
    yLabel: "temperature (°C)",
  });
  fig.polyline(times, vals, SERIES_COLORS[0]);
  fig.dots(times, vals, SERIES_COLORS[0], 3);
  return fig.render();
}
