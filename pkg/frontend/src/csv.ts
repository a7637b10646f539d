/** Readers for the simulator's CSV/JSON artifacts. Inputs are never mutated. */

import { readFileSync } from "node:fs";
import { basename } from "node:path";

export const SNAPSHOT_COLUMNS = [
  "id", "x", "y", "z", "volume", "temperature",
  "qx", "qy", "qz", "boundary", "nx", "ny", "nz",
] as const;

export type SnapshotColumn = (typeof SNAPSHOT_COLUMNS)[number];

export interface Snapshot {
  path: string;
  /** time parsed from the `<scenario>_t<tag>.csv` file name, if present */
  time: number | null;
  columns: Record<SnapshotColumn, Float64Array>;
  rows: number;
}

/** Parse the time tag in file names like `ring_t0p5.csv` (`p` encodes `.`). */
export function timeFromFilename(path: string): number | null {
  const m = basename(path).match(/_t([0-9p]+)\.csv$/);
  if (!m) return null;
  const value = Number(m[1].replace("p", "."));
  return Number.isFinite(value) ? value : null;
}

export function readSnapshot(path: string): Snapshot {
  const text = readFileSync(path, "utf8");
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: empty snapshot file`);
  }
  const header = lines[0].split(",");
  if (header.join(",") !== SNAPSHOT_COLUMNS.join(",")) {
    throw new Error(`${path}: unexpected snapshot header '${lines[0]}'`);
  }
  const rows = lines.length - 1;
  if (rows === 0) {
    throw new Error(`${path}: snapshot has a header but no particles`);
  }
  const columns = Object.fromEntries(
    SNAPSHOT_COLUMNS.map((c) => [c, new Float64Array(rows)]),
  ) as Record<SnapshotColumn, Float64Array>;
  for (let i = 0; i < rows; i++) {
    const parts = lines[i + 1].split(",");
    if (parts.length !== SNAPSHOT_COLUMNS.length) {
      throw new Error(`${path}: row ${i + 1} has ${parts.length} fields`);
    }
    for (let j = 0; j < SNAPSHOT_COLUMNS.length; j++) {
      const name = SNAPSHOT_COLUMNS[j];
      const v = Number(parts[j]);
      // normals are nan where the surface-normal fit is degenerate
      const nanOk = name === "nx" || name === "ny" || name === "nz";
      if (!Number.isFinite(v) && !(nanOk && Number.isNaN(v))) {
        throw new Error(`${path}: row ${i + 1}, column ${name}: '${parts[j]}'`);
      }
      columns[name][i] = v;
    }
  }
  return { path, time: timeFromFilename(path), columns, rows };
}

export interface ConvergenceTable {
  h: number[];
  rmse: number[];
  l2: number[];
  /** fitted rate from the `# rate=...` footer, if present */
  rate: number | null;
}

export function readConvergenceCsv(path: string): ConvergenceTable {
  const lines = readFileSync(path, "utf8").split("\n").filter((l) => l.length > 0);
  if (lines.length === 0 || lines[0] !== "h,rmse,l2") {
    throw new Error(`${path}: expected 'h,rmse,l2' header`);
  }
  const table: ConvergenceTable = { h: [], rmse: [], l2: [], rate: null };
  for (const line of lines.slice(1)) {
    const rateMatch = line.match(/^# rate=([-0-9.eE+]+)$/);
    if (rateMatch) {
      table.rate = Number(rateMatch[1]);
      continue;
    }
    const parts = line.split(",").map(Number);
    if (parts.length !== 3 || parts.some((v) => !Number.isFinite(v))) {
      throw new Error(`${path}: bad row '${line}'`);
    }
    table.h.push(parts[0]);
    table.rmse.push(parts[1]);
    table.l2.push(parts[2]);
  }
  return table;
}

export interface MetricsRecord {
  scenario: string;
  method: string;
  h: number;
  ppc: number;
  dt: number;
  time: number;
  rmse: number;
  l2: number;
  excluded_points: number;
  runtime_seconds: number;
}

export function readMetricsJson(path: string): MetricsRecord {
  const data = JSON.parse(readFileSync(path, "utf8"));
  for (const key of ["scenario", "method", "h", "dt", "time", "rmse", "l2"]) {
    if (!(key in data)) {
      throw new Error(`${path}: metrics record missing '${key}'`);
    }
  }
  return data as MetricsRecord;
}
