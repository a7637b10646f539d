"""Command-line entry point.

Subcommands:
  run              execute one scenario from a JSON config, write artifacts
  convergence      mesh-refinement study on a scenario, print the fitted rate
  compare          run a scenario with several boundary imposition methods
  list-scenarios   print the registry
"""

from __future__ import annotations

import argparse
import os
import sys
import time as _time

import numpy as np

from . import io as mio
from . import scenarios as sc
from .metrics import fit_convergence_rate


def _set_threads(n):
    if n is None:
        return
    os.environ["NUMBA_NUM_THREADS"] = str(n)
    os.environ["OMP_NUM_THREADS"] = str(n)


def _run_one(case, out_dir, scenario_name, formats=("csv",)):
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def on_snapshot(state, t):
        tag = f"{t:g}".replace(".", "p")
        if "csv" in formats:
            path = os.path.join(out_dir, f"{scenario_name}_t{tag}.csv")
            mio.write_snapshot_csv(path, state.particles)
            written.append(path)
        if "vtk" in formats:
            path = os.path.join(out_dir, f"{scenario_name}_t{tag}.vtk")
            mio.write_vtk_polydata(path, state.particles,
                                   title=f"{scenario_name} t={t:g}")
            written.append(path)

    t0 = _time.perf_counter()
    reports = sc.run_case(case, on_snapshot=on_snapshot)
    runtime = _time.perf_counter() - t0

    final_t = max(case.snapshot_times)
    rep = reports.get(final_t)
    record = {"scenario": scenario_name, "method": case.method, "h": case.h,
              "ppc": case.ppc, "dt": case.dt, "time": final_t,
              "rmse": rep.rmse if rep else float("nan"),
              "l2": rep.l2 if rep else float("nan"),
              "excluded_points": rep.excluded_points if rep else 0,
              "runtime_seconds": runtime}
    mpath = os.path.join(out_dir, f"{scenario_name}_metrics.json")
    mio.write_metrics_json(mpath, record)
    written.append(mpath)
    return record, written


def cmd_run(args):
    cfg = mio.load_config(args.config)
    _set_threads(args.threads)
    name = cfg["scenario"]
    case = sc.build_scenario(name, cfg)
    out_dir = args.out or cfg.get("output", {}).get("dir", ".")
    formats = tuple(cfg.get("output", {}).get("formats", ["csv"]))
    record, written = _run_one(case, out_dir, name, formats)
    for path in written:
        print(path)
    if np.isfinite(record["rmse"]):
        print(f"rmse={record['rmse']:.6e} l2={record['l2']:.6e} "
              f"(t={record['time']:g})")
    return 0


def cmd_convergence(args):
    meshes = [float(v) for v in args.meshes.split(",")]
    rows = []
    for h in meshes:
        cfg = {"grid": {"h": h},
               "time": {"cfl_factor": args.cfl_factor, "t_end": args.t_end,
                        "snapshots": [args.t_end]},
               "geometry": {"conforming": False}}
        case = sc.build_scenario(args.scenario, cfg)
        reports = sc.run_case(case)
        rep = reports[args.t_end]
        rows.append({"h": h, "rmse": rep.rmse, "l2": rep.l2})
        print(f"h={h:g} dt={case.dt:g} rmse={rep.rmse:.6e}")
    rate, _ = fit_convergence_rate([r["h"] for r in rows],
                                   [r["rmse"] for r in rows])
    print(f"fitted convergence rate: {rate:.2f}")
    if args.out:
        mio.write_convergence_csv(args.out, rows, rate=rate)
        print(args.out)
    return 0


def cmd_compare(args):
    methods = args.methods.split(",")
    out_dir = args.out or "."
    for method in methods:
        cfg = {"bc": {"method": method}}
        case = sc.build_scenario(args.scenario, cfg)
        record, _ = _run_one(case, out_dir, f"{args.scenario}-{method}")
        print(f"{method}: rmse={record['rmse']:.6e}")
    return 0


def cmd_list(_args):
    for name in sc.SCENARIOS:
        print(name)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mpmheat",
        description="Explicit MPM heat conduction with virtual-flux "
                    "Neumann boundaries")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--threads", type=int, default=None)
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("convergence", help="mesh refinement study")
    p_conv.add_argument("--scenario", default="rod-constant")
    p_conv.add_argument("--meshes", default="0.5,0.2,0.1,0.05,0.02")
    p_conv.add_argument("--cfl-factor", type=float, default=0.1)
    p_conv.add_argument("--t-end", type=float, default=0.5)
    p_conv.add_argument("--out", default=None)
    p_conv.set_defaults(func=cmd_convergence)

    p_cmp = sub.add_parser("compare", help="compare imposition methods")
    p_cmp.add_argument("--scenario", default="rod-constant")
    p_cmp.add_argument("--methods", default="vhfm,node,particle")
    p_cmp.add_argument("--out", default=None)
    p_cmp.set_defaults(func=cmd_compare)

    p_ls = sub.add_parser("list-scenarios", help="print available scenarios")
    p_ls.set_defaults(func=cmd_list)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KeyError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
