"""File output: particle snapshots (CSV), run metrics (JSON), legacy VTK.

All writers go through an atomic replace so a crashed run never leaves a
truncated file behind. Floats are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

SNAPSHOT_COLUMNS = ("id", "x", "y", "z", "volume", "temperature",
                    "qx", "qy", "qz", "boundary", "nx", "ny", "nz")

METRICS_KEYS = ("scenario", "method", "h", "ppc", "dt", "time",
                "rmse", "l2", "excluded_points", "runtime_seconds")

_FLOAT_FMT = "{:.17g}"


def _atomic_write_text(path, text):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    return _FLOAT_FMT.format(float(v))


def _snapshot_table(particles):
    n = particles.x.shape[0]
    dim = particles.x.shape[1]
    zeros = np.zeros(n)
    x = particles.x[:, 0]
    y = particles.x[:, 1] if dim >= 2 else zeros
    z = particles.x[:, 2] if dim == 3 else zeros
    qx = particles.flux[:, 0]
    qy = particles.flux[:, 1] if dim >= 2 else zeros
    qz = particles.flux[:, 2] if dim == 3 else zeros
    nx = particles.normal[:, 0]
    ny = particles.normal[:, 1] if dim >= 2 else zeros
    nz = particles.normal[:, 2] if dim == 3 else zeros
    return (x, y, z, particles.volume, particles.temperature,
            qx, qy, qz, particles.boundary.astype(np.int64), nx, ny, nz)


def write_snapshot_csv(path, particles):
    """Particle state as CSV with the fixed column layout."""
    cols = _snapshot_table(particles)
    n = particles.x.shape[0]
    lines = [",".join(SNAPSHOT_COLUMNS)]
    for i in range(n):
        row = [str(i)]
        for c, col in zip(SNAPSHOT_COLUMNS[1:], cols):
            if c == "boundary":
                row.append(str(int(col[i])))
            else:
                row.append(_fmt(col[i]))
        lines.append(",".join(row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_metrics_json(path, record):
    """Run metrics as a flat JSON object with a fixed key set."""
    missing = [k for k in METRICS_KEYS if k not in record]
    if missing:
        raise KeyError(f"metrics record missing keys: {missing}")
    out = {k: record[k] for k in METRICS_KEYS}
    for k in ("h", "dt", "time", "rmse", "l2", "runtime_seconds"):
        out[k] = float(out[k])
    out["ppc"] = int(out["ppc"])
    out["excluded_points"] = int(out["excluded_points"])
    _atomic_write_text(path, json.dumps(out, indent=2) + "\n")


def read_metrics_json(path):
    with open(path) as f:
        return json.load(f)


def write_vtk_polydata(path, particles, title="particle snapshot"):
    """Legacy ASCII VTK POLYDATA file with temperature, flux, and normals."""
    x, y, z, vol, T, qx, qy, qz, bnd, nx, ny, nz = _snapshot_table(particles)
    n = len(T)
    parts = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET POLYDATA",
             f"POINTS {n} double"]
    for i in range(n):
        parts.append(f"{_fmt(x[i])} {_fmt(y[i])} {_fmt(z[i])}")
    parts.append(f"VERTICES {n} {2 * n}")
    for i in range(n):
        parts.append(f"1 {i}")
    parts.append(f"POINT_DATA {n}")
    parts.append("SCALARS temperature double 1")
    parts.append("LOOKUP_TABLE default")
    parts.extend(_fmt(v) for v in T)
    parts.append("SCALARS volume double 1")
    parts.append("LOOKUP_TABLE default")
    parts.extend(_fmt(v) for v in vol)
    parts.append("SCALARS boundary int 1")
    parts.append("LOOKUP_TABLE default")
    parts.extend(str(int(v)) for v in bnd)
    parts.append("VECTORS heat_flux double")
    for i in range(n):
        parts.append(f"{_fmt(qx[i])} {_fmt(qy[i])} {_fmt(qz[i])}")
    parts.append("NORMALS surface_normal double")
    for i in range(n):
        parts.append(f"{_fmt(nx[i])} {_fmt(ny[i])} {_fmt(nz[i])}")
    _atomic_write_text(path, "\n".join(parts) + "\n")


def write_convergence_csv(path, rows, rate=None):
    """Mesh-refinement table: columns h, rmse[, l2]; optional '# rate=' footer."""
    lines = ["h,rmse,l2"]
    for r in rows:
        lines.append(f"{_fmt(r['h'])},{_fmt(r['rmse'])},{_fmt(r['l2'])}")
    if rate is not None:
        lines.append(f"# rate={rate:.2f}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def load_config(path):
    """Run configuration from a JSON file."""
    with open(path) as f:
        cfg = json.load(f)
    if "scenario" not in cfg:
        raise KeyError("config must name a 'scenario'")
    return cfg
