"""Error norms and convergence-rate estimation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

# Relative errors are undefined where the reference vanishes; points with
# |ref| at or below this floor are excluded from the L2 relative norm and
# counted in ErrorReport.excluded_points.
REFERENCE_FLOOR = 1e-12


@dataclass
class ErrorReport:
    rmse: float
    l2: float
    excluded_points: int
    n_points: int
    extras: dict = field(default_factory=dict)


def rmse(values, reference) -> float:
    """Root mean square of the pointwise error."""
    values = np.asarray(values, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if values.shape != reference.shape:
        raise ValueError("shape mismatch between values and reference")
    if values.size == 0:
        raise ValueError("no points to compare")
    diff = values - reference
    return float(np.sqrt(np.mean(diff * diff)))


def l2_error(values, reference):
    """Error norm over all points plus the guarded relative-error field.

    The norm uses the same root-mean-square formula as rmse() and includes
    every point. The relative field (v - ref) / ref is only defined where
    |ref| > REFERENCE_FLOOR; other points are excluded from it and counted.

    Returns (l2, relative_field, excluded).
    """
    values = np.asarray(values, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if values.shape != reference.shape:
        raise ValueError("shape mismatch between values and reference")
    l2 = rmse(values, reference)
    keep = np.abs(reference) > REFERENCE_FLOOR
    excluded = int(np.count_nonzero(~keep))
    relative = (values[keep] - reference[keep]) / reference[keep]
    return l2, relative, excluded


def error_report(values, reference, **extras) -> ErrorReport:
    l2, _, excluded = l2_error(values, reference)
    return ErrorReport(rmse=rmse(values, reference), l2=l2,
                       excluded_points=excluded,
                       n_points=int(np.asarray(values).size), extras=extras)


def fit_convergence_rate(h_values, errors):
    """Least-squares slope of log(error) against log(1/h).

    Returns (rate, intercept). A positive rate means the error shrinks as
    the mesh is refined.
    """
    h_values = np.asarray(h_values, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if h_values.size != errors.size or h_values.size < 3:
        raise ValueError("need at least three (h, error) pairs")
    if len(np.unique(h_values)) != h_values.size:
        raise ValueError("h values must be distinct")
    if np.any(h_values <= 0) or np.any(errors <= 0):
        raise ValueError("h values and errors must be positive")
    x = np.log(1.0 / h_values)
    y = np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    return float(-slope), float(intercept)


def sample_reference_at_particles(fdm, positions, time, frame="identity",
                                  angle=0.0, center=(0.0, 0.0), offset=None):
    """Reference temperatures at particle positions.

    1D radial references are interpolated in r = ||x - center||; 2D
    references are sampled bilinearly at the (optionally back-rotated)
    position plus `offset`, which maps body coordinates onto the reference
    grid. Returns (values, inside_mask); a warning is logged when more than
    1% of the points fall outside the reference domain.
    """
    positions = np.asarray(positions, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    if frame == "inverse-rotation":
        pts = rotate_points(positions[:, :2], -angle, center)
    elif frame == "identity":
        pts = positions
    else:
        raise ValueError(f"unknown frame {frame!r}")
    if len(fdm.coords) == 1:
        r = np.linalg.norm(pts - center[:pts.shape[1]], axis=1)
        rg = fdm.coords[0]
        inside = (r >= rg[0] - 1e-9) & (r <= rg[-1] + 1e-9)
        values = fdm.sample_radial(time, np.clip(r, rg[0], rg[-1]))
    else:
        xy = pts[:, :2] + (0.0 if offset is None else np.asarray(offset))
        values, inside = fdm.sample_bilinear(time, xy)
    n_out = int(np.count_nonzero(~inside))
    if n_out > 0.01 * positions.shape[0]:
        log.warning("%d of %d points outside the reference domain",
                    n_out, positions.shape[0])
    return values, inside


def rotate_points(points, angle, center):
    """Rotate 2D points by `angle` (radians) about `center`."""
    points = np.asarray(points, dtype=np.float64)
    c, s = np.cos(angle), np.sin(angle)
    rel = points - np.asarray(center, dtype=np.float64)
    out = np.empty_like(rel)
    out[:, 0] = c * rel[:, 0] - s * rel[:, 1]
    out[:, 1] = s * rel[:, 0] + c * rel[:, 1]
    return out + center
