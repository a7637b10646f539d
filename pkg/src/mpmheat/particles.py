"""Lagrangian material points: generation, storage, kinematic motion.

All per-particle state is kept in structure-of-arrays form. 2D particles
carry unit out-of-plane thickness, so volumes are m^2 interpreted as m^3/m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ParticleSet:
    x: np.ndarray                      # positions (n, dim)
    volume: np.ndarray                 # V_p
    density: np.ndarray                # rho_p
    specific_heat: np.ndarray          # c_p
    conductivity: np.ndarray           # kappa_p
    temperature: np.ndarray            # T_p
    flux: np.ndarray = None            # q_p (n, dim)
    source: np.ndarray = None          # Q_p, W/m^3
    phi: np.ndarray = None             # constant marker, 1 per particle
    boundary: np.ndarray = None        # free-surface flag
    normal: np.ndarray = None          # outward unit normal (valid where boundary)

    def __post_init__(self):
        n, dim = self.x.shape
        if self.flux is None:
            self.flux = np.zeros((n, dim))
        if self.source is None:
            self.source = np.zeros(n)
        if self.phi is None:
            self.phi = np.ones(n)
        if self.boundary is None:
            self.boundary = np.zeros(n, dtype=bool)
        if self.normal is None:
            self.normal = np.zeros((n, dim))
        if np.any(self.volume <= 0):
            raise ValueError("particle volumes must be positive")
        if np.any(self.density <= 0) or np.any(self.specific_heat <= 0):
            raise ValueError("density and specific heat must be positive")
        if np.any(self.conductivity < 0):
            raise ValueError("conductivity must be nonnegative")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def total_volume(self) -> float:
        return float(self.volume.sum())


def _uniform_set(x, spacing, dim, rho=1.0, c=1.0, kappa=1.0, T0=0.0):
    n = x.shape[0]
    return ParticleSet(
        x=np.ascontiguousarray(x, dtype=np.float64),
        volume=np.full(n, float(spacing) ** dim),
        density=np.full(n, rho),
        specific_heat=np.full(n, c),
        conductivity=np.full(n, kappa),
        temperature=np.full(n, T0),
    )


def _lattice(lo, hi, spacing, dim):
    """Cell-centered lattice over [lo, hi): points at lo + (i + 1/2) * spacing."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    counts = []
    for d in range(dim):
        ratio = (hi[d] - lo[d]) / spacing
        n = round(ratio)
        if n < 1 or abs(ratio - n) > 0.005 * n:
            raise ValueError(
                f"spacing {spacing} does not divide extent {hi[d] - lo[d]} along axis {d}")
        counts.append(n)
    axes = [lo[d] + (np.arange(counts[d]) + 0.5) * spacing for d in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def generate_box_points(lo, hi, spacing, **mat) -> ParticleSet:
    """Regular lattice at subcell centers filling the box [lo, hi]."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ValueError(f"degenerate box: lo={lo}, hi={hi}")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    dim = lo.shape[0]
    pts = _lattice(lo, hi, spacing, dim)
    return _uniform_set(pts, spacing, dim, **mat)


def generate_annulus_points(center, r_inner, r_outer, spacing, **mat) -> ParticleSet:
    """Box lattice over the outer bounding square, filtered to the radial band."""
    if not 0 < r_inner < r_outer:
        raise ValueError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    center = np.asarray(center, dtype=np.float64)
    lo = center - r_outer
    hi = center + r_outer
    pts = _lattice(lo, hi, spacing, 2)
    r = np.linalg.norm(pts - center, axis=1)
    keep = (r >= r_inner) & (r <= r_outer)
    return _uniform_set(pts[keep], spacing, 2, **mat)


def generate_sphere_points(center, radius, spacing, **mat) -> ParticleSet:
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = np.asarray(center, dtype=np.float64)
    pts = _lattice(center - radius, center + radius, spacing, 3)
    keep = np.linalg.norm(pts - center, axis=1) <= radius
    if not np.any(keep):
        raise ValueError("spacing too coarse: no particle falls inside the sphere")
    return _uniform_set(pts[keep], spacing, 3, **mat)


def generate_fan_points(center, hub_radius, blade_outer_radius, n_blades,
                        blade_angular_width, spacing, **mat) -> ParticleSet:
    """Hub disk plus equally spaced angular blade sectors, lattice-filtered."""
    if not 0 < hub_radius < blade_outer_radius:
        raise ValueError("need 0 < hub_radius < blade_outer_radius")
    if n_blades < 1:
        raise ValueError("need at least one blade")
    if not 0 < blade_angular_width < 2 * np.pi / n_blades:
        raise ValueError("blade width must lie in (0, 2*pi/n_blades)")
    center = np.asarray(center, dtype=np.float64)
    pts = _lattice(center - blade_outer_radius, center + blade_outer_radius,
                   spacing, 2)
    rel = pts - center
    r = np.linalg.norm(rel, axis=1)
    theta = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2 * np.pi)
    in_hub = r <= hub_radius
    # blade k spans theta in [k * 2pi/n - width/2, k * 2pi/n + width/2]
    pitch = 2 * np.pi / n_blades
    off = np.mod(theta + blade_angular_width / 2, pitch)
    in_blade = (r <= blade_outer_radius) & (off <= blade_angular_width)
    keep = in_hub | in_blade
    return _uniform_set(pts[keep], spacing, 2, **mat)


def apply_rigid_rotation(points: ParticleSet, center, omega_rps: float,
                         dt: float) -> None:
    """Rotate positions about ``center`` by 2*pi*omega*dt (2D only).

    Thermal fields ride along unchanged; normals are recomputed from the
    grid every step, so they are deliberately not rotated here.
    """
    if points.dim != 2:
        raise NotImplementedError("rigid rotation is only supported in 2D")
    angle = 2.0 * np.pi * omega_rps * dt
    if angle == 0.0:
        return
    center = np.asarray(center, dtype=np.float64)
    ca, sa = np.cos(angle), np.sin(angle)
    rel = points.x - center
    points.x[:, 0] = center[0] + ca * rel[:, 0] - sa * rel[:, 1]
    points.x[:, 1] = center[1] + sa * rel[:, 0] + ca * rel[:, 1]


def load_points_from_csv(path) -> ParticleSet:
    """Read a particle snapshot in the standard CSV schema.

    Expected header: id,x,y,z,volume,temperature,qx,qy,qz,boundary,nx,ny,nz.
    A file with only the 2D columns populated (z == 0 everywhere) loads as 2D.
    """
    from .io import SNAPSHOT_COLUMNS

    with open(path) as f:
        header = f.readline().strip()
    if not header:
        raise ValueError(f"{path}: empty snapshot file")
    cols = tuple(header.split(","))
    if cols != SNAPSHOT_COLUMNS:
        raise ValueError(f"{path}: unexpected header {header!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        raise ValueError(f"{path}: snapshot contains no particles")
    if data.shape[1] != len(SNAPSHOT_COLUMNS):
        raise ValueError(f"{path}: expected {len(SNAPSHOT_COLUMNS)} columns")
    bad = np.nonzero(data[:, 4] <= 0)[0]
    if bad.size:
        raise ValueError(f"{path}: non-positive volume in data row {bad[0] + 1}")
    dim = 3 if np.any(data[:, 3] != 0.0) or np.any(data[:, 8] != 0.0) else 2
    n = data.shape[0]
    ps = ParticleSet(
        x=np.ascontiguousarray(data[:, 1:1 + dim]),
        volume=data[:, 4].copy(),
        density=np.ones(n),
        specific_heat=np.ones(n),
        conductivity=np.ones(n),
        temperature=data[:, 5].copy(),
        flux=np.ascontiguousarray(data[:, 6:6 + dim]),
        boundary=data[:, 9] != 0.0,
        normal=np.ascontiguousarray(data[:, 10:10 + dim]),
    )
    return ps
