"""Independent reference solutions used to verify the particle solver.

Closed-form solutions for the semi-infinite rod (constant and convective
flux at x = 0) plus explicit finite-difference solvers for the annulus
(1D polar), the sphere (1D spherical), and the square (2D Cartesian), each
with convective or constant-flux boundary closures.

The one-sided boundary closures couple the unknown boundary value to the
interior, so each is solved algebraically for the boundary temperature at
the current step before the interior update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special


def erfc(x):
    """Complementary error function (vectorized, double precision)."""
    return special.erfc(x)


def _exp_erfc(a, b):
    """exp(a) * erfc(b) evaluated stably via the scaled function erfcx.

    For the convective rod solution a - b^2 = -x^2/(4 alpha t) <= 0, so the
    rewritten form exp(a - b^2) * erfcx(b) never overflows.
    """
    return np.exp(a - b * b) * special.erfcx(b)


def rod_T_constant_flux(x, t, T0=0.0, q_s=1.0, kappa=1.0, alpha=1.0):
    """Semi-infinite rod, prescribed inward flux q_s at x = 0."""
    x = np.asarray(x, dtype=np.float64)
    if t <= 0:
        return np.full_like(x, T0)
    s = np.sqrt(alpha * t)
    arg = x / (2.0 * s)
    bracket = np.exp(-arg * arg) - arg * np.sqrt(np.pi) * erfc(arg)
    return T0 + 2.0 * q_s / kappa * s / np.sqrt(np.pi) * bracket


def rod_T_convective(x, t, T0=0.0, T_a=1.0, gamma=1.0, kappa=1.0, alpha=1.0):
    """Semi-infinite rod, convective exchange with ambient T_a at x = 0."""
    x = np.asarray(x, dtype=np.float64)
    if t <= 0:
        return np.full_like(x, T0)
    s = np.sqrt(alpha * t)
    arg = x / (2.0 * s)
    a = gamma * x / kappa + gamma * gamma * alpha * t / (kappa * kappa)
    b = arg + gamma * s / kappa
    return T0 + (T_a - T0) * (erfc(arg) - _exp_erfc(a, b))


@dataclass
class FdmSolution:
    """Reference temperature fields at requested times on the FDM grid."""
    coords: tuple              # (r,) for radial problems, (x, y) for the square
    times: np.ndarray
    fields: list               # one array per time
    spacing: float
    dt: float

    def field_at(self, time: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - time)))
        if abs(self.times[i] - time) > 1e-9 + 1e-6 * abs(time):
            raise KeyError(f"time {time} not stored (have {self.times})")
        return self.fields[i]

    def sample_radial(self, time: float, r) -> np.ndarray:
        """Linear interpolation of a 1D radial field."""
        field = self.field_at(time)
        return np.interp(np.asarray(r, dtype=np.float64), self.coords[0], field)

    def sample_bilinear(self, time: float, pts) -> tuple:
        """Bilinear interpolation at points (n, 2). Returns (values, inside)."""
        field = self.field_at(time)
        x, y = self.coords
        pts = np.asarray(pts, dtype=np.float64)
        dx = x[1] - x[0]
        dy = y[1] - y[0]
        fx = (pts[:, 0] - x[0]) / dx
        fy = (pts[:, 1] - y[0]) / dy
        inside = (fx >= -1e-9) & (fx <= len(x) - 1 + 1e-9) & \
                 (fy >= -1e-9) & (fy <= len(y) - 1 + 1e-9)
        i = np.clip(np.floor(fx).astype(int), 0, len(x) - 2)
        j = np.clip(np.floor(fy).astype(int), 0, len(y) - 2)
        u = np.clip(fx - i, 0.0, 1.0)
        v = np.clip(fy - j, 0.0, 1.0)
        vals = (field[i, j] * (1 - u) * (1 - v) + field[i + 1, j] * u * (1 - v)
                + field[i, j + 1] * (1 - u) * v + field[i + 1, j + 1] * u * v)
        return vals, inside


def _check_stability(dt, limit, label):
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"{label}: dt={dt} unstable, explicit limit {limit}")


def _snapshot_times(t_end, times):
    if times is None:
        times = [t_end]
    return np.sort(np.unique(np.asarray(times, dtype=np.float64)))


def _convective_closure(kappa, gamma, dr, T_a, t1, t2):
    """Boundary value from the three-point one-sided convective closure
    kappa * dT/dn_inward = gamma (T_b - T_a) with neighbors t1 (nearest)
    and t2 (next)."""
    return (kappa * (4.0 * t1 - t2) + 2.0 * dr * gamma * T_a) / \
           (3.0 * kappa + 2.0 * dr * gamma)


def _flux_closure(kappa, q_s, dr, t1, t2):
    """Boundary value for a prescribed inward flux q_s."""
    return (4.0 * t1 - t2 + 2.0 * dr * q_s / kappa) / 3.0


def fdm_ring(r_inner, r_outer, params, dr, dt, t_end, bc,
             T0=0.0, times=None) -> FdmSolution:
    """1D polar explicit reference for the annulus (flux on both boundaries)."""
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    alpha, kappa = params.alpha, params.kappa
    _check_stability(dt, 0.5 * dr * dr / alpha, "fdm_ring")
    n = round((r_outer - r_inner) / dr)
    r = r_inner + dr * np.arange(n + 1)
    T = np.full(n + 1, float(T0))
    want = _snapshot_times(t_end, times)
    fields, stored = [], []
    nsteps = int(np.ceil(t_end / dt - 1e-9))

    def close(Tcur):
        if bc.kind == "convective":
            Tcur[0] = _convective_closure(kappa, bc.gamma, dr, bc.T_a, Tcur[1], Tcur[2])
            Tcur[-1] = _convective_closure(kappa, bc.gamma, dr, bc.T_a, Tcur[-2], Tcur[-3])
        else:
            Tcur[0] = _flux_closure(kappa, bc.q_s, dr, Tcur[1], Tcur[2])
            Tcur[-1] = _flux_closure(kappa, bc.q_s, dr, Tcur[-2], Tcur[-3])

    close(T)
    t = 0.0
    for k in range(nsteps):
        lap = (T[2:] - 2 * T[1:-1] + T[:-2]) / dr ** 2 \
            + (T[2:] - T[:-2]) / (2 * dr * r[1:-1])
        T[1:-1] += alpha * dt * lap
        close(T)
        t += dt
        while len(stored) < len(want) and t >= want[len(stored)] - 1e-9:
            fields.append(T.copy())
            stored.append(t)
    while len(fields) < len(want):
        fields.append(T.copy())
    return FdmSolution(coords=(r,), times=want, fields=fields, spacing=dr, dt=dt)


def fdm_sphere(radius, params, dr, dt, t_end, bc, T0=100.0,
               times=None) -> FdmSolution:
    """1D spherical explicit reference for the convectively cooled ball."""
    if bc.kind != "convective":
        raise ValueError("sphere reference supports the convective closure only")
    alpha, kappa = params.alpha, params.kappa
    _check_stability(dt, 0.5 * dr * dr / alpha, "fdm_sphere")
    n = round(radius / dr)
    r = dr * np.arange(n + 1)
    T = np.full(n + 1, float(T0))
    want = _snapshot_times(t_end, times)
    fields, stored = [], []
    nsteps = int(np.ceil(t_end / dt - 1e-9))
    t = 0.0
    for k in range(nsteps):
        Tn = T.copy()
        lap = (T[2:] - 2 * T[1:-1] + T[:-2]) / dr ** 2 \
            + (T[2:] - T[:-2]) / (dr * r[1:-1])
        Tn[1:-1] = T[1:-1] + alpha * dt * lap
        # center: symmetry closure dT/dr = 0
        Tn[0] = T[0] + 3.0 * alpha * dt * (T[1] - T[0]) / dr ** 2
        Tn[-1] = _convective_closure(kappa, bc.gamma, dr, bc.T_a, Tn[-2], Tn[-3])
        T = Tn
        t += dt
        while len(stored) < len(want) and t >= want[len(stored)] - 1e-9:
            fields.append(T.copy())
            stored.append(t)
    while len(fields) < len(want):
        fields.append(T.copy())
    return FdmSolution(coords=(r,), times=want, fields=fields, spacing=dr, dt=dt)


def fdm_square(L, params, dx, dt, t_end, bc, T0=0.0, times=None) -> FdmSolution:
    """2D explicit reference for the convectively heated square [0, L]^2."""
    if bc.kind != "convective":
        raise ValueError("square reference supports the convective closure only")
    alpha, kappa = params.alpha, params.kappa
    _check_stability(dt, 0.25 * dx * dx / alpha, "fdm_square")
    n = round(L / dx)
    x = dx * np.arange(n + 1)
    T = np.full((n + 1, n + 1), float(T0))
    want = _snapshot_times(t_end, times)
    fields, stored = [], []
    nsteps = int(np.ceil(t_end / dt - 1e-9))

    def close(Tc):
        g, Ta = bc.gamma, bc.T_a
        Tc[0, :] = _convective_closure(kappa, g, dx, Ta, Tc[1, :], Tc[2, :])
        Tc[-1, :] = _convective_closure(kappa, g, dx, Ta, Tc[-2, :], Tc[-3, :])
        Tc[:, 0] = _convective_closure(kappa, g, dx, Ta, Tc[:, 1], Tc[:, 2])
        Tc[:, -1] = _convective_closure(kappa, g, dx, Ta, Tc[:, -2], Tc[:, -3])

    close(T)
    t = 0.0
    for k in range(nsteps):
        lap = (T[2:, 1:-1] - 2 * T[1:-1, 1:-1] + T[:-2, 1:-1]) / dx ** 2 \
            + (T[1:-1, 2:] - 2 * T[1:-1, 1:-1] + T[1:-1, :-2]) / dx ** 2
        T[1:-1, 1:-1] += alpha * dt * lap
        close(T)
        t += dt
        while len(stored) < len(want) and t >= want[len(stored)] - 1e-9:
            fields.append(T.copy())
            stored.append(t)
    while len(fields) < len(want):
        fields.append(T.copy())
    return FdmSolution(coords=(x, x), times=want, fields=fields, spacing=dx, dt=dt)
