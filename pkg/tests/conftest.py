"""Shared helpers for the test suite."""

import numpy as np
import pytest

from mpmheat import (MaterialParams, ParticleSet, SolverState, build_grid,
                     generate_box_points)


def make_particles(x, dim=None, volume=1.0, rho=1.0, c=1.0, kappa=1.0, T=0.0):
    """Particle set from explicit positions with scalar or array fields."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n = x.shape[0]

    def arr(v):
        return np.full(n, float(v)) if np.isscalar(v) else np.asarray(v, float)

    return ParticleSet(x=x, volume=arr(volume), density=arr(rho),
                       specific_heat=arr(c), conductivity=arr(kappa),
                       temperature=arr(T))


def box_state(lo=(0.0, 0.0), hi=(1.0, 1.0), h=0.25, ppc_axis=2, T0=0.0,
              pad_cells=2, **kwargs):
    """Conforming box of particles on a padded grid, ready to step."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    dim = lo.size
    pts = generate_box_points(lo, hi, h / ppc_axis, T0=T0)
    grid = build_grid(lo - pad_cells * h, (hi - lo) + 2 * pad_cells * h, h, dim)
    return SolverState(grid=grid, particles=pts, **kwargs)


def run_steps(state, dt, n):
    from mpmheat import step
    for _ in range(n):
        step(state, dt)
    return state


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)


@pytest.fixture
def unit_material():
    return MaterialParams(rho=1.0, c=1.0, kappa=1.0)
