"""Fixed Cartesian background grid with multilinear shape functions.

Nodal scratch fields live as flat arrays indexed lexicographically with the
x index fastest: ``flat = i + nx * (j + ny * k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class OutOfDomainError(ValueError):
    """A query point lies outside the grid bounds."""


@dataclass
class Grid:
    dim: int
    origin: np.ndarray          # (dim,)
    h: float                    # uniform cell size
    node_counts: np.ndarray     # (dim,) int, >= 2 per axis

    # nodal scratch fields, reset every step
    capacity: np.ndarray = field(init=False)      # C_I, J/degC
    mass: np.ndarray = field(init=False)          # m_I, kg
    temperature: np.ndarray = field(init=False)   # T_I, degC
    tdot: np.ndarray = field(init=False)          # dT_I/dt, degC/s
    e_int: np.ndarray = field(init=False)         # internal heat, W
    e_ext: np.ndarray = field(init=False)         # external heat, W
    bc_diag: np.ndarray = field(init=False)       # boundary Robin diagonal, W/degC
    phi: np.ndarray = field(init=False)           # projected marker field
    surface: np.ndarray = field(init=False)       # free-surface flag

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=np.float64)
        self.node_counts = np.asarray(self.node_counts, dtype=np.int64)
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.h <= 0:
            raise ValueError(f"cell size must be positive, got {self.h}")
        if np.any(self.node_counts < 2):
            raise ValueError(f"need >= 2 nodes per axis, got {self.node_counts}")
        n = self.n_nodes
        for name in ("capacity", "mass", "temperature", "tdot", "e_int", "e_ext",
                     "phi", "bc_diag"):
            setattr(self, name, np.zeros(n))
        self.surface = np.zeros(n, dtype=bool)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_counts))

    @property
    def cell_counts(self) -> np.ndarray:
        return self.node_counts - 1

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cell_counts))

    @property
    def extent(self) -> np.ndarray:
        return (self.node_counts - 1) * self.h

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.extent

    def node_positions(self) -> np.ndarray:
        """All node coordinates, shape (n_nodes, dim), flat-index order."""
        axes = [self.origin[d] + self.h * np.arange(self.node_counts[d])
                for d in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        # meshgrid 'ij' varies the first axis slowest along axis 0; build
        # flat order with x fastest by stacking transposed
        coords = np.stack([m.T.ravel() if self.dim == 2 else np.transpose(m, (2, 1, 0)).ravel()
                           for m in mesh], axis=1)
        return coords

    def flat_index(self, ijk: np.ndarray) -> np.ndarray:
        """Lexicographic node index from per-axis indices (..., dim)."""
        ijk = np.asarray(ijk)
        idx = ijk[..., 0]
        stride = 1
        for d in range(1, self.dim):
            stride *= int(self.node_counts[d - 1])
            idx = idx + ijk[..., d] * stride
        return idx

    def cell_flat_index(self, ijk: np.ndarray) -> np.ndarray:
        ijk = np.asarray(ijk)
        idx = ijk[..., 0]
        stride = 1
        for d in range(1, self.dim):
            stride *= int(self.cell_counts[d - 1])
            idx = idx + ijk[..., d] * stride
        return idx


def build_grid(origin, extent, h: float, dim: int) -> Grid:
    """Allocate a grid covering ``origin + [0, extent]`` with spacing ``h``.

    ``extent / h`` must be within 0.5% of an integer per axis; otherwise the
    cell count is padded up to cover the requested extent.
    """
    origin = np.asarray(origin, dtype=np.float64)
    extent = np.asarray(extent, dtype=np.float64)
    if h <= 0:
        raise ValueError(f"cell size must be positive, got {h}")
    if origin.shape != (dim,) or extent.shape != (dim,):
        raise ValueError("origin/extent must match dim")
    if np.any(extent <= 0):
        raise ValueError(f"extent must be positive, got {extent}")
    ratio = extent / h
    cells = np.round(ratio)
    off = np.abs(ratio - cells)
    cells = np.where((off <= 0.005 * np.maximum(cells, 1)) & (cells > 0),
                     cells, np.ceil(ratio))
    node_counts = cells.astype(np.int64) + 1
    return Grid(dim=dim, origin=origin, h=float(h), node_counts=node_counts)


def grid_around(lo, hi, h: float, dim: int, pad_cells: int = 1) -> Grid:
    """Grid padded ``pad_cells`` beyond the material bounding box on every side,
    so boundary particles always carry a full stencil."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    origin = lo - pad_cells * h
    extent = (hi - lo) + 2 * pad_cells * h
    return build_grid(origin, extent, h, dim)


def reset_nodal_state(grid: Grid) -> None:
    """Zero all scratch fields and clear flags; geometry untouched."""
    for name in ("capacity", "mass", "temperature", "tdot", "e_int", "e_ext",
                 "phi", "bc_diag"):
        getattr(grid, name)[:] = 0.0
    grid.surface[:] = False


def cell_of(grid: Grid, x) -> np.ndarray:
    """Per-axis index of the cell containing ``x`` (shape (dim,) or (n, dim)).

    Points on an internal face belong to the higher-index cell; the top face
    of the last cell still belongs to that cell.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    lo_bad = pts < grid.origin - 1e-12 * grid.h
    hi_bad = pts > grid.upper + 1e-12 * grid.h
    if np.any(lo_bad) or np.any(hi_bad):
        bad = np.argwhere(lo_bad | hi_bad)[0]
        raise OutOfDomainError(
            f"point {pts[bad[0]]} outside grid along axis {bad[1]} "
            f"(bounds {grid.origin} .. {grid.upper})")
    rel = (pts - grid.origin) / grid.h
    idx = np.floor(rel).astype(np.int64)
    idx = np.clip(idx, 0, grid.cell_counts - 1)
    return idx[0] if single else idx


@dataclass
class Stencil:
    """Multilinear interpolation data for one point: the 2^dim corner nodes
    of its cell, their weights and weight gradients."""
    node_ids: np.ndarray   # (2^dim,) flat node indices
    weights: np.ndarray    # (2^dim,)
    grads: np.ndarray      # (2^dim, dim), units 1/m


def node_stencil(grid: Grid, x) -> Stencil:
    """Tensor-product hat weights and analytic gradients at point ``x``."""
    x = np.asarray(x, dtype=np.float64)
    cell = cell_of(grid, x)
    f = (x - grid.origin) / grid.h - cell   # local coordinate in [0, 1]
    dim = grid.dim
    n_corner = 1 << dim
    ids = np.empty(n_corner, dtype=np.int64)
    w = np.empty(n_corner)
    g = np.empty((n_corner, dim))
    inv_h = 1.0 / grid.h
    for corner in range(n_corner):
        ijk = np.empty(dim, dtype=np.int64)
        wc = 1.0
        w1d = np.empty(dim)
        d1d = np.empty(dim)
        for d in range(dim):
            bit = (corner >> d) & 1
            ijk[d] = cell[d] + bit
            w1d[d] = f[d] if bit else 1.0 - f[d]
            d1d[d] = inv_h if bit else -inv_h
            wc *= w1d[d]
        ids[corner] = grid.flat_index(ijk)
        w[corner] = wc
        for d in range(dim):
            prod = d1d[d]
            for e in range(dim):
                if e != d:
                    prod *= w1d[e]
            g[corner, d] = prod
    return Stencil(node_ids=ids, weights=w, grads=g)
