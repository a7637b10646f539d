"""Vectorized NumPy fallback for the particle-grid transfer kernels.

Scatter-adds are realized with ``np.bincount`` over flat node indices, which
is deterministic for a fixed particle order. Particles are processed in
chunks to bound the memory of the materialized stencil arrays.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"
_CHUNK = 262144


def _stencil(x, origin, h, ncounts):
    """Stencil arrays for a block of points.

    Returns (ids, w, g): flat node ids (n, 2^d), weights (n, 2^d) and weight
    gradients (n, 2^d, d).
    """
    n, dim = x.shape
    ncell = ncounts - 1
    rel = (x - origin) / h
    cell = np.floor(rel).astype(np.int64)
    np.clip(cell, 0, ncell - 1, out=cell)
    f = rel - cell
    n_corner = 1 << dim
    ids = np.empty((n, n_corner), dtype=np.int64)
    w = np.ones((n, n_corner))
    g = np.empty((n, n_corner, dim))
    inv_h = 1.0 / h
    strides = np.ones(dim, dtype=np.int64)
    for d in range(1, dim):
        strides[d] = strides[d - 1] * ncounts[d - 1]
    w1d = np.empty((n, n_corner, dim))
    for corner in range(n_corner):
        idx = cell[:, 0] * 0
        for d in range(dim):
            bit = (corner >> d) & 1
            w1d[:, corner, d] = f[:, d] if bit else 1.0 - f[:, d]
            idx = idx + (cell[:, d] + bit) * strides[d]
        ids[:, corner] = idx
        w[:, corner] = np.prod(w1d[:, corner, :], axis=1)
        for d in range(dim):
            bit = (corner >> d) & 1
            prod = np.full(n, inv_h if bit else -inv_h)
            for e in range(dim):
                if e != d:
                    prod = prod * w1d[:, corner, e]
            g[:, corner, d] = prod
    return ids, w, g


def _chunks(n):
    for s in range(0, n, _CHUNK):
        yield s, min(s + _CHUNK, n)


def scatter_fields(x, vals, origin, h, ncounts):
    n_nodes = int(np.prod(ncounts))
    k = vals.shape[1]
    out = np.zeros((n_nodes, k))
    for s, e in _chunks(x.shape[0]):
        ids, w, _ = _stencil(x[s:e], origin, h, ncounts)
        flat = ids.ravel()
        for j in range(k):
            contrib = (vals[s:e, j, None] * w).ravel()
            out[:, j] += np.bincount(flat, weights=contrib, minlength=n_nodes)
    return out


def gather_fields(x, nodal, origin, h, ncounts):
    k = nodal.shape[1]
    out = np.empty((x.shape[0], k))
    for s, e in _chunks(x.shape[0]):
        ids, w, _ = _stencil(x[s:e], origin, h, ncounts)
        for j in range(k):
            out[s:e, j] = np.sum(nodal[ids, j] * w, axis=1)
    return out


def gather_grad(x, nodal, origin, h, ncounts):
    dim = x.shape[1]
    out = np.empty((x.shape[0], dim))
    for s, e in _chunks(x.shape[0]):
        ids, _, g = _stencil(x[s:e], origin, h, ncounts)
        vals = nodal[ids]
        for d in range(dim):
            out[s:e, d] = np.sum(vals * g[:, :, d], axis=1)
    return out


def scatter_div(x, coef, vec, origin, h, ncounts):
    n_nodes = int(np.prod(ncounts))
    out = np.zeros(n_nodes)
    dim = x.shape[1]
    for s, e in _chunks(x.shape[0]):
        ids, _, g = _stencil(x[s:e], origin, h, ncounts)
        dot = np.zeros(ids.shape)
        for d in range(dim):
            dot += vec[s:e, d, None] * g[:, :, d]
        contrib = (coef[s:e, None] * dot).ravel()
        out += np.bincount(ids.ravel(), weights=contrib, minlength=n_nodes)
    return out


def scatter_div_masked(x, coef, vec, node_mask, origin, h, ncounts):
    n_nodes = int(np.prod(ncounts))
    out = np.zeros(n_nodes)
    dim = x.shape[1]
    for s, e in _chunks(x.shape[0]):
        ids, _, g = _stencil(x[s:e], origin, h, ncounts)
        dot = np.zeros(ids.shape)
        for d in range(dim):
            dot += vec[s:e, d, None] * g[:, :, d]
        contrib = np.where(node_mask[ids], coef[s:e, None] * dot, 0.0).ravel()
        out += np.bincount(ids.ravel(), weights=contrib, minlength=n_nodes)
    return out


def scatter_weighted(x, w_p, origin, h, ncounts):
    return scatter_fields(x, w_p[:, None], origin, h, ncounts)[:, 0]


def scatter_gradsq(x, w_p, origin, h, ncounts):
    """Per-node sum of w_p * |grad S_Ip|^2 (diagonal conduction stiffness)."""
    n_nodes = int(np.prod(ncounts))
    out = np.zeros(n_nodes)
    dim = x.shape[1]
    for s, e in _chunks(x.shape[0]):
        ids, _, g = _stencil(x[s:e], origin, h, ncounts)
        gsq = np.zeros(ids.shape)
        for d in range(dim):
            gsq += g[:, :, d] * g[:, :, d]
        contrib = (w_p[s:e, None] * gsq).ravel()
        out += np.bincount(ids.ravel(), weights=contrib, minlength=n_nodes)
    return out


def cell_volumes(x, vol, origin, h, ncounts):
    ncell = ncounts - 1
    n_cells = int(np.prod(ncell))
    rel = (x - origin) / h
    cell = np.floor(rel).astype(np.int64)
    np.clip(cell, 0, ncell - 1, out=cell)
    flat = cell[:, 0]
    stride = 1
    for d in range(1, x.shape[1]):
        stride *= int(ncell[d - 1])
        flat = flat + cell[:, d] * stride
    return np.bincount(flat, weights=vol, minlength=n_cells)
