"""Numba-compiled particle-grid transfer kernels.

Loops run serially in fixed particle order, so accumulation is bit-stable
regardless of the configured thread count. fastmath stays off to keep
results reproducible across runs and machines.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

_JIT = dict(cache=True, fastmath=False, nogil=True)


# ---------------------------------------------------------------- 2D kernels

@njit(**_JIT)
def _scatter_fields_2d(x, vals, origin, h, ncounts, out):
    nx = ncounts[0]
    ncx, ncy = ncounts[0] - 1, ncounts[1] - 1
    inv_h = 1.0 / h
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        fx = rx - ci
        fy = ry - cj
        base = ci + nx * cj
        w00 = (1.0 - fx) * (1.0 - fy)
        w10 = fx * (1.0 - fy)
        w01 = (1.0 - fx) * fy
        w11 = fx * fy
        for j in range(vals.shape[1]):
            v = vals[p, j]
            out[base, j] += v * w00
            out[base + 1, j] += v * w10
            out[base + nx, j] += v * w01
            out[base + nx + 1, j] += v * w11


@njit(**_JIT)
def _gather_fields_2d(x, nodal, origin, h, ncounts, out):
    nx = ncounts[0]
    ncx, ncy = ncounts[0] - 1, ncounts[1] - 1
    inv_h = 1.0 / h
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        fx = rx - ci
        fy = ry - cj
        base = ci + nx * cj
        w00 = (1.0 - fx) * (1.0 - fy)
        w10 = fx * (1.0 - fy)
        w01 = (1.0 - fx) * fy
        w11 = fx * fy
        for j in range(nodal.shape[1]):
            out[p, j] = (nodal[base, j] * w00 + nodal[base + 1, j] * w10
                         + nodal[base + nx, j] * w01 + nodal[base + nx + 1, j] * w11)


@njit(**_JIT)
def _gather_grad_2d(x, nodal, origin, h, ncounts, out):
    nx = ncounts[0]
    ncx, ncy = ncounts[0] - 1, ncounts[1] - 1
    inv_h = 1.0 / h
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        fx = rx - ci
        fy = ry - cj
        base = ci + nx * cj
        v00 = nodal[base]
        v10 = nodal[base + 1]
        v01 = nodal[base + nx]
        v11 = nodal[base + nx + 1]
        out[p, 0] = inv_h * ((v10 - v00) * (1.0 - fy) + (v11 - v01) * fy)
        out[p, 1] = inv_h * ((v01 - v00) * (1.0 - fx) + (v11 - v10) * fx)


@njit(**_JIT)
def _scatter_div_2d(x, coef, vec, origin, h, ncounts, use_mask, node_mask, out):
    nx = ncounts[0]
    ncx, ncy = ncounts[0] - 1, ncounts[1] - 1
    inv_h = 1.0 / h
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        fx = rx - ci
        fy = ry - cj
        base = ci + nx * cj
        c = coef[p]
        qx = vec[p, 0]
        qy = vec[p, 1]
        # gradient components per corner: (sx * wy, wx * sy) with s = +-1/h
        g00 = c * (-inv_h * (1.0 - fy) * qx - inv_h * (1.0 - fx) * qy)
        g10 = c * (inv_h * (1.0 - fy) * qx - inv_h * fx * qy)
        g01 = c * (-inv_h * fy * qx + inv_h * (1.0 - fx) * qy)
        g11 = c * (inv_h * fy * qx + inv_h * fx * qy)
        if use_mask:
            if node_mask[base]:
                out[base] += g00
            if node_mask[base + 1]:
                out[base + 1] += g10
            if node_mask[base + nx]:
                out[base + nx] += g01
            if node_mask[base + nx + 1]:
                out[base + nx + 1] += g11
        else:
            out[base] += g00
            out[base + 1] += g10
            out[base + nx] += g01
            out[base + nx + 1] += g11


@njit(**_JIT)
def _cell_volumes_2d(x, vol, origin, h, ncounts, out):
    ncx, ncy = ncounts[0] - 1, ncounts[1] - 1
    inv_h = 1.0 / h
    for p in range(x.shape[0]):
        ci = min(max(int(np.floor((x[p, 0] - origin[0]) * inv_h)), 0), ncx - 1)
        cj = min(max(int(np.floor((x[p, 1] - origin[1]) * inv_h)), 0), ncy - 1)
        out[ci + ncx * cj] += vol[p]


# ---------------------------------------------------------------- 3D kernels

@njit(**_JIT)
def _scatter_fields_3d(x, vals, origin, h, ncounts, out):
    nx, ny = ncounts[0], ncounts[1]
    ncx, ncy, ncz = ncounts[0] - 1, ncounts[1] - 1, ncounts[2] - 1
    inv_h = 1.0 / h
    nxy = nx * ny
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        rz = (x[p, 2] - origin[2]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        ck = min(max(int(np.floor(rz)), 0), ncz - 1)
        fx = rx - ci
        fy = ry - cj
        fz = rz - ck
        base = ci + nx * cj + nxy * ck
        for corner in range(8):
            bi = corner & 1
            bj = (corner >> 1) & 1
            bk = (corner >> 2) & 1
            w = ((fx if bi else 1.0 - fx) * (fy if bj else 1.0 - fy)
                 * (fz if bk else 1.0 - fz))
            node = base + bi + nx * bj + nxy * bk
            for j in range(vals.shape[1]):
                out[node, j] += vals[p, j] * w


@njit(**_JIT)
def _gather_fields_3d(x, nodal, origin, h, ncounts, out):
    nx, ny = ncounts[0], ncounts[1]
    ncx, ncy, ncz = ncounts[0] - 1, ncounts[1] - 1, ncounts[2] - 1
    inv_h = 1.0 / h
    nxy = nx * ny
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        rz = (x[p, 2] - origin[2]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        ck = min(max(int(np.floor(rz)), 0), ncz - 1)
        fx = rx - ci
        fy = ry - cj
        fz = rz - ck
        base = ci + nx * cj + nxy * ck
        for j in range(nodal.shape[1]):
            acc = 0.0
            for corner in range(8):
                bi = corner & 1
                bj = (corner >> 1) & 1
                bk = (corner >> 2) & 1
                w = ((fx if bi else 1.0 - fx) * (fy if bj else 1.0 - fy)
                     * (fz if bk else 1.0 - fz))
                acc += nodal[base + bi + nx * bj + nxy * bk, j] * w
            out[p, j] = acc


@njit(**_JIT)
def _gather_grad_3d(x, nodal, origin, h, ncounts, out):
    nx, ny = ncounts[0], ncounts[1]
    ncx, ncy, ncz = ncounts[0] - 1, ncounts[1] - 1, ncounts[2] - 1
    inv_h = 1.0 / h
    nxy = nx * ny
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        rz = (x[p, 2] - origin[2]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        ck = min(max(int(np.floor(rz)), 0), ncz - 1)
        fx = rx - ci
        fy = ry - cj
        fz = rz - ck
        base = ci + nx * cj + nxy * ck
        gx = 0.0
        gy = 0.0
        gz = 0.0
        for corner in range(8):
            bi = corner & 1
            bj = (corner >> 1) & 1
            bk = (corner >> 2) & 1
            wx = fx if bi else 1.0 - fx
            wy = fy if bj else 1.0 - fy
            wz = fz if bk else 1.0 - fz
            sx = inv_h if bi else -inv_h
            sy = inv_h if bj else -inv_h
            sz = inv_h if bk else -inv_h
            v = nodal[base + bi + nx * bj + nxy * bk]
            gx += v * sx * wy * wz
            gy += v * wx * sy * wz
            gz += v * wx * wy * sz
        out[p, 0] = gx
        out[p, 1] = gy
        out[p, 2] = gz


@njit(**_JIT)
def _scatter_div_3d(x, coef, vec, origin, h, ncounts, use_mask, node_mask, out):
    nx, ny = ncounts[0], ncounts[1]
    ncx, ncy, ncz = ncounts[0] - 1, ncounts[1] - 1, ncounts[2] - 1
    inv_h = 1.0 / h
    nxy = nx * ny
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        rz = (x[p, 2] - origin[2]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        ck = min(max(int(np.floor(rz)), 0), ncz - 1)
        fx = rx - ci
        fy = ry - cj
        fz = rz - ck
        base = ci + nx * cj + nxy * ck
        c = coef[p]
        for corner in range(8):
            bi = corner & 1
            bj = (corner >> 1) & 1
            bk = (corner >> 2) & 1
            node = base + bi + nx * bj + nxy * bk
            if use_mask and not node_mask[node]:
                continue
            wx = fx if bi else 1.0 - fx
            wy = fy if bj else 1.0 - fy
            wz = fz if bk else 1.0 - fz
            sx = inv_h if bi else -inv_h
            sy = inv_h if bj else -inv_h
            sz = inv_h if bk else -inv_h
            dot = (vec[p, 0] * sx * wy * wz + vec[p, 1] * wx * sy * wz
                   + vec[p, 2] * wx * wy * sz)
            out[node] += c * dot


@njit(**_JIT)
def _scatter_gradsq_2d(x, w_p, origin, h, ncounts, out):
    nx = ncounts[0]
    ncx, ncy = ncounts[0] - 1, ncounts[1] - 1
    inv_h = 1.0 / h
    inv_h2 = inv_h * inv_h
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        fx = rx - ci
        fy = ry - cj
        base = ci + nx * cj
        w = w_p[p]
        for corner in range(4):
            bi = corner & 1
            bj = (corner >> 1) & 1
            wx = fx if bi else 1.0 - fx
            wy = fy if bj else 1.0 - fy
            out[base + bi + nx * bj] += w * inv_h2 * (wy * wy + wx * wx)


@njit(**_JIT)
def _scatter_gradsq_3d(x, w_p, origin, h, ncounts, out):
    nx, ny = ncounts[0], ncounts[1]
    ncx, ncy, ncz = ncounts[0] - 1, ncounts[1] - 1, ncounts[2] - 1
    inv_h = 1.0 / h
    inv_h2 = inv_h * inv_h
    nxy = nx * ny
    for p in range(x.shape[0]):
        rx = (x[p, 0] - origin[0]) * inv_h
        ry = (x[p, 1] - origin[1]) * inv_h
        rz = (x[p, 2] - origin[2]) * inv_h
        ci = min(max(int(np.floor(rx)), 0), ncx - 1)
        cj = min(max(int(np.floor(ry)), 0), ncy - 1)
        ck = min(max(int(np.floor(rz)), 0), ncz - 1)
        fx = rx - ci
        fy = ry - cj
        fz = rz - ck
        base = ci + nx * cj + nxy * ck
        w = w_p[p]
        for corner in range(8):
            bi = corner & 1
            bj = (corner >> 1) & 1
            bk = (corner >> 2) & 1
            wx = fx if bi else 1.0 - fx
            wy = fy if bj else 1.0 - fy
            wz = fz if bk else 1.0 - fz
            gsq = inv_h2 * ((wy * wz) ** 2 + (wx * wz) ** 2 + (wx * wy) ** 2)
            out[base + bi + nx * bj + nxy * bk] += w * gsq


@njit(**_JIT)
def _cell_volumes_3d(x, vol, origin, h, ncounts, out):
    ncx, ncy, ncz = ncounts[0] - 1, ncounts[1] - 1, ncounts[2] - 1
    inv_h = 1.0 / h
    for p in range(x.shape[0]):
        ci = min(max(int(np.floor((x[p, 0] - origin[0]) * inv_h)), 0), ncx - 1)
        cj = min(max(int(np.floor((x[p, 1] - origin[1]) * inv_h)), 0), ncy - 1)
        ck = min(max(int(np.floor((x[p, 2] - origin[2]) * inv_h)), 0), ncz - 1)
        out[ci + ncx * (cj + ncy * ck)] += vol[p]


# ------------------------------------------------------------------ dispatch

_EMPTY_MASK = np.zeros(1, dtype=np.bool_)


def scatter_fields(x, vals, origin, h, ncounts):
    out = np.zeros((int(np.prod(ncounts)), vals.shape[1]))
    fn = _scatter_fields_2d if x.shape[1] == 2 else _scatter_fields_3d
    fn(x, vals, origin, h, ncounts, out)
    return out


def gather_fields(x, nodal, origin, h, ncounts):
    out = np.empty((x.shape[0], nodal.shape[1]))
    fn = _gather_fields_2d if x.shape[1] == 2 else _gather_fields_3d
    fn(x, nodal, origin, h, ncounts, out)
    return out


def gather_grad(x, nodal, origin, h, ncounts):
    out = np.empty((x.shape[0], x.shape[1]))
    fn = _gather_grad_2d if x.shape[1] == 2 else _gather_grad_3d
    fn(x, nodal, origin, h, ncounts, out)
    return out


def scatter_div(x, coef, vec, origin, h, ncounts):
    out = np.zeros(int(np.prod(ncounts)))
    fn = _scatter_div_2d if x.shape[1] == 2 else _scatter_div_3d
    fn(x, coef, vec, origin, h, ncounts, False, _EMPTY_MASK, out)
    return out


def scatter_div_masked(x, coef, vec, node_mask, origin, h, ncounts):
    out = np.zeros(int(np.prod(ncounts)))
    fn = _scatter_div_2d if x.shape[1] == 2 else _scatter_div_3d
    fn(x, coef, vec, origin, h, ncounts, True, node_mask, out)
    return out


def scatter_weighted(x, w_p, origin, h, ncounts):
    return scatter_fields(x, w_p[:, None], origin, h, ncounts)[:, 0]


def scatter_gradsq(x, w_p, origin, h, ncounts):
    """Per-node sum of w_p * |grad S_Ip|^2 (diagonal conduction stiffness)."""
    out = np.zeros(int(np.prod(ncounts)))
    fn = _scatter_gradsq_2d if x.shape[1] == 2 else _scatter_gradsq_3d
    fn(x, w_p, origin, h, ncounts, out)
    return out


def cell_volumes(x, vol, origin, h, ncounts):
    ncell = ncounts - 1
    out = np.zeros(int(np.prod(ncell)))
    fn = _cell_volumes_2d if x.shape[1] == 2 else _cell_volumes_3d
    fn(x, vol, origin, h, ncounts, out)
    return out
