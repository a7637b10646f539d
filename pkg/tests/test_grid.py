"""Background grid, shape functions, and nodal scratch lifecycle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpmheat import (Grid, OutOfDomainError, build_grid, cell_of, grid_around,
                     node_stencil, reset_nodal_state)


class TestBuildGrid:
    def test_node_count_2d(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        assert g.n_nodes == 9
        assert tuple(g.node_counts) == (3, 3)

    def test_node_count_3d(self):
        g = build_grid([0.0] * 3, [10.0] * 3, 0.2, dim=3)
        assert g.n_nodes == 51 ** 3

    def test_zero_h_rejected(self):
        with pytest.raises(ValueError):
            build_grid([0.0, 0.0], [1.0, 1.0], 0.0, dim=2)

    def test_negative_extent_rejected(self):
        with pytest.raises(ValueError):
            build_grid([0.0, 0.0], [1.0, -1.0], 0.5, dim=2)

    def test_non_dividing_extent_pads_up(self):
        g = build_grid([0.0, 0.0], [1.04, 1.0], 0.5, dim=2)
        assert tuple(g.node_counts) == (4, 3)
        assert g.upper[0] >= 1.04

    def test_scratch_fields_zeroed(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        for name in ("capacity", "mass", "temperature", "tdot", "e_int",
                     "e_ext", "phi", "bc_diag"):
            assert np.all(getattr(g, name) == 0.0)
        assert not np.any(g.surface)

    def test_grid_around_pads_one_cell(self):
        g = grid_around([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        assert np.allclose(g.origin, [-0.5, -0.5])
        assert np.allclose(g.upper, [1.5, 1.5])

    def test_flat_index_bijection(self):
        g = build_grid([0.0, 0.0], [1.5, 1.0], 0.5, dim=2)
        ij = np.array([[i, j] for j in range(g.node_counts[1])
                       for i in range(g.node_counts[0])])
        flat = g.flat_index(ij)
        assert sorted(flat.tolist()) == list(range(g.n_nodes))
        pos = g.node_positions()
        assert np.allclose(pos[flat], g.origin + ij * g.h)


class TestCellOf:
    def test_interior_point(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.1, dim=2)
        assert tuple(cell_of(g, [0.05, 0.05])) == (0, 0)

    def test_face_tie_break_upper_cell(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.1, dim=2)
        assert tuple(cell_of(g, [0.1, 0.0])) == (1, 0)

    def test_outside_raises_with_coordinate(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.1, dim=2)
        with pytest.raises(OutOfDomainError, match="-0.01"):
            cell_of(g, [-0.01, 0.0])

    def test_top_face_belongs_to_last_cell(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.1, dim=2)
        assert tuple(cell_of(g, [1.0, 1.0])) == (9, 9)


class TestNodeStencil:
    def test_cell_center_weights(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        s = node_stencil(g, [0.25, 0.25])
        assert np.allclose(np.sort(s.weights), 0.25)

    def test_node_coincident_weight_one(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        s = node_stencil(g, [0.5, 0.5])
        i = int(np.argmax(s.weights))
        assert s.weights[i] == pytest.approx(1.0, abs=1e-15)
        assert np.all(np.delete(s.weights, i) == pytest.approx(0.0, abs=1e-15))

    def test_weights_bounded(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        s = node_stencil(g, [0.13, 0.41])
        assert np.all(s.weights >= 0.0) and np.all(s.weights <= 1.0)

    def test_pure_function(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        a = node_stencil(g, [0.13, 0.41])
        b = node_stencil(g, [0.13, 0.41])
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.grads, b.grads)
        assert np.array_equal(a.node_ids, b.node_ids)


@pytest.mark.parametrize("dim", [2, 3])
def test_partition_of_unity_random_points(dim, rng):
    g = build_grid([0.0] * dim, [2.0] * dim, 0.25, dim=dim)
    pts = rng.uniform(0.01, 1.99, size=(1000, dim))
    for x in pts:
        s = node_stencil(g, x)
        assert abs(np.sum(s.weights) - 1.0) < 1e-12
        assert np.all(np.abs(np.sum(s.grads, axis=0)) < 1e-10 / g.h)


@pytest.mark.parametrize("dim", [2, 3])
def test_gradient_matches_central_difference(dim, rng):
    g = build_grid([0.0] * dim, [2.0] * dim, 0.25, dim=dim)
    eps = 1e-6 * g.h
    for _ in range(50):
        # stay strictly inside one cell so the stencil does not switch cells
        x = rng.uniform(0.3, 0.45, size=dim)
        s = node_stencil(g, x)
        for d in range(dim):
            xp, xm = x.copy(), x.copy()
            xp[d] += eps
            xm[d] -= eps
            fd = (node_stencil(g, xp).weights -
                  node_stencil(g, xm).weights) / (2 * eps)
            scale = np.maximum(np.abs(s.grads[:, d]), 1e-3 / g.h)
            assert np.all(np.abs(s.grads[:, d] - fd) / scale < 1e-5)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(0.01, 1.99), y=st.floats(0.01, 1.99))
def test_partition_of_unity_property(x, y):
    g = build_grid([0.0, 0.0], [2.0, 2.0], 0.25, dim=2)
    s = node_stencil(g, [x, y])
    assert abs(np.sum(s.weights) - 1.0) < 1e-12
    assert np.all(np.abs(np.sum(s.grads, axis=0)) < 1e-10 / g.h)


class TestReset:
    def test_reset_zeroes_everything(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        g.capacity[3] = 3.0
        g.temperature[:] = 2.0
        g.surface[1] = True
        reset_nodal_state(g)
        assert np.all(g.capacity == 0.0)
        assert np.all(g.temperature == 0.0)
        assert not np.any(g.surface)

    def test_reset_idempotent(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        g.e_int[:] = 1.0
        reset_nodal_state(g)
        snap = g.e_int.copy()
        reset_nodal_state(g)
        assert np.array_equal(g.e_int, snap)

    def test_reset_preserves_geometry(self):
        g = build_grid([0.0, 0.0], [1.0, 1.0], 0.5, dim=2)
        counts = g.node_counts.copy()
        reset_nodal_state(g)
        assert np.array_equal(g.node_counts, counts)
        assert g.h == 0.5


def test_invalid_dim_rejected():
    with pytest.raises(ValueError):
        Grid(dim=1, origin=np.zeros(1), h=0.5, node_counts=np.array([3]))
