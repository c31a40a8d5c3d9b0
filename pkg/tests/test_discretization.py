import math

import numpy as np
import pytest

from pdcrack.damage import DamageLaw, DamageState
from pdcrack.discretization import (
    DomainConfig,
    PreNotch,
    apply_prenotch,
    bonds_crossing,
    build_bond_table,
    build_grid,
    lattice_offsets,
    neighborhood_volume,
    partial_volume_weight,
    segments_cross,
)


def test_full_plate_grid_node_count():
    grid = build_grid(DomainConfig(0.96, 0.48, 0.002, 0.006))
    assert (grid.nx, grid.ny) == (480, 240)
    assert grid.n_nodes == 115200
    assert grid.cell_volume == pytest.approx(4e-6)


def test_desk_grid_node_count():
    grid = build_grid(DomainConfig(0.96, 0.48, 0.004, 0.012))
    assert grid.n_nodes == 28800


def test_smallest_admissible_grid_strips_are_two_rows():
    h = 1.0
    grid = build_grid(DomainConfig(4 * h, 4 * h, h, 2 * h))
    assert grid.n_nodes == 16
    rows = grid.positions[:, 1]
    assert set(rows[grid.top_strip]) == {2.5, 3.5}
    assert set(rows[grid.bottom_strip]) == {0.5, 1.5}


def test_positions_are_cell_centres():
    grid = build_grid(DomainConfig(0.01, 0.006, 0.002, 0.004))
    xs = np.unique(grid.positions[:, 0])
    ys = np.unique(grid.positions[:, 1])
    np.testing.assert_allclose(xs, [0.001, 0.003, 0.005, 0.007, 0.009])
    np.testing.assert_allclose(ys, [0.001, 0.003, 0.005])
    # row-major numbering
    assert grid.node_at(2, 1) == 7
    np.testing.assert_allclose(grid.positions[7], [0.005, 0.003])


@pytest.mark.parametrize("eps", [0.002, 0.0039])
def test_under_resolved_horizon_rejected(eps):
    with pytest.raises(ValueError, match="horizon under-resolved"):
        build_grid(DomainConfig(0.04, 0.04, 0.002, eps))


@pytest.mark.parametrize("field", ["length", "height", "spacing", "horizon"])
def test_non_positive_dimensions_rejected(field):
    vals = dict(length=0.04, height=0.04, spacing=0.002, horizon=0.006)
    vals[field] = 0.0
    with pytest.raises(ValueError):
        build_grid(DomainConfig(**vals))


def test_neighbor_count_matches_brute_force(small_grid):
    grid, bonds = small_grid
    node = grid.node_at(10, 6)
    # brute force over lattice offsets (a, b) with 0 < a^2 + b^2 < 9
    brute = sum(1 for a in range(-3, 4) for b in range(-3, 4) if 0 < a * a + b * b < 9)
    assert brute == 24
    assert len(bonds.neighbors_of(node)) == brute
    # and directly against all-pairs distances
    d = np.linalg.norm(grid.positions - grid.positions[node], axis=1)
    expected = set(np.flatnonzero((d > 0) & (d < grid.horizon * (1 - 1e-9))))
    assert set(bonds.neighbors_of(node)) == expected


def test_bond_table_is_all_pairs_within_horizon(small_grid):
    grid, bonds = small_grid
    x = grid.positions
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
    i, j = np.nonzero(np.triu((d > 0) & (d < grid.horizon * (1 - 1e-9)), 1))
    got = set(zip(bonds.i.tolist(), bonds.j.tolist()))
    assert got == set(zip(i.tolist(), j.tolist()))
    assert np.all(bonds.i < bonds.j)
    assert np.all((bonds.length > 0) & (bonds.length < grid.horizon))
    np.testing.assert_allclose(bonds.length, d[bonds.i, bonds.j])
    np.testing.assert_allclose(bonds.unit, (x[bonds.j] - x[bonds.i]) / bonds.length[:, None])


def test_incidence_is_symmetric(small_grid):
    grid, bonds = small_grid
    for node in range(0, grid.n_nodes, 7):
        for nb in bonds.neighbors_of(node):
            assert node in bonds.neighbors_of(nb)


def test_two_far_nodes_have_no_bonds():
    grid = build_grid(DomainConfig(0.012, 0.002, 0.002, 0.004))
    # restrict to the two end nodes by building a sparse table on a wide grid
    assert grid.n_nodes == 6
    bonds = build_bond_table(grid)
    far = {(0, 5)}
    assert not far & set(zip(bonds.i.tolist(), bonds.j.tolist()))


def test_partial_volume_weight_endpoints():
    eps, h = 0.006, 0.002
    assert partial_volume_weight(eps - h / 2, eps, h) == pytest.approx(1.0)
    assert partial_volume_weight(eps - h, eps, h) == 1.0
    assert partial_volume_weight(eps, eps, h) == pytest.approx(0.5)
    assert partial_volume_weight(eps + h / 2, eps, h) == 0.0


def test_weights_are_one_inside_and_bond_at_horizon_excluded(small_grid):
    grid, bonds = small_grid
    inner = bonds.length <= grid.horizon - grid.spacing / 2
    assert np.all(bonds.weight[inner] == 1.0)
    assert np.all((bonds.weight > 0) & (bonds.weight <= 1))
    offs = lattice_offsets(3.0)
    assert not np.any(np.hypot(offs[:, 0], offs[:, 1]) >= 3.0)


def test_neighborhood_volume_footprint_within_two_percent():
    h = 0.002
    grid = build_grid(DomainConfig(20 * h, 20 * h, h, 3 * h))
    bonds = build_bond_table(grid)
    node = grid.node_at(10, 10)
    disk = math.pi * grid.horizon**2
    assert abs(neighborhood_volume(grid, bonds, node, footprint=True) / disk - 1) < 0.02
    # the bond-only sum misses the self cell and the truncated rim
    assert neighborhood_volume(grid, bonds, node) < disk


def test_segments_cross_cases():
    q0, q1 = (0.0, 0.0), (1.0, 0.0)
    assert segments_cross(np.array([0.5, -0.1]), np.array([0.5, 0.1]), q0, q1)[0]
    assert not segments_cross(np.array([0.5, 0.1]), np.array([0.5, 0.3]), q0, q1)[0]
    # collinear overlap
    assert not segments_cross(np.array([0.2, 0.0]), np.array([0.6, 0.0]), q0, q1)[0]
    # touching at an endpoint
    assert not segments_cross(np.array([1.0, -0.1]), np.array([1.0, 0.1]), q0, q1)[0]


def _notch_setup():
    h = 0.002
    grid = build_grid(DomainConfig(40 * h, 20 * h, h, 3 * h))
    bonds = build_bond_table(grid)
    notch = PreNotch(0.0, 10 * h, 10 * h, 10 * h)
    return grid, bonds, notch


def test_prenotch_breaks_straddling_bonds_only():
    grid, bonds, notch = _notch_setup()
    damage = DamageState.intact(bonds.n_bonds, DamageLaw(1.0))
    ids = apply_prenotch(grid, bonds, damage, notch)
    assert ids.size > 0
    yi = grid.positions[bonds.i, 1]
    yj = grid.positions[bonds.j, 1]
    xi = grid.positions[bonds.i, 0]
    xj = grid.positions[bonds.j, 0]
    # vertical bond straddling the line inside the notch x-range
    vert = np.flatnonzero((xi == xj) & (xi < 0.02) & (yi < 0.02) & (yj > 0.02))
    assert vert.size and damage.broken[vert].all()
    # bonds entirely above the line stay intact
    above = (yi > 0.02) & (yj > 0.02)
    assert not damage.broken[above].any()
    assert np.all(damage.gamma[ids] == 0.0)
    assert damage.n_broken == ids.size


def test_prenotch_collinear_bond_intact():
    h = 0.002
    grid = build_grid(DomainConfig(40 * h, 20 * h, h, 3 * h))
    bonds = build_bond_table(grid)
    y = grid.positions[grid.node_at(0, 10), 1]
    notch = PreNotch(0.0, y, 10 * h, y)
    ids = bonds_crossing(grid, bonds, notch)
    on_line = (grid.positions[bonds.i, 1] == y) & (grid.positions[bonds.j, 1] == y)
    assert not np.isin(np.flatnonzero(on_line), ids).any()


def test_prenotch_idempotent():
    grid, bonds, notch = _notch_setup()
    damage = DamageState.intact(bonds.n_bonds, DamageLaw(1.0))
    apply_prenotch(grid, bonds, damage, notch)
    before = damage.copy()
    apply_prenotch(grid, bonds, damage, notch)
    np.testing.assert_array_equal(before.broken, damage.broken)
    np.testing.assert_array_equal(before.gamma, damage.gamma)
    np.testing.assert_array_equal(before.break_time, damage.break_time)
