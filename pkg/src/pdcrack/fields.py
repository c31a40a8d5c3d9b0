"""Nodal fields derived from bond state: energy density, strain concentration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constitutive import ModelParams, kernel_rho, potential
from .damage import DamageState, nodal_damage
from .discretization import BondTable


def strain_energy_density(
    r: np.ndarray, bonds: BondTable, damage: DamageState, params: ModelParams, spacing: float
) -> np.ndarray:
    """``W_i = sum_j rho_eps gamma g(r) w h^2`` over bonds incident to ``i``."""
    per_bond = kernel_rho(bonds.length, params.horizon, 2) * damage.gamma * potential(r, params)
    per_bond *= bonds.weight * spacing**2
    n = bonds.n_nodes
    return np.bincount(bonds.i, per_bond, n) + np.bincount(bonds.j, per_bond, n)


def strain_energy_density_at(
    node: int, r: np.ndarray, bonds: BondTable, damage: DamageState, params: ModelParams, spacing: float
) -> float:
    ids = bonds.bonds_of(node)
    rho = kernel_rho(bonds.length[ids], params.horizon, 2)
    return float(np.sum(rho * damage.gamma[ids] * potential(r[ids], params) * bonds.weight[ids]) * spacing**2)


def strain_concentration(
    r: np.ndarray, bonds: BondTable, damage: DamageState, params: ModelParams
) -> tuple[np.ndarray, np.ndarray]:
    """``Z_i = max r / r_c`` over unbroken incident bonds, floored at zero.

    Returns ``(Z, detached)``; detached nodes (no intact bond) get ``Z = 0``.
    """
    n = bonds.n_nodes
    ok = ~damage.broken
    ratio = r[ok] / params.r_c
    Z = np.full(n, -np.inf)
    np.maximum.at(Z, bonds.i[ok], ratio)
    np.maximum.at(Z, bonds.j[ok], ratio)
    detached = ~np.isfinite(Z)
    Z[detached] = 0.0
    np.maximum(Z, 0.0, out=Z)
    return Z, detached


def strain_concentration_at(node: int, r: np.ndarray, bonds: BondTable, damage: DamageState, params: ModelParams):
    """Single-node ``Z``; ``None`` when every incident bond is broken."""
    ids = bonds.bonds_of(node)
    ids = ids[~damage.broken[ids]]
    if ids.size == 0:
        return None
    return max(0.0, float(r[ids].max() / params.r_c))


@dataclass
class FieldSnapshot:
    t: float
    step: int
    positions: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    detached: np.ndarray

    COLUMNS = ("x", "y", "ux", "uy", "phi", "W", "Z")

    def table(self) -> np.ndarray:
        return np.column_stack([self.positions, self.u, self.phi, self.W, self.Z])


def take_snapshot(t, step, grid, u, r, bonds, damage, params) -> FieldSnapshot:
    W = strain_energy_density(r, bonds, damage, params, grid.spacing)
    Z, detached = strain_concentration(r, bonds, damage, params)
    return FieldSnapshot(
        t=t,
        step=step,
        positions=grid.positions,
        u=u.copy(),
        phi=nodal_damage(bonds, damage),
        W=W,
        Z=Z,
        detached=detached,
    )
