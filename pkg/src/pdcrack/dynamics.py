"""Nonlocal force assembly and velocity-Verlet time stepping.

Momentum balance is ``rho * u'' + L[u] = b`` with
``L_i = -sum_j 2 rho_eps(xi)/sqrt(xi) * gamma * g'(r) * e_ij * w_ij h^2``.
Forces are reduced with ``np.bincount`` over a fixed bond order, so a run
is bit-for-bit reproducible.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from .constitutive import ModelParams, bond_strains, kernel_rho
from .damage import DamageState
from .discretization import BondTable, DomainConfig, ParticleGrid, build_bond_table, build_grid

log = logging.getLogger(__name__)


class SimulationUnstable(RuntimeError):
    """Displacements grew past the domain diagonal."""


@dataclass
class SimState:
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: float = 0.0
    step: int = 0

    @classmethod
    def zeros(cls, n_nodes: int) -> "SimState":
        return cls(np.zeros((n_nodes, 2)), np.zeros((n_nodes, 2)), np.zeros((n_nodes, 2)))

    def copy(self) -> "SimState":
        return SimState(self.u.copy(), self.v.copy(), self.a.copy(), self.t, self.step)


@dataclass(frozen=True)
class LoadSpec:
    """Equal and opposite vertical body force on the two boundary strips.

    ``magnitude`` is a force density in Pa/m (N/m^3). With
    ``divide_by_epsilon`` it is read as a traction and spread over the
    strip thickness. ``profile(t)`` scales it in time (default: constant).
    """

    magnitude: float
    divide_by_epsilon: bool = False
    profile: Callable[[float], float] | None = None

    def density(self, horizon: float, t: float) -> float:
        b = self.magnitude / horizon if self.divide_by_epsilon else self.magnitude
        if self.profile is not None:
            b *= self.profile(t)
        return b


def body_force(grid: ParticleGrid, load: LoadSpec, t: float = 0.0) -> np.ndarray:
    b = np.zeros((grid.n_nodes, 2))
    mag = load.density(grid.horizon, t)
    b[grid.top_strip, 1] = mag
    b[grid.bottom_strip, 1] = -mag
    return b


def bond_force_coefficients(bonds: BondTable, params: ModelParams, spacing: float) -> np.ndarray:
    """Per-bond factor ``2 rho_eps/sqrt(xi) * w h^2`` multiplying ``gamma g'(r)``."""
    rho = kernel_rho(bonds.length, params.horizon, 2)
    return 2.0 * rho / np.sqrt(bonds.length) * bonds.weight * spacing**2


def assemble_force(
    r: np.ndarray, gamma: np.ndarray, coeff: np.ndarray, bonds: BondTable, params: ModelParams
) -> np.ndarray:
    """Force density ``L`` from per-bond ``r`` and ``gamma``."""
    mag = coeff * gamma * (2.0 * params.g_inf * params.beta) * r * np.exp(-params.beta * r * r)
    fx = mag * bonds.unit[:, 0]
    fy = mag * bonds.unit[:, 1]
    n = bonds.n_nodes
    L = np.empty((n, 2))
    L[:, 0] = np.bincount(bonds.j, fx, n) - np.bincount(bonds.i, fx, n)
    L[:, 1] = np.bincount(bonds.j, fy, n) - np.bincount(bonds.i, fy, n)
    return L


def nonlocal_force(
    u: np.ndarray, grid: ParticleGrid, bonds: BondTable, damage: DamageState, params: ModelParams
) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(L, r)``: nodal force density and the per-bond ``r`` it used."""
    _, r = bond_strains(u, bonds)
    coeff = bond_force_coefficients(bonds, params, grid.spacing)
    return assemble_force(r, damage.gamma, coeff, bonds, params), r


def linear_stiffness(bonds: BondTable, params: ModelParams, spacing: float) -> np.ndarray:
    """Per-bond spring constant of ``L`` linearised about ``u = 0`` (per unit density)."""
    coeff = bond_force_coefficients(bonds, params, spacing)
    return coeff * params.g2_zero / np.sqrt(bonds.length) / params.density


@lru_cache(maxsize=32)
def critical_time_step(params: ModelParams, spacing: float) -> float:
    """Verlet stability limit ``2 / omega_max`` of the intact linearised lattice.

    ``omega_max**2`` is the top eigenvalue of ``L / rho``, found by Lanczos
    on a free square patch three horizons across each way. The top mode
    is a short-wave lattice mode, so the patch size does not matter.
    """
    n = 2 * int(math.ceil(3.0 * params.horizon / spacing)) + 1
    grid = build_grid(DomainConfig(n * spacing, n * spacing, spacing, params.horizon))
    bonds = build_bond_table(grid)
    k = linear_stiffness(bonds, params, spacing)
    m = grid.n_nodes

    def apply(x):
        u = np.asarray(x).reshape(m, 2)
        du = u[bonds.j] - u[bonds.i]
        s = k * (du[:, 0] * bonds.unit[:, 0] + du[:, 1] * bonds.unit[:, 1])
        out = np.empty((m, 2))
        for c in (0, 1):
            f = s * bonds.unit[:, c]
            out[:, c] = np.bincount(bonds.j, f, m) - np.bincount(bonds.i, f, m)
        return out.ravel()

    op = LinearOperator((2 * m, 2 * m), matvec=apply, dtype=float)
    v0 = np.random.default_rng(0).standard_normal(2 * m)
    lam = eigsh(op, k=1, which="LA", v0=v0, tol=1e-8, return_eigenvectors=False)[0]
    return 2.0 / math.sqrt(lam)


class Integrator:
    """Explicit velocity-Verlet driver for one discretised specimen.

    Each step does: half kick, drift, strains at the new positions, damage
    update with those strains, force with the updated damage, half kick.
    """

    def __init__(
        self,
        grid: ParticleGrid,
        bonds: BondTable,
        damage: DamageState,
        params: ModelParams,
        load: LoadSpec,
        dt: float,
        damage_enabled: bool = True,
    ):
        if not dt != 0:
            raise ValueError("dt must be non-zero")
        self.grid = grid
        self.bonds = bonds
        self.damage = damage
        self.params = params
        self.load = load
        self.dt = dt
        self.damage_enabled = damage_enabled
        self.coeff = bond_force_coefficients(bonds, params, grid.spacing)
        self.r = np.zeros(bonds.n_bonds)
        self.force = np.zeros((grid.n_nodes, 2))
        self.v_half = np.zeros((grid.n_nodes, 2))
        self.b = body_force(grid, load, 0.0)
        self._constant_load = load.profile is None
        limit = critical_time_step(params, grid.spacing)
        if abs(dt) > limit:
            msg = f"dt={abs(dt):.3g} s exceeds the Verlet stability limit {limit:.3g} s; the run may be unstable"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            log.warning(msg)

    def load_at(self, t: float) -> np.ndarray:
        if self._constant_load:
            return self.b
        return body_force(self.grid, self.load, t)

    def initialize(self, state: SimState) -> SimState:
        """Fill ``state.a`` (and cached strains) from ``state.u``."""
        _, self.r = bond_strains(state.u, self.bonds)
        self.force = assemble_force(self.r, self.damage.gamma, self.coeff, self.bonds, self.params)
        state.a = (self.load_at(state.t) - self.force) / self.params.density
        return state

    def step(self, state: SimState) -> SimState:
        dt = self.dt
        v_half = state.v + 0.5 * dt * state.a
        u = state.u + dt * v_half
        n_next = state.step + (1 if dt > 0 else -1)
        t_next = n_next * abs(dt)
        _, self.r = bond_strains(u, self.bonds)
        if self.damage_enabled:
            self.damage.update(self.r, abs(dt), t_next)
        self.force = assemble_force(self.r, self.damage.gamma, self.coeff, self.bonds, self.params)
        a = (self.load_at(t_next) - self.force) / self.params.density
        v = v_half + 0.5 * dt * a
        self.v_half = v_half
        if not np.isfinite(u).all() or np.abs(u).max() > self.grid.diagonal:
            raise SimulationUnstable(f"displacement blow-up at step {n_next} (t={t_next:.3g} s)")
        return SimState(u, v, a, t_next, n_next)


def step_velocity_verlet(state: SimState, integrator: Integrator) -> SimState:
    return integrator.step(state)
