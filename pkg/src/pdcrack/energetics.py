"""Energy functionals and the running energy-balance audit.

All energies are per unit thickness (J/m). Double integrals over ordered
point pairs are evaluated as twice the sum over stored half-bonds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constitutive import ModelParams, kernel_rho, potential
from .damage import DamageState
from .discretization import BondTable, ParticleGrid

LEDGER_COLUMNS = ("t", "K", "E", "D", "F", "W_ext", "residual")


def pair_energy_weights(bonds: BondTable, params: ModelParams, spacing: float) -> np.ndarray:
    """``2 rho_eps(xi) w h^4`` per half-bond (both cell measures, both orders)."""
    return 2.0 * kernel_rho(bonds.length, params.horizon, 2) * bonds.weight * spacing**4


def kinetic_energy(v: np.ndarray, spacing: float, density: float) -> float:
    return float(0.5 * density * np.einsum("ij,ij->", v, v) * spacing**2)


def elastic_energy(r: np.ndarray, damage: DamageState, weights: np.ndarray, params: ModelParams) -> float:
    return float(np.dot(weights, damage.gamma * potential(r, params)))


def damage_energy(damage: DamageState, weights: np.ndarray, params: ModelParams) -> float:
    return float(params.g_inf * np.dot(weights, 1.0 - damage.gamma))


def failure_energy(damage: DamageState, weights: np.ndarray, params: ModelParams) -> float:
    return float(params.g_inf * np.dot(weights, damage.broken.astype(float)))


def external_work_increment(v_half: np.ndarray, b: np.ndarray, dt: float, spacing: float) -> float:
    """Midpoint-rule work ``dt * sum_i b_i . v_i^{n+1/2} h^2``."""
    return float(dt * np.einsum("ij,ij->", b, v_half) * spacing**2)


def load_norm(b: np.ndarray, spacing: float) -> float:
    """Discrete ``L2`` norm of a body-force field."""
    return float(math.sqrt(np.einsum("ij,ij->", b, b)) * spacing)


@dataclass
class EnergyLedger:
    rows: list[tuple[float, ...]] = field(default_factory=list)
    load_integral: list[float] = field(default_factory=list)
    density: float = 1.0

    def append(self, t, K, E, D, F, W_ext, baseline, load_int):
        self.rows.append((t, K, E, D, F, W_ext, K + E + D - W_ext - baseline))
        self.load_integral.append(load_int)

    def column(self, name: str) -> np.ndarray:
        k = LEDGER_COLUMNS.index(name)
        return np.array([row[k] for row in self.rows])

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float).reshape(-1, len(LEDGER_COLUMNS))

    def __len__(self) -> int:
        return len(self.rows)


def balance_residual(row) -> float:
    return float(row[LEDGER_COLUMNS.index("residual")])


def energy_bound_margin(ledger: EnergyLedger) -> np.ndarray:
    """Bound minus ``K + E + D`` at every row; negative entries are violations.

    The bound is ``(int |b|_L2 / sqrt(rho) dt + sqrt(K0 + E0 + D0 + 1))^2 - 1``.
    """
    if not ledger.rows:
        return np.zeros(0)
    arr = ledger.as_array()
    ked = arr[:, 1] + arr[:, 2] + arr[:, 3]
    A = np.asarray(ledger.load_integral) / math.sqrt(ledger.density)
    # expanded so that squaring sqrt(w0) cannot leave round-off at t = 0
    return A * (A + 2.0 * math.sqrt(ked[0] + 1.0)) + (ked[0] - ked)


def energy_bound_check(ledger: EnergyLedger) -> bool:
    return bool((energy_bound_margin(ledger) >= 0.0).all())


class EnergyAudit:
    """Tracks kinetic, elastic, damage, failure energy and external work."""

    def __init__(self, grid: ParticleGrid, bonds: BondTable, params: ModelParams):
        self.grid = grid
        self.params = params
        self.weights = pair_energy_weights(bonds, params, grid.spacing)
        self.ledger = EnergyLedger(density=params.density)
        self.W_ext = 0.0
        self.load_int = 0.0
        self.baseline: float | None = None
        self.last: tuple[float, float, float, float] | None = None

    def energies(self, v: np.ndarray, r: np.ndarray, damage: DamageState) -> tuple[float, float, float, float]:
        K = kinetic_energy(v, self.grid.spacing, self.params.density)
        E = elastic_energy(r, damage, self.weights, self.params)
        D = damage_energy(damage, self.weights, self.params)
        F = failure_energy(damage, self.weights, self.params)
        return K, E, D, F

    def start(self, t: float, v: np.ndarray, r: np.ndarray, damage: DamageState) -> None:
        K, E, D, F = self.energies(v, r, damage)
        self.baseline = K + E + D
        self.last = (K, E, D, F)
        self.ledger.append(t, K, E, D, F, 0.0, self.baseline, 0.0)

    def advance(self, v_half: np.ndarray, b_mid: np.ndarray, dt: float) -> None:
        self.W_ext += external_work_increment(v_half, b_mid, dt, self.grid.spacing)
        self.load_int += abs(dt) * load_norm(b_mid, self.grid.spacing)

    def record(self, t: float, v: np.ndarray, r: np.ndarray, damage: DamageState) -> tuple[float, ...]:
        K, E, D, F = self.energies(v, r, damage)
        self.last = (K, E, D, F)
        self.ledger.append(t, K, E, D, F, self.W_ext, self.baseline, self.load_int)
        return self.ledger.rows[-1]


def write_ledger(path: str | Path, ledger: EnergyLedger, header: str = "") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write("# energies per unit thickness [J/m], t [s]\n")
        fh.write(",".join(LEDGER_COLUMNS) + "\n")
        for row in ledger.rows:
            fh.write(",".join(f"{x:.16e}" for x in row) + "\n")
