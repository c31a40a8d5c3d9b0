"""Irreversible bond degradation and damage-zone bookkeeping.

Two degradation laws are supported. Form 1 integrates the excess of
``r`` over the onset ``r_plus`` in time; form 2 keeps the running maximum
of ``r``. Both feed a smooth cut-off ``h`` that falls from 1 to 0, or a
step when its width is zero (instant break).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

BROKEN_TOL = 1e-12


def h_profile(x, x_onset: float, x_end: float):
    """Cubic smoothstep from 1 at ``x_onset`` down to 0 at ``x_end``.

    With ``x_end == x_onset`` this is a step: 1 for ``x <= x_onset`` and
    0 above it.
    """
    if x_end < x_onset:
        raise ValueError(f"x_end ({x_end}) must not be below x_onset ({x_onset})")
    x = np.asarray(x, dtype=float)
    if x_end == x_onset:
        out = np.where(x <= x_onset, 1.0, 0.0)
    else:
        s = np.clip((x - x_onset) / (x_end - x_onset), 0.0, 1.0)
        out = 1.0 - s * s * (3.0 - 2.0 * s)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DamageLaw:
    """``form`` 1 or 2; ``width`` is ``x_D`` (form 1) or ``r_D - r_plus`` (form 2)."""

    r_plus: float
    form: int = 2
    width: float = 0.0

    def __post_init__(self):
        if self.form not in (1, 2):
            raise ValueError(f"damage form must be 1 or 2, got {self.form}")
        if self.width < 0:
            raise ValueError("degradation width must be non-negative")


@dataclass(frozen=True)
class BondDamage:
    gamma: float = 1.0
    broken: bool = False
    accumulator: float = 0.0
    break_time: float | None = None


def _finish(bond: BondDamage, gamma: float, acc: float, t: float | None) -> BondDamage:
    if bond.broken:
        return replace(bond, accumulator=acc)
    gamma = min(gamma, bond.gamma)
    if gamma <= BROKEN_TOL:
        return BondDamage(0.0, True, acc, t)
    return BondDamage(gamma, False, acc, None)


def update_damage_form1(bond: BondDamage, r: float, dt: float, law: DamageLaw, t: float | None = None) -> BondDamage:
    if not dt > 0:
        raise ValueError("dt must be positive")
    acc = bond.accumulator + dt * max(r - law.r_plus, 0.0)
    return _finish(bond, h_profile(acc, 0.0, law.width), acc, t)


def update_damage_form2(bond: BondDamage, r: float, law: DamageLaw, t: float | None = None) -> BondDamage:
    acc = max(bond.accumulator, r)
    return _finish(bond, h_profile(acc, law.r_plus, law.r_plus + law.width), acc, t)


@dataclass(eq=False)
class DamageState:
    """Per-bond damage arrays, one slot per stored half-bond."""

    law: DamageLaw
    gamma: np.ndarray
    broken: np.ndarray
    accumulator: np.ndarray
    break_time: np.ndarray
    decreased: np.ndarray = field(repr=False)

    @classmethod
    def intact(cls, n_bonds: int, law: DamageLaw) -> "DamageState":
        acc0 = 0.0 if law.form == 1 else -np.inf
        return cls(
            law=law,
            gamma=np.ones(n_bonds),
            broken=np.zeros(n_bonds, dtype=bool),
            accumulator=np.full(n_bonds, acc0),
            break_time=np.full(n_bonds, np.nan),
            decreased=np.zeros(n_bonds, dtype=bool),
        )

    def copy(self) -> "DamageState":
        return DamageState(
            self.law,
            self.gamma.copy(),
            self.broken.copy(),
            self.accumulator.copy(),
            self.break_time.copy(),
            self.decreased.copy(),
        )

    @property
    def n_broken(self) -> int:
        return int(self.broken.sum())

    def break_bonds(self, ids: np.ndarray, time: float = 0.0) -> None:
        fresh = ids[~self.broken[ids]]
        self.gamma[fresh] = 0.0
        self.broken[fresh] = True
        self.break_time[fresh] = time

    def update(self, r: np.ndarray, dt: float, t: float) -> np.ndarray:
        """Advance every bond with strain measure ``r``; returns ids broken now."""
        law = self.law
        if law.form == 1:
            self.accumulator += dt * np.maximum(r - law.r_plus, 0.0)
            active = self.accumulator > 0.0
            lo, hi = 0.0, law.width
        else:
            np.maximum(self.accumulator, r, out=self.accumulator)
            active = self.accumulator > law.r_plus
            lo, hi = law.r_plus, law.r_plus + law.width
        active &= ~self.broken
        self.decreased[:] = False
        if not active.any():
            return np.zeros(0, dtype=np.int64)
        ids = np.flatnonzero(active)
        new = np.minimum(np.asarray(h_profile(self.accumulator[ids], lo, hi)), self.gamma[ids])
        self.decreased[ids] = new < self.gamma[ids]
        self.gamma[ids] = new
        snap = ids[new <= BROKEN_TOL]
        self.gamma[snap] = 0.0
        self.broken[snap] = True
        self.break_time[snap] = t
        self.decreased[snap] = False
        return snap


@dataclass(frozen=True)
class DamageZones:
    failure: np.ndarray
    process: np.ndarray
    softening: np.ndarray
    elastic: np.ndarray


def classify_zones(damage: DamageState, r: np.ndarray, r_c: float, r_break: float) -> DamageZones:
    """Split bonds into failure, process, softening and remaining elastic sets.

    ``process`` holds unbroken bonds whose ``gamma`` dropped on the latest
    update; the three named zones are pairwise disjoint.
    """
    failure = damage.broken
    process = damage.decreased & ~failure
    softening = ~failure & ~process & (r >= r_c) & (r < r_break)
    elastic = ~failure
    return DamageZones(
        failure=np.flatnonzero(failure),
        process=np.flatnonzero(process),
        softening=np.flatnonzero(softening),
        elastic=np.flatnonzero(elastic),
    )


def nodal_damage(bonds, damage: DamageState) -> np.ndarray:
    """Damage index: broken neighbour volume over total neighbour volume."""
    n = bonds.n_nodes
    w = bonds.weight
    wb = w * damage.broken
    total = np.bincount(bonds.i, w, n) + np.bincount(bonds.j, w, n)
    lost = np.bincount(bonds.i, wb, n) + np.bincount(bonds.j, wb, n)
    out = np.zeros(n)
    np.divide(lost, total, out=out, where=total > 0)
    return out
