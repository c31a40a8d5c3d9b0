"""End-to-end run: build, pre-notch, time loop, ledger, snapshots."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import RunConfig
from .constitutive import ModelParams, calibrate
from .cracks import CrackPath, extract_crack_path
from .damage import DamageLaw, DamageState
from .discretization import BondTable, ParticleGrid, apply_prenotch, build_bond_table, build_grid
from .dynamics import Integrator, SimState
from .energetics import EnergyAudit, EnergyLedger
from .fields import FieldSnapshot, take_snapshot

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    config: RunConfig
    grid: ParticleGrid
    bonds: BondTable
    params: ModelParams
    state: SimState
    damage: DamageState
    ledger: EnergyLedger
    snapshots: list[FieldSnapshot] = field(default_factory=list)
    cracks: list[CrackPath] = field(default_factory=list)
    notch_bonds: np.ndarray | None = None
    wall_time: float = 0.0


class Simulation:
    """One specimen set up from a :class:`RunConfig`.

    ``initial_displacement``/``initial_velocity`` map node positions to
    ``(n, 2)`` arrays; both default to zero.
    """

    def __init__(
        self,
        config: RunConfig,
        initial_displacement: Callable[[np.ndarray], np.ndarray] | None = None,
        initial_velocity: Callable[[np.ndarray], np.ndarray] | None = None,
        damage_enabled: bool = True,
        dt: float | None = None,
    ):
        self.config = config
        self.grid = build_grid(config.domain_config())
        self.bonds = build_bond_table(self.grid)
        self.params = calibrate(
            config.material_constants(), config.domain.horizon, 2, r_break_factor=config.model.r_break_factor
        )
        self.law: DamageLaw = config.damage_law(self.params.r_break)
        self.damage = DamageState.intact(self.bonds.n_bonds, self.law)
        notch = config.prenotch()
        self.notch = notch
        self.notch_bonds = apply_prenotch(self.grid, self.bonds, self.damage, notch) if notch else None
        self.dt = config.time.dt if dt is None else dt
        self.integrator = Integrator(
            self.grid, self.bonds, self.damage, self.params, config.load_spec(), self.dt, damage_enabled
        )
        n = self.grid.n_nodes
        state = SimState.zeros(n)
        if initial_displacement is not None:
            state.u = np.array(initial_displacement(self.grid.positions), dtype=float).reshape(n, 2)
        if initial_velocity is not None:
            state.v = np.array(initial_velocity(self.grid.positions), dtype=float).reshape(n, 2)
        self.state = self.integrator.initialize(state)
        self.audit = EnergyAudit(self.grid, self.bonds, self.params)
        self.audit.start(0.0, self.state.v, self.integrator.r, self.damage)

    def step(self) -> SimState:
        integ = self.integrator
        b_old = integ.load_at(self.state.t)
        self.state = integ.step(self.state)
        b_new = integ.load_at(self.state.t)
        self.audit.advance(integ.v_half, 0.5 * (b_old + b_new), self.dt)
        return self.state

    def record(self) -> tuple[float, ...]:
        return self.audit.record(self.state.t, self.state.v, self.integrator.r, self.damage)

    def snapshot(self) -> FieldSnapshot:
        return take_snapshot(
            self.state.t, self.state.step, self.grid, self.state.u, self.integrator.r, self.bonds, self.damage, self.params
        )

    def crack(self, snap: FieldSnapshot) -> CrackPath:
        return extract_crack_path(snap.phi, self.grid, snap.t, self.notch, self.config.output.phi_threshold)

    def run(
        self,
        n_steps: int | None = None,
        snapshot_every: int | None = None,
        ledger_every: int | None = None,
        keep_snapshots: bool = True,
        on_snapshot: Callable[[FieldSnapshot, CrackPath], None] | None = None,
    ) -> RunResult:
        cfg = self.config
        n_steps = cfg.n_steps if n_steps is None else n_steps
        snap_every = cfg.time.snapshot_every if snapshot_every is None else snapshot_every
        ledger_every = cfg.time.ledger_every if ledger_every is None else ledger_every
        result = RunResult(
            cfg, self.grid, self.bonds, self.params, self.state, self.damage, self.audit.ledger, notch_bonds=self.notch_bonds
        )
        t0 = time.perf_counter()

        def capture():
            snap = self.snapshot()
            crack = self.crack(snap)
            result.cracks.append(crack)
            if keep_snapshots:
                result.snapshots.append(snap)
            if on_snapshot is not None:
                on_snapshot(snap, crack)

        capture()
        for k in range(1, n_steps + 1):
            self.step()
            if k % ledger_every == 0 or k == n_steps:
                self.record()
            if k % snap_every == 0 or k == n_steps:
                capture()
                log.info(
                    "t=%.3e s step=%d broken=%d", self.state.t, self.state.step, self.damage.n_broken
                )
        result.state = self.state
        result.wall_time = time.perf_counter() - t0
        return result


def run(config: RunConfig, **kwargs) -> RunResult:
    sim_kwargs = {k: kwargs.pop(k) for k in ("initial_displacement", "initial_velocity", "damage_enabled", "dt") if k in kwargs}
    return Simulation(config, **sim_kwargs).run(**kwargs)
