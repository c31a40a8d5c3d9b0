"""Deterministic CSV writers; every file opens with a provenance comment."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .cracks import CrackPath
from .energetics import EnergyLedger, write_ledger
from .fields import FieldSnapshot

CRACK_COLUMNS = ("t", "component_count", "tip_x", "tip_y")


def provenance(config: RunConfig) -> str:
    return f"config_sha256={config.digest()} version={__version__}"


def write_snapshot(path, snap: FieldSnapshot, config: RunConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# {provenance(config)} t={snap.t!r} step={snap.step}\n")
        fh.write(",".join(FieldSnapshot.COLUMNS) + "\n")
        np.savetxt(fh, snap.table(), fmt="%.9e", delimiter=",")
    return path


def write_crack_paths(path, cracks: list[CrackPath], config: RunConfig) -> Path:
    """One row per tip per snapshot; a snapshot without tips gets NaN tips."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(f"# {provenance(config)}\n")
        fh.write(",".join(CRACK_COLUMNS) + "\n")
        for c in cracks:
            tips = c.tips if c.tips.size else np.array([[np.nan, np.nan]])
            for x, y in tips:
                fh.write(f"{c.t:.9e},{c.component_count},{x:.9e},{y:.9e}\n")
    return path


def write_run_ledger(path, ledger: EnergyLedger, config: RunConfig) -> Path:
    write_ledger(path, ledger, provenance(config))
    return Path(path)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Column names and data of a file written by this module."""
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    names = lines[0].strip().split(",")
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2) if len(lines) > 1 else np.zeros((0, len(names)))
    return names, data
