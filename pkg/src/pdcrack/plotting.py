"""Static figures written next to the CSV outputs (Agg backend, PNG)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .cracks import CrackPath  # noqa: E402
from .discretization import ParticleGrid  # noqa: E402
from .energetics import EnergyLedger  # noqa: E402
from .fields import FieldSnapshot  # noqa: E402

_DPI = 120


def _image(grid: ParticleGrid, values: np.ndarray) -> np.ndarray:
    return np.asarray(values).reshape(grid.ny, grid.nx)


def _extent(grid: ParticleGrid):
    return (0.0, grid.length, 0.0, grid.height)


def _finish(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_field(grid: ParticleGrid, values: np.ndarray, path, title: str = "", label: str = "", cmap="viridis",
               contours: int = 0) -> Path:
    """Filled image of a nodal field, optionally with contour lines."""
    img = _image(grid, values)
    aspect = grid.height / grid.length
    fig, ax = plt.subplots(figsize=(7.0, 7.0 * aspect + 0.6))
    im = ax.imshow(img, origin="lower", extent=_extent(grid), cmap=cmap, interpolation="nearest")
    if contours:
        x = grid.positions[: grid.nx, 0]
        y = grid.positions[:: grid.nx, 1]
        if np.ptp(img) > 0:
            ax.contour(x, y, img, levels=contours, colors="k", linewidths=0.4)
    fig.colorbar(im, ax=ax, label=label, shrink=0.8)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(title)
    return _finish(fig, Path(path))


def plot_snapshot(grid: ParticleGrid, snap: FieldSnapshot, crack: CrackPath | None, out_dir, stem: str) -> list[Path]:
    """Damage with crack overlay, ``Z`` and ``W`` contours, and ``u_y``."""
    out = Path(out_dir)
    t_us = snap.t * 1e6
    paths = []

    aspect = grid.height / grid.length
    fig, ax = plt.subplots(figsize=(7.0, 7.0 * aspect + 0.6))
    im = ax.imshow(_image(grid, snap.phi), origin="lower", extent=_extent(grid), cmap="Greys", vmin=0, vmax=1,
                   interpolation="nearest")
    if crack is not None and crack.points.size:
        ax.plot(crack.points[:, 0], crack.points[:, 1], "s", color="tab:red", ms=1.2, lw=0)
        if crack.tips.size:
            ax.plot(crack.tips[:, 0], crack.tips[:, 1], "o", mfc="none", mec="tab:blue", ms=6)
    fig.colorbar(im, ax=ax, label="damage index", shrink=0.8)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"crack, t = {t_us:.1f} us")
    paths.append(_finish(fig, out / f"{stem}_crack.png"))

    paths.append(plot_field(grid, snap.Z, out / f"{stem}_Z.png", f"strain concentration Z, t = {t_us:.1f} us", "Z",
                            cmap="magma", contours=6))
    paths.append(plot_field(grid, snap.W, out / f"{stem}_W.png", f"strain energy density, t = {t_us:.1f} us",
                            "W [J/m^2]", cmap="inferno", contours=6))
    paths.append(plot_field(grid, snap.u[:, 1], out / f"{stem}_uy.png", f"u_y, t = {t_us:.1f} us", "u_y [m]",
                            cmap="coolwarm"))
    return paths


def plot_ledger(ledger: EnergyLedger, path) -> Path:
    arr = ledger.as_array()
    t = arr[:, 0] * 1e6
    fig, (ax, ax2) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    for k, name in enumerate(("K", "E", "D", "F", "W_ext"), start=1):
        ax.plot(t, arr[:, k], label=name, lw=1.2)
    ax.set_ylabel("energy [J/m]")
    ax.legend(frameon=False, ncol=5, fontsize=8)
    ax2.plot(t, arr[:, 6], color="k", lw=1.0)
    ax2.set_ylabel("residual [J/m]")
    ax2.set_xlabel("t [us]")
    return _finish(fig, Path(path))


def plot_crack_history(cracks: list[CrackPath], path) -> Path:
    t = np.array([c.t for c in cracks]) * 1e6
    tip = np.array([c.tip[0] for c in cracks])
    comp = np.array([c.component_count for c in cracks])
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(t, tip, "-o", ms=3, label="tip x")
    ax.set_xlabel("t [us]")
    ax.set_ylabel("tip x [m]")
    ax2 = ax.twinx()
    ax2.step(t, comp, where="post", color="tab:red", lw=1.0)
    ax2.set_ylabel("branches", color="tab:red")
    ax2.set_ylim(0, max(3, comp.max(initial=0) + 1))
    return _finish(fig, Path(path))
