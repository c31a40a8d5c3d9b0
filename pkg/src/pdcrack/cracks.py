"""Crack-path extraction from the nodal damage field.

Nodes with damage index at or above a threshold form the crack set. The
set is labelled with 8-connectivity on the lattice image; branches are
counted column by column as separated vertical runs, which stays robust
when two branches still share the junction cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .discretization import ParticleGrid, PreNotch

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass
class CrackPath:
    t: float
    points: np.ndarray
    labels: np.ndarray
    tips: np.ndarray
    component_count: int
    column_counts: np.ndarray = field(repr=False)
    branch_x: float | None = None

    @property
    def tip(self) -> tuple[float, float]:
        if self.tips.size == 0:
            return (float("nan"), float("nan"))
        k = int(np.argmax(self.tips[:, 0]))
        return float(self.tips[k, 0]), float(self.tips[k, 1])

    @property
    def branched(self) -> bool:
        return self.component_count >= 2


def _runs(column: np.ndarray, gap: int) -> int:
    idx = np.flatnonzero(column)
    if idx.size == 0:
        return 0
    return 1 + int(np.count_nonzero(np.diff(idx) > gap + 1))


def _sustained_max(counts: np.ndarray, min_columns: int) -> tuple[int, int | None]:
    """Largest ``k`` held by ``min_columns`` consecutive columns, and where it starts."""
    best, start = 0, None
    for k in range(1, int(counts.max(initial=0)) + 1):
        hit = counts >= k
        run = 0
        found = None
        for c, flag in enumerate(hit):
            run = run + 1 if flag else 0
            if run >= min_columns:
                found = c - min_columns + 1
                break
        if found is None:
            break
        best, start = k, found
    return best, start


def crack_mask(phi: np.ndarray, grid: ParticleGrid, threshold: float) -> np.ndarray:
    return (phi >= threshold).reshape(grid.ny, grid.nx)


def extract_crack_path(
    phi: np.ndarray,
    grid: ParticleGrid,
    t: float = 0.0,
    notch: PreNotch | None = None,
    threshold: float = 0.35,
    gap_cells: int = 1,
    min_columns: int = 3,
    min_size: int = 3,
) -> CrackPath:
    """Label the crack set and locate its tips and branches.

    With a ``notch`` only components touching the notch line are kept, so
    isolated damage elsewhere (e.g. near the loaded strips) is ignored.
    """
    mask = crack_mask(phi, grid, threshold)
    labels, n = ndimage.label(mask, structure=_EIGHT)
    keep = np.zeros(n + 1, dtype=bool)
    if n:
        sizes = np.bincount(labels.ravel(), minlength=n + 1)
        keep[1:] = sizes[1:] >= min_size
        if notch is not None:
            near = np.zeros(n + 1, dtype=bool)
            ix0 = int(min(notch.x0, notch.x1) / grid.spacing)
            ix1 = min(int(np.ceil(max(notch.x0, notch.x1) / grid.spacing)), grid.nx)
            iy = int(round(0.5 * (notch.y0 + notch.y1) / grid.spacing))
            band = labels[max(iy - 2, 0) : iy + 2, ix0 : max(ix1, ix0 + 1)]
            near[np.unique(band)] = True
            keep &= near
    keep[0] = False
    main = keep[labels]

    counts = np.array([_runs(main[:, c], gap_cells) for c in range(grid.nx)])
    ncomp, start = _sustained_max(counts, min_columns)

    branch_x = None
    region = main
    if ncomp >= 2 and start is not None:
        branch_x = (start + 0.5) * grid.spacing
        region = main.copy()
        region[:, :start] = False
    tip_labels, nt = ndimage.label(region, structure=_EIGHT)
    tips = []
    iy_all, ix_all = np.nonzero(tip_labels)
    for k in range(1, nt + 1):
        sel = tip_labels[iy_all, ix_all] == k
        if sel.sum() < min_size:
            continue
        cols = ix_all[sel]
        rows = iy_all[sel]
        far = cols == cols.max()
        tips.append(((cols.max() + 0.5) * grid.spacing, (rows[far].mean() + 0.5) * grid.spacing))
    tips_arr = np.array(sorted(tips, key=lambda p: p[1])).reshape(-1, 2)

    flat = np.flatnonzero(main.ravel())
    return CrackPath(
        t=t,
        points=grid.positions[flat],
        labels=labels.ravel()[flat],
        tips=tips_arr,
        component_count=ncomp,
        column_counts=counts,
        branch_x=branch_x,
    )


def branch_time(paths: list[CrackPath]) -> float | None:
    """Time of the first snapshot whose crack has two or more branches."""
    for p in paths:
        if p.branched:
            return p.t
    return None
