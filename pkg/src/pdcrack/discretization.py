"""Uniform particle grid, half-bond table and pre-notch handling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Relative slack used when comparing lattice distances against the horizon.
_RADIUS_TOL = 1e-9


@dataclass(frozen=True)
class DomainConfig:
    length: float
    height: float
    spacing: float
    horizon: float


@dataclass(frozen=True)
class PreNotch:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def start(self) -> np.ndarray:
        return np.array([self.x0, self.y0])

    @property
    def end(self) -> np.ndarray:
        return np.array([self.x1, self.y1])

    @property
    def length(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)


@dataclass(eq=False)
class ParticleGrid:
    """Cell-centred lattice over ``[0, L] x [0, H]``.

    Nodes are numbered row-major, ``index = iy * nx + ix``, so that
    ``values.reshape(ny, nx)`` gives an image of any nodal field.
    """

    positions: np.ndarray
    nx: int
    ny: int
    spacing: float
    horizon: float
    length: float
    height: float
    top_strip: np.ndarray
    bottom_strip: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def cell_volume(self) -> float:
        return self.spacing**2

    @property
    def diagonal(self) -> float:
        return math.hypot(self.length, self.height)

    def node_at(self, ix: int, iy: int) -> int:
        return iy * self.nx + ix

    def nearest_node(self, x: float, y: float) -> int:
        ix = min(max(int(x / self.spacing), 0), self.nx - 1)
        iy = min(max(int(y / self.spacing), 0), self.ny - 1)
        return self.node_at(ix, iy)


@dataclass(eq=False)
class BondTable:
    """Each unordered pair ``i < j`` with ``|x_j - x_i| < eps`` stored once.

    ``unit`` points from ``i`` to ``j``. ``offsets``/``incident`` form a CSR
    lookup from a node to the ids of every bond touching it.
    """

    i: np.ndarray
    j: np.ndarray
    length: np.ndarray
    unit: np.ndarray
    influence: np.ndarray
    weight: np.ndarray
    n_nodes: int
    offsets: np.ndarray = field(repr=False)
    incident: np.ndarray = field(repr=False)

    @property
    def n_bonds(self) -> int:
        return self.i.shape[0]

    def bonds_of(self, node: int) -> np.ndarray:
        return self.incident[self.offsets[node] : self.offsets[node + 1]]

    def neighbors_of(self, node: int) -> np.ndarray:
        ids = self.bonds_of(node)
        return np.where(self.i[ids] == node, self.j[ids], self.i[ids])


def _cell_count(extent: float, h: float, name: str) -> int:
    ratio = extent / h
    n = int(math.floor(ratio + 1e-9))
    if n < 1:
        raise ValueError(f"{name} ({extent}) is smaller than one cell (h={h})")
    return n


def build_grid(config: DomainConfig) -> ParticleGrid:
    """Place one node at the centre of each ``h x h`` cell.

    Raises:
        ValueError: for non-positive dimensions or a horizon below ``2h``.
    """
    L, H, h, eps = config.length, config.height, config.spacing, config.horizon
    for name, value in (("length", L), ("height", H), ("spacing", h), ("horizon", eps)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    if eps < 2.0 * h * (1.0 - _RADIUS_TOL):
        raise ValueError(f"horizon under-resolved: eps={eps} < 2h={2 * h}")

    nx = _cell_count(L, h, "length")
    ny = _cell_count(H, h, "height")
    xs = (np.arange(nx) + 0.5) * h
    ys = (np.arange(ny) + 0.5) * h
    X, Y = np.meshgrid(xs, ys)
    positions = np.column_stack([X.ravel(), Y.ravel()])

    Lg, Hg = nx * h, ny * h
    y = positions[:, 1]
    top = np.flatnonzero(Hg - y < eps)
    bottom = np.flatnonzero(y < eps)
    return ParticleGrid(
        positions=positions,
        nx=nx,
        ny=ny,
        spacing=h,
        horizon=eps,
        length=Lg,
        height=Hg,
        top_strip=top,
        bottom_strip=bottom,
    )


def partial_volume_weight(xi: np.ndarray | float, horizon: float, spacing: float):
    """Fraction of a neighbour cell counted inside the horizon."""
    return np.clip((horizon + 0.5 * spacing - np.asarray(xi)) / spacing, 0.0, 1.0)


def influence(s: np.ndarray | float):
    """Default influence ``J(s) = 1 - s`` on ``[0, 1)``, zero beyond."""
    s = np.asarray(s, dtype=float)
    return np.where(s < 1.0, 1.0 - s, 0.0)


def lattice_offsets(ratio: float, half: bool = True) -> np.ndarray:
    """Integer offsets ``(a, b)`` with ``0 < a^2 + b^2 < ratio^2``.

    With ``half`` only one of each ``+-`` pair is returned (``b > 0`` or
    ``b == 0, a > 0``), which is what the half-bond table needs.
    """
    R = int(math.ceil(ratio))
    a, b = np.meshgrid(np.arange(-R, R + 1), np.arange(-R, R + 1))
    a, b = a.ravel(), b.ravel()
    r2 = a * a + b * b
    keep = (r2 > 0) & (r2 < ratio * ratio * (1.0 - _RADIUS_TOL))
    if half:
        keep &= (b > 0) | ((b == 0) & (a > 0))
    return np.column_stack([a[keep], b[keep]])


def _incidence(i: np.ndarray, j: np.ndarray, n_nodes: int):
    ends = np.concatenate([i, j])
    ids = np.concatenate([np.arange(i.size), np.arange(j.size)])
    order = np.argsort(ends, kind="stable")
    counts = np.bincount(ends, minlength=n_nodes)
    offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, ids[order]


def build_bond_table(grid: ParticleGrid) -> BondTable:
    h, eps = grid.spacing, grid.horizon
    ii, jj, ll, ee = [], [], [], []
    iy, ix = np.divmod(np.arange(grid.n_nodes), grid.nx)
    for a, b in lattice_offsets(eps / h):
        ok = (ix + a >= 0) & (ix + a < grid.nx) & (iy + b < grid.ny)
        src = np.flatnonzero(ok)
        xi = h * math.hypot(a, b)
        ii.append(src)
        jj.append(src + b * grid.nx + a)
        ll.append(np.full(src.size, xi))
        ee.append(np.tile([a * h / xi, b * h / xi], (src.size, 1)))

    if ii:
        i = np.concatenate(ii)
        j = np.concatenate(jj)
        xi = np.concatenate(ll)
        unit = np.concatenate(ee)
        order = np.lexsort((j, i))
        i, j, xi, unit = i[order], j[order], xi[order], unit[order]
    else:
        i = j = np.zeros(0, dtype=np.int64)
        xi = np.zeros(0)
        unit = np.zeros((0, 2))

    offsets, incident = _incidence(i, j, grid.n_nodes)
    return BondTable(
        i=i,
        j=j,
        length=xi,
        unit=unit,
        influence=influence(xi / eps),
        weight=partial_volume_weight(xi, eps, h),
        n_nodes=grid.n_nodes,
        offsets=offsets,
        incident=incident,
    )


def neighborhood_volume(grid: ParticleGrid, bonds: BondTable, node: int, footprint: bool = False) -> float:
    """Quadrature volume of the horizon of ``node``.

    By default only stored bonds count (``sum_j w_ij h^2``). With
    ``footprint`` the node's own cell and every lattice cell the
    partial-volume rule touches (centres up to ``eps + h/2``) are included,
    which is the measure that converges to ``pi eps^2``.
    """
    h2 = grid.cell_volume
    if not footprint:
        return float(bonds.weight[bonds.bonds_of(node)].sum() * h2)
    h, eps = grid.spacing, grid.horizon
    offs = lattice_offsets((eps + 0.5 * h) / h, half=False)
    x0 = grid.positions[node]
    pts = x0 + offs * h
    inside = (pts[:, 0] > 0) & (pts[:, 0] < grid.length) & (pts[:, 1] > 0) & (pts[:, 1] < grid.height)
    xi = np.hypot(offs[:, 0], offs[:, 1]) * h
    return float((1.0 + partial_volume_weight(xi[inside], eps, h).sum()) * h2)


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_cross(p0: np.ndarray, p1: np.ndarray, q0, q1) -> np.ndarray:
    """Proper (transversal) crossing of segments ``p0-p1`` with ``q0-q1``.

    ``p0``/``p1`` may be ``(n, 2)`` arrays. Touching at an endpoint and
    collinear overlap both return False.
    """
    p0 = np.atleast_2d(p0)
    p1 = np.atleast_2d(p1)
    qx0, qy0 = q0
    qx1, qy1 = q1
    d1 = _orient(qx0, qy0, qx1, qy1, p0[:, 0], p0[:, 1])
    d2 = _orient(qx0, qy0, qx1, qy1, p1[:, 0], p1[:, 1])
    d3 = _orient(p0[:, 0], p0[:, 1], p1[:, 0], p1[:, 1], qx0, qy0)
    d4 = _orient(p0[:, 0], p0[:, 1], p1[:, 0], p1[:, 1], qx1, qy1)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def bonds_crossing(grid: ParticleGrid, bonds: BondTable, notch: PreNotch) -> np.ndarray:
    """Ids of bonds whose open segment properly crosses the notch."""
    lo = np.minimum(notch.y0, notch.y1) - grid.horizon
    hi = np.maximum(notch.y0, notch.y1) + grid.horizon
    xlo = np.minimum(notch.x0, notch.x1) - grid.horizon
    xhi = np.maximum(notch.x0, notch.x1) + grid.horizon
    yi = grid.positions[bonds.i, 1]
    xi = grid.positions[bonds.i, 0]
    cand = np.flatnonzero((yi > lo) & (yi < hi) & (xi > xlo) & (xi < xhi))
    hit = segments_cross(
        grid.positions[bonds.i[cand]], grid.positions[bonds.j[cand]], notch.start, notch.end
    )
    return cand[hit]


def apply_prenotch(grid: ParticleGrid, bonds: BondTable, damage, notch: PreNotch) -> np.ndarray:
    """Break every bond crossing ``notch`` at ``t = 0``.

    ``damage`` is a :class:`pdcrack.damage.DamageState`; it is modified in
    place. Repeating the call changes nothing. Returns the crossing ids.
    """
    ids = bonds_crossing(grid, bonds, notch)
    damage.break_bonds(ids, time=0.0)
    return ids
