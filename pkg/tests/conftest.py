import numpy as np
import pytest

from pdcrack.config import DomainSection, MaterialSection, NotchSection, RunConfig, TimeSection
from pdcrack.constitutive import MaterialConstants, calibrate
from pdcrack.discretization import DomainConfig, build_bond_table, build_grid

GLASS = MaterialConstants(72e9, 0.33, 2440.0, 135.0)


@pytest.fixture
def glass():
    return GLASS


@pytest.fixture
def small_grid():
    """20 x 12 cells, eps = 3h: interior nodes have full horizons."""
    h = 0.002
    grid = build_grid(DomainConfig(20 * h, 12 * h, h, 3 * h))
    return grid, build_bond_table(grid)


@pytest.fixture
def small_params():
    return calibrate(GLASS, 0.006)


def small_config(**time):
    t = dict(dt=2e-7, t_end=2e-5, snapshot_every=50, ledger_every=10)
    t.update(time)
    return RunConfig(
        DomainSection(0.04, 0.024, 0.002, 0.006),
        MaterialSection(72e9, 0.33, 2440.0, 135.0),
        time=TimeSection(**t),
        notch=NotchSection(enabled=False),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)
