import numpy as np
import pytest

from heatshift.clock import QUARTERS_PER_YEAR
from heatshift.data import YearDataset
from heatshift.thermal import TankParams


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def tank():
    return TankParams()


@pytest.fixture
def lossless_tank():
    return TankParams(loss_w_per_k=0.0)


def make_year(pv=0.0, load=0.0, dhw=0.0, label="test"):
    """A constant-valued dataset; scalars or full arrays per series."""
    def expand(v):
        if np.isscalar(v):
            return np.full(QUARTERS_PER_YEAR, float(v))
        return np.asarray(v, dtype=np.float64)

    return YearDataset(expand(pv), expand(load), expand(dhw), label=label)


@pytest.fixture
def zero_year():
    return make_year()
