import numpy as np
import pytest

from kinklab.grid import build_grid


@pytest.fixture(scope="session")
def grid_l10():
    return build_grid(0.1, 0.1)


@pytest.fixture(scope="session")
def grid_l20():
    return build_grid(0.05, 0.1)


@pytest.fixture(scope="session")
def grid_l20_fine():
    return build_grid(0.05, 0.05)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
