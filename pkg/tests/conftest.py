import numpy as np
import pytest

from ihosim import FockSpace, GridSpec


@pytest.fixture
def space64():
    return FockSpace(64)


@pytest.fixture(scope="session")
def fine_grid():
    return GridSpec(40.0, 2 ** 12)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
