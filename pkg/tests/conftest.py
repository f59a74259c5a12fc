import numpy as np
import pytest

from indexlab.topology import SphereGrid


@pytest.fixture(scope="session")
def grid32():
    return SphereGrid.build(32)


@pytest.fixture(scope="session")
def grid64():
    return SphereGrid.build(64)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
