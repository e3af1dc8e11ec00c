import numpy as np
import pytest

from pcwatoms.photonic1d import (DEFAULT_NU_1_THZ, DEFAULT_NU_BE_THZ,
                                 default_stack)


@pytest.fixture(scope="session")
def stack():
    return default_stack()


@pytest.fixture(scope="session")
def nu_edge():
    return DEFAULT_NU_BE_THZ


@pytest.fixture(scope="session")
def nu_first():
    return DEFAULT_NU_1_THZ


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=20240815))
