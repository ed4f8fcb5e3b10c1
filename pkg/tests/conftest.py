import numpy as np
import pytest

from clonal_evolve import model


@pytest.fixture
def small_grid():
    return model.Grid(25, 21, 6.0, 1.0)


@pytest.fixture
def unit_grid():
    """Unit extents in both directions, handy for closed-form checks."""
    return model.Grid(41, 31, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
