import numpy as np
import pytest

from filamentlab.grids import Grid2D, ZFrequencySet


@pytest.fixture(scope="session")
def grid():
    return Grid2D(16.0, 128)


@pytest.fixture(scope="session")
def coarse_grid():
    return Grid2D(16.0, 64)


@pytest.fixture(scope="session")
def zf1():
    return ZFrequencySet.for_torus(1)


@pytest.fixture(scope="session")
def zf0():
    return ZFrequencySet.for_torus(0)


def approx_order(errs, factor=2.0):
    """Observed convergence order from consecutive errors under factor refinement."""
    errs = np.asarray(errs, dtype=float)
    return np.log(errs[:-1] / errs[1:]) / np.log(factor)
