import numpy as np
import pytest

from weakcorr import (
    GridSpec,
    cat_state,
    correlated_gaussian,
    general_gaussian,
    make_grid,
    phase_gaussian,
    product_gaussian,
)


@pytest.fixture(scope="session")
def grid():
    return make_grid(GridSpec())


@pytest.fixture(scope="session")
def battery(grid):
    """The five reference states on the default 256 x 256 grid over [-8, 8]^2."""
    return {
        "product": product_gaussian(1.0, 1.0, grid),
        "correlated": correlated_gaussian(0.5, 0.2, grid),
        "phase": phase_gaussian(1.0, 0.3, grid),
        "general": general_gaussian(0.5, 0.2, 0.3, grid),
        "cat": cat_state(2.0, 0.5, grid),
    }


@pytest.fixture(params=["product", "correlated", "phase", "general", "cat"])
def any_state(request, battery):
    return battery[request.param]


@pytest.fixture(params=["product", "correlated", "phase", "general"])
def gaussian_state(request, battery):
    return battery[request.param]


def index_of(grid, x1, x2):
    """Grid index of the point (x1, x2), which must lie on the grid."""
    i = int(np.argmin(np.abs(grid.x1 - x1)))
    j = int(np.argmin(np.abs(grid.x2 - x2)))
    assert abs(grid.x1[i] - x1) < 1e-12 and abs(grid.x2[j] - x2) < 1e-12
    return i, j
