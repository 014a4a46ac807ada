import numpy as np
import pytest

from gaussmink import make_circle_grid, make_latlon_grid

RSTAR = float(np.sqrt(2.0 * np.log(2.0)))   # stationary ball radius for p=2, f=1/(4 pi)
F_CONST = 1.0 / (4.0 * np.pi)


@pytest.fixture(scope="session")
def circle128():
    return make_circle_grid(128)


@pytest.fixture(scope="session")
def circle512():
    return make_circle_grid(512)


@pytest.fixture(scope="session")
def latlon_small():
    return make_latlon_grid(16, 32)
