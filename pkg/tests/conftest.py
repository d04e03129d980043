import numpy as np
import pytest

from landau.grid import VelocityGrid
from landau.kernel import KernelParams, QuadratureSpec, build_coefficients
from landau.operator import make_context

# small shared configuration used by most operator-level tests
SMALL_R = 6.0
SMALL_N = 16


@pytest.fixture(scope="session")
def small_grid():
    return VelocityGrid(R=SMALL_R, N=SMALL_N)


@pytest.fixture(scope="session")
def params():
    return KernelParams(-1.0)


@pytest.fixture(scope="session")
def quad():
    return QuadratureSpec()


@pytest.fixture(scope="session")
def small_coeffs(small_grid, params, quad, tmp_path_factory):
    cache = tmp_path_factory.mktemp("coef-cache")
    return build_coefficients(small_grid, params, quad, cache_dir=str(cache))


@pytest.fixture(scope="session")
def small_ctx(small_coeffs):
    return make_context(small_coeffs)


@pytest.fixture(scope="session")
def medium_grid():
    return VelocityGrid(R=6.0, N=24)


@pytest.fixture(scope="session")
def medium_coeffs(medium_grid, params, quad):
    return build_coefficients(medium_grid, params, quad)


@pytest.fixture(scope="session")
def medium_ctx(medium_coeffs):
    return make_context(medium_coeffs)


def gaussian_field(grid, width=1.0):
    from landau.field import ScalarField

    return ScalarField(grid, np.exp(-grid.radius_sq / (2.0 * width * width)))
