import numpy as np
import pytest

from dispersion_lab.grid_model import Grid, PotentialSpec, sample_potential
from dispersion_lab.spectral_operator import build_hamiltonian

GAUSS31 = PotentialSpec("gaussian", amplitude=3.0, width=1.0)
SECH21 = PotentialSpec("sech_squared", amplitude=-2.0, width=1.0)
ZERO = PotentialSpec("zero")


@pytest.fixture(scope="session")
def scatter_grid():
    # h = 0.01, x = 0 and integer probes are exact nodes
    return Grid(l_box=20.0, n_points=4001)


@pytest.fixture(scope="session")
def zero_pot(scatter_grid):
    return sample_potential(ZERO, scatter_grid)


@pytest.fixture(scope="session")
def gauss_pot(scatter_grid):
    return sample_potential(GAUSS31, scatter_grid)


@pytest.fixture(scope="session")
def sech_pot(scatter_grid):
    return sample_potential(SECH21, scatter_grid)


@pytest.fixture(scope="session")
def grid40_2048():
    return Grid(l_box=40.0, n_points=2048)


@pytest.fixture(scope="session")
def ham_free_2048(grid40_2048):
    return build_hamiltonian(sample_potential(ZERO, grid40_2048))


@pytest.fixture(scope="session")
def ham_gauss_2048(grid40_2048):
    return build_hamiltonian(sample_potential(GAUSS31, grid40_2048))


@pytest.fixture(scope="session")
def ham_free_4096():
    grid = Grid(l_box=40.0, n_points=4096)
    return build_hamiltonian(sample_potential(ZERO, grid))


@pytest.fixture(scope="session")
def ham_sech_4096():
    grid = Grid(l_box=20.0, n_points=4096)
    return build_hamiltonian(sample_potential(SECH21, grid))


@pytest.fixture(scope="session")
def ham_gauss_1024():
    grid = Grid(l_box=40.0, n_points=1024)
    return build_hamiltonian(sample_potential(GAUSS31, grid))


@pytest.fixture(scope="session")
def ham_free_1024_l30():
    grid = Grid(l_box=30.0, n_points=1024)
    return build_hamiltonian(sample_potential(ZERO, grid))


@pytest.fixture(scope="session")
def ham_sech_1024_l30():
    grid = Grid(l_box=30.0, n_points=1024)
    return build_hamiltonian(sample_potential(SECH21, grid))


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=[2718, 0]))
