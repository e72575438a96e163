import numpy as np
import pytest

from schf.grid import TorusGrid
from schf.state import new_mixed_state


@pytest.fixture(scope="session")
def grid8():
    return TorusGrid(8, 2 * np.pi)


@pytest.fixture(scope="session")
def grid16():
    return TorusGrid(16, 2 * np.pi)


def plane_wave(grid, mode, amplitude=None):
    """Normalized plane wave exp(i xi_m . x) for an integer mode triple."""
    mesh = grid.coordinate_mesh()
    scale = 2 * np.pi / grid.length
    phase = scale * sum(m * c for m, c in zip(mode, mesh))
    psi = np.exp(1j * phase) / grid.length**1.5
    if amplitude is not None:
        psi = psi * amplitude * grid.length**1.5
    return psi


def plane_wave_mixture(hbar, grid, modes, weights=None):
    orbitals = np.stack([plane_wave(grid, m) for m in modes])
    if weights is None:
        weights = np.ones(len(modes))
    return new_mixed_state(hbar, grid, weights, orbitals)
