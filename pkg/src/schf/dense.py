"""Brute-force dense-matrix reference for tiny grids (N <= 8).

Operators are stored as matrices acting on coefficient vectors of length N^3
with the volume element folded in: the matrix of an integral operator with
kernel A(x, y) is A(x, y) * dx^3, so plain matrix algebra (eig, svd, trace,
products) yields operator quantities directly.  In particular the matrix of
Gamma has eigenvalues lambda_j.

Error families here are deliberately independent of the production path:
evolution is RK4 on the full von Neumann equation, norms come from full SVD.
"""

from __future__ import annotations

import numpy as np

from .grid import TorusGrid, apply_multiplier, momentum_power_symbol, weight_symbol
from .interaction import InteractionKernel, inverse_transform, mean_field
from .observables import LowRankOperator
from .state import MixedState

__all__ = [
    "densify",
    "dense_from_factors",
    "dense_multiplier_matrix",
    "dense_evolve_rk4",
    "dense_schatten",
    "dense_weighted",
    "dense_sobolev_norm",
    "dense_commutator_trace",
]

MAX_N = 8


def _gate(grid: TorusGrid):
    if grid.n > MAX_N:
        raise ValueError(f"dense oracle limited to N <= {MAX_N}, got N = {grid.n}")


def densify(state: MixedState) -> np.ndarray:
    """Matrix of Gamma = sum lambda_j |psi_j><psi_j| (eigenvalues = weights)."""
    _gate(state.grid)
    psi = state.orbitals.reshape(state.rank, -1)
    return (psi.T * state.weights) @ np.conj(psi) * state.grid.cell_volume


def dense_from_factors(op: LowRankOperator) -> np.ndarray:
    """Matrix of sum |u_i><v_i|."""
    _gate(op.grid)
    u = op.left.reshape(op.nfactors, -1)
    v = op.right.reshape(op.nfactors, -1)
    return u.T @ np.conj(v) * op.grid.cell_volume


def dense_multiplier_matrix(grid: TorusGrid, symbol: np.ndarray) -> np.ndarray:
    """Matrix of a Fourier multiplier, built by applying it to basis columns."""
    _gate(grid)
    eye = np.eye(grid.size, dtype=complex).reshape((grid.size,) + grid.shape)
    cols = apply_multiplier(grid, eye, symbol).reshape(grid.size, grid.size)
    # row i of cols holds the multiplier applied to the i-th basis field
    return cols.T


def _dense_hamiltonian(kernel, grid, kinetic, k_real_mat, gamma, h, mode):
    rho = h**3 * np.diag(gamma).real / grid.cell_volume
    v = mean_field(kernel, rho.reshape(grid.shape)).reshape(-1)
    ham = kinetic + np.diag(v).astype(complex)
    if mode == "hartree_fock":
        ham = ham - h**3 * k_real_mat * gamma
    return ham


def _periodized_kernel_matrix(kernel: InteractionKernel) -> np.ndarray:
    """Matrix K(x - y) from the inverse transform of the spectral symbol."""
    grid = kernel.grid
    k_real = inverse_transform(grid, kernel.symbol.astype(complex)).real
    n = grid.n
    idx = np.arange(n)
    # x_i - y_j = (i - j) dx sits at array index (i - j + N/2) mod N on the
    # centered coordinate axis
    diff = (idx[:, None] - idx[None, :] + n // 2) % n
    d0 = diff[:, None, None, :, None, None]
    d1 = diff[None, :, None, None, :, None]
    d2 = diff[None, None, :, None, None, :]
    mat = k_real[
        np.broadcast_to(d0, (n,) * 6),
        np.broadcast_to(d1, (n,) * 6),
        np.broadcast_to(d2, (n,) * 6),
    ]
    return mat.reshape(grid.size, grid.size)


def dense_evolve_rk4(
    kernel: InteractionKernel,
    gamma: np.ndarray,
    hbar: float,
    T: float,
    dt: float,
    mode: str = "hartree_fock",
) -> np.ndarray:
    """RK4 integration of i hbar Gamma' = [H_Gamma, Gamma], H rebuilt per stage."""
    grid = kernel.grid
    _gate(grid)
    h = 2 * np.pi * hbar
    kinetic = dense_multiplier_matrix(grid, hbar**2 * grid.abs_xi**2 / 2)
    k_mat = _periodized_kernel_matrix(kernel)
    trace0 = np.trace(gamma).real

    def rhs(g):
        ham = _dense_hamiltonian(kernel, grid, kinetic, k_mat, g, h, mode)
        return (ham @ g - g @ ham) / (1j * hbar)

    nsteps = int(round(T / dt))
    for _ in range(nsteps):
        k1 = rhs(gamma)
        k2 = rhs(gamma + 0.5 * dt * k1)
        k3 = rhs(gamma + 0.5 * dt * k2)
        k4 = rhs(gamma + dt * k3)
        gamma = gamma + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if abs(np.trace(gamma).real - trace0) > 1e-6 * max(abs(trace0), 1.0):
            raise RuntimeError(
                f"dense RK4 trace drift exceeds 1e-6 (dt = {dt} too large for ||H||)"
            )
    return gamma


def dense_schatten(grid: TorusGrid, a: np.ndarray, p: float, h: float) -> float:
    _gate(grid)
    s = np.linalg.svd(a, compute_uv=False)
    if p == np.inf:
        return float(s[0])
    return float(h ** (3 / p) * np.sum(s**p) ** (1 / p))


def dense_weighted(
    grid: TorusGrid, a: np.ndarray, n: float, p: float, h: float, hbar: float
) -> float:
    """||A m_n||_{L^p} with the dense multiplier matrix for the weight."""
    w = dense_multiplier_matrix(grid, weight_symbol(grid, n, hbar))
    return dense_schatten(grid, a @ w, p, h)


def dense_sobolev_norm(
    grid: TorusGrid, a: np.ndarray, n: float, q: float, h: float, hbar: float
) -> float:
    """Dense counterpart of the inhomogeneous weighted Sobolev norm."""
    _gate(grid)
    w = dense_multiplier_matrix(grid, weight_symbol(grid, n, hbar))
    total = dense_schatten(grid, a @ w, q, h)
    for axis in range(3):
        grad = dense_multiplier_matrix(grid, 1j * grid.xi_component(axis))
        total += dense_schatten(grid, (grad @ a - a @ grad) @ w, q, h)
    for axis in range(3):
        x = np.diag(
            np.broadcast_to(grid.x_component(axis), grid.shape).reshape(-1)
        ).astype(complex)
        total += dense_schatten(grid, (x @ a - a @ x) / (1j * hbar) @ w, q, h)
    return total


def dense_commutator_trace(
    kernel: InteractionKernel,
    state: MixedState,
    n: int,
    axis: int,
    which: str = "V",
) -> float:
    """|h^3 Tr([W, p_l^n] Gamma) / hbar| with W = V_Gamma or h^3 X_Gamma.

    For which = "X" the reported value matches the exchange commutator
    normalization (h^3 / hbar) Tr([h^3 X, p_l^n] Gamma).
    """
    grid = state.grid
    _gate(grid)
    from .state import spatial_density

    gamma = densify(state)
    p_n = dense_multiplier_matrix(
        grid, (state.hbar * grid.xi_component(axis)) ** n + np.zeros(grid.shape)
    )
    if which == "V":
        v = mean_field(kernel, spatial_density(state)).reshape(-1)
        w = np.diag(v).astype(complex)
    elif which == "X":
        w = state.h**3 * _periodized_kernel_matrix(kernel) * gamma
    else:
        raise ValueError(f"which must be 'V' or 'X', got {which!r}")
    comm = w @ p_n - p_n @ w
    return float(abs(np.trace(comm @ gamma)) * state.h**3 / state.hbar)
