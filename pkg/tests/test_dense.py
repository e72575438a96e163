import numpy as np
import pytest

from schf import dense
from schf.dynamics import PropagatorConfig, apply_hamiltonian, evolve, hf_energy
from schf.grid import TorusGrid, apply_multiplier, weight_symbol
from schf.interaction import InteractionKernel, mean_field
from schf.observables import (
    frobenius_distance,
    schatten_lp,
    state_operator,
    weighted_schatten,
)
from schf.state import random_mixed_state, spatial_density

from conftest import plane_wave_mixture


class TestDensify:
    def test_eigenvalues_are_weights(self, grid8):
        state = random_mixed_state(0, 1.0, grid8, 3)
        gamma = dense.densify(state)
        assert np.max(np.abs(gamma - np.conj(gamma.T))) < 1e-14
        evals = np.linalg.eigvalsh(gamma)[::-1]
        assert np.max(np.abs(evals[:3] - state.weights)) < 1e-12 * state.weights[0]
        assert np.max(np.abs(evals[3:])) < 1e-12 * state.weights[0]

    def test_trace_is_h_minus_three(self, grid8):
        state = random_mixed_state(1, 0.5, grid8, 2)
        assert abs(np.trace(dense.densify(state)).real - state.h**-3) < 1e-12

    def test_gate(self, grid16):
        state = random_mixed_state(0, 1.0, grid16, 1)
        with pytest.raises(ValueError, match="N <= 8"):
            dense.densify(state)


class TestMultiplierMatrix:
    def test_matches_fft_application(self, grid8):
        rng = np.random.default_rng(7)
        symbol = rng.standard_normal(grid8.shape)
        f = rng.standard_normal(grid8.shape) + 1j * rng.standard_normal(grid8.shape)
        mat = dense.dense_multiplier_matrix(grid8, symbol)
        direct = apply_multiplier(grid8, f, symbol).reshape(-1)
        assert np.max(np.abs(mat @ f.reshape(-1) - direct)) < 1e-10

    def test_hermitian_for_real_symbol(self, grid8):
        mat = dense.dense_multiplier_matrix(
            grid8, weight_symbol(grid8, 2, 1.0)
        )
        assert np.max(np.abs(mat - np.conj(mat.T))) < 1e-10


class TestPeriodizedKernel:
    def test_matrix_convolution_matches_mean_field(self, grid8):
        # V(x) = sum_y K(x - y) rho(y) dx^3 as an explicit matrix product
        kernel = InteractionKernel(0.5, -1, grid8)
        state = random_mixed_state(3, 1.0, grid8, 2)
        rho = spatial_density(state)
        k_mat = dense._periodized_kernel_matrix(kernel)
        via_matrix = grid8.cell_volume * k_mat @ rho.reshape(-1)
        via_fft = mean_field(kernel, rho).reshape(-1)
        assert np.max(np.abs(via_matrix - via_fft)) < 1e-10 * np.max(
            np.abs(via_fft)
        )

    def test_symmetric(self, grid8):
        kernel = InteractionKernel(0.7, 1, grid8)
        k_mat = dense._periodized_kernel_matrix(kernel)
        assert np.max(np.abs(k_mat - k_mat.T)) < 1e-12


class TestDenseNorms:
    def test_schatten_matches_weights(self, grid8):
        state = random_mixed_state(4, 1.0, grid8, 3)
        gamma = dense.densify(state)
        for p in (1.0, 2.0, np.inf):
            lr = schatten_lp(state, p)
            dn = dense.dense_schatten(grid8, gamma, p, state.h)
            assert abs(lr - dn) < 1e-10 * dn

    def test_weighted_matches_low_rank(self, grid8):
        state = random_mixed_state(5, 0.5, grid8, 2)
        gamma = dense.densify(state)
        lr = weighted_schatten(state, 4, 2.0)
        dn = dense.dense_weighted(grid8, gamma, 4, 2.0, state.h, state.hbar)
        assert abs(lr - dn) < 1e-9 * dn

    def test_from_factors_matches_state_operator(self, grid8):
        state = random_mixed_state(6, 1.0, grid8, 2)
        a = dense.dense_from_factors(state_operator(state))
        b = dense.densify(state)
        assert np.max(np.abs(a - b)) < 1e-14


class TestDenseEvolution:
    def test_zero_time_identity(self, grid8):
        state = random_mixed_state(0, 1.0, grid8, 2)
        kernel = InteractionKernel(0.3, 1, grid8)
        gamma = dense.densify(state)
        out = dense.dense_evolve_rk4(kernel, gamma, 1.0, 0.0, 1e-3)
        assert np.array_equal(out, gamma)

    def test_trace_preserved(self, grid8):
        state = random_mixed_state(1, 1.0, grid8, 2)
        kernel = InteractionKernel(0.3, 1, grid8)
        gamma = dense.densify(state)
        out = dense.dense_evolve_rk4(kernel, gamma, 1.0, 0.05, 1e-3)
        assert abs(np.trace(out).real - np.trace(gamma).real) < 1e-9

    def test_short_run_matches_strang(self, grid8):
        # 20 steps of production Strang vs the independent dense von Neumann
        # RK4; both are ~O(dt^2)-accurate so agreement is a few x dt^2
        state = random_mixed_state(2, 1.0, grid8, 2)
        kernel = InteractionKernel(0.3, 1, grid8)
        T, dt = 0.02, 1e-3
        out, _ = evolve(kernel, state, T, PropagatorConfig(dt=dt))
        gamma = dense.dense_evolve_rk4(kernel, dense.densify(state), 1.0, T, dt)
        err = np.linalg.norm(dense.densify(out) - gamma)
        assert err < 1e-6 * np.linalg.norm(gamma)

    def test_dense_hamiltonian_action_matches(self, grid8):
        # H built from the periodized kernel agrees with the spectral H
        state = random_mixed_state(8, 1.0, grid8, 2)
        kernel = InteractionKernel(0.4, -1, grid8)
        gamma = dense.densify(state)
        kinetic = dense.dense_multiplier_matrix(
            grid8, state.hbar**2 * grid8.abs_xi**2 / 2
        )
        k_mat = dense._periodized_kernel_matrix(kernel)
        ham = dense._dense_hamiltonian(
            kernel, grid8, kinetic, k_mat, gamma, state.h, "hartree_fock"
        )
        phi = state.orbitals[0]
        via_dense = ham @ phi.reshape(-1)
        via_spectral = apply_hamiltonian(kernel, state, phi).reshape(-1)
        scale = np.max(np.abs(via_spectral))
        assert np.max(np.abs(via_dense - via_spectral)) < 1e-9 * scale

    def test_energy_conserved_by_dense_flow(self, grid8):
        state = random_mixed_state(3, 1.0, grid8, 2)
        kernel = InteractionKernel(0.3, 1, grid8)
        gamma0 = dense.densify(state)
        gamma1 = dense.dense_evolve_rk4(kernel, gamma0, 1.0, 0.1, 1e-3)
        # dense energy functional evaluated directly on the matrices
        kin = dense.dense_multiplier_matrix(
            grid8, state.hbar**2 * grid8.abs_xi**2 / 2
        )

        k_mat = dense._periodized_kernel_matrix(kernel)

        def energy(g):
            h = state.h
            rho = h**3 * np.diag(g).real / grid8.cell_volume
            v = mean_field(kernel, rho.reshape(grid8.shape)).reshape(-1)
            e = h**3 * np.trace(kin @ g).real
            e += 0.5 * grid8.cell_volume * float(rho @ v)
            # bare exchange matrix is K(x-y) Gamma(x,y) dx^3 = k_mat * g
            e -= 0.5 * h**6 * np.trace((k_mat * g) @ g).real
            return e

        e0, e1 = energy(gamma0), energy(gamma1)
        assert abs(e1 - e0) < 1e-8 * abs(e0)
        assert abs(e0 - hf_energy(kernel, state)) < 1e-8 * abs(e0)


class TestCommutatorTrace:
    def test_plane_wave_vanishes(self, grid8):
        # uniform density: V = 0, and the exchange operator commutes with p^n
        # on a plane-wave mixture's span only through zero traces
        state = plane_wave_mixture(1.0, grid8, [(1, 0, 0)])
        kernel = InteractionKernel(0.5, 1, grid8)
        assert dense.dense_commutator_trace(kernel, state, 2, 0, "V") < 1e-12
        assert dense.dense_commutator_trace(kernel, state, 2, 0, "X") < 1e-12

    def test_bad_which(self, grid8):
        state = plane_wave_mixture(1.0, grid8, [(0, 0, 0)])
        kernel = InteractionKernel(0.5, 1, grid8)
        with pytest.raises(ValueError, match="which"):
            dense.dense_commutator_trace(kernel, state, 2, 0, "Z")
