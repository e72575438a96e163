"""Norms, moments, and weighted operator functionals of low-rank states.

Everything here reduces to Gram-matrix linear algebra on the orbital factors:
an operator A = sum_i |u_i><v_i| has the same nonzero singular values as the
m x m matrix G_u^{1/2} G_v^{1/2}, where G_u, G_v are the volume-weighted Gram
matrices of the factors.  The dense-oracle module cross-validates this path
on tiny grids.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .grid import (
    TorusGrid,
    apply_multiplier,
    forward_transform,
    gradient,
    momentum_power_symbol,
    weight_symbol,
)
from .state import MixedState, spatial_density

__all__ = [
    "LowRankOperator",
    "ObservableRecord",
    "moment_density",
    "moment",
    "schatten_lp",
    "low_rank_singular_values",
    "frobenius_distance",
    "weighted_schatten",
    "sobolev_factors",
    "sobolev_norm",
    "lp_pm_eps",
    "lebesgue_norm",
]

MOMENT_ROUTE_TOL = 1e-12


@dataclass(frozen=True)
class LowRankOperator:
    """Factored operator A = sum_i |u_i><v_i| on a single grid."""

    grid: TorusGrid
    left: np.ndarray  # (m, N, N, N)
    right: np.ndarray  # (m, N, N, N)

    def __post_init__(self):
        if self.left.shape != self.right.shape:
            raise ValueError("left/right factor counts differ")
        self.grid._check(self.left)

    @property
    def nfactors(self) -> int:
        return len(self.left)

    def compose_right(self, symbol: np.ndarray) -> "LowRankOperator":
        """A -> A W for a self-adjoint real Fourier multiplier W.

        A W = sum |u_i><W v_i| since <W v| = <v| W for self-adjoint W.
        """
        weighted = apply_multiplier(self.grid, self.right, symbol)
        return LowRankOperator(self.grid, self.left, weighted)

    def __add__(self, other: "LowRankOperator") -> "LowRankOperator":
        return LowRankOperator(
            self.grid,
            np.concatenate([self.left, other.left]),
            np.concatenate([self.right, other.right]),
        )


def state_operator(state: MixedState) -> LowRankOperator:
    """Gamma itself as a factored operator (weights folded into left factors)."""
    left = state.weights[:, None, None, None] * state.orbitals
    return LowRankOperator(state.grid, left, state.orbitals)


def _gram(grid: TorusGrid, fields: np.ndarray) -> np.ndarray:
    flat = fields.reshape(len(fields), -1)
    return grid.cell_volume * (np.conj(flat) @ flat.T)


def _sqrtm_psd(g: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(g)
    return (evecs * np.sqrt(np.clip(evals, 0, None))) @ np.conj(evecs.T)


def low_rank_singular_values(op: LowRankOperator) -> np.ndarray:
    """Singular values of A = sum |u_i><v_i|, descending, padded to m."""
    if op.nfactors < 1:
        raise ValueError("operator has no factors")
    gu = _gram(op.grid, op.left)
    gv = _gram(op.grid, op.right)
    if not (np.all(np.isfinite(gu)) and np.all(np.isfinite(gv))):
        raise ValueError("non-finite Gram entries")
    s = np.linalg.svd(_sqrtm_psd(gu) @ _sqrtm_psd(gv), compute_uv=False)
    return np.sort(s)[::-1]


def _schatten_of_singulars(s: np.ndarray, p: float, h: float) -> float:
    if p == np.inf:
        return float(s[0]) if len(s) else 0.0
    return float(h ** (3 / p) * np.sum(s**p) ** (1 / p))


def moment_density(state: MixedState, k: int) -> np.ndarray:
    """rho_k(x) = h^3 sum_j lambda_j ||p|^{k/2} psi_j(x)|^2 for even k >= 0."""
    if k < 0 or k % 2 != 0:
        raise ValueError(f"moment density order must be even and >= 0, got {k}")
    if k == 0:
        return spatial_density(state)
    symbol = momentum_power_symbol(state.grid, k / 2, state.hbar)
    fields = apply_multiplier(state.grid, state.orbitals, symbol)
    return state.h**3 * np.tensordot(state.weights, np.abs(fields) ** 2, axes=(0, 0))


def moment(state: MixedState, n: int) -> float:
    """M_n = h^3 Tr(|p|^n Gamma), computed two ways and cross-asserted.

    Route one integrates the moment density; route two sums the spectral
    kinetic integrals h^3 lambda_j L^-3 sum_xi (hbar |xi|)^n |psihat_j|^2.
    """
    if n < 0 or n % 2 != 0:
        raise ValueError(f"moment order must be even and >= 0, got {n}")
    grid = state.grid
    via_density = float(grid.integrate(moment_density(state, n)).real)
    symbol = momentum_power_symbol(grid, n, state.hbar)
    psihat = forward_transform(grid, state.orbitals)
    kinetic = (symbol * np.abs(psihat) ** 2).sum(axis=(-3, -2, -1)) / grid.volume
    via_spectral = float(state.h**3 * np.dot(state.weights, kinetic))
    scale = max(abs(via_density), abs(via_spectral), 1.0)
    if abs(via_density - via_spectral) > MOMENT_ROUTE_TOL * scale:
        raise AssertionError(
            f"moment routes disagree: {via_density!r} vs {via_spectral!r}"
        )
    return via_density


def schatten_lp(state: MixedState, p: float) -> float:
    """||Gamma||_{L^p} = h^{3/p} (sum lambda_j^p)^{1/p}; p = inf gives lambda_1."""
    if p < 1:
        raise ValueError(f"Schatten order must be >= 1, got {p}")
    return _schatten_of_singulars(np.asarray(state.weights), p, state.h)


def weighted_schatten(state: MixedState, n: float, p: float) -> float:
    """||Gamma m_n||_{L^p} with the weight m_n = 1 + |p|^n.

    Fractional and odd weight orders are accepted (the weighted commutator
    estimates need n1 = n + a + 1 + delta and m_3).
    """
    if p < 1:
        raise ValueError(f"Schatten order must be >= 1, got {p}")
    if n < 0:
        raise ValueError(f"weight order must be >= 0, got {n}")
    op = state_operator(state).compose_right(weight_symbol(state.grid, n, state.hbar))
    s = low_rank_singular_values(op)
    return _schatten_of_singulars(s, p, state.h)


def _factored_hs_norm(grid: TorusGrid, left: np.ndarray, right: np.ndarray) -> float:
    """HS norm of sum_m |left_m><right_m| via Tr(A^dag A) on the factor Grams."""
    gu = _gram(grid, left)
    gv = _gram(grid, right)
    sq = float(np.real(np.sum(gu * gv.T)))
    return float(np.sqrt(max(sq, 0.0)))


def frobenius_distance(a: MixedState, b: MixedState) -> float:
    """Hilbert-Schmidt distance ||Gamma_a - Gamma_b||_HS without densifying.

    When the two states share a weight vector (e.g. the same initial data
    evolved two ways) the difference is assembled from orbital differences
    |psi_a><psi_a| - |psi_b><psi_b| = |d><psi_a| + |psi_b><d|, which stays
    accurate for distances far below ||Gamma||; otherwise the generic
    factored difference is used.
    """
    if a.grid is not b.grid and a.grid != b.grid:
        raise ValueError("states live on different grids")
    lam_a = a.weights[:, None, None, None]
    if a.rank == b.rank and np.array_equal(a.weights, b.weights):
        d = a.orbitals - b.orbitals
        left = np.concatenate([lam_a * d, lam_a * b.orbitals])
        right = np.concatenate([a.orbitals, d])
    else:
        left = np.concatenate([lam_a * a.orbitals, -b.weights[:, None, None, None] * b.orbitals])
        right = np.concatenate([a.orbitals, b.orbitals])
    return _factored_hs_norm(a.grid, left, right)


def sobolev_factors(state: MixedState, direction: str) -> LowRankOperator:
    """Factored commutator D Gamma for one of x1..x3, xi1..xi3.

    x_l:  [d_l, Gamma] = sum lambda_j (|d_l psi_j><psi_j| + |psi_j><d_l psi_j|)
    xi_l: (1/(i hbar)) [x_l, Gamma] with the centered coordinate; requires the
          state localized in the central half-box (guard checked).
    """
    grid = state.grid
    lam = state.weights[:, None, None, None]
    axis = int(direction[-1]) - 1
    if direction not in {"x1", "x2", "x3", "xi1", "xi2", "xi3"}:
        raise ValueError(f"unknown direction {direction!r}")
    if direction.startswith("xi"):
        _check_localized(state)
        xpsi = grid.x_component(axis) * state.orbitals
        left = np.concatenate([lam * xpsi / (1j * state.hbar), -lam * state.orbitals / (1j * state.hbar)])
        right = np.concatenate([state.orbitals, xpsi])
        return LowRankOperator(grid, left, right)
    dpsi = apply_multiplier(
        grid, state.orbitals, 1j * grid.xi_component(axis)
    )
    left = np.concatenate([lam * dpsi, lam * state.orbitals])
    right = np.concatenate([state.orbitals, dpsi])
    return LowRankOperator(grid, left, right)


LOCALIZATION_TOL = 1e-3
LOCALIZATION_FRACTION = 0.4  # half-width of the guard box as a fraction of L


def _check_localized(state: MixedState):
    rho = spatial_density(state)
    mesh = state.grid.coordinate_mesh()
    half_width = LOCALIZATION_FRACTION * state.grid.length
    inside = np.ones(state.grid.shape, dtype=bool)
    for c in mesh:
        inside &= np.abs(c) <= half_width
    mass = float(state.grid.integrate(rho * inside).real)
    if mass < 1 - LOCALIZATION_TOL:
        raise ValueError(
            f"state not localized in the central 0.8-box "
            f"(mass {mass:.8f} < {1 - LOCALIZATION_TOL}); "
            "the centered-coordinate commutator is not meaningful"
        )


SOBOLEV_DIRECTIONS = ("x1", "x2", "x3", "xi1", "xi2", "xi3")


def sobolev_norm(state: MixedState, n: float, q: float) -> float:
    """Inhomogeneous weighted Sobolev norm N_q = ||Gamma||_{W^{1,q}(m_n)}.

    Sum over the six directions of ||(D Gamma) m_n||_{L^q} plus the
    ||Gamma m_n||_{L^q} term.
    """
    symbol = weight_symbol(state.grid, n, state.hbar)
    total = weighted_schatten(state, n, q)
    for direction in SOBOLEV_DIRECTIONS:
        op = sobolev_factors(state, direction).compose_right(symbol)
        s = low_rank_singular_values(op)
        total += _schatten_of_singulars(s, q, state.h)
    return total


def lp_pm_eps(state: MixedState, n: float, r: float, eps: float) -> float:
    """Intersection norm ||Gamma m_n||_{L^{r+eps}} + ||Gamma m_n||_{L^{r-eps}}."""
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if r - eps < 1:
        raise ValueError(f"r - eps = {r - eps} < 1 is not a Schatten order")
    return weighted_schatten(state, n, r + eps) + weighted_schatten(state, n, r - eps)


def lebesgue_norm(grid: TorusGrid, f: np.ndarray, p: float) -> float:
    """Grid quadrature of ||f||_{L^p}; max norm for p = inf."""
    if p < 1:
        raise ValueError(f"Lebesgue order must be >= 1, got {p}")
    absf = np.abs(f)
    if p == np.inf:
        return float(absf.max())
    return float((grid.cell_volume * np.sum(absf**p)) ** (1 / p))


@dataclass
class ObservableRecord:
    """One time sample of the tracked functionals.

    ``values`` maps metric names to floats; the column set is a function of
    the harness configuration only.
    """

    time: float
    values: dict[str, float] = dc_field(default_factory=dict)

    def row(self, columns) -> list[float]:
        return [self.time] + [self.values[c] for c in columns]
