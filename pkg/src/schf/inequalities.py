"""Exponent algebra and two-sided evaluation of the regularity inequalities.

Each check computes a left side and a constant-free right side on a concrete
state and reports the ratio; the (non-explicit) analytic constants are
treated as empirical suprema over ensembles.  The exchange-commutator check
has two algebraically independent evaluation routes (direct operator
application vs the Leibniz kernel expansion) whose agreement is the strongest
self-test of the exchange machinery.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import apply_multiplier, forward_transform, inverse_transform
from .interaction import InteractionKernel, apply_exchange, force_field, mean_field
from .observables import (
    LowRankOperator,
    lebesgue_norm,
    lp_pm_eps,
    low_rank_singular_values,
    moment,
    moment_density,
    weighted_schatten,
)
from .state import MixedState, spatial_density

__all__ = [
    "ExponentTable",
    "IneqReport",
    "exponents",
    "check_kinetic_interpolation",
    "check_merged_interpolation",
    "check_weighted_schatten_moment",
    "commutator_trace_V",
    "commutator_trace_X",
    "check_weighted_commutator",
    "moment_growth_rhs",
    "gronwall_envelope",
]


@dataclass(frozen=True)
class ExponentTable:
    """All derived exponents for interaction power a and orders (n, k, p).

    theta/Theta entries are None for n = 2 (their formulas divide by n - 2).
    """

    a: float
    n: int
    k: int
    p: float
    b: float  # 3 / (a + 1), the weak-Lebesgue order of the interaction
    r: float  # 3 / (1 - a)
    p_nk: float  # (3 + n) / (3 + k)
    pp_nk: float  # Hoelder conjugate (3 + n) / (n - k)
    theta_2: float | None
    theta_n: float | None
    Theta_2: float | None
    Theta_n: float | None
    a_n: float  # 2n / (n + 3): largest a with admissible exponent families
    n_a: float  # 3a / (2 - a): smallest order propagated for this a
    q_star: float  # 6 / (1 + 2a)
    theta: float  # a + 1/2


def exponents(a: float, n: int, k: int = 0, p: float | None = None) -> ExponentTable:
    if not 0 < a < 2:
        raise ValueError(f"a must lie in (0, 2), got {a}")
    if n % 2 != 0 or n < 2:
        raise ValueError(f"n must be a positive even integer, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, n], got k = {k}, n = {n}")
    p_nk = (3 + n) / (3 + k)
    if p is None:
        p = p_nk
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    b = 3 / (a + 1)
    pp = (3 + n) / (n - k) if k < n else np.inf
    inv_pprime = 1 - 1 / p  # 1 / p'
    if n == 2:
        theta_2 = theta_n = Theta_2 = Theta_n = None
    else:
        theta_2 = (n - k) / (n - 2) - (3 + n) / (n - 2) * inv_pprime
        theta_n = (k - 2) / (n - 2) + 5 / (n - 2) * inv_pprime
        Theta_2 = (n + 1) / (n - 2) - (n + 3) / (n - 2) / b
        Theta_n = 1 + (5 / b - 3) / (n - 2)
    return ExponentTable(
        a=a,
        n=n,
        k=k,
        p=p,
        b=b,
        r=3 / (1 - a) if a < 1 else np.inf,
        p_nk=p_nk,
        pp_nk=pp,
        theta_2=theta_2,
        theta_n=theta_n,
        Theta_2=Theta_2,
        Theta_n=Theta_n,
        a_n=2 * n / (n + 3),
        n_a=3 * a / (2 - a),
        q_star=6 / (1 + 2 * a),
        theta=a + 0.5,
    )


@dataclass
class IneqReport:
    """One two-sided evaluation of an inequality on a concrete state."""

    id: str
    params: dict
    lhs: float
    rhs_core: float
    ratio: float
    hbar: float
    seed: int | None = None
    t: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _report(iid, params, lhs, rhs, hbar, seed=None, t=None) -> IneqReport:
    if lhs > 0 and rhs <= 0:
        raise ValueError(f"{iid}: positive lhs {lhs} with nonpositive rhs {rhs}")
    ratio = lhs / rhs if rhs > 0 else 0.0
    return IneqReport(iid, params, float(lhs), float(rhs), float(ratio), hbar, seed, t)


# ---------------------------------------------------------------------------
# Interpolation inequalities for moment densities
# ---------------------------------------------------------------------------


def check_kinetic_interpolation(state: MixedState, n: int, k: int, seed=None) -> IneqReport:
    """||rho_k||_{L^p} vs ||Gamma||_inf^{1/p'} M_n^{1/p} at p = (3+n)/(3+k)."""
    if k > n:
        raise ValueError("requires k <= n")
    p = (3 + n) / (3 + k)
    lhs = lebesgue_norm(state.grid, moment_density(state, k), p)
    rhs = state.operator_norm ** (1 - 1 / p) * moment(state, n) ** (1 / p)
    return _report(
        "kinetic_interpolation", {"n": n, "k": k, "p": p}, lhs, rhs, state.hbar, seed
    )


def check_merged_interpolation(
    state: MixedState, n: int, k: int, p: float, seed=None
) -> IneqReport:
    """||rho_k||_{L^p} vs C_inf^{1/p'} (1+M_2)^{theta_2} (1+M_n)^{theta_n}."""
    if n < 4:
        raise ValueError("merged interpolation needs n >= 4 (exponents divide by n-2)")
    table = exponents(0.3, n, k, p)  # a plays no role in the thetas
    lhs = lebesgue_norm(state.grid, moment_density(state, k), p)
    rhs = (
        state.operator_norm ** (1 - 1 / p)
        * (1 + moment(state, 2)) ** table.theta_2
        * (1 + moment(state, n)) ** table.theta_n
    )
    return _report(
        "merged_interpolation",
        {"n": n, "k": k, "p": p, "theta_2": table.theta_2, "theta_n": table.theta_n},
        lhs,
        rhs,
        state.hbar,
        seed,
    )


def check_weighted_schatten_moment(
    state: MixedState, n: int, p: float, seed=None
) -> IneqReport:
    """||Gamma m_n||_{L^p} vs C_inf^{1/p'} (1 + M_{np})^{1/p}, chain asserted.

    The intermediate value C_inf^{1/p'} (h^3 Tr(Gamma m_n^p))^{1/p} dominates
    the left side with constant one; that step is asserted here.
    """
    if p < 2:
        raise ValueError("requires p >= 2")
    if (n * p) % 2 != 0:
        raise ValueError("requires even n*p")
    grid = state.grid
    lhs = weighted_schatten(state, n, p)
    symbol = (1 + (state.hbar * grid.abs_xi) ** n) ** p
    wpsi = apply_multiplier(grid, state.orbitals, symbol)
    tr = float(
        state.h**3
        * np.dot(state.weights, grid.inner(state.orbitals, wpsi).real)
    )
    cinf = state.operator_norm ** (1 - 1 / p)
    mid = cinf * tr ** (1 / p)
    if lhs > mid * (1 + 1e-10):
        raise AssertionError(
            f"Araki-Lieb-Thirring step violated: lhs {lhs} > intermediate {mid}"
        )
    rhs = cinf * (1 + moment(state, int(n * p))) ** (1 / p)
    return _report(
        "weighted_schatten_moment",
        {"n": n, "p": p, "intermediate": mid},
        lhs,
        rhs,
        state.hbar,
        seed,
    )


# ---------------------------------------------------------------------------
# Commutator traces driving the moment growth
# ---------------------------------------------------------------------------


def _proportional_exponents(n: int, orders, budget: float) -> list[float]:
    """Lebesgue exponents q_i with sum 1/q_i' = budget, allocated in proportion
    to the admissible maxima 1/p'_{n,k_i} = (n - k_i)/(n + 3) and clamped to
    the admissible box."""
    caps = [(n - k) / (n + 3) for k in orders]
    total = sum(caps)
    s = budget / total if total > 0 else 0.0
    inv_primes = [min(cap, s * cap) for cap in caps]
    return [1 / (1 - ip) if ip < 1 else np.inf for ip in inv_primes]


def commutator_trace_V(
    kernel: InteractionKernel, state: MixedState, n: int, axis: int, seed=None
) -> IneqReport:
    """|h^3 Tr([V, p_l^n] Gamma) / hbar| vs the moment-density product bound."""
    if n < 2 or n % 2 != 0:
        raise ValueError("requires even n >= 2")
    grid = state.grid
    v = mean_field(kernel, spatial_density(state))
    symbol = (state.hbar * grid.xi_component(axis)) ** n + np.zeros(grid.shape)
    ppsi = apply_multiplier(grid, state.orbitals, symbol)
    # Tr([V, P] Gamma) = 2i Im sum_j lambda_j <psi_j, V P psi_j>
    inner = grid.inner(state.orbitals, v * ppsi)
    lhs = state.h**3 * abs(2 * np.dot(state.weights, inner.imag)) / state.hbar

    b = 3 / (kernel.a + 1)
    best = 0.0
    best_triple = None
    for j in range(n // 2):
        for k in range(n // 2 - j):
            l2 = n // 2 - 1 - j - k
            orders = (2 * j, 2 * k, 2 * l2)
            qs = _proportional_exponents(n, orders, 1 / b)
            val = math.prod(
                lebesgue_norm(grid, moment_density(state, o), q) ** 0.5
                for o, q in zip(orders, qs)
            )
            if val > best:
                best, best_triple = val, orders
    rhs = moment(state, n) ** 0.5 * best
    return _report(
        "commutator_trace_V",
        {"n": n, "axis": axis, "sup_triple": best_triple},
        lhs,
        rhs,
        state.hbar,
        seed,
    )


def _exchange_trace_direct(kernel, state, n, axis) -> tuple[float, float]:
    """(h^6 / hbar) Im Tr([X, p_l^n] Gamma) via operator application.

    Also returns the magnitude of the terms before cancellation, which sets
    the scale of unavoidable rounding noise when the trace itself vanishes.
    """
    grid = state.grid
    symbol = (state.hbar * grid.xi_component(axis)) ** n + np.zeros(grid.shape)
    ppsi = apply_multiplier(grid, state.orbitals, symbol)
    total = 0.0 + 0.0j
    gross = 0.0
    for j in range(state.rank):
        xp = apply_exchange(kernel, state, ppsi[j])
        term = state.weights[j] * grid.inner(state.orbitals[j], xp)
        total += term
        gross += abs(term)
    scale = state.h**6 / state.hbar
    return float(scale * 2 * total.imag), float(scale * 2 * gross)


def _exchange_trace_leibniz(kernel, state, n, axis) -> float:
    """Same trace through the Leibniz kernel expansion:

    Tr([X, P] Gamma) = -sum_{k<n} C(n,k) sum_{i,j} lambda_i lambda_j
        int (p_l^{n-k} K) * (conj(psi_i) psi_j) . p_l^k(psi_i) conj(psi_j)
    with p_l^m K realized as the multiplier (hbar xi_l)^m Khat(xi).
    """
    grid = state.grid
    xi_l = grid.xi_component(axis)
    lam = state.weights
    total = 0.0 + 0.0j
    gross = 0.0
    for i in range(state.rank):
        pairs = np.conj(state.orbitals[i]) * state.orbitals  # (R, ...)
        pairs_hat = forward_transform(grid, pairs)
        for k in range(n):
            conv = inverse_transform(
                grid, (state.hbar * xi_l) ** (n - k) * kernel.symbol * pairs_hat
            )
            p_k_psi = apply_multiplier(
                grid, state.orbitals[i], (state.hbar * xi_l) ** k + np.zeros(grid.shape)
            )
            integ = grid.integrate(conv * p_k_psi * np.conj(state.orbitals))
            coeff = math.comb(n, k) * lam[i]
            total -= coeff * np.dot(lam, integ)
            gross += coeff * float(np.dot(lam, np.abs(integ)))
    scale = state.h**6 / state.hbar
    return float(scale * total.imag), float(scale * gross)


LEIBNIZ_TOL = 1e-8


def commutator_trace_X(
    kernel: InteractionKernel,
    state: MixedState,
    n: int,
    axis: int,
    method: str = "direct",
    seed=None,
) -> tuple[float, IneqReport]:
    """(h^3/hbar) Tr([h^3 X, p_l^n] Gamma) and its moment-density bound.

    method = "direct" applies the exchange operator; "leibniz" evaluates the
    kernel expansion.  The two must agree to relative 1e-8 (checked here on
    every call; disagreement flags an implementation bug).
    """
    if n < 2 or n % 2 != 0:
        raise ValueError("requires even n >= 2")
    if method not in ("direct", "leibniz"):
        raise ValueError(f"unknown method {method!r}")
    direct, gross_d = _exchange_trace_direct(kernel, state, n, axis)
    leibniz, gross_l = _exchange_trace_leibniz(kernel, state, n, axis)
    scale = max(abs(direct), abs(leibniz))
    # Rounding noise from cancellation bounds how well an exactly-zero trace
    # can agree between the routes.
    noise_floor = 1e-12 * max(gross_d, gross_l)
    if abs(direct - leibniz) > max(LEIBNIZ_TOL * scale, noise_floor):
        raise AssertionError(
            f"exchange commutator methods disagree: direct {direct!r} vs "
            f"leibniz {leibniz!r}"
        )
    value = direct if method == "direct" else leibniz

    b = 3 / (kernel.a + 1)
    grid = state.grid
    best = 0.0
    best_comp = None
    norm_cache: dict[tuple[int, float], float] = {}
    for comp in _even_compositions(2 * (n - 1), 4, n):
        qs = _proportional_exponents(n, comp, 2 / b)
        val = 1.0
        for o, q in zip(comp, qs):
            key = (o, q)
            if key not in norm_cache:
                norm_cache[key] = lebesgue_norm(grid, moment_density(state, o), q)
            val *= norm_cache[key] ** 0.5
        if val > best:
            best, best_comp = val, comp
    report = _report(
        "commutator_trace_X",
        {"n": n, "axis": axis, "method": method, "sup_composition": best_comp},
        abs(value),
        best,
        state.hbar,
        seed,
    )
    return value, report


def _even_compositions(total: int, parts: int, cap: int):
    """Even tuples (k_1..k_parts) with sum = total and each k_i <= cap."""
    if parts == 1:
        if total % 2 == 0 and 0 <= total <= cap:
            yield (total,)
        return
    for first in range(0, min(total, cap) + 1, 2):
        for rest in _even_compositions(total - first, parts - 1, cap):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Weighted commutator estimates (force and potential against a second state)
# ---------------------------------------------------------------------------


def _multiplication_commutator_factors(
    mu: MixedState, w: np.ndarray, symbol: np.ndarray
) -> LowRankOperator:
    """Factors of [W, P] mu for multiplication W and multiplier P."""
    grid = mu.grid
    p_phi = apply_multiplier(grid, mu.orbitals, symbol)
    wp = w * p_phi - apply_multiplier(grid, w * mu.orbitals, symbol)
    left = mu.weights[:, None, None, None] * wp
    return LowRankOperator(grid, left, mu.orbitals.copy())


def check_weighted_commutator(
    kernel: InteractionKernel,
    gamma: MixedState,
    mu: MixedState,
    n: int,
    q: float = 2.0,
    axis: int = 0,
    eps: float = 0.5,
    delta: float = 0.5,
    seed=None,
) -> tuple[IneqReport, IneqReport]:
    """Both weighted commutator bounds: force field and potential versions.

    Report one: (1/hbar) ||[E_j, p_j^n] mu||_{L^q} vs
    ||Gamma m_{n1}||_{L^{r+-eps}} ||mu m_n||_{L^q} with n1 = n + a + 1 + delta.
    Report two: same with V_Gamma and the additional +M_0 = +1 term.
    """
    if n < 1:
        raise ValueError("requires n >= 1")
    grid = gamma.grid
    a = kernel.a
    if a >= 1:
        raise ValueError("weighted commutator estimates need a < 1 (r finite)")
    r = 3 / (1 - a)
    n1 = n + a + 1 + delta
    symbol = (mu.hbar * grid.xi_component(axis)) ** n + np.zeros(grid.shape)
    rho = spatial_density(gamma)
    rhs_weight = lp_pm_eps(gamma, n1, r, eps)
    mu_norm = weighted_schatten(mu, n, q)

    def commutator_norm(w):
        op = _multiplication_commutator_factors(mu, w, symbol)
        s = low_rank_singular_values(op)
        if q == np.inf:
            val = float(s[0])
        else:
            val = float(mu.h ** (3 / q) * np.sum(s**q) ** (1 / q))
        return val / mu.hbar

    params = {"n": n, "q": q, "axis": axis, "n1": n1, "r": r, "eps": eps}
    e_field = force_field(kernel, rho)[axis]
    rep_e = _report(
        "weighted_commutator_E",
        params,
        commutator_norm(e_field),
        rhs_weight * mu_norm,
        gamma.hbar,
        seed,
    )
    v_field = mean_field(kernel, rho)
    rep_v = _report(
        "weighted_commutator_V",
        params,
        commutator_norm(v_field),
        (rhs_weight + 1.0) * mu_norm,
        gamma.hbar,
        seed,
    )
    return rep_e, rep_v


# ---------------------------------------------------------------------------
# Gronwall machinery for moment and regularity propagation
# ---------------------------------------------------------------------------


def moment_growth_rhs(state: MixedState, n: int, a: float) -> float:
    """Constant-free Gronwall coefficient C_inf^{1/b} (1+M_2)^T2 (1+M_n)^Tn."""
    table = exponents(a, n)
    if table.Theta_2 is None:
        raise ValueError("moment growth coefficient needs n >= 4")
    return (
        state.operator_norm ** (1 / table.b)
        * (1 + moment(state, 2)) ** table.Theta_2
        * (1 + moment(state, n)) ** table.Theta_n
    )


def gronwall_envelope(coefficients, dt: float, theta: float, y0: float) -> np.ndarray:
    """Explicit trapezoidal (Heun) solution of y' = c(t) y^theta on a uniform grid.

    ``coefficients`` holds c(t_i) at the grid times; the returned array has
    the same length with envelope[0] = y0.
    """
    if y0 <= 0:
        raise ValueError("initial envelope value must be positive")
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    c = np.asarray(coefficients, dtype=float)
    y = np.empty_like(c)
    y[0] = y0
    for i in range(len(c) - 1):
        f0 = c[i] * y[i] ** theta
        pred = y[i] + dt * f0
        y[i + 1] = y[i] + dt / 2 * (f0 + c[i + 1] * max(pred, 0.0) ** theta)
    return y
