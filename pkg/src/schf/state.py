"""Low-rank density operators with the semiclassical trace normalization.

A mixed state is Gamma = sum_j lambda_j |psi_j><psi_j| with orthonormal
orbitals psi_j on a :class:`~schf.grid.TorusGrid`, weights sorted descending,
and the normalization h^3 Tr(Gamma) = 1 (h = 2 pi hbar).  Orbitals are stored
as a batched complex array of shape (R, N, N, N) in physical space.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .grid import TorusGrid, forward_transform

__all__ = [
    "MixedState",
    "new_mixed_state",
    "lowdin_orthonormalize",
    "coherent_state_lattice",
    "random_mixed_state",
    "spatial_density",
    "save_state",
    "load_state",
]

GRAM_REJECT_TOL = 1e-6
GRAM_WARN_TOL = 1e-8


class OrthonormalityError(ValueError):
    """Raised when orbitals fail the orthonormality contract."""

    def __init__(self, i, j, value):
        self.indices = (i, j)
        self.value = value
        super().__init__(
            f"Gram matrix entry ({i}, {j}) = {value:.3e} violates orthonormality"
        )


@dataclass(frozen=True)
class MixedState:
    """Validated low-rank density operator; immutable value."""

    hbar: float
    grid: TorusGrid
    weights: np.ndarray  # (R,) positive, descending, sums to h^-3
    orbitals: np.ndarray  # (R, N, N, N) complex, physical space

    @property
    def h(self) -> float:
        return 2 * np.pi * self.hbar

    @property
    def rank(self) -> int:
        return len(self.weights)

    @property
    def operator_norm(self) -> float:
        """||Gamma||_inf = largest weight (orbitals diagonalize Gamma)."""
        return float(self.weights[0])

    def gram_matrix(self) -> np.ndarray:
        psi = self.orbitals.reshape(self.rank, -1)
        return self.grid.cell_volume * (np.conj(psi) @ psi.T)

    def gram_error(self) -> float:
        g = self.gram_matrix()
        return float(np.max(np.abs(g - np.eye(self.rank))))

    def with_orbitals(self, orbitals: np.ndarray) -> "MixedState":
        """Replace orbitals, keeping weights; revalidates nothing (caller's duty)."""
        return MixedState(self.hbar, self.grid, self.weights, orbitals)


def gram_matrix(grid: TorusGrid, fields: np.ndarray) -> np.ndarray:
    flat = fields.reshape(len(fields), -1)
    return grid.cell_volume * (np.conj(flat) @ flat.T)


def new_mixed_state(
    hbar: float, grid: TorusGrid, weights, orbitals: np.ndarray
) -> MixedState:
    """Validate orbitals and weights and enforce sum(lambda) = h^-3.

    Weights are rescaled by a single global factor to meet the trace
    normalization; orthonormality is checked, never repaired.
    """
    if hbar <= 0:
        raise ValueError(f"hbar must be positive, got {hbar}")
    weights = np.asarray(weights, dtype=float)
    orbitals = np.asarray(orbitals, dtype=complex)
    if orbitals.ndim == 3:
        orbitals = orbitals[None]
    grid._check(orbitals)
    if len(weights) != len(orbitals):
        raise ValueError("weight and orbital counts differ")
    if np.any(weights <= 0):
        raise ValueError("weights must be strictly positive")

    g = gram_matrix(grid, orbitals)
    dev = np.abs(g - np.eye(len(weights)))
    i, j = np.unravel_index(np.argmax(dev), dev.shape)
    if dev[i, j] > GRAM_REJECT_TOL:
        raise OrthonormalityError(i, j, g[i, j])

    order = np.argsort(-weights, kind="stable")
    weights = weights[order]
    orbitals = orbitals[order]

    h = 2 * np.pi * hbar
    weights = weights * (h**-3 / weights.sum())
    weights.setflags(write=False)
    orbitals.setflags(write=False)
    return MixedState(float(hbar), grid, weights, orbitals)


def lowdin_orthonormalize(grid: TorusGrid, fields: np.ndarray) -> np.ndarray:
    """Symmetric (Gram inverse square root) orthonormalization.

    Returns the orthonormal set closest to the input in the least-squares
    sense; spans the same space.  Rejects numerically dependent inputs.
    """
    fields = np.asarray(fields, dtype=complex)
    g = gram_matrix(grid, fields)
    evals, evecs = np.linalg.eigh(g)
    cond = evals[-1] / evals[0] if evals[0] > 0 else np.inf
    if cond > 1e12:
        raise ValueError(
            f"input fields numerically dependent: Gram condition number {cond:.2e}"
        )
    g_inv_sqrt = (evecs / np.sqrt(evals)) @ np.conj(evecs.T)
    flat = fields.reshape(len(fields), -1)
    return (g_inv_sqrt.T @ flat).reshape(fields.shape)


def coherent_state_lattice(
    hbar: float,
    grid: TorusGrid,
    centers,
    sigma: float | None = None,
) -> MixedState:
    """Equal-weight mixture of Gaussian wave packets.

    ``centers`` is a sequence of (x_c, v_c) pairs of 3-vectors.  Each orbital
    is proportional to exp(-|x - x_c|^2 / (2 sigma^2) + i v_c . x / hbar),
    Lowdin-orthonormalized across the lattice.  Centers must sit at least
    4 sigma from the box boundary so the packets are effectively localized.
    """
    if sigma is None:
        sigma = np.sqrt(hbar) * grid.length / 16
    half = grid.length / 2
    xs = [np.asarray(c[0], dtype=float) for c in centers]
    vs = [np.asarray(c[1], dtype=float) for c in centers]
    for xc in xs:
        if np.any(np.abs(xc) > half - 4 * sigma):
            raise ValueError(
                f"center {xc} violates the 4-sigma boundary margin "
                f"(sigma = {sigma:.3g}, half-box = {half:.3g})"
            )
    mesh = grid.coordinate_mesh()
    orbitals = []
    for xc, vc in zip(xs, vs):
        r2 = sum((mesh[i] - xc[i]) ** 2 for i in range(3))
        phase = sum(vc[i] * mesh[i] for i in range(3)) / hbar
        psi = np.exp(-r2 / (2 * sigma**2) + 1j * phase)
        orbitals.append(psi / grid.norm(psi))
    orbitals = lowdin_orthonormalize(grid, np.array(orbitals))
    weights = np.ones(len(orbitals))
    return new_mixed_state(hbar, grid, weights, orbitals)


def random_mixed_state(
    seed: int,
    hbar: float,
    grid: TorusGrid,
    rank: int,
    decay: float = 2.0,
) -> MixedState:
    """Seeded random state with spectral envelope exp(-decay (hbar |xi|)^2).

    Orbitals are drawn as random Fourier coefficients under the envelope and
    Lowdin-orthonormalized; weights decrease geometrically with a seeded
    ratio in [0.3, 0.9].  Deterministic function of the seed.
    """
    if rank < 1:
        raise ValueError("rank must be >= 1")
    rng = np.random.default_rng(seed)
    envelope = np.exp(-decay * (hbar * grid.abs_xi) ** 2)
    # effective number of independently excitable modes under the envelope
    support = int(np.sum(envelope > 1e-8))
    if rank > support:
        raise ValueError(
            f"rank {rank} exceeds the {support} modes supported by the decay envelope"
        )
    shape = (rank,) + grid.shape
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    from .grid import inverse_transform

    fields = inverse_transform(grid, coeffs * envelope)
    fields = fields / grid.norm(fields)[:, None, None, None]
    orbitals = lowdin_orthonormalize(grid, fields)
    ratio = rng.uniform(0.3, 0.9)
    weights = ratio ** np.arange(rank)
    return new_mixed_state(hbar, grid, weights, orbitals)


def spatial_density(state: MixedState) -> np.ndarray:
    """rho(x) = h^3 sum_j lambda_j |psi_j(x)|^2; integrates to 1."""
    dens = np.tensordot(state.weights, np.abs(state.orbitals) ** 2, axes=(0, 0))
    return state.h**3 * dens


# ---------------------------------------------------------------------------
# Snapshot format: magic, version, N, L, hbar, R, weights, interleaved re/im
# orbitals in row-major grid order.  Bit-exact round trip.
# ---------------------------------------------------------------------------

_MAGIC = b"SCHFSNAP"
_VERSION = 1


def save_state(path, state: MixedState) -> None:
    header = struct.pack(
        "<8sIIddI",
        _MAGIC,
        _VERSION,
        state.grid.n,
        state.grid.length,
        state.hbar,
        state.rank,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.weights, dtype="<f8").tobytes())
        interleaved = np.empty(state.orbitals.shape + (2,), dtype="<f8")
        interleaved[..., 0] = state.orbitals.real
        interleaved[..., 1] = state.orbitals.imag
        fh.write(interleaved.tobytes())


def load_state(path) -> MixedState:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<8sIIddI"))
        magic, version, n, length, hbar, rank = struct.unpack("<8sIIddI", header)
        if magic != _MAGIC:
            raise ValueError(f"not a state snapshot: bad magic {magic!r}")
        if version != _VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        grid = TorusGrid(n, length)
        weights = np.frombuffer(fh.read(8 * rank), dtype="<f8").copy()
        raw = np.frombuffer(fh.read(), dtype="<f8")
    interleaved = raw.reshape((rank,) + grid.shape + (2,))
    orbitals = interleaved[..., 0] + 1j * interleaved[..., 1]
    weights.setflags(write=False)
    orbitals.setflags(write=False)
    return MixedState(hbar, grid, weights, orbitals)
