"""Periodic 3D grid, Fourier transform conventions, and multiplier application.

All differential and convolution operators in this package are Fourier
multipliers on a cubic torus of side L centered at the origin.  The transform
is continuum-normalized (Riemann-sum convention):

    fhat(xi) = dx^3 * sum_x f(x) exp(-i xi.x)
    f(x)     = L^-3  * sum_xi fhat(xi) exp(+i xi.x)

so that analytic continuum symbols (e.g. the Riesz symbol c_{3,a}|xi|^{a-3})
apply on the frequency lattice without rescaling.

Fields are plain complex numpy arrays of shape (..., N, N, N); leading axes
are batch axes (e.g. orbitals).  Whether an array holds physical-space or
frequency-space values is part of each function's contract.  Frequency-space
arrays use numpy's FFT ordering on each axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TorusGrid",
    "forward_transform",
    "inverse_transform",
    "apply_multiplier",
    "momentum_power",
    "weight_m_n",
    "gradient",
]

_FFT_AXES = (-3, -2, -1)


@dataclass(frozen=True)
class TorusGrid:
    """Cubic periodic grid with N points per axis on a box of side L.

    The box is centered at the origin: x_j = -L/2 + j*dx.  The frequency
    lattice is xi = (2 pi / L) * m with integer m in [-N/2, N/2), stored in
    FFT order.  Immutable after construction; all derived arrays are
    precomputed.
    """

    n: int
    length: float
    dx: float = field(init=False)
    # 1D coordinate and frequency axes (FFT order for frequencies)
    x_axis: np.ndarray = field(init=False, repr=False)
    xi_axis: np.ndarray = field(init=False, repr=False)
    # broadcastable 3D components and radial frequency magnitude
    abs_xi: np.ndarray = field(init=False, repr=False)
    _phase: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"points_per_axis must be even and >= 4, got {self.n}")
        if self.length <= 0:
            raise ValueError(f"box length must be positive, got {self.length}")
        n, L = self.n, float(self.length)
        dx = L / n
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x_axis", -L / 2 + dx * np.arange(n))
        m = np.fft.fftfreq(n, d=1.0 / n)  # integer mode numbers in FFT order
        object.__setattr__(self, "xi_axis", (2 * np.pi / L) * m)
        xi2 = (
            self.xi_axis[:, None, None] ** 2
            + self.xi_axis[None, :, None] ** 2
            + self.xi_axis[None, None, :] ** 2
        )
        object.__setattr__(self, "abs_xi", np.sqrt(xi2))
        # The centered box shifts the DFT by a per-axis (-1)^m factor.
        s = (-1.0) ** np.arange(n)
        object.__setattr__(
            self, "_phase", s[:, None, None] * s[None, :, None] * s[None, None, :]
        )

    @property
    def cell_volume(self) -> float:
        return self.dx**3

    @property
    def volume(self) -> float:
        return self.length**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def size(self) -> int:
        return self.n**3

    def xi_component(self, axis: int) -> np.ndarray:
        """Frequency component xi_axis broadcast along the given axis (0..2)."""
        shape = [1, 1, 1]
        shape[axis] = self.n
        return self.xi_axis.reshape(shape)

    def x_component(self, axis: int) -> np.ndarray:
        """Coordinate component broadcast along the given axis (0..2)."""
        shape = [1, 1, 1]
        shape[axis] = self.n
        return self.x_axis.reshape(shape)

    def coordinate_mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.broadcast_to(self.x_component(i), self.shape) for i in range(3))

    def integrate(self, f: np.ndarray) -> complex | np.ndarray:
        """Riemann-sum integral dx^3 * sum over the trailing grid axes."""
        return self.cell_volume * f.sum(axis=_FFT_AXES)

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex | np.ndarray:
        """Volume-weighted L2 inner product <f, g> = dx^3 sum conj(f) g."""
        return self.cell_volume * (np.conj(f) * g).sum(axis=_FFT_AXES)

    def norm(self, f: np.ndarray) -> float | np.ndarray:
        return np.sqrt(self.cell_volume * (np.abs(f) ** 2).sum(axis=_FFT_AXES)).real

    def _check(self, f: np.ndarray):
        if f.shape[-3:] != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")


def forward_transform(grid: TorusGrid, f: np.ndarray) -> np.ndarray:
    """Physical space -> frequency space with the Riemann-sum normalization."""
    grid._check(f)
    return grid.cell_volume * grid._phase * np.fft.fftn(f, axes=_FFT_AXES)


def inverse_transform(grid: TorusGrid, fhat: np.ndarray) -> np.ndarray:
    """Frequency space -> physical space, inverse of :func:`forward_transform`."""
    grid._check(fhat)
    return np.fft.ifftn(grid._phase * fhat, axes=_FFT_AXES) / grid.cell_volume


def apply_multiplier(grid: TorusGrid, f: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Apply a Fourier multiplier to a physical-space field.

    ``symbol`` is an array broadcastable to the grid shape, already evaluated
    on the frequency lattice (callers supply any xi = 0 value explicitly).
    """
    symbol = np.asarray(symbol)
    if not np.all(np.isfinite(symbol)):
        raise ValueError("multiplier symbol is non-finite on the frequency lattice")
    return inverse_transform(grid, symbol * forward_transform(grid, f))


def momentum_power_symbol(grid: TorusGrid, s: float, hbar: float) -> np.ndarray:
    """Symbol of |p|^s = (hbar |xi|)^s, with the s = 0 convention |p|^0 = 1."""
    if s < 0:
        raise ValueError(f"momentum power must be nonnegative, got {s}")
    if s == 0:
        return np.ones(grid.shape)
    return (hbar * grid.abs_xi) ** s


def momentum_power(grid: TorusGrid, f: np.ndarray, s: float, hbar: float) -> np.ndarray:
    """Apply |p|^s = (hbar |xi|)^s to a physical-space field."""
    return apply_multiplier(grid, f, momentum_power_symbol(grid, s, hbar))


def weight_symbol(grid: TorusGrid, n: float, hbar: float) -> np.ndarray:
    """Symbol of the momentum weight 1 + (hbar |xi|)^n (any real n >= 0)."""
    return 1.0 + momentum_power_symbol(grid, n, hbar)


def weight_m_n(grid: TorusGrid, f: np.ndarray, n: int, hbar: float) -> np.ndarray:
    """Apply the weight 1 + |p|^n for even positive n."""
    if n <= 0 or n % 2 != 0:
        raise ValueError(f"weight order must be a positive even integer, got {n}")
    return apply_multiplier(grid, f, weight_symbol(grid, n, hbar))


def gradient(grid: TorusGrid, f: np.ndarray) -> list[np.ndarray]:
    """Spectral gradient: component l is the multiplier i xi_l."""
    fhat = forward_transform(grid, f)
    return [
        inverse_transform(grid, 1j * grid.xi_component(l) * fhat) for l in range(3)
    ]
