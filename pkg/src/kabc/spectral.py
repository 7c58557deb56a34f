"""Periodic grid, Fourier transforms and spectral calculus.

All operators are diagonal in Fourier space (derivatives, the smoothing
inverse (1 - d_xx)^{-1} and its x-derivative) except the products, which are
computed alias-free on a zero-padded grid and truncated back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: n samples (even, >= 8) on [0, length)."""

    n: int
    length: float

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise TypeError(f"n must be an integer, got {self.n!r}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        length = float(self.length)
        if not (math.isfinite(length) and length > 0.0):
            raise ValueError(f"length must be positive and finite, got {length!r}")
        object.__setattr__(self, "length", length)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.arange(self.n) * self.dx
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Nonnegative wavenumbers 2*pi*m/length, m = 0..n/2 (rfft layout)."""
        xi = 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)
        xi.flags.writeable = False
        return xi


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples on a Grid.

    Value-semantic: the sample array is copied and made read-only on
    construction, so the cached transform can never go stale.  Operations
    return new Fields and never mutate their inputs.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field samples must be finite")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @cached_property
    def hat(self) -> np.ndarray:
        """rfft of the samples (cached)."""
        h = np.fft.rfft(self.values)
        h.flags.writeable = False
        return h

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)


def zeros(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.n))


def from_function(grid: Grid, fn) -> Field:
    return Field(grid, fn(grid.nodes))


class SpectralOps:
    """Precomputed multipliers and padding sizes for one grid.

    Works on raw sample arrays; the Field-level functions below are thin
    wrappers.  Instances are cached per grid and treated as read-only.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        xi = grid.wavenumbers.copy()
        ik = 1j * xi
        ik[-1] = 0.0  # Nyquist zeroed for odd-order derivatives
        self.xi = xi
        self.ik = ik
        self.d2 = -(xi**2)
        self.helmholtz = 1.0 / (1.0 + xi**2)
        self.green_dx = ik * self.helmholtz

    def deriv(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        if order not in (1, 2):
            raise ValueError(f"derivative order must be 1 or 2, got {order}")
        mult = self.ik if order == 1 else self.d2
        return np.fft.irfft(np.fft.rfft(values) * mult, self.grid.n)

    def apply(self, values: np.ndarray, mult: np.ndarray) -> np.ndarray:
        return np.fft.irfft(np.fft.rfft(values) * mult, self.grid.n)

    def pad_size(self, n_factors: int) -> int:
        """Smallest even grid size keeping a product of n_factors fields
        alias-free: m >= (p + 1) * n / 2."""
        m = math.ceil((n_factors + 1) * self.grid.n / 2)
        return m + (m % 2)

    def upsample(self, values: np.ndarray, m: int) -> np.ndarray:
        """Trigonometric interpolation of the samples onto m points."""
        n = self.grid.n
        if m == n:
            return np.asarray(values, dtype=float).copy()
        fh = np.fft.rfft(values)
        out = np.zeros(m // 2 + 1, dtype=complex)
        out[: n // 2 + 1] = fh
        out[n // 2] *= 0.5  # split the combined +-Nyquist bin
        return np.fft.irfft(out, m) * (m / n)

    def reduce_hat(self, fine_values: np.ndarray, m: int) -> np.ndarray:
        """Truncate fine-grid samples back to the base spectrum (rfft)."""
        n = self.grid.n
        fh = np.fft.rfft(fine_values) * (n / m)
        if m == n:
            return fh
        out = fh[: n // 2 + 1].copy()
        out[n // 2] = 2.0 * out[n // 2].real  # recombine the +-n/2 modes
        return out

    def product(self, factor_values: Sequence[np.ndarray]) -> np.ndarray:
        """Alias-free pointwise product of the given sample arrays."""
        p = len(factor_values)
        if p == 1:
            return np.asarray(factor_values[0], dtype=float).copy()
        m = self.pad_size(p)
        fine = self.upsample(factor_values[0], m)
        for v in factor_values[1:]:
            fine *= self.upsample(v, m)
        return np.fft.irfft(self.reduce_hat(fine, m), self.grid.n)


@lru_cache(maxsize=64)
def get_ops(grid: Grid) -> SpectralOps:
    return SpectralOps(grid)


def transform_roundtrip(f: Field) -> Field:
    """inverse(forward(f)); identical to f up to round-off."""
    return Field(f.grid, np.fft.irfft(f.hat, f.grid.n))


def derivative(f: Field, order: int = 1) -> Field:
    """Spectral derivative of order 1 or 2 (Nyquist zeroed for order 1)."""
    return Field(f.grid, get_ops(f.grid).deriv(f.values, order))


def helmholtz_inverse(f: Field) -> Field:
    """(1 - d_xx)^{-1} f: multiplier 1/(1 + xi^2), equal to convolution
    with the periodic Green kernel of the Helmholtz operator."""
    ops = get_ops(f.grid)
    return Field(f.grid, np.fft.irfft(f.hat * ops.helmholtz, f.grid.n))


def green_dx_convolve(f: Field) -> Field:
    """d_x (1 - d_xx)^{-1} f: multiplier i*xi/(1 + xi^2)."""
    ops = get_ops(f.grid)
    return Field(f.grid, np.fft.irfft(f.hat * ops.green_dx, f.grid.n))


def dealiased_product(factors: Sequence[Field]) -> Field:
    """Pointwise product of the factors, alias-free for band-limited inputs."""
    if len(factors) < 1:
        raise ValueError("need at least one factor")
    grid = factors[0].grid
    for f in factors[1:]:
        if f.grid != grid:
            raise ValueError("all factors must share one grid")
    return Field(grid, get_ops(grid).product([f.values for f in factors]))


def inner(f: Field, g: Field) -> float:
    """Discrete L^2 inner product sum(f * g) * dx."""
    if f.grid != g.grid:
        raise ValueError("fields must share one grid")
    return float(np.sum(f.values * g.values) * f.grid.dx)
