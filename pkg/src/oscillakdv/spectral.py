"""Periodic Fourier discretization.

Grids, dual physical/spectral fields, spectral derivatives (integer and
Riesz), the exact Airy propagator and dealiasing masks.

Spectral coefficients use the continuum-consistent scaling

    u_hat[j] = sqrt(L) / n * sum_m u(x_m) exp(-i kappa_j x_m),

so that ``sum |u_hat|**2 == sum |u(x_m)|**2 * dx`` and every norm computed
from either representation approximates its value on the line directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Grid1D",
    "Field",
    "DealiasPolicy",
    "make_grid",
    "to_spectral",
    "to_physical",
    "spectral_derivative",
    "airy_propagate",
    "dealias",
]


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Uniform periodic grid on ``[-L/2, L/2)``.

    Build with :func:`make_grid`; the arrays are read-only so instances can
    be shared between workers.
    """

    n: int
    domain_length: float
    dx: float
    wavenumbers: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)

    @property
    def indices(self) -> np.ndarray:
        """Signed mode indices in FFT order."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)

    @property
    def rwavenumbers(self) -> np.ndarray:
        """Non-negative wavenumbers matching the ``rfft`` layout."""
        return 2.0 * np.pi * np.arange(self.n // 2 + 1) / self.domain_length

    def key(self) -> tuple[int, float]:
        return (self.n, self.domain_length)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid1D):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())


def make_grid(n: int, domain_length: float) -> Grid1D:
    """Create a periodic grid with ``n`` points on a box of length ``domain_length``.

    Raises
    ------
    ConfigurationError
        If ``n`` is not a power of two (or below 16), or the length is not positive.
    """
    problems = []
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        problems.append(("grid.n", f"must be an integer, got {n!r}"))
    elif n < 16 or (n & (n - 1)) != 0:
        problems.append(("grid.n", f"must be a power of two >= 16, got {n}"))
    if not (isinstance(domain_length, (int, float)) and math.isfinite(domain_length)
            and domain_length > 0):
        problems.append(("grid.domain_length", f"must be positive, got {domain_length!r}"))
    if problems:
        raise ConfigurationError(problems)
    n = int(n)
    domain_length = float(domain_length)
    dx = domain_length / n
    wavenumbers = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / domain_length
    x = -0.5 * domain_length + dx * np.arange(n)
    wavenumbers.flags.writeable = False
    x.flags.writeable = False
    return Grid1D(n=n, domain_length=domain_length, dx=dx, wavenumbers=wavenumbers, x=x)


@dataclass(frozen=True, eq=False)
class Field:
    """One time slice of a solution in either representation.

    ``data`` holds real samples when ``is_spectral`` is False and the
    normalized full-length complex spectrum (FFT ordering) otherwise.
    """

    grid: Grid1D
    data: np.ndarray
    is_spectral: bool = False

    @classmethod
    def from_function(cls, grid: Grid1D, func) -> "Field":
        return cls(grid, np.asarray(func(grid.x), dtype=float))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Field":
        return cls(grid, np.zeros(grid.n))

    @property
    def values(self) -> np.ndarray:
        """Physical samples (converted if necessary)."""
        return to_physical(self).data if self.is_spectral else self.data

    @property
    def coeffs(self) -> np.ndarray:
        """Normalized spectral coefficients (converted if necessary)."""
        return self.data if self.is_spectral else to_spectral(self).data

    def __mul__(self, alpha: float) -> "Field":
        return Field(self.grid, self.data * alpha, self.is_spectral)

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        if self.is_spectral:
            return Field(self.grid, self.data + other.coeffs, True)
        return Field(self.grid, self.data + other.values, False)

    def __sub__(self, other: "Field") -> "Field":
        return self + (-1.0) * other


def _check_same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ConfigurationError([("grid", "fields live on different grids")])


def to_spectral(f: Field) -> Field:
    if f.is_spectral:
        raise ValueError("field is already in spectral representation")
    g = f.grid
    scale = math.sqrt(g.domain_length) / g.n
    return Field(g, np.fft.fft(f.data) * scale, True)


def to_physical(f: Field) -> Field:
    """Inverse of :func:`to_spectral`; returns real samples.

    The imaginary residue of the inverse transform is discarded, which is
    exact for conjugate-symmetric spectra.
    """
    if not f.is_spectral:
        raise ValueError("field is already in physical representation")
    g = f.grid
    scale = g.n / math.sqrt(g.domain_length)
    return Field(g, np.fft.ifft(f.data * scale).real.copy(), False)


def _nyquist_slice(n: int) -> int:
    return n // 2


def spectral_derivative(
    f: Field, order: float, kind: Literal["integer", "riesz"] = "integer"
) -> Field:
    """Apply ``(i kappa)**order`` (integer) or ``|kappa|**order`` (Riesz).

    The Nyquist coefficient is zeroed whenever ``order > 0``. For the Riesz
    kind the zero mode maps to zero when ``order > 0``.
    """
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    kappa = f.grid.wavenumbers
    if kind == "integer":
        if float(order) != int(order):
            raise ValueError(f"integer derivative needs an integer order, got {order}")
        mult = (1j * kappa) ** int(order)
    elif kind == "riesz":
        if order == 0:
            mult = np.ones_like(kappa, dtype=complex)
        else:
            mult = np.abs(kappa) ** order + 0j
    else:
        raise ValueError(f"unknown derivative kind {kind!r}")
    if order > 0:
        mult = mult.copy()
        mult[_nyquist_slice(f.grid.n)] = 0.0
    return Field(f.grid, f.coeffs * mult, True)


def airy_symbol(grid: Grid1D) -> np.ndarray:
    """kappa**3 with the Nyquist wavenumber treated as zero.

    The Nyquist coefficient of a real signal must stay real, so the odd
    operator d^3/dx^3 acts on it as zero.
    """
    k3 = grid.wavenumbers ** 3
    k3 = k3.copy()
    k3[_nyquist_slice(grid.n)] = 0.0
    return k3


def airy_propagate(f: Field, t: float) -> Field:
    """Exact linear flow ``u_t + u_xxx = 0``: multiply mode kappa by exp(i kappa^3 t).

    The result is returned in the same representation as the input.
    """
    if t == 0:
        return Field(f.grid, f.data.copy(), f.is_spectral)
    out = Field(f.grid, f.coeffs * np.exp(1j * airy_symbol(f.grid) * t), True)
    return out if f.is_spectral else to_physical(out)


@dataclass(frozen=True)
class DealiasPolicy:
    """Spectral truncation used around the nonlinear term.

    ``exact`` with power ``k`` keeps ``|index| < n / (k + 2)``, which makes a
    degree ``k + 1`` product alias-free on the retained modes. ``two_thirds``
    keeps ``|index| < n / 3``; ``none`` keeps everything.
    """

    kind: Literal["exact", "two_thirds", "none"] = "exact"
    k: Union[int, None] = None

    def __post_init__(self):
        if self.kind not in ("exact", "two_thirds", "none"):
            raise ConfigurationError([("solver.dealias", f"unknown policy {self.kind!r}")])
        if self.kind == "exact" and (self.k is None or self.k < 1):
            raise ConfigurationError([("solver.dealias", "exact policy needs k >= 1")])

    @classmethod
    def exact(cls, k: int) -> "DealiasPolicy":
        return cls("exact", k)

    @classmethod
    def two_thirds(cls) -> "DealiasPolicy":
        return cls("two_thirds")

    def cutoff(self, n: int) -> int:
        """Largest retained ``|index|``."""
        if self.kind == "none":
            return n // 2
        denom = self.k + 2 if self.kind == "exact" else 3
        # largest integer strictly below n / denom
        return -(-n // denom) - 1

    def mask(self, n: int) -> np.ndarray:
        idx = np.abs(np.fft.fftfreq(n, d=1.0 / n))
        return (idx <= self.cutoff(n)).astype(float)

    def rmask(self, n: int) -> np.ndarray:
        idx = np.arange(n // 2 + 1)
        return (idx <= self.cutoff(n)).astype(float)


def dealias(f: Field, policy: DealiasPolicy) -> Field:
    return Field(f.grid, f.coeffs * policy.mask(f.grid.n), True)
