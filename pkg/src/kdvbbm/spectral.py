"""Periodic grids, discrete Fourier analysis and Fourier multipliers.

The real line is truncated to the torus [-L/2, L/2).  A field is stored by
its samples at the nodes ``x_j = -L/2 + j L / N`` and by its coefficients
``c_k`` (numpy FFT ordering) with

    samples_j = sum_k c_k exp(2 pi i j k / N),   c = fft(samples) / N.

Coefficients are therefore taken relative to the left end of the grid; only
their moduli and the diagonal action of multipliers matter downstream.
With this normalization ``dx * sum |f_j|^2 == L * sum |c_k|^2`` exactly.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ShapeError, SymbolError

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid of ``N`` points on a torus of length ``L``."""

    L: float
    N: int

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigurationError(f"grid length must be positive, got L={self.L}")
        n = int(self.N)
        if n != self.N or n < 8 or n & (n - 1):
            raise ConfigurationError(
                f"grid size must be a power of two >= 8, got N={self.N}")

    @cached_property
    def dx(self):
        return self.L / self.N

    @cached_property
    def dxi(self):
        return 2 * np.pi / self.L

    @cached_property
    def x(self):
        return -self.L / 2 + self.dx * np.arange(self.N)

    @cached_property
    def k(self):
        """Integer mode numbers in FFT order, ``-N/2`` is the Nyquist mode."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)

    @cached_property
    def xi(self):
        return self.dxi * self.k

    @property
    def nyquist_index(self):
        return self.N // 2

    @cached_property
    def neg_index(self):
        """Index of the mode -k for every mode k."""
        return (-np.arange(self.N)) % self.N

    def to_dict(self):
        return {"L": float(self.L), "N": int(self.N)}


def make_grid(L, N):
    return Grid(float(L), int(N))


def analysis(samples):
    return np.fft.fft(samples) / len(samples)


def synthesis(spectrum):
    return np.fft.ifft(spectrum) * len(spectrum)


def is_hermitian(spectrum, grid, tol=HERMITIAN_TOL):
    scale = max(np.max(np.abs(spectrum)), 1e-300)
    mirror = np.conj(spectrum[grid.neg_index])
    return bool(np.max(np.abs(spectrum - mirror)) <= tol * scale)


class Field:
    """An immutable discrete function on a :class:`Grid`.

    Either representation may be supplied; the other is computed on first
    access, so a Field is always synchronized.  ``real`` records whether
    the physical samples are real-valued.
    """

    def __init__(self, grid, samples=None, spectrum=None, real=None):
        if (samples is None) == (spectrum is None):
            raise ValueError("provide exactly one of samples or spectrum")
        self.grid = grid
        self._samples = None
        self._spectrum = None
        if samples is not None:
            samples = np.asarray(samples)
            if samples.shape != (grid.N,):
                raise ShapeError(
                    f"samples have shape {samples.shape}, grid expects ({grid.N},)")
            if real is None:
                real = not np.iscomplexobj(samples)
            samples = samples.real.astype(float) if real else samples.astype(complex)
            self._samples = _frozen(samples)
        else:
            spectrum = np.asarray(spectrum, dtype=complex)
            if spectrum.shape != (grid.N,):
                raise ShapeError(
                    f"spectrum has shape {spectrum.shape}, grid expects ({grid.N},)")
            if real is None:
                real = is_hermitian(spectrum, grid)
            self._spectrum = _frozen(spectrum)
        self.real = bool(real)

    @classmethod
    def from_samples(cls, grid, samples, real=None):
        return cls(grid, samples=samples, real=real)

    @classmethod
    def from_spectrum(cls, grid, spectrum, real=None):
        return cls(grid, spectrum=spectrum, real=real)

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, samples=func(grid.x))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, samples=np.zeros(grid.N))

    @property
    def samples(self):
        if self._samples is None:
            values = synthesis(self._spectrum)
            self._samples = _frozen(values.real.copy() if self.real else values)
        return self._samples

    @property
    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = _frozen(analysis(self._samples))
        return self._spectrum

    def __add__(self, other):
        _check_same_grid(self, other)
        return Field(self.grid, spectrum=self.spectrum + other.spectrum,
                     real=self.real and other.real)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return Field(self.grid, spectrum=self.spectrum - other.spectrum,
                     real=self.real and other.real)

    def __neg__(self):
        return Field(self.grid, spectrum=-self.spectrum, real=self.real)

    def scale(self, factor):
        real = self.real and np.isrealobj(factor)
        return Field(self.grid, spectrum=self.spectrum * factor, real=real)

    __mul__ = scale
    __rmul__ = scale

    def __repr__(self):
        kind = "real" if self.real else "complex"
        return f"Field({kind}, L={self.grid.L:g}, N={self.grid.N})"


def _frozen(array):
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ShapeError(f"fields live on different grids: {a.grid} vs {b.grid}")


def transform(field, direction):
    """Return a copy of ``field`` rebuilt from one representation.

    ``analysis`` recomputes the spectrum from the samples, ``synthesis`` the
    samples from the spectrum.
    """
    if direction == "analysis":
        if field.samples.shape != (field.grid.N,):
            raise ShapeError("sample count does not match the grid")
        return Field(field.grid, spectrum=analysis(field.samples), real=field.real)
    if direction == "synthesis":
        if field.spectrum.shape != (field.grid.N,):
            raise ShapeError("spectrum length does not match the grid")
        return Field(field.grid, samples=synthesis(field.spectrum), real=field.real)
    raise ValueError(f"unknown direction {direction!r}")


@dataclass(frozen=True)
class MultiplierSymbol:
    """A Fourier multiplier ``xi -> m(xi)`` evaluated on arrays."""

    name: str
    func: object

    def __call__(self, xi):
        return self.func(xi)


def symbol_values(grid, m):
    """Evaluate ``m`` on the grid frequencies.

    The Nyquist frequency stands for both +xi_max and -xi_max, so it receives
    the average of the two values.  Odd symbols therefore vanish there, which
    keeps real fields real.
    """
    func = m.func if isinstance(m, MultiplierSymbol) else m
    values = _evaluate(func, grid.xi)
    if not np.all(np.isfinite(values)):
        name = getattr(m, "name", "symbol")
        bad = grid.xi[~np.isfinite(values)]
        raise SymbolError(f"{name} is not finite at xi={bad[:4]}")
    nyq = grid.nyquist_index
    values = values.copy()
    values[nyq] = 0.5 * (values[nyq] + _evaluate(func, -grid.xi[nyq:nyq + 1])[0])
    return values


def _evaluate(func, xi):
    values = np.asarray(func(xi), dtype=complex)
    return np.array(np.broadcast_to(values, xi.shape))


def apply_multiplier(field, m):
    values = symbol_values(field.grid, m)
    real = field.real and is_hermitian(values, field.grid)
    return Field(field.grid, spectrum=values * field.spectrum, real=real)


def derivative(field, order):
    if order < 0 or int(order) != order:
        raise ConfigurationError(f"derivative order must be a nonnegative integer, got {order}")
    if order == 0:
        return field
    order = int(order)
    return apply_multiplier(
        field, MultiplierSymbol(f"d^{order}", lambda xi: (1j * xi) ** order))


def quadrature(field):
    total = field.grid.dx * np.sum(field.samples)
    return float(total) if field.real else complex(total)


def lp_norm(field, p):
    p = _check_exponent(p, "p")
    values = np.abs(field.samples)
    if np.isinf(p):
        return float(values.max())
    return float((field.grid.dx * np.sum(values ** p)) ** (1.0 / p))


def spectral_l2(field):
    """L^2 norm computed from the coefficients (Parseval)."""
    return float(np.sqrt(field.grid.L * np.sum(np.abs(field.spectrum) ** 2)))


def _check_exponent(p, label):
    p = float(p)
    if not p >= 1:
        raise ConfigurationError(f"{label} >= 1 required for an L^{label} norm, got {label}={p}")
    return p


def prolong(field, factor):
    """Interpolate ``field`` exactly onto a grid ``factor`` times finer."""
    factor = int(factor)
    if factor == 1:
        return field
    grid = field.grid
    fine = Grid(grid.L, grid.N * factor)
    return Field(fine, spectrum=pad_spectrum(field.spectrum, fine.N), real=field.real)


def restrict(field, grid):
    """Truncate ``field`` to the modes representable on the coarser ``grid``."""
    if grid.L != field.grid.L:
        raise ShapeError("restriction requires equal torus lengths")
    return Field(grid, spectrum=truncate_spectrum(field.spectrum, grid.N), real=field.real)


def pad_spectrum(coeffs, M):
    """Zero-pad FFT-ordered coefficients of length N to length M >= N.

    The Nyquist coefficient is split evenly between +N/2 and -N/2 so that the
    padded trigonometric polynomial interpolates the original samples.
    """
    N = coeffs.shape[-1]
    half = N // 2
    out = np.zeros(coeffs.shape[:-1] + (M,), dtype=complex)
    out[..., :half] = coeffs[..., :half]
    out[..., M - half + 1:] = coeffs[..., half + 1:]
    out[..., half] = 0.5 * coeffs[..., half]
    out[..., M - half] = 0.5 * coeffs[..., half]
    return out


def truncate_spectrum(coeffs, N):
    """Keep the modes |k| < N/2 of FFT-ordered coefficients; Nyquist is zero."""
    M = coeffs.shape[-1]
    half = N // 2
    out = np.zeros(coeffs.shape[:-1] + (N,), dtype=complex)
    out[..., :half] = coeffs[..., :half]
    out[..., half + 1:] = coeffs[..., M - half + 1:]
    return out


def dealiased_product(*fields, pad=2):
    """Pointwise product of fields formed on a grid ``pad`` times finer.

    With ``pad=2`` products of up to three fields are free of aliasing; the
    result is truncated back to the input grid.
    """
    grid = fields[0].grid
    M = grid.N * pad
    prod = np.ones(M, dtype=complex)
    for f in fields:
        _check_same_grid(fields[0], f)
        prod = prod * synthesis(pad_spectrum(f.spectrum, M))
    real = all(f.real for f in fields)
    return Field(grid, spectrum=truncate_spectrum(analysis(prod), grid.N), real=real)
