"""Frequency-uniform and dyadic decompositions and the function-space norms.

Three families are supported: modulation norms
``|| <n>^s ||Pi_n f||_{L^r} ||_{l^p_n}``, L^p-Sobolev norms
``||Lambda^s f||_{L^p}`` and Fourier-Lebesgue norms ``||<xi>^s f^||_{L^p}``.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .errors import ConfigurationError
from .model import bessel_weight, japanese
from .spectral import Field, MultiplierSymbol, apply_multiplier, lp_norm

SPACES = ("Modulation", "SobolevLp", "FourierLebesgue")
_SPACE_ALIASES = {
    "modulation": "Modulation", "m": "Modulation",
    "sobolevlp": "SobolevLp", "sobolev": "SobolevLp", "h": "SobolevLp", "hsp": "SobolevLp",
    "fourierlebesgue": "FourierLebesgue", "fl": "FourierLebesgue",
}
_PREFIX = {"Modulation": "M", "SobolevLp": "H", "FourierLebesgue": "FL"}


@dataclass(frozen=True)
class NormSpec:
    """A function-space tag with regularity ``s`` and exponents ``r``, ``p``.

    ``r`` is the inner Lebesgue exponent of modulation norms and is ignored
    by the other spaces.
    """

    space: str = "Modulation"
    s: float = 0.0
    r: float = 2.0
    p: float = 2.0

    def __post_init__(self):
        space = _SPACE_ALIASES.get(str(self.space).lower(), self.space)
        if space not in SPACES:
            raise ConfigurationError(f"unknown space {self.space!r}; expected one of {SPACES}")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "r", _exponent(self.r, "r"))
        object.__setattr__(self, "p", _exponent(self.p, "p"))
        if space == "SobolevLp" and math.isinf(self.p):
            raise ConfigurationError("H^{s,p} is defined for p in [1, inf); got p=inf")

    @property
    def label(self):
        parts = [_PREFIX[self.space], f"s={_fmt(self.s)}"]
        if self.space == "Modulation" and self.r != 2:
            parts.append(f"r={_fmt(self.r)}")
        parts.append(f"p={_fmt(self.p)}")
        return "_".join(parts)

    def to_dict(self):
        return {"space": self.space, "s": self.s, "r": _json_float(self.r),
                "p": _json_float(self.p)}

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - {"space", "s", "r", "p"}
        if unknown:
            raise ConfigurationError(f"unknown norm-spec keys {sorted(unknown)}")
        return cls(data.get("space", "Modulation"), data.get("s", 0.0),
                   _parse_float(data.get("r", 2.0)), _parse_float(data.get("p", 2.0)))


def modulation(s, p=2.0, r=2.0):
    return NormSpec("Modulation", s, r, p)


def sobolev(s, p=2.0):
    return NormSpec("SobolevLp", s, 2.0, p)


def fourier_lebesgue(s, p=2.0):
    return NormSpec("FourierLebesgue", s, 2.0, p)


def _fmt(value):
    if math.isinf(value):
        return "inf"
    return f"{value:g}"


def _json_float(value):
    return "inf" if math.isinf(value) else value


def _parse_float(value):
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    return value


def _exponent(value, label):
    try:
        value = float(_parse_float(value))
    except (TypeError, ValueError):
        raise ConfigurationError(f"{label} must be a number, got {value!r}") from None
    if not value >= 1:
        raise ConfigurationError(f"{label} >= 1 required, got {label}={value}")
    return value


def window_sigma(xi):
    """cos^2(pi xi / 2) on [-1, 1], zero outside.

    Its integer translates sum to one and at most two of them overlap.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.cos(0.5 * np.pi * xi) ** 2
    return np.where(np.abs(xi) < 1.0, out, 0.0)


def uniform_symbol(n):
    return MultiplierSymbol(f"sigma_{n}", lambda xi: window_sigma(xi - n))


def project_uniform(field, n):
    return apply_multiplier(field, uniform_symbol(int(n)))


def band_range(grid):
    """Band indices n whose window meets a grid frequency."""
    lo = int(np.floor(grid.xi.min())) - 1
    hi = int(np.ceil(grid.xi.max())) + 1
    return np.arange(lo, hi + 1)


def band_l2_norms(field):
    """(n, ||Pi_n f||_{L^2}) for every band touching the grid.

    Each frequency xi meets the two bands floor(xi) and floor(xi) + 1, so the
    band energies are accumulated in O(N) with Parseval.
    """
    grid = field.grid
    xi = grid.xi
    power = np.abs(field.spectrum) ** 2
    lower = np.floor(xi)
    frac = xi - lower
    bands = band_range(grid)
    offset = -bands[0]
    idx = lower.astype(int) + offset
    energy = np.bincount(idx, weights=window_sigma(frac) ** 2 * power, minlength=len(bands))
    energy += np.bincount(idx + 1, weights=window_sigma(frac - 1.0) ** 2 * power,
                          minlength=len(bands))
    return bands, np.sqrt(grid.L * energy[:len(bands)])


def band_lr_norms(field, r):
    """(n, ||Pi_n f||_{L^r}) computed by synthesizing each band."""
    if r == 2:
        return band_l2_norms(field)
    grid = field.grid
    bands = band_range(grid)
    norms = np.empty(len(bands))
    chunk = max(1, 2 ** 22 // grid.N)
    for start in range(0, len(bands), chunk):
        block = bands[start:start + chunk]
        weights = window_sigma(grid.xi[None, :] - block[:, None])
        values = np.abs(np.fft.ifft(weights * field.spectrum[None, :], axis=1) * grid.N)
        if math.isinf(r):
            norms[start:start + len(block)] = values.max(axis=1)
        else:
            norms[start:start + len(block)] = (grid.dx * np.sum(values ** r, axis=1)) ** (1.0 / r)
    return bands, norms


def _lp_sum(values, p):
    if math.isinf(p):
        return float(np.max(values)) if len(values) else 0.0
    return float(np.sum(values ** p) ** (1.0 / p))


def space_norm(field, spec):
    if not isinstance(spec, NormSpec):
        spec = NormSpec.from_dict(spec)
    if spec.space == "Modulation":
        bands, norms = band_lr_norms(field, spec.r)
        return _lp_sum(japanese(bands) ** spec.s * norms, spec.p)
    if spec.space == "SobolevLp":
        if spec.s == 0:
            return lp_norm(field, spec.p)
        lifted = apply_multiplier(
            field, MultiplierSymbol(f"Lambda^{spec.s}", lambda xi: bessel_weight(xi, spec.s)))
        return lp_norm(lifted, spec.p)
    grid = field.grid
    values = japanese(grid.xi) ** spec.s * grid.L * np.abs(field.spectrum)
    if math.isinf(spec.p):
        return float(values.max())
    return float((grid.dxi * np.sum(values ** spec.p)) ** (1.0 / spec.p))


def sobolev_l2(field, s):
    """Classical H^s norm from the coefficients: sqrt(L sum (1+xi^2)^s |c|^2)."""
    grid = field.grid
    return float(np.sqrt(grid.L * np.sum((1.0 + grid.xi ** 2) ** s * np.abs(field.spectrum) ** 2)))


def is_dyadic(n):
    n = int(n) if float(n).is_integer() else 0
    return n >= 1 and n & (n - 1) == 0


def project_dyadic(field, N):
    """Sharp Littlewood-Paley piece: N/2 < |xi| <= N, or |xi| <= 1 when N = 1."""
    if not is_dyadic(N):
        raise ConfigurationError(f"Littlewood-Paley index must be a dyadic integer >= 1, got {N}")
    N = int(N)
    axi = np.abs(field.grid.xi)
    mask = axi <= 1.0 if N == 1 else (axi > N / 2) & (axi <= N)
    return Field(field.grid, spectrum=np.where(mask, field.spectrum, 0.0), real=field.real)


def dyadic_levels(grid):
    """Dyadic N = 1, 2, 4, ... up to the first one covering every grid frequency."""
    top = float(np.abs(grid.xi).max())
    levels = [1]
    while levels[-1] < top:
        levels.append(levels[-1] * 2)
    return levels


@dataclass(frozen=True)
class DyadicSum:
    a: float
    M: int
    total: object
    closed_form: object
    bound_kind: str
    bound_ratio: float


def dyadic_sum(a, M):
    """Sum of N^a over dyadic 1 <= N <= M with its closed form and bound class.

    Integer exponents use exact rational arithmetic so that the loop and the
    geometric closed form can be compared for equality.
    """
    if not is_dyadic(M) or int(M) < 2:
        raise ConfigurationError(f"M must be a dyadic integer >= 2, got {M}")
    M = int(M)
    levels = M.bit_length() - 1
    exact = float(a).is_integer()
    if exact:
        a_int = int(a)
        base = Fraction(2) ** a_int
        total = sum((Fraction(2) ** j) ** a_int for j in range(levels + 1))
        closed = Fraction(levels + 1) if a_int == 0 else (base ** (levels + 1) - 1) / (base - 1)
        if total.denominator == 1:
            total, closed = int(total), int(closed)
    else:
        base = 2.0 ** a
        total = sum((2.0 ** j) ** a for j in range(levels + 1))
        closed = (base ** (levels + 1) - 1) / (base - 1)
    if a > 0:
        kind, ratio = "~M^a", float(total) / float(M) ** a
    elif a < 0:
        kind, ratio = "<=C", float(total)
    else:
        kind, ratio = "<=C*lnM", float(total) / math.log(M)
    return DyadicSum(float(a), M, total, closed, kind, ratio)


def bernstein_dyadic_ratio(field, N, p=math.inf, q=2.0):
    """||P_N f||_p / (N^(1/q - 1/p) ||f||_q)."""
    denom = float(N) ** (1.0 / q - 1.0 / p) * lp_norm(field, q)
    return lp_norm(project_dyadic(field, N), p) / denom


def bernstein_uniform_ratio(field, n, p=math.inf, q=2.0):
    """||Pi_n f||_p / ||f||_q."""
    return lp_norm(project_uniform(field, n), p) / lp_norm(field, q)


def band_profile(field, spec):
    """(n, <n>^s ||Pi_n f||_{L^r}) for plotting and diagnostics."""
    bands, norms = band_lr_norms(field, spec.r)
    return bands, japanese(bands) ** spec.s * norms


__all__ = [
    "NormSpec", "SPACES", "modulation", "sobolev", "fourier_lebesgue",
    "window_sigma", "project_uniform", "project_dyadic", "space_norm", "sobolev_l2",
    "band_l2_norms", "band_lr_norms", "dyadic_levels", "dyadic_sum", "DyadicSum",
    "bernstein_dyadic_ratio", "bernstein_uniform_ratio", "band_profile",
]
