"""Model coefficients, the dispersion/nonlinearity symbols and the energy."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, SymbolError
from .spectral import MultiplierSymbol, derivative

CONSTRAINT_TOL = 1e-14
HAMILTONIAN_GAMMA = 7.0 / 48.0
SYMBOL_KINDS = ("varphi", "phi", "psi", "tau", "omega")


@dataclass(frozen=True)
class ModelParams:
    """Coefficients (gamma1, gamma2, delta1, delta2, gamma) of the equation."""

    gamma1: float
    gamma2: float
    delta1: float
    delta2: float
    gamma: float
    mode: str = "free"

    @property
    def sum_ok(self):
        return abs(self.gamma1 + self.gamma2 - 1.0 / 6.0) <= CONSTRAINT_TOL

    @property
    def gamma_ok(self):
        return abs(self.gamma - (5.0 - 18.0 * self.gamma1) / 24.0) <= CONSTRAINT_TOL

    @property
    def delta_ok(self):
        target = 19.0 / 360.0 - self.gamma1 / 6.0
        return abs(self.delta2 - self.delta1 - target) <= CONSTRAINT_TOL * max(1.0, abs(self.delta1))

    @property
    def consistent(self):
        return self.sum_ok and self.gamma_ok and self.delta_ok

    @property
    def positive(self):
        """gamma1 > 0 and delta1 > 0, which makes the BBM denominator >= 1."""
        return self.gamma1 > 0 and self.delta1 > 0

    @property
    def hamiltonian(self):
        return abs(self.gamma - HAMILTONIAN_GAMMA) <= CONSTRAINT_TOL

    def flags(self):
        return {
            "gamma1_plus_gamma2": self.sum_ok,
            "gamma_relation": self.gamma_ok,
            "delta_relation": self.delta_ok,
            "positive": self.positive,
            "hamiltonian": self.hamiltonian,
        }

    def to_dict(self):
        return {
            "gamma1": self.gamma1, "gamma2": self.gamma2,
            "delta1": self.delta1, "delta2": self.delta2,
            "gamma": self.gamma, "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, data):
        mode = data.get("mode", "constrained")
        if mode == "constrained":
            return derive_params(data.get("gamma1", 1.0 / 12.0), data.get("delta1", 1.0))
        if mode == "free":
            try:
                return free_params(*(data[k] for k in
                                     ("gamma1", "gamma2", "delta1", "delta2", "gamma")))
            except KeyError as exc:
                raise ConfigurationError(f"free params need key {exc.args[0]!r}") from None
        raise ConfigurationError(
            f"params mode must be 'constrained' or 'free', got {mode!r}")


def derive_params(gamma1, delta1):
    """Constrained family: gamma2, gamma and delta2 follow from gamma1, delta1."""
    gamma1 = float(gamma1)
    delta1 = float(delta1)
    return ModelParams(
        gamma1=gamma1,
        gamma2=1.0 / 6.0 - gamma1,
        delta1=delta1,
        delta2=delta1 + 19.0 / 360.0 - gamma1 / 6.0,
        gamma=(5.0 - 18.0 * gamma1) / 24.0,
        mode="constrained",
    )


def free_params(gamma1, gamma2, delta1, delta2, gamma):
    return ModelParams(float(gamma1), float(gamma2), float(delta1),
                       float(delta2), float(gamma), mode="free")


def hamiltonian_params(delta1=1.0):
    """The constrained member with gamma = 7/48 (gamma1 = gamma2 = 1/12)."""
    return derive_params(1.0 / 12.0, delta1)


def _denominator(xi, params):
    xi2 = xi * xi
    return 1.0 + params.gamma1 * xi2 + params.delta1 * xi2 * xi2


def symbol_array(kind, xi, params):
    """Vectorized symbol evaluation; see :func:`symbol_eval`."""
    xi = np.asarray(xi, dtype=float)
    if kind == "omega":
        return np.abs(xi) / (1.0 + xi * xi)
    den = _denominator(xi, params)
    if kind == "varphi":
        return den
    if np.any(den == 0) or not np.all(np.isfinite(den)):
        bad = np.atleast_1d(xi)[np.atleast_1d(den == 0)]
        raise SymbolError(f"1 + gamma1 xi^2 + delta1 xi^4 vanishes at xi={bad[:4]}")
    xi2 = xi * xi
    if kind == "phi":
        return xi * (1.0 - params.gamma2 * xi2 + params.delta2 * xi2 * xi2) / den
    if kind == "psi":
        return xi / den
    if kind == "tau":
        return (3.0 * xi - 4.0 * params.gamma * xi2 * xi) / (4.0 * den)
    raise ConfigurationError(f"unknown symbol kind {kind!r}; expected one of {SYMBOL_KINDS}")


def symbol_eval(kind, xi, params):
    return float(symbol_array(kind, np.float64(xi), params))


def multiplier(kind, params):
    return MultiplierSymbol(kind, lambda xi: symbol_array(kind, xi, params))


def japanese(xi):
    """<xi> = 1 + |xi|, the weight used for frequency bands."""
    return 1.0 + np.abs(xi)


def bessel_weight(xi, s):
    """(1 + xi^2)^(s/2), the symbol of Lambda^s."""
    return (1.0 + np.asarray(xi, dtype=float) ** 2) ** (0.5 * s)


@dataclass(frozen=True)
class EnergyValue:
    """E = (mass + gradient + curvature) / 2 with the three integrals kept apart."""

    mass: float
    gradient: float
    curvature: float

    @property
    def value(self):
        return 0.5 * (self.mass + self.gradient + self.curvature)

    def __float__(self):
        return self.value


def energy(field, params):
    eta_x = derivative(field, 1)
    eta_xx = derivative(field, 2)
    return EnergyValue(
        mass=_square_integral(field),
        gradient=params.gamma1 * _square_integral(eta_x),
        curvature=params.delta1 * _square_integral(eta_xx),
    )


def _square_integral(field):
    return float(field.grid.dx * np.sum(np.abs(field.samples) ** 2))


def energy_spectral(coeffs, grid, params):
    """Energy from FFT-ordered coefficients: (L/2) sum varphi(xi) |c|^2."""
    return 0.5 * grid.L * float(np.sum(_denominator(grid.xi, params) * np.abs(coeffs) ** 2))

