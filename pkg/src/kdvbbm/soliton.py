"""Closed-form sech^2 solitary wave and its residual checks.

With gamma1 = gamma2 = 1/12, gamma = 7/48 and wave speed c = delta2/delta1,
eta(x, t) = A sech^2(B (x - c t)) solves the equation when

    B^2 = 3 (c - 1) / (c + 1),   A = -56 B^2 / 3,
    -2 B^2 (1 + c) + 7 A B^2 + 3 A = 0,

whose admissible root is c = -113 - 14 sqrt(66).
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .errors import PreconditionError
from .model import free_params
from .spectral import Field, derivative, dealiased_product

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class SolitonParams:
    c: float
    A: float
    B: float

    def relations(self):
        """Residuals of the three algebraic conditions (zero at the exact wave)."""
        c, A, B2 = self.c, self.A, self.B ** 2
        return {
            "width": B2 - 3.0 * (c - 1.0) / (c + 1.0),
            "quartic": -2.0 * B2 * (1.0 + c) + 7.0 * A * B2 + 3.0 * A,
            "amplitude": A + 56.0 / 3.0 * B2,
        }

    def to_dict(self):
        return {"c": self.c, "A": self.A, "B": self.B, "B2": self.B ** 2}


def solitary_constants():
    root = math.sqrt(66.0)
    b2 = 3.0 / 14.0 * (6.0 + root)
    return SolitonParams(c=-113.0 - 14.0 * root, A=-4.0 * (6.0 + root), B=math.sqrt(b2))


def partial_constants(c):
    """A and B from the width and amplitude conditions alone, for any c."""
    b2 = 3.0 * (c - 1.0) / (c + 1.0)
    if b2 <= 0:
        raise PreconditionError(f"3(c-1)/(c+1) must be positive for a real width, got c={c}")
    return SolitonParams(c=float(c), A=-56.0 / 3.0 * b2, B=math.sqrt(b2))


def solitary_model(sol=None, delta1=1.0):
    """Model coefficients carrying the wave: delta2 = c delta1."""
    sol = sol or solitary_constants()
    return free_params(1.0 / 12.0, 1.0 / 12.0, delta1, sol.c * delta1, 7.0 / 48.0)


def profile_values(x, sol, x0=0.0):
    """phi, phi', phi'' at x from the closed-form derivatives."""
    arg = sol.B * (np.asarray(x) - x0)
    sech2 = 1.0 / np.cosh(arg) ** 2
    tanh = np.tanh(arg)
    A, B = sol.A, sol.B
    phi = A * sech2
    dphi = -2.0 * A * B * sech2 * tanh
    d2phi = 4.0 * A * B ** 2 * sech2 - 6.0 * A * B ** 2 * sech2 ** 2
    return phi, dphi, d2phi


def solitary_profile(grid, x0=0.0, sol=None):
    """A sech^2(B (x - x0)) sampled on the grid (x0 wrapped onto the torus)."""
    sol = sol or solitary_constants()
    boundary = abs(sol.A) / math.cosh(sol.B * grid.L / 2) ** 2
    if boundary >= TAIL_TOL:
        warnings.warn(f"solitary tail clipped: boundary value {boundary:.3e} >= {TAIL_TOL:g}",
                      RuntimeWarning, stacklevel=2)
    shift = (grid.x - x0 + grid.L / 2) % grid.L - grid.L / 2
    return Field(grid, samples=profile_values(shift, sol)[0])


def ode_terms(x, sol):
    """The six terms of 48 x (once-integrated traveling-wave equation)."""
    phi, dphi, d2phi = profile_values(x, sol)
    c = sol.c
    return [
        48.0 * (1.0 - c) * phi,
        4.0 * (c + 1.0) * d2phi,
        36.0 * phi ** 2,
        -6.0 * phi ** 3,
        14.0 * d2phi * phi,
        7.0 * dphi ** 2,
    ]


def ode_residual(sol, grid):
    """max |sum of terms| / max over terms of max |term|."""
    terms = ode_terms(grid.x, sol)
    total = np.sum(terms, axis=0)
    scale = max(np.max(np.abs(t)) for t in terms)
    return float(np.max(np.abs(total)) / scale)


def _check_traveling(sol, modelp):
    if abs(modelp.delta2 - sol.c * modelp.delta1) > 1e-12 * max(1.0, abs(modelp.delta2)):
        raise PreconditionError(
            "traveling-wave condition delta2 = c * delta1 violated: "
            f"delta2={modelp.delta2}, c*delta1={sol.c * modelp.delta1}")
    for name, want in (("gamma1", 1 / 12), ("gamma2", 1 / 12), ("gamma", 7 / 48)):
        if abs(getattr(modelp, name) - want) > 1e-14:
            raise PreconditionError(f"solitary wave needs {name}={want:.6g}")


def pde_terms(sol, modelp, grid, x0=0.0):
    """Terms of the equation evaluated on eta = phi(x - c t) at t = 0.

    Spatial derivatives are spectral; each time derivative is replaced by
    -c times the corresponding x-derivative.
    """
    eta = solitary_profile(grid, x0, sol)
    c = sol.c
    d = {k: derivative(eta, k) for k in (1, 3, 5)}
    eta2 = dealiased_product(eta, eta)
    eta3 = dealiased_product(eta, eta, eta)
    grad2 = dealiased_product(d[1], d[1])
    p = modelp
    terms = {
        "eta_t": -c * d[1].samples,
        "eta_x": d[1].samples,
        "gamma1_eta_xxt": -p.gamma1 * (-c * d[3].samples),
        "gamma2_eta_xxx": p.gamma2 * d[3].samples,
        "delta1_eta_xxxxt": p.delta1 * (-c * d[5].samples),
        "delta2_eta_xxxxx": p.delta2 * d[5].samples,
        "advection": 1.5 * eta.samples * d[1].samples,
        "gamma_eta2_xxx": p.gamma * derivative(eta2, 3).samples,
        "gradient": -7.0 / 48.0 * derivative(grad2, 1).samples,
        "cubic": -1.0 / 8.0 * derivative(eta3, 1).samples,
    }
    return terms


def pde_residual_field(sol, modelp, grid, x0=0.0):
    return np.sum(list(pde_terms(sol, modelp, grid, x0).values()), axis=0)


def pde_residual(sol, modelp, grid, x0=0.0):
    """Relative max-norm residual of the full equation on the traveling wave."""
    _check_traveling(sol, modelp)
    terms = pde_terms(sol, modelp, grid, x0)
    total = np.sum(list(terms.values()), axis=0)
    scale = max(np.max(np.abs(t)) for t in terms.values())
    return float(np.max(np.abs(total)) / scale)


def report(grid, delta1=1.0):
    """Constants table and residuals as a JSON-ready dict."""
    sol = solitary_constants()
    modelp = solitary_model(sol, delta1)
    return {
        "constants": sol.to_dict(),
        "relations": sol.relations(),
        "model": modelp.to_dict(),
        "model_flags": modelp.flags(),
        "grid": grid.to_dict(),
        "ode_residual": ode_residual(sol, grid),
        "pde_residual": pde_residual(sol, modelp, grid),
    }
