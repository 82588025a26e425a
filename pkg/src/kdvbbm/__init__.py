"""Spectral simulation and verification lab for the fifth-order KdV-BBM equation."""

__version__ = "0.1.0"

from .errors import (BlowupError, ConfigurationError, KdvBbmError, PreconditionError,
                     RangeError, ShapeError, SymbolError, UndefinedRatio)
from .spectral import Field, Grid, MultiplierSymbol, apply_multiplier, make_grid, transform
from .model import (ModelParams, derive_params, energy, free_params, hamiltonian_params,
                    multiplier, symbol_eval)
from .norms import (NormSpec, dyadic_sum, fourier_lebesgue, modulation, project_dyadic,
                    project_uniform, sobolev, space_norm)
from .evolution import (SolveConfig, Trajectory, calibrate_cs, existence_time, picard_fixed_point,
                        picard_map, semigroup, solve, step_etdrk4)
from .split import evolve_pair, global_solve, reassign, split_initial, two_exponent_ratio
from .estimates import (EnsembleSpec, EstimateReport, campaign, estimate_ratio, random_field,
                        semigroup_growth_probe)
from .soliton import (SolitonParams, pde_residual, solitary_constants, solitary_model,
                      solitary_profile)
