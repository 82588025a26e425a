"""High-low frequency splitting and the gluing iteration.

The datum is cut sharply at |xi| = N_cut into a smooth part u0 and a rough
part v0.  Over a leg of length t0 the pair evolves by

    i u_t = phi(D) u + F(u),        i v_t = phi(D) v + F(u + v) - F(u),

and at the leg end the nonlinear part h = v - S(t0) v0 of the rough
evolution is handed to the smooth part: u1 = u(t0) + h, v1 = S(t0) v0.
The energy of the smooth part changes only through this hand-over, which is
what the ledger tracks.
"""

from dataclasses import dataclass, field as dc_field, asdict
import math

import numpy as np

from .errors import BlowupError, ConfigurationError
from .evolution import (BLOWUP_CAP, ETDRK4, SolveConfig, SpectralKernel, Trajectory, _diagnose,
                        solve)
from .estimates import two_exponent_ratio
from .model import energy
from .norms import modulation, sobolev_l2, space_norm
from .spectral import Field, derivative


def split_initial(eta0, N_cut):
    """(u0, v0) with u0 carrying |xi| <= N_cut and v0 the rest."""
    if not N_cut > 0:
        raise ConfigurationError(f"N_cut must be positive, got {N_cut}")
    low = np.abs(eta0.grid.xi) <= N_cut
    spec = eta0.spectrum
    u0 = Field(eta0.grid, spectrum=np.where(low, spec, 0.0), real=eta0.real)
    v0 = Field(eta0.grid, spectrum=np.where(low, 0.0, spec), real=eta0.real)
    return u0, v0


def split_bound_ratio(eta0, N_cut, rho, s, p):
    """||v0||_{M^{rho,p}} / (||eta0||_{M^{s,p}} N^(rho - s)) for rho <= s."""
    if rho > s:
        raise ConfigurationError(f"rho <= s required, got rho={rho}, s={s}")
    _, v0 = split_initial(eta0, N_cut)
    denom = space_norm(eta0, modulation(s, p)) * float(N_cut) ** (rho - s)
    return space_norm(v0, modulation(rho, p)) / denom


@dataclass
class SplitState:
    """The pair (u, v) at time ``t`` of a leg together with the remainder h."""

    u: Field
    v: Field
    h: Field
    t: float
    N_cut: float
    v0: Field
    free: Field
    ledger: list = dc_field(default_factory=list)


class _PairSystem:
    """Stacked (u, v) real-FFT coefficients advanced by one ETDRK4 stepper."""

    def __init__(self, grid, params, dealias=True, nonlinear=True):
        self.kernel = SpectralKernel(grid, params, dealias, nonlinear)

    def rhs(self, state):
        k = self.kernel
        return -1j * np.stack([k.nonlinearity(state[0]), k.coupled_nonlinearity(state[0], state[1])])


def _leg_steps(t0, dt):
    return max(1, int(math.ceil(t0 / dt - 1e-9)))


def evolve_pair(u0, v0, t0, cfg, record=None, N_cut=math.nan):
    """Advance u and v over [0, t0] on a common clock.

    ``record``, if given, is a list receiving (t, u + v) at the configured
    stride; it is used to build the glued trajectory.
    """
    if u0.grid != v0.grid:
        raise ConfigurationError("u0 and v0 must share a grid")
    if not t0 > 0:
        raise ConfigurationError(f"leg length must be positive, got {t0}")
    system = _PairSystem(u0.grid, cfg.params, cfg.dealias, cfg.nonlinear)
    kernel = system.kernel
    steps = _leg_steps(t0, cfg.dt)
    h_step = t0 / steps
    stepper = ETDRK4(-1j * kernel.phi[None, :], h_step)
    state = np.stack([kernel.to_coeffs(u0), kernel.to_coeffs(v0)])
    # the evolution carries no Nyquist mode, so neither does the stored datum
    state_v0 = state[1].copy()
    v0 = kernel.to_field(state_v0)
    stride = cfg.stride
    for n in range(1, steps + 1):
        state = stepper.step(state, system.rhs)
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) * kernel.N > BLOWUP_CAP:
            raise BlowupError(f"pair evolution blew up at t={n * h_step:.6g}", time=(n - 1) * h_step)
        if record is not None and (n % stride == 0 or n == steps):
            record.append((n * h_step, state[0] + state[1]))
    u = kernel.to_field(state[0])
    v = kernel.to_field(state[1])
    free = kernel.to_field(kernel.propagator(t0) * state_v0)
    return SplitState(u=u, v=v, h=v - free, t=t0, N_cut=N_cut, v0=v0, free=free)


def reassign(state):
    """u1 = u(t0) + h(t0), v1 = S(t0) v0."""
    return state.u + state.h, state.free


def energy_increment(u, h, params):
    """E(u + h) - E(u) term by term.

    With E = (1/2) int (eta^2 + gamma1 eta_x^2 + delta1 eta_xx^2) the
    increment is half the sum of the six integrals returned here.
    """
    dx = u.grid.dx
    ux, uxx = derivative(u, 1), derivative(u, 2)
    hx, hxx = derivative(h, 1), derivative(h, 2)

    def integral(a, b):
        return float(dx * np.sum(a.samples * b.samples))

    terms = {
        "cross_mass": 2.0 * integral(u, h),
        "mass": integral(h, h),
        "cross_gradient": 2.0 * params.gamma1 * integral(ux, hx),
        "gradient": params.gamma1 * integral(hx, hx),
        "cross_curvature": 2.0 * params.delta1 * integral(uxx, hxx),
        "curvature": params.delta1 * integral(hxx, hxx),
    }
    return 0.5 * sum(terms.values()), terms


@dataclass
class LedgerRow:
    k: int
    t_k: float
    E_u: float
    X_k: float
    X_expansion: float
    h_H2: float
    bound_envelope: float
    E_u_pre: float
    v_norm: float

    CSV_COLUMNS = ("k", "t_k", "E_u", "X_k", "h_H2", "bound_envelope")


@dataclass
class GlobalResult:
    trajectory: Trajectory
    ledger: list
    N_cut: float
    theta: float
    t0: float
    legs: int
    junctions: list = dc_field(default_factory=list)

    def manifest(self):
        return {"N_cut": self.N_cut, "theta": self.theta, "t0": self.t0, "legs": self.legs}

    def ledger_health(self):
        """Whether every E(u_k) stays below its predicted envelope."""
        return all(row.E_u <= row.bound_envelope for row in self.ledger)


def leg_exponent(s, p):
    """theta = (2 - s) + 1/2 - 1/p."""
    return (2.0 - s) + 0.5 - 1.0 / p


def leg_length(N_cut, s, p, scale=1.0):
    return scale * float(N_cut) ** (-2.0 * leg_exponent(s, p))


def global_solve(eta0, T, s, p, cfg, N_cut=None, t0_scale=1.0, envelope_c=1.0):
    """Cover [0, T] by legs of length t0 ~ N^(-2 theta) and glue the pieces.

    Returns a GlobalResult whose trajectory holds u + v at the recorded
    times and whose ledger has one row per junction (row 0 is the datum).
    """
    if not T > 0:
        raise ConfigurationError(f"T must be positive, got {T}")
    N_cut = float(T) ** 2 if N_cut is None else float(N_cut)
    theta = leg_exponent(s, p)
    t0 = leg_length(N_cut, s, p, t0_scale)
    if t0 < 10 * cfg.dt:
        raise ConfigurationError(
            f"leg length t0={t0:.3g} is below 10 dt={10 * cfg.dt:.3g}; "
            "decrease dt or the cutoff N_cut")
    legs = max(1, int(math.ceil(T / t0 - 1e-9)))
    kernel = SpectralKernel(eta0.grid, cfg.params, cfg.dealias, cfg.nonlinear)
    u, v = split_initial(kernel.to_field(kernel.to_coeffs(eta0)), N_cut)
    E0 = energy(u, cfg.params).value
    v_norm = space_norm(v, modulation(s, p))
    ledger = [LedgerRow(0, 0.0, E0, 0.0, 0.0, 0.0, E0, E0, v_norm)]
    times = [0.0]
    states = [eta0]
    rows = [_diagnose(kernel, kernel.to_coeffs(eta0), cfg.norms)]
    junctions = []
    start = 0.0
    for k in range(1, legs + 1):
        length = min(t0, T - start)
        record = []
        try:
            state = evolve_pair(u, v, length, cfg, record, N_cut)
        except BlowupError as exc:
            raise BlowupError(str(exc), time=start + (exc.time or 0.0),
                              partial=GlobalResult(
                                  _glued(times, states, rows, cfg.params), ledger,
                                  N_cut, theta, t0, k - 1, junctions)) from None
        for t, coeffs in record:
            times.append(start + t)
            field = kernel.to_field(coeffs)
            states.append(field)
            rows.append(_diagnose(kernel, coeffs, cfg.norms, field))
        E_pre = energy(state.u, cfg.params).value
        u, v = reassign(state)
        E_u = energy(u, cfg.params).value
        expansion, _ = energy_increment(state.u, state.h, cfg.params)
        start += length
        ledger.append(LedgerRow(
            k, start, E_u, E_u - E_pre, expansion, sobolev_l2(state.h, 2.0),
            E0 + envelope_c * k * N_cut ** -0.5, E_pre, space_norm(v, modulation(s, p))))
        junctions.append((u, v, state))
    traj = _glued(times, states, rows, cfg.params)
    return GlobalResult(traj, ledger, N_cut, theta, t0, legs, junctions)


def _glued(times, states, rows, params):
    keys = rows[0].keys()
    diagnostics = {key: np.array([r[key] for r in rows]) for key in keys}
    return Trajectory(np.array(times), list(states), params, diagnostics)


def ledger_table(ledger):
    """Rows of the CSV export in column order."""
    return [[getattr(row, c) for c in LedgerRow.CSV_COLUMNS] for row in ledger]


def ledger_dicts(ledger):
    return [asdict(row) for row in ledger]


def increment_slope(cutoffs, increments):
    """log-log slope of the largest increment against N_cut."""
    return float(np.polyfit(np.log(cutoffs), np.log(increments), 1)[0])


def apriori_legs(eta0, T, s, p, s0, cfg, c=1.0):
    """Re-based local solves of length delta checking the doubling bound.

    delta = c / (||eta0||_{M^{s0,p}} + ||eta0||_{M^{s0,p}}^2 + T^(2(2 - s0))).
    Returns (delta, per-leg ratios max_t ||eta(t)|| / ||eta(k delta)||).
    """
    n0 = space_norm(eta0, modulation(s0, p))
    delta = c / (n0 + n0 ** 2 + float(T) ** (2.0 * (2.0 - s0)))
    spec = modulation(s, p)
    ratios = []
    eta, start = eta0, 0.0
    while start < T - 1e-12:
        length = min(delta, T - start)
        leg_cfg = SolveConfig(cfg.grid, cfg.params, min(cfg.dt, length), length,
                              dealias=cfg.dealias, norms=[spec], record_every=cfg.record_every)
        traj = solve(eta, leg_cfg)
        series = traj.diagnostics[spec.label]
        ratios.append(float(series.max() / series[0]) if series[0] > 0 else 1.0)
        eta = traj.final
        start += length
    return delta, ratios


__all__ = [
    "SplitState", "split_initial", "split_bound_ratio", "evolve_pair", "reassign",
    "energy_increment", "LedgerRow", "GlobalResult", "leg_exponent", "leg_length",
    "global_solve", "ledger_table", "ledger_dicts", "increment_slope", "apriori_legs",
    "two_exponent_ratio",
]
