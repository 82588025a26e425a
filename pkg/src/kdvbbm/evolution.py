"""Linear group, nonlinearity, ETDRK4 time stepping and the Duhamel map.

In Fourier variables the equation reads

    i eta_t = phi(D) eta + tau(D) eta^2 - 1/8 psi(D) eta^3 - 7/48 psi(D) (eta_x)^2

so the linear part is the unitary group exp(-i phi(xi) t).  The time
integrator treats it exactly and works on real-FFT coefficients of real
fields; the Duhamel iteration reuses the same nonlinearity but none of the
integrator machinery.
"""

from dataclasses import dataclass, field as dc_field
import math

import numpy as np

from .errors import BlowupError, ConfigurationError, PreconditionError, ShapeError, SymbolError
from .model import ModelParams, symbol_array
from .norms import NormSpec, space_norm
from .spectral import Field, Grid, apply_multiplier, MultiplierSymbol

CUBIC_COEFF = 1.0 / 8.0
GRADIENT_COEFF = 7.0 / 48.0
BLOWUP_CAP = 1e8
CONTOUR_POINTS = 64


def _check_symbols(grid, params):
    den = symbol_array("varphi", grid.xi, params)
    if np.any(den <= 0):
        bad = grid.xi[den <= 0]
        raise SymbolError(
            f"1 + gamma1 xi^2 + delta1 xi^4 <= 0 at xi={bad[:4]}; phi is singular")


def linear_symbol(params):
    return MultiplierSymbol("phi", lambda xi: symbol_array("phi", xi, params))


def semigroup(field, t, params):
    """exp(-i phi(D) t) applied spectrally."""
    _check_symbols(field.grid, params)
    phase = MultiplierSymbol(
        "S(t)", lambda xi: np.exp(-1j * symbol_array("phi", xi, params) * t))
    return apply_multiplier(field, phase)


class SpectralKernel:
    """Real-FFT workspace for one grid and parameter set.

    Coefficients ``a_k = rfft(samples)_k / N`` for k = 0..N/2.  The Nyquist
    coefficient is kept at zero, which makes every multiplier exact.
    """

    def __init__(self, grid, params, dealias=True, nonlinear=True):
        _check_symbols(grid, params)
        self.grid = grid
        self.params = params
        self.nonlinear = nonlinear
        self.N = grid.N
        self.M = 2 * grid.N if dealias else grid.N
        self.xi = grid.dxi * np.arange(grid.N // 2 + 1)
        self.mask = np.ones_like(self.xi)
        self.mask[-1] = 0.0
        self.phi = symbol_array("phi", self.xi, params) * self.mask
        self.tau = symbol_array("tau", self.xi, params) * self.mask
        self.psi = symbol_array("psi", self.xi, params) * self.mask
        self.ik = 1j * self.xi * self.mask
        self.varphi = symbol_array("varphi", self.xi, params)
        self.weights = np.full(self.xi.shape, 2.0)
        self.weights[0] = 1.0
        self.weights[-1] = 1.0

    def to_coeffs(self, field):
        if field.grid != self.grid:
            raise ShapeError(f"field grid {field.grid} does not match {self.grid}")
        if not field.real:
            raise PreconditionError("time evolution requires a real field")
        return np.fft.rfft(field.samples) / self.N * self.mask

    def to_field(self, coeffs):
        return Field(self.grid, samples=np.fft.irfft(coeffs, n=self.N) * self.N)

    def physical(self, coeffs):
        """Samples on the (possibly padded) product grid."""
        return np.fft.irfft(coeffs, n=self.M, axis=-1) * self.M

    def coefficients(self, values):
        out = np.fft.rfft(values, axis=-1)[..., : self.N // 2 + 1] / self.M
        return out * self.mask

    def nonlinearity(self, coeffs):
        """Fourier coefficients of F(eta)."""
        if not self.nonlinear:
            return np.zeros_like(coeffs)
        u = self.physical(coeffs)
        ux = self.physical(self.ik * coeffs)
        u2 = u * u
        quad = self.coefficients(u2)
        cubic = self.coefficients(u2 * u)
        grad = self.coefficients(ux * ux)
        return self.tau * quad - self.psi * (CUBIC_COEFF * cubic + GRADIENT_COEFF * grad)

    def coupled_nonlinearity(self, u_coeffs, v_coeffs):
        """F(u + v) - F(u) in the expanded form, free of cancellation in v."""
        if not self.nonlinear:
            return np.zeros_like(v_coeffs)
        u = self.physical(u_coeffs)
        v = self.physical(v_coeffs)
        ux = self.physical(self.ik * u_coeffs)
        vx = self.physical(self.ik * v_coeffs)
        quad = self.coefficients(v * v + 2.0 * v * u)
        cubic = self.coefficients(v * (3.0 * u * u + 3.0 * u * v + v * v))
        grad = self.coefficients(vx * (2.0 * ux + vx))
        return self.tau * quad - self.psi * (CUBIC_COEFF * cubic + GRADIENT_COEFF * grad)

    def rhs(self, coeffs):
        """Nonlinear part of eta_t = -i phi eta - i F(eta)."""
        return -1j * self.nonlinearity(coeffs)

    def propagator(self, t):
        return np.exp(-1j * self.phi * t)

    def energy(self, coeffs):
        return 0.5 * self.grid.L * float(np.sum(self.weights * self.varphi * np.abs(coeffs) ** 2))

    def mean(self, coeffs):
        return float(coeffs[..., 0].real)

    def sup(self, coeffs):
        return float(np.max(np.abs(np.fft.irfft(coeffs, n=self.N, axis=-1) * self.N)))


def _phi_functions(z, contour_points=CONTOUR_POINTS):
    """ETDRK4 weights by contour averaging around each z = h * L.

    Returns (E, E2, Q, f1, f2, f3) without the factor h on the last four.
    """
    roots = np.exp(1j * np.pi * (np.arange(1, contour_points + 1) - 0.5) / contour_points)
    r = 1.0
    zc = z[..., None] + r * np.concatenate([roots, -roots])[None, :]
    ez = np.exp(zc)
    ez2 = np.exp(zc / 2)
    Q = np.mean((ez2 - 1.0) / zc, axis=-1)
    f1 = np.mean((-4.0 - zc + ez * (4.0 - 3.0 * zc + zc ** 2)) / zc ** 3, axis=-1)
    f2 = np.mean((2.0 + zc + ez * (zc - 2.0)) / zc ** 3, axis=-1)
    f3 = np.mean((-4.0 - 3.0 * zc - zc ** 2 + ez * (4.0 - zc)) / zc ** 3, axis=-1)
    return np.exp(z), np.exp(z / 2), Q, f1, f2, f3


class ETDRK4:
    """Cox-Matthews fourth-order exponential Runge-Kutta step for u' = c u + N(u)."""

    def __init__(self, linear, dt):
        self.dt = dt
        E, E2, Q, f1, f2, f3 = _phi_functions(linear * dt)
        self.E, self.E2 = E, E2
        self.Q = dt * Q
        self.f1 = dt * f1
        self.f2 = dt * f2
        self.f3 = dt * f3

    def step(self, v, nonlinear):
        Nv = nonlinear(v)
        a = self.E2 * v + self.Q * Nv
        Na = nonlinear(a)
        b = self.E2 * v + self.Q * Na
        Nb = nonlinear(b)
        c = self.E2 * a + self.Q * (2.0 * Nb - Nv)
        Nc = nonlinear(c)
        return self.E * v + self.f1 * Nv + 2.0 * self.f2 * (Na + Nb) + self.f3 * Nc


@dataclass
class SolveConfig:
    grid: Grid
    params: ModelParams
    dt: float = 1e-4
    t_end: float = 1.0
    integrator: str = "ETDRK4"
    dealias: bool = True
    record_every: int = 0
    norms: list = dc_field(default_factory=list)
    nonlinear: bool = True

    def __post_init__(self):
        if self.integrator != "ETDRK4":
            raise ConfigurationError(f"integrator must be 'ETDRK4', got {self.integrator!r}")
        if not (self.dt > 0 and self.t_end > 0):
            raise ConfigurationError("dt and t_end must be positive")
        if not self.dt <= self.t_end:
            raise ConfigurationError(f"dt={self.dt} must not exceed t_end={self.t_end}")
        if self.record_every < 0:
            raise ConfigurationError("record_every must be >= 1 (0 selects about 200 records)")
        self.norms = [n if isinstance(n, NormSpec) else NormSpec.from_dict(n) for n in self.norms]

    @property
    def steps(self):
        return max(1, int(math.ceil(self.t_end / self.dt - 1e-9)))

    @property
    def step_size(self):
        return self.t_end / self.steps

    @property
    def stride(self):
        if self.record_every:
            return self.record_every
        return max(1, self.steps // 200)


@dataclass
class Trajectory:
    """States eta(t_j) on a common grid plus named diagnostic series."""

    times: np.ndarray
    states: list
    params: ModelParams
    diagnostics: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ShapeError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ShapeError("trajectory times must be strictly increasing")

    @property
    def grid(self):
        return self.states[0].grid

    @property
    def final(self):
        return self.states[-1]

    def __len__(self):
        return len(self.states)

    def norm_series(self, spec):
        return np.array([space_norm(s, spec) for s in self.states])

    def add_norms(self, specs):
        for spec in specs:
            self.diagnostics[spec.label] = self.norm_series(spec)
        return self


def _diagnose(kernel, coeffs, specs, field=None):
    row = {"energy": kernel.energy(coeffs), "mean": kernel.grid.L * kernel.mean(coeffs)}
    if specs:
        field = field if field is not None else kernel.to_field(coeffs)
        for spec in specs:
            row[spec.label] = space_norm(field, spec)
    return row


def solve(eta0, cfg):
    """March ETDRK4 from eta0 to cfg.t_end, recording every ``cfg.stride`` steps."""
    kernel = SpectralKernel(cfg.grid, cfg.params, cfg.dealias, cfg.nonlinear)
    v = kernel.to_coeffs(eta0)
    stepper = ETDRK4(-1j * kernel.phi, cfg.step_size)
    steps, stride, h = cfg.steps, cfg.stride, cfg.step_size
    times, states, rows = [0.0], [eta0], [_diagnose(kernel, v, cfg.norms, eta0)]

    def partial():
        return _trajectory(times, states, rows, cfg.params)

    for n in range(1, steps + 1):
        v = stepper.step(v, kernel.rhs)
        if n % stride == 0 or n == steps:
            state = kernel.to_field(v)
            if not np.all(np.isfinite(state.samples)) or np.max(np.abs(state.samples)) > BLOWUP_CAP:
                raise BlowupError(f"solution blew up at t={n * h:.6g}", time=(n - 1) * h,
                                  partial=partial())
            times.append(n * h)
            states.append(state)
            rows.append(_diagnose(kernel, v, cfg.norms, state))
        elif not np.all(np.isfinite(v)):
            raise BlowupError(f"solution blew up at t={n * h:.6g}", time=(n - 1) * h,
                              partial=partial())
    return partial()


def _trajectory(times, states, rows, params):
    keys = rows[0].keys() if rows else []
    diagnostics = {k: np.array([r[k] for r in rows]) for k in keys}
    return Trajectory(np.array(times), list(states), params, diagnostics)


def nonlinearity(field, params, dealias=True):
    """F(u) = tau(D) u^2 - 1/8 psi(D) u^3 - 7/48 psi(D) u_x^2 as a Field."""
    kernel = SpectralKernel(field.grid, params, dealias)
    return kernel.to_field(kernel.nonlinearity(kernel.to_coeffs(field)))


def step_etdrk4(state, dt, params, dealias=True, nonlinear=True):
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    kernel = SpectralKernel(state.grid, params, dealias, nonlinear)
    out = ETDRK4(-1j * kernel.phi, dt).step(kernel.to_coeffs(state), kernel.rhs)
    if not np.all(np.isfinite(out)):
        raise BlowupError("non-finite state after one step", time=0.0)
    return kernel.to_field(out)


def cumulative_quadrature(values, h):
    """Integrals of uniformly sampled values from t_0 to every t_j.

    Composite Simpson on even node counts, Simpson 3/8 on the last three
    intervals for odd ones and a four-point rule on the first interval; all
    pieces are fourth order.  Summation order is fixed.
    """
    n = values.shape[0]
    if n < 4:
        raise ShapeError("fourth-order cumulative quadrature needs at least 4 time nodes")
    out = np.zeros_like(values)
    out[1] = h / 24.0 * (9 * values[0] + 19 * values[1] - 5 * values[2] + values[3])
    for j in range(2, n, 2):
        out[j] = out[j - 2] + h / 3.0 * (values[j - 2] + 4 * values[j - 1] + values[j])
    for j in range(3, n, 2):
        out[j] = out[j - 3] + 3.0 * h / 8.0 * (
            values[j - 3] + 3 * values[j - 2] + 3 * values[j - 1] + values[j])
    return out


def _uniform_step(times, T=None):
    times = np.asarray(times, dtype=float)
    if times[0] != 0.0:
        raise ShapeError("Duhamel time grid must start at t=0")
    h = np.diff(times)
    if np.max(np.abs(h - h[0])) > 1e-12 * max(1.0, times[-1]):
        raise ShapeError("Duhamel time grid must be uniform")
    if T is not None and abs(times[-1] - T) > 1e-12 * max(1.0, T):
        raise ShapeError(f"time grid ends at {times[-1]}, expected T={T}")
    return float(h[0])


def picard_map(candidate, eta0, T, params=None, dealias=True, nonlinear=True):
    """Evaluate the Duhamel map on the time grid of ``candidate``.

    Psi eta(t) = S(t) eta0 - i int_0^t S(t - s) F(eta(s)) ds with the integral
    taken by :func:`cumulative_quadrature` on the stored states.
    """
    params = params or candidate.params
    h = _uniform_step(candidate.times, T)
    kernel = SpectralKernel(eta0.grid, params, dealias, nonlinear)
    times = candidate.times
    a0 = kernel.to_coeffs(eta0)
    coeffs = np.array([kernel.to_coeffs(s) for s in candidate.states])
    forcing = np.array([kernel.nonlinearity(c) for c in coeffs])
    back = np.exp(1j * kernel.phi[None, :] * times[:, None])
    integral = cumulative_quadrature(back * forcing, h)
    out = np.conj(back) * (a0[None, :] - 1j * integral)
    states = [kernel.to_field(c) for c in out]
    return Trajectory(times.copy(), states, params)


def linear_trajectory(eta0, times, params):
    kernel = SpectralKernel(eta0.grid, params)
    a0 = kernel.to_coeffs(eta0)
    return Trajectory(np.asarray(times, dtype=float),
                      [kernel.to_field(kernel.propagator(t) * a0) for t in times], params)


@dataclass
class PicardResult:
    trajectory: Trajectory
    differences: list
    ratios: list
    converged: bool
    diverged: bool

    @property
    def iterations(self):
        return len(self.differences)


def picard_fixed_point(eta0, T, spec, tol, params, steps=128, max_iter=50,
                       dealias=True, nonlinear=True):
    """Iterate the Duhamel map from S(t) eta0 until sup_t ||eta^{k+1} - eta^k|| < tol."""
    if not T > 0:
        raise ConfigurationError("T must be positive")
    if steps < 3:
        raise ConfigurationError("at least 3 time steps are required")
    spec = spec if isinstance(spec, NormSpec) else NormSpec.from_dict(spec)
    times = np.linspace(0.0, T, steps + 1)
    current = linear_trajectory(eta0, times, params)
    differences, ratios = [], []
    streak = 0
    for _ in range(max_iter):
        new = picard_map(current, eta0, T, params, dealias, nonlinear)
        diff = max(space_norm(a - b, spec) for a, b in zip(new.states, current.states))
        differences.append(diff)
        if len(differences) > 1 and differences[-2] > 0:
            ratios.append(diff / differences[-2])
            streak = streak + 1 if ratios[-1] >= 1 else 0
        current = new
        if diff < tol:
            return PicardResult(current, differences, ratios, True, False)
        if streak >= 5:
            return PicardResult(current, differences, ratios, False, True)
    return PicardResult(current, differences, ratios, False, False)


def existence_time(norm0, Cs=1.0):
    """Lower bound 1 / (8 Cs n (1 + n)) on the local existence time."""
    if norm0 < 0 or not Cs > 0:
        raise ConfigurationError("norm0 >= 0 and Cs > 0 required")
    if norm0 == 0:
        return math.inf
    return 1.0 / (8.0 * Cs * norm0 * (1.0 + norm0))


def calibrate_cs(eta0, spec, params, scales=(0.0, 0.5, 1.0, 1.5, 2.0), dealias=True):
    """Empirical constant for the local existence time.

    Returns the largest observed ratio

        ||F(a) - F(b)||  /  ((2 r + r^2) ||a - b||),   r = 2 ||eta0||,

    over pairs a, b drawn from scaled copies of eta0 inside the ball of radius
    r.  With this constant the Duhamel map contracts by at most 1/2 on
    [0, existence_time(||eta0||, Cs)].
    """
    spec = spec if isinstance(spec, NormSpec) else NormSpec.from_dict(spec)
    norm0 = space_norm(eta0, spec)
    if norm0 == 0:
        return 1.0
    radius = 2.0 * norm0
    kernel = SpectralKernel(eta0.grid, params, dealias)
    a0 = kernel.to_coeffs(eta0)
    members = [lam * a0 for lam in scales if lam * norm0 <= radius * (1 + 1e-12)]
    images = [kernel.nonlinearity(c) for c in members]
    best = 0.0
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            num = space_norm(kernel.to_field(images[i] - images[j]), spec)
            den = space_norm(kernel.to_field(members[i] - members[j]), spec)
            best = max(best, num / ((2 * radius + radius ** 2) * den))
    return best if best > 0 else 1.0


def relative_l2(a, b):
    """||a - b||_{L^2} / ||b||_{L^2}."""
    diff = np.sqrt(np.sum(np.abs(a.samples - b.samples) ** 2))
    ref = np.sqrt(np.sum(np.abs(b.samples) ** 2))
    return float(diff / ref) if ref > 0 else float(diff)
