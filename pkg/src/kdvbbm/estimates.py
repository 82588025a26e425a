"""Empirical constants for the multilinear and semigroup estimates.

Every estimate has the shape ``LHS <= C * RHS`` with an unspecified
constant.  Here both sides are evaluated on seeded random fields and the
ratio LHS / RHS is recorded; boundedness of the ensemble maximum under grid
refinement is the computable evidence for the existence of ``C``.

Products are formed exactly on a grid four times finer than the inputs, so
no aliasing or truncation enters any ratio.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
import math

import numpy as np

from .errors import ConfigurationError, RangeError, UndefinedRatio
from .model import bessel_weight, hamiltonian_params, free_params, japanese, symbol_array
from .norms import modulation, sobolev, space_norm
from .spectral import Field, Grid, MultiplierSymbol, apply_multiplier, derivative, lp_norm, prolong

PRODUCT_FACTOR = 4
DEFAULT_DECAY = 1.2
DEFAULT_SP_GRID = ((1.25, 1.0), (1.25, 2.0), (1.5, 2.0), (2.0, 4.0))
DEFAULT_RESOLUTIONS = (256, 512, 1024)
SLOPE_LIMIT = 0.05
CEILING_SLACK = 1.1


@dataclass(frozen=True)
class EstimateKind:
    """An inequality tag with its arity, norm family and admissible range.

    ``arity`` counts the distinct input fields and ``degree`` the factors of
    the product, so a single-field square has arity 1 and degree 2.
    """

    tag: str
    arity: int
    space: str
    hypothesis: str
    degree: int = 0

    def __post_init__(self):
        if not self.degree:
            object.__setattr__(self, "degree", self.arity)

    def admissible(self, s, p):
        return _RANGES[self.tag](s, p)

    def check(self, s, p):
        if not p >= 1:
            raise RangeError(f"p >= 1 required by {self.tag}, got p={p}")
        if self.space == "SobolevLp" and math.isinf(p):
            raise RangeError(f"p < inf required by {self.tag}")
        if not self.admissible(s, p):
            raise RangeError(f"{self.hypothesis} required by {self.tag}, got s={s}, p={p}")

    def norm(self, s, p):
        return modulation(s, p) if self.space == "Modulation" else sobolev(s, p)


_RANGES = {
    "BilinearOmega": lambda s, p: s > 0,
    "TauSquare": lambda s, p: s > 0,
    "PsiCube": lambda s, p: s >= 1,
    "PsiDxSquare": lambda s, p: s > 1,
    "HspTau": lambda s, p: s >= max(1.0 / p - 0.5, 0.0),
    "HspPsiDx": lambda s, p: s >= max(1.0 / p + 0.5, 1.0),
    "HspPsiCube": lambda s, p: s >= 1,
}

KINDS = {
    "BilinearOmega": EstimateKind("BilinearOmega", 2, "Modulation", "s > 0"),
    "TauSquare": EstimateKind("TauSquare", 1, "Modulation", "s > 0", 2),
    "PsiCube": EstimateKind("PsiCube", 1, "Modulation", "s >= 1", 3),
    "PsiDxSquare": EstimateKind("PsiDxSquare", 1, "Modulation", "s > 1", 2),
    "HspTau": EstimateKind("HspTau", 2, "SobolevLp", "s >= max(1/p - 1/2, 0)"),
    "HspPsiDx": EstimateKind("HspPsiDx", 2, "SobolevLp", "s >= max(1/p + 1/2, 1)"),
    "HspPsiCube": EstimateKind("HspPsiCube", 3, "SobolevLp", "s >= 1"),
}
KIND_NAMES = tuple(KINDS)


def get_kind(kind):
    if isinstance(kind, EstimateKind):
        return kind
    try:
        return KINDS[kind]
    except KeyError:
        raise ConfigurationError(f"unknown estimate kind {kind!r}; expected one of {KIND_NAMES}") from None


# ---------------------------------------------------------------- ensembles

@dataclass(frozen=True)
class EnsembleSpec:
    """Seeded power-law random fields on a fixed grid.

    Mode ``k`` (1 <= k, xi_k <= band, k < N/2) gets the coefficient
    ``<xi_k>^(-decay) g_k`` with ``g_k`` standard complex Gaussian.  The mean
    mode is zero.  ``decay = inf`` selects a single random tone instead.
    """

    L: float
    N: int
    band: float
    decay: float = DEFAULT_DECAY
    count: int = 16
    seed: int = 0

    def __post_init__(self):
        if int(self.count) < 1:
            raise ConfigurationError(f"ensemble count must be >= 1, got {self.count}")
        if not self.band > 0:
            raise ConfigurationError(f"band limit must be positive, got {self.band}")
        object.__setattr__(self, "decay", float(self.decay))
        object.__setattr__(self, "seed", int(self.seed) % 2 ** 64)

    @property
    def grid(self):
        return Grid(float(self.L), int(self.N))

    @property
    def modes(self):
        """Highest mode number carried by the fields."""
        grid = self.grid
        top = int(math.floor(self.band / grid.dxi + 1e-12))
        return max(1, min(top, grid.N // 2 - 1))

    def to_dict(self):
        decay = "inf" if math.isinf(self.decay) else self.decay
        return {"L": self.L, "N": self.N, "band": self.band, "decay": decay,
                "count": self.count, "seed": self.seed}


def _generator(seed, index):
    """Counter-based stream for one ensemble member."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def random_field(spec, index):
    if not 0 <= index < spec.count:
        raise ConfigurationError(f"index {index} outside ensemble of size {spec.count}")
    grid = spec.grid
    K = spec.modes
    rng = _generator(spec.seed, index)
    coeffs = np.zeros(grid.N, dtype=complex)
    if math.isinf(spec.decay):
        k = int(rng.integers(1, K + 1))
        g = rng.standard_normal(2)
        coeffs[k] = (g[0] + 1j * g[1]) / math.sqrt(2.0)
        coeffs[-k] = np.conj(coeffs[k])
    else:
        # drawn in ascending k so a mode's value does not depend on N
        g = rng.standard_normal((K, 2))
        k = np.arange(1, K + 1)
        values = japanese(grid.dxi * k) ** (-spec.decay) * (g[:, 0] + 1j * g[:, 1]) / math.sqrt(2.0)
        coeffs[k] = values
        coeffs[-k] = np.conj(values)
    return Field(grid, spectrum=coeffs, real=True)


def ensemble(spec):
    return [random_field(spec, i) for i in range(spec.count)]


def expected_l2_squared(spec):
    """E ||f||^2 = 2 L sum_{k=1..K} <xi_k>^(-2 decay)."""
    grid = spec.grid
    k = np.arange(1, spec.modes + 1)
    return float(2.0 * grid.L * np.sum(japanese(grid.dxi * k) ** (-2.0 * spec.decay)))


# ------------------------------------------------------------ multilinear forms

def _symbol(kind, params):
    return MultiplierSymbol(kind, lambda xi: symbol_array(kind, xi, params))


def _fine(fields):
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise ConfigurationError("all fields of an estimate must share one grid")
    return [prolong(f, PRODUCT_FACTOR) for f in fields]


def _product(fields):
    values = np.ones(fields[0].grid.N)
    for f in fields:
        values = values * f.samples
    return Field(fields[0].grid, samples=values)


def omega_product(u1, u2):
    return apply_multiplier(_product([u1, u2]), _symbol("omega", None))


def tau_product(u1, u2, params):
    return apply_multiplier(_product([u1, u2]), _symbol("tau", params))


def psi_product(fields, params):
    return apply_multiplier(_product(fields), _symbol("psi", params))


def psi_gradient_product(u, v, params):
    return apply_multiplier(_product([derivative(u, 1), derivative(v, 1)]), _symbol("psi", params))


def _lhs(tag, fine, params):
    if tag == "BilinearOmega":
        return omega_product(fine[0], fine[1])
    if tag in ("TauSquare", "HspTau"):
        return tau_product(fine[0], fine[-1], params)
    if tag == "PsiCube":
        return psi_product([fine[0]] * 3, params)
    if tag == "HspPsiCube":
        return psi_product(fine, params)
    if tag == "PsiDxSquare":
        return psi_gradient_product(fine[0], fine[0], params)
    if tag == "HspPsiDx":
        return psi_gradient_product(fine[0], fine[1], params)
    raise ConfigurationError(f"unknown estimate kind {tag!r}")


def _expand(kind, fields):
    fields = list(fields)
    if len(fields) == 1 and kind.arity > 1:
        fields = fields * kind.arity
    if len(fields) != kind.arity:
        raise ConfigurationError(f"{kind.tag} takes {kind.arity} fields, got {len(fields)}")
    return fields


def estimate_ratio(kind, fields, s, p, params=None):
    """LHS / RHS of the inequality tagged ``kind``, constant stripped.

    ``fields`` may be a single Field for the symmetric kinds; kinds of
    arity 2 and 3 repeat it.
    """
    kind = get_kind(kind)
    kind.check(s, p)
    if isinstance(fields, Field):
        fields = [fields]
    fields = _expand(kind, fields)
    params = params or hamiltonian_params()
    spec = kind.norm(s, p)
    fine = _fine(fields)
    norms = [space_norm(f, spec) for f in fine]
    if len(norms) == 1:
        norms = norms * kind.degree
    denom = math.prod(norms)
    if not denom > 0:
        raise UndefinedRatio(f"{kind.tag}: right-hand side vanishes")
    return space_norm(_lhs(kind.tag, fine, params), spec) / denom


_TWO_EXPONENT = {
    "TauPair": ("TauSquare", 1, lambda s1: s1 > 0, "s1 > 0"),
    "PsiCube": ("PsiCube", 2, lambda s1: s1 >= 1, "s1 >= 1"),
    "PsiDxPair": ("PsiDxSquare", 1, lambda s1: s1 > 1, "s1 > 1"),
}


def two_exponent_ratio(kind, eta, s1, s2, p, params=None):
    """||L(eta)||_{M^{s2,p}} / (||eta||_{M^{s1,p}}^m ||eta||_{M^{s2,p}}).

    ``m`` is 1 for TauPair and PsiDxPair and 2 for PsiCube.
    """
    try:
        tag, power, lower, hyp = _TWO_EXPONENT[kind]
    except KeyError:
        raise ConfigurationError(
            f"unknown two-exponent kind {kind!r}; expected one of {tuple(_TWO_EXPONENT)}") from None
    if not s2 >= s1:
        raise RangeError(f"s2 >= s1 required by {kind}, got s1={s1}, s2={s2}")
    if not lower(s1):
        raise RangeError(f"{hyp} required by {kind}, got s1={s1}")
    if not p >= 1:
        raise RangeError(f"p >= 1 required by {kind}, got p={p}")
    params = params or hamiltonian_params()
    fine = _fine([eta])
    low = space_norm(fine[0], modulation(s1, p))
    high = space_norm(fine[0], modulation(s2, p))
    denom = low ** power * high
    if not denom > 0:
        raise UndefinedRatio(f"{kind}: right-hand side vanishes")
    lhs = _lhs(tag, fine * KINDS[tag].arity, params)
    return space_norm(lhs, modulation(s2, p)) / denom


# ------------------------------------------------------------ indirect probes

def probe_symbol(name, params=None, s=1.0):
    """Symbols whose L^p boundedness the H^{s,p} estimates rely on."""
    params = params or hamiltonian_params()
    if name == "tau_over_omega":
        def func(xi):
            return symbol_array("tau", xi, params) * (1.0 + xi * xi) / np.where(xi == 0, 1.0, np.abs(xi))
        return MultiplierSymbol(name, lambda xi: np.where(xi == 0, 0.0, func(xi)))
    if name == "psi_lambda_over_omega":
        return MultiplierSymbol(
            name, lambda xi: np.sign(xi) * np.sqrt(1.0 + xi * xi) * (1.0 + xi * xi)
            / symbol_array("varphi", xi, params))
    if name == "lambda_shift":
        return MultiplierSymbol(
            name, lambda xi: bessel_weight(xi, s - 1.0) * 1j * xi / bessel_weight(xi, s))
    raise ConfigurationError(f"unknown probe symbol {name!r}")


PROBE_SYMBOLS = ("tau_over_omega", "psi_lambda_over_omega", "lambda_shift")


def multiplier_ratio(name, f, p, params=None, s=1.0):
    """||m(D) f||_{L^p} / ||f||_{L^p}."""
    denom = lp_norm(f, p)
    if not denom > 0:
        raise UndefinedRatio("||f||_p vanishes")
    return lp_norm(apply_multiplier(f, probe_symbol(name, params, s)), p) / denom


def embedding_ratio(f, s, p, q):
    """||f||_{L^q} / ||f||_{H^{s,p}} for q in the embedding range."""
    if not 0 < s * p <= 1:
        raise RangeError(f"0 < s p <= 1 required for the embedding, got s={s}, p={p}")
    top = math.inf if s * p == 1 else p / (1.0 - s * p)
    if not (p <= q and (q < top or (q == top and p > 1))):
        raise RangeError(f"q in [p, {top}] required, got q={q}")
    fine = prolong(f, PRODUCT_FACTOR)
    denom = space_norm(fine, sobolev(s, p))
    if not denom > 0:
        raise UndefinedRatio("||f||_{H^{s,p}} vanishes")
    return lp_norm(fine, q) / denom


def leibniz_ratio(f, g, s, p, p1, q1, p2, q2):
    """||Lambda^s(fg)||_p / (||f||_{p1} ||g||_{H^{s,q1}} + ||f||_{H^{s,p2}} ||g||_{q2})."""
    for a, b in ((p1, q1), (p2, q2)):
        if abs(1.0 / a + 1.0 / b - 1.0 / p) > 1e-12 or not (a > 1 and b > 1):
            raise RangeError(f"1/p = 1/p_i + 1/q_i with exponents in (1, inf) required, got {a}, {b}")
    ff, gg = _fine([f, g])
    rhs = (lp_norm(ff, p1) * space_norm(gg, sobolev(s, q1))
           + space_norm(ff, sobolev(s, p2)) * lp_norm(gg, q2))
    if not rhs > 0:
        raise UndefinedRatio("Leibniz right-hand side vanishes")
    return space_norm(_product([ff, gg]), sobolev(s, p)) / rhs


# ------------------------------------------------------------ semigroup growth

def growth_params(delta1=1.0):
    """Coefficients with delta2 = 0 used for the semigroup growth probe."""
    return free_params(1.0 / 12.0, 1.0 / 12.0, delta1, 0.0, 7.0 / 48.0)


def semigroup_ratios(times, s, p, params, spec):
    """max over the ensemble of ||S(t) f||_{H^{s,p}} / ||f||_{H^{s,p}} for each t."""
    from .evolution import semigroup

    norm = sobolev(s, p)
    fields = ensemble(spec)
    base = [space_norm(f, norm) for f in fields]
    out = []
    for t in times:
        if t == 0:
            out.append(1.0)
            continue
        out.append(max(space_norm(semigroup(f, t, params), norm) / b for f, b in zip(fields, base)))
    return np.array(out)


def semigroup_growth_probe(times, s, p, params, spec):
    """Slope of log(max ratio) against log<t>, together with the ratios."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ConfigurationError("times must be nonnegative and increasing")
    if not 1 <= p < math.inf:
        raise RangeError(f"p in [1, inf) required, got p={p}")
    if params.delta2 != 0:
        raise ConfigurationError("the growth probe is defined for delta2 = 0")
    ratios = semigroup_ratios(times, s, p, params, spec)
    slope = float(np.polyfit(np.log1p(times), np.log(ratios), 1)[0])
    return slope, ratios


# ------------------------------------------------------------ campaigns

# Ensemble maxima of the default campaign, frozen after calibration.
FROZEN_CEILINGS = {
    "BilinearOmega:s=1.25,p=1": 0.002347,
    "BilinearOmega:s=1.25,p=2": 0.01543,
    "BilinearOmega:s=1.5,p=2": 0.007538,
    "BilinearOmega:s=2,p=4": 0.003522,
    "TauSquare:s=1.25,p=1": 0.0006518,
    "TauSquare:s=1.25,p=2": 0.007275,
    "TauSquare:s=1.5,p=2": 0.003191,
    "TauSquare:s=2,p=4": 0.001754,
    "PsiCube:s=1.25,p=1": 1.772e-05,
    "PsiCube:s=1.25,p=2": 0.001442,
    "PsiCube:s=1.5,p=2": 0.0003754,
    "PsiCube:s=2,p=4": 0.0001434,
    "PsiDxSquare:s=1.25,p=1": 0.002677,
    "PsiDxSquare:s=1.25,p=2": 0.03526,
    "PsiDxSquare:s=1.5,p=2": 0.01481,
    "PsiDxSquare:s=2,p=4": 0.007325,
    "HspTau:s=1.25,p=1": 0.00106,
    "HspTau:s=1.25,p=2": 0.004069,
    "HspTau:s=1.5,p=2": 0.001594,
    "HspTau:s=2,p=4": 0.0004285,
    "HspPsiDx:s=1.25,p=2": 0.01813,
    "HspPsiDx:s=1.5,p=2": 0.006844,
    "HspPsiDx:s=2,p=4": 0.001586,
    "HspPsiCube:s=1.25,p=1": 1.663e-05,
    "HspPsiCube:s=1.25,p=2": 0.0002938,
    "HspPsiCube:s=1.5,p=2": 6.887e-05,
    "HspPsiCube:s=2,p=4": 9.448e-06,
}


@dataclass
class EstimateReport:
    kind: str
    sp_pairs: list
    rows: list = dc_field(default_factory=list)
    max_ratio: dict = dc_field(default_factory=dict)
    slope: dict = dc_field(default_factory=dict)
    verdict: dict = dc_field(default_factory=dict)
    error: str = ""

    @property
    def passed(self):
        return not self.error and all(self.verdict.values())

    def summary(self):
        return {
            "kind": self.kind,
            "sp_pairs": [list(sp) for sp in self.sp_pairs],
            "max_ratio": {_sp_key(sp): {str(n): v for n, v in m.items()}
                          for sp, m in self.max_ratio.items()},
            "slope": {_sp_key(sp): v for sp, v in self.slope.items()},
            "verdict": {_sp_key(sp): v for sp, v in self.verdict.items()},
            "passed": self.passed,
            "error": self.error,
        }


def _sp_key(sp):
    return f"s={sp[0]:g},p={sp[1]:g}"


@dataclass
class CampaignConfig:
    kinds: list = dc_field(default_factory=lambda: list(KIND_NAMES))
    s_p_grid: list = dc_field(default_factory=lambda: [list(sp) for sp in DEFAULT_SP_GRID])
    resolutions: list = dc_field(default_factory=lambda: list(DEFAULT_RESOLUTIONS))
    L: float = 8 * math.pi
    band_fraction: float = 0.5
    decay: float = DEFAULT_DECAY
    count: int = 24
    seed: int = 0
    ceilings: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        for k in self.kinds:
            get_kind(k)
        if len(self.resolutions) < 3 and self.kinds:
            raise ConfigurationError("a scaling slope needs at least 3 resolutions")
        for N in self.resolutions:
            Grid(self.L, N)
        if not 0 < self.band_fraction <= 1:
            raise ConfigurationError("band_fraction must lie in (0, 1]")
        self.s_p_grid = [(float(s), float(p)) for s, p in self.s_p_grid]

    def ensemble_spec(self, N):
        """Ensemble at resolution N; the band limit grows in proportion to N."""
        xi_max = math.pi * N / self.L
        return EnsembleSpec(self.L, N, self.band_fraction * xi_max, self.decay, self.count, self.seed)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        ens = data.pop("ensemble", {}) or {}
        known = {"kinds", "s_p_grid", "resolutions", "L", "band_fraction", "decay",
                 "count", "seed", "ceilings"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown campaign keys {sorted(unknown)}")
        for key in ("L", "band_fraction", "decay", "count", "seed"):
            if key in ens:
                data[key] = ens[key]
        if "band" in ens:
            data["band_fraction"] = ens["band"]
        if isinstance(data.get("decay"), str):
            data["decay"] = float(data["decay"])
        return cls(**data)

    def to_dict(self):
        return {
            "kinds": list(self.kinds),
            "s_p_grid": [list(sp) for sp in self.s_p_grid],
            "resolutions": list(self.resolutions),
            "ensemble": {"L": self.L, "band": self.band_fraction,
                         "decay": "inf" if math.isinf(self.decay) else self.decay,
                         "count": self.count, "seed": self.seed},
            "ceilings": dict(self.ceilings),
        }


def loglog_slope(ns, values):
    return float(np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(values), 1)[0])


def _kind_task(args):
    tag, sp_pairs, resolutions, specs = args
    kind = KINDS[tag]
    rows = []
    for N, spec in zip(resolutions, specs):
        fields = ensemble(spec)
        for trial, f in enumerate(fields):
            group = [fields[(trial + j) % len(fields)] for j in range(kind.arity)]
            for s, p in sp_pairs:
                rows.append((trial, s, p, N, estimate_ratio(kind, group, s, p)))
    return rows


def campaign(config, jobs=1):
    """Run every requested sweep and return one EstimateReport per kind.

    A failure inside one kind is recorded on its report; the other kinds
    still run.  Results do not depend on ``jobs``.
    """
    if not isinstance(config, CampaignConfig):
        config = CampaignConfig.from_dict(config)
    specs = [config.ensemble_spec(N) for N in config.resolutions]
    reports, tasks = [], []
    for tag in config.kinds:
        kind = KINDS[tag]
        pairs = [sp for sp in config.s_p_grid if kind.admissible(*sp)
                 and not (kind.space == "SobolevLp" and math.isinf(sp[1]))]
        reports.append(EstimateReport(tag, pairs))
        tasks.append((tag, pairs, list(config.resolutions), specs))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_safe_task, tasks))
    else:
        results = [_safe_task(t) for t in tasks]
    ceilings = dict(FROZEN_CEILINGS) if _calibrated(config) else {}
    ceilings.update(config.ceilings)
    for report, result in zip(reports, results):
        if isinstance(result, str):
            report.error = result
            continue
        report.rows = result
        _aggregate(report, config.resolutions, ceilings)
    return reports


def _calibrated(config):
    """The frozen ceilings apply to the ensemble they were measured on."""
    ref = CampaignConfig()
    return (config.L == ref.L and config.band_fraction == ref.band_fraction
            and config.decay == ref.decay and config.seed == ref.seed
            and config.count <= ref.count
            and set(config.resolutions) <= set(ref.resolutions))


def _safe_task(task):
    try:
        return _kind_task(task)
    except (ArithmeticError, ValueError) as exc:
        return f"{type(exc).__name__}: {exc}"


def _aggregate(report, resolutions, ceilings):
    for sp in report.sp_pairs:
        maxima = {}
        for N in resolutions:
            values = [r[4] for r in report.rows if (r[1], r[2]) == sp and r[3] == N]
            maxima[N] = max(values)
        report.max_ratio[sp] = maxima
        slope = loglog_slope(list(maxima), list(maxima.values()))
        report.slope[sp] = slope
        ok = bool(np.isfinite(slope) and slope <= SLOPE_LIMIT)
        ceiling = ceilings.get(f"{report.kind}:{_sp_key(sp)}")
        if ceiling is not None:
            ok = ok and max(maxima.values()) <= CEILING_SLACK * ceiling
        report.verdict[sp] = ok
