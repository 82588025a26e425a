"""Run configuration, initial data and deterministic artifact writers."""

import csv
import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, KdvBbmError
from .estimates import CampaignConfig, EnsembleSpec, random_field
from .model import ModelParams
from .norms import NormSpec, space_norm
from .spectral import Field, Grid

COMMANDS = ("simulate", "picard", "global-split", "norms", "verify-estimates", "soliton")
SEED_ENV = "KDVBBM_SEED"
DEFAULT_L = 64 * math.pi
DEFAULT_N = 1024

DEFAULT_BLOCKS = {
    "simulate": {"dt": 1e-4, "t_end": 1.0, "norms": [], "record_every": 0,
                 "snapshots": 11, "dealias": True},
    "picard": {"T": None, "Cs": None, "norm": {"space": "Modulation", "s": 1.5, "p": 2.0},
               "tol": 1e-12, "steps": 128, "max_iter": 50, "compare": True},
    "global-split": {"T": 1.0, "s": 1.5, "p": 2.0, "N_cut": None, "dt": 1e-3,
                     "t0_scale": 1.0, "envelope_c": 1.0, "snapshots": 11},
    "norms": {"specs": [{"space": "Modulation", "s": 1.0, "p": 2.0}],
              "profile": {"space": "Modulation", "s": 1.0, "p": 2.0}},
    "verify-estimates": {"campaign": {}, "growth": None},
    "soliton": {"delta1": 1.0, "t_end": 0.0, "dt": 1e-5},
}
DEFAULT_INITIAL = {"kind": "gaussian", "amplitude": 0.5, "width": 1.0, "center": 0.0}
DEFAULT_GROWTH = {"times": [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0], "s": 1.0, "p": [1.0, 2.0],
                  "L": DEFAULT_L, "N": 1024, "band": 8.0, "decay": 1.2, "count": 8}


class ConfigParseError(KdvBbmError):
    """The configuration file is missing or is not valid JSON."""


class ValidationError(ConfigurationError):
    """One or more configuration entries violate a precondition."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class RunConfig:
    command: str
    grid: Grid
    params: ModelParams
    block: dict
    initial: dict = dc_field(default_factory=lambda: dict(DEFAULT_INITIAL))
    seed: int = 0
    out: str = "kdvbbm-out"

    @property
    def block_key(self):
        return self.command

    def to_dict(self):
        """Fully resolved configuration; loading it back gives the same run."""
        return {
            "command": self.command,
            "grid": self.grid.to_dict(),
            "params": self.params.to_dict(),
            "initial": self.initial,
            "seed": self.seed,
            "out": self.out,
            self.command: self.block,
        }

    def digest(self):
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def canonical_json(data):
    return json.dumps(_jsonable(data), sort_keys=True, separators=(",", ":"))


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def parse_length(value):
    """A float, or a string such as '64*pi' / '64pi' / 'pi'."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = re.fullmatch(r"\s*([0-9.eE+-]*)\s*\*?\s*pi\s*", value)
        if m:
            return (float(m.group(1)) if m.group(1) else 1.0) * math.pi
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigurationError(f"cannot read a length from {value!r}")


def load_config(path, command=None):
    """Read and validate a JSON run configuration (or a run manifest).

    ``command``, when given, must agree with the file's own command if it
    names one.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: top level must be a JSON object")
    if "config" in data and "manifest_version" in data:
        data = data["config"]
    if command is not None:
        if data.get("command", command) not in COMMANDS:
            return build_config(data)
        if data.get("command", command) != command:
            raise ValidationError([f"command: config is for {data['command']!r}, "
                                   f"but {command!r} was requested"])
        data = {**data, "command": command}
    return build_config(data)


def build_config(data, command=None):
    """Validate a config mapping; every problem is reported with its path."""
    problems = []
    data = dict(data)
    command = command or data.get("command")
    if command not in COMMANDS:
        raise ValidationError([f"command: unknown command {command!r}; valid commands are "
                               + ", ".join(COMMANDS)])
    known = {"command", "grid", "params", "initial", "seed", "out"} | set(COMMANDS)
    for key in sorted(set(data) - known):
        problems.append(f"{key}: unknown top-level key")

    grid = None
    gdata = data.get("grid", {}) or {}
    try:
        grid = Grid(parse_length(gdata.get("L", DEFAULT_L)), int(gdata.get("N", DEFAULT_N)))
    except (ConfigurationError, TypeError, ValueError) as exc:
        problems.append(f"grid: {exc} (spectral-core)")

    params = None
    pdata = data.get("params", {"mode": "constrained", "gamma1": 1.0 / 12.0, "delta1": 1.0})
    try:
        params = ModelParams.from_dict(pdata)
        if not params.positive:
            problems.append("params: gamma1 > 0 and delta1 > 0 required so that "
                            "1 + gamma1 xi^2 + delta1 xi^4 stays positive (model-symbols)")
    except (ConfigurationError, TypeError, ValueError) as exc:
        problems.append(f"params: {exc} (model-symbols)")

    seed = data.get("seed", 0)
    if os.environ.get(SEED_ENV):
        seed = os.environ[SEED_ENV]
    try:
        seed = int(seed) % 2 ** 64
    except (TypeError, ValueError):
        problems.append(f"seed: must be an integer, got {seed!r}")
        seed = 0

    initial = dict(data.get("initial") or DEFAULT_INITIAL)
    if "kind" not in initial:
        initial = {**DEFAULT_INITIAL, **initial}
    problems += _check_initial(initial)

    raw_block = data.get(command, {}) or {}
    block = _merge(DEFAULT_BLOCKS[command], raw_block)
    for key in sorted(set(raw_block) - set(DEFAULT_BLOCKS[command])):
        problems.append(f"{command}.{key}: unknown key")
    problems += _check_block(command, block, grid)
    if problems:
        raise ValidationError(problems)
    return RunConfig(command, grid, params, block, initial, seed, str(data.get("out", "kdvbbm-out")))


def _merge(defaults, given):
    out = json.loads(json.dumps(defaults))
    for k, v in given.items():
        out[k] = v
    return out


def _norm_problem(path, spec):
    try:
        NormSpec.from_dict(spec)
    except (ConfigurationError, TypeError, ValueError, AttributeError) as exc:
        return [f"{path}: {exc} (norm-engine)"]
    return []


def _positive(block, key, command, problems, module):
    value = block.get(key)
    if not isinstance(value, (int, float)) or not value > 0:
        problems.append(f"{command}.{key}: must be a positive number, got {value!r} ({module})")


def _check_block(command, block, grid):
    problems = []
    if command == "simulate":
        _positive(block, "dt", command, problems, "evolution")
        _positive(block, "t_end", command, problems, "evolution")
        if not problems and block["dt"] > block["t_end"]:
            problems.append("simulate.dt: dt must not exceed t_end (evolution)")
        for i, spec in enumerate(block["norms"]):
            problems += _norm_problem(f"simulate.norms[{i}]", spec)
        if int(block["snapshots"]) < 1:
            problems.append("simulate.snapshots: must be >= 1")
    elif command == "picard":
        problems += _norm_problem("picard.norm", block["norm"])
        if block["T"] is not None:
            _positive(block, "T", command, problems, "evolution")
        if block["Cs"] is not None:
            _positive(block, "Cs", command, problems, "evolution")
        _positive(block, "tol", command, problems, "evolution")
        if int(block["steps"]) < 3:
            problems.append("picard.steps: at least 3 time steps required (evolution)")
    elif command == "global-split":
        for key in ("T", "dt", "t0_scale"):
            _positive(block, key, command, problems, "split-global")
        if block["N_cut"] is not None:
            _positive(block, "N_cut", command, problems, "split-global")
        if not (isinstance(block["p"], (int, float)) and block["p"] >= 1):
            problems.append(f"global-split.p: p >= 1 required, got {block['p']!r} (split-global)")
    elif command == "norms":
        for i, spec in enumerate(block["specs"]):
            problems += _norm_problem(f"norms.specs[{i}]", spec)
        problems += _norm_problem("norms.profile", block["profile"])
    elif command == "verify-estimates":
        try:
            CampaignConfig.from_dict(block["campaign"])
        except (ConfigurationError, TypeError, ValueError) as exc:
            problems.append(f"verify-estimates.campaign: {exc} (estimate-lab)")
        growth = block["growth"]
        if growth is not None:
            growth = {**DEFAULT_GROWTH, **growth}
            ps = growth["p"] if isinstance(growth["p"], list) else [growth["p"]]
            for p in ps:
                if not (isinstance(p, (int, float)) and 1 <= p < math.inf):
                    problems.append(f"verify-estimates.growth.p: p in [1, inf) required, got {p!r} "
                                    "(estimate-lab)")
    elif command == "soliton":
        _positive(block, "delta1", command, problems, "soliton")
        if block["t_end"] and block["t_end"] > 0:
            _positive(block, "dt", command, problems, "soliton")
    return problems


INITIAL_KINDS = ("gaussian", "tones", "sech2", "soliton", "file", "random", "zero")


def _check_initial(initial):
    kind = initial.get("kind")
    if kind not in INITIAL_KINDS:
        return [f"initial.kind: unknown datum {kind!r}; expected one of {', '.join(INITIAL_KINDS)}"]
    problems = []
    if kind == "gaussian" and not initial.get("width", 1.0) > 0:
        problems.append("initial.width: must be positive")
    if kind == "file" and "path" not in initial:
        problems.append("initial.path: required for a file datum")
    if "normalize" in initial:
        norm = initial["normalize"]
        problems += _norm_problem("initial.normalize", {k: v for k, v in norm.items() if k != "value"})
        if not norm.get("value", 0) > 0:
            problems.append("initial.normalize.value: must be positive")
    return problems


def make_initial(cfg, base_dir="."):
    """Build the datum described by ``cfg.initial`` on ``cfg.grid``."""
    spec = cfg.initial
    grid = cfg.grid
    x = grid.x
    kind = spec["kind"]
    if kind == "zero":
        field = Field.zeros(grid)
    elif kind == "gaussian":
        a, w, c = spec.get("amplitude", 0.5), spec.get("width", 1.0), spec.get("center", 0.0)
        field = Field(grid, samples=a * np.exp(-((x - c) / w) ** 2))
    elif kind == "tones":
        values = np.zeros(grid.N)
        for tone in spec.get("tones", []):
            values += tone.get("amplitude", 1.0) * np.cos(
                tone.get("wavenumber", 1.0) * x + tone.get("phase", 0.0))
        field = Field(grid, samples=values)
    elif kind == "sech2":
        a, b, c = spec.get("amplitude", 1.0), spec.get("width", 1.0), spec.get("center", 0.0)
        field = Field(grid, samples=a / np.cosh(b * (x - c)) ** 2)
    elif kind == "soliton":
        from .soliton import solitary_profile
        field = solitary_profile(grid, spec.get("center", 0.0))
    elif kind == "file":
        path = Path(spec["path"])
        if not path.is_absolute():
            path = Path(base_dir) / path
        samples = read_samples(path)
        if len(samples) != grid.N:
            raise ConfigurationError(
                f"initial.path: {path} holds {len(samples)} samples, grid expects {grid.N}")
        field = Field(grid, samples=samples)
    else:
        ens = EnsembleSpec(grid.L, grid.N, spec.get("band", 8.0), spec.get("decay", 1.2),
                           int(spec.get("index", 0)) + 1, cfg.seed)
        field = random_field(ens, int(spec.get("index", 0)))
    if "normalize" in spec:
        norm = dict(spec["normalize"])
        target = norm.pop("value")
        current = space_norm(field, NormSpec.from_dict(norm))
        if current == 0:
            raise ConfigurationError("initial.normalize: cannot rescale a zero datum")
        field = field.scale(target / current)
    return field


def read_samples(path):
    """Last numeric column of a CSV (header optional) or one value per line."""
    rows = []
    with open(path, newline="") as fh:
        for line, row in enumerate(r for r in csv.reader(fh) if r):
            try:
                rows.append(float(row[-1]))
            except ValueError:
                # only the first row may be a header
                if line > 0:
                    raise ConfigurationError(f"{path}: non-numeric entry {row[-1]!r}") from None
    return np.array(rows)


def fmt(value):
    """Shortest round-trip text for a number; stable across runs."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def write_csv(path, header, rows):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return path


def write_json(path, data):
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path
