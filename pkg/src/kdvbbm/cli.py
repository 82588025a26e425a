"""Command-line front end: ``kdvbbm <command> --config <path> [--jobs K] [--out DIR]``.

Exit codes: 0 success, 2 unreadable config, 3 invalid config, 4 numerical
failure (blowup or a Picard iteration that does not converge).  Artifacts
written before a failure are kept.
"""

import argparse
import hashlib
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BlowupError, ConfigurationError, KdvBbmError
from .estimates import (CampaignConfig, EnsembleSpec, campaign, growth_params,
                        semigroup_growth_probe)
from .evolution import (SolveConfig, calibrate_cs, existence_time, picard_fixed_point,
                        relative_l2, solve)
from .io import (COMMANDS, DEFAULT_GROWTH, ConfigParseError, fmt, load_config,
                 make_initial, write_csv, write_json)
from .norms import NormSpec, band_profile, space_norm
from .split import global_solve, ledger_dicts, ledger_table, LedgerRow
from . import plotting

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4


class RunFailure(KdvBbmError):
    """A numerical failure after which partial artifacts were written."""


def _snapshot_indices(count, wanted):
    idx = np.unique(np.round(np.linspace(0, count - 1, max(1, wanted))).astype(int))
    return [int(i) for i in idx]


def _write_trajectory(out, traj, snapshots):
    keys = list(traj.diagnostics)
    rows = [[t] + [traj.diagnostics[k][i] for k in keys] for i, t in enumerate(traj.times)]
    files = [write_csv(out / "diagnostics.csv", ["t"] + keys, rows)]
    x = traj.grid.x
    picks = _snapshot_indices(len(traj), snapshots)
    rows = [(traj.times[i], xj, v) for i in picks for xj, v in zip(x, traj.states[i].samples)]
    files.append(write_csv(out / "trajectory.csv", ["t", "x", "eta"], rows))
    snaps = [(traj.times[i], traj.states[i].samples) for i in picks]
    files.append(plotting.plot_simulation(traj.times, traj.diagnostics["energy"], snaps, x,
                                          out / "simulate.png"))
    return files


def _drift(energy):
    return float(np.max(np.abs(energy - energy[0])) / abs(energy[0])) if energy[0] else 0.0


def run_simulate(cfg, out, base_dir, jobs):
    b = cfg.block
    eta0 = make_initial(cfg, base_dir)
    scfg = SolveConfig(cfg.grid, cfg.params, b["dt"], b["t_end"], dealias=bool(b["dealias"]),
                       record_every=int(b["record_every"]), norms=b["norms"])
    try:
        traj = solve(eta0, scfg)
    except BlowupError as exc:
        if exc.partial is not None and len(exc.partial) > 0:
            _write_trajectory(out, exc.partial, b["snapshots"])
        write_json(out / "summary.json", {"status": "blowup", "time": exc.time, "message": str(exc)})
        raise RunFailure(str(exc)) from None
    _write_trajectory(out, traj, b["snapshots"])
    summary = {"steps": scfg.steps, "dt": scfg.step_size, "t_end": scfg.t_end,
               "energy_drift": _drift(traj.diagnostics["energy"]),
               "max_abs": float(max(np.max(np.abs(s.samples)) for s in traj.states))}
    write_json(out / "summary.json", summary)
    return summary


def run_picard(cfg, out, base_dir, jobs):
    b = cfg.block
    eta0 = make_initial(cfg, base_dir)
    spec = NormSpec.from_dict(b["norm"])
    norm0 = space_norm(eta0, spec)
    Cs = b["Cs"] if b["Cs"] is not None else calibrate_cs(eta0, spec, cfg.params)
    T = b["T"] if b["T"] is not None else existence_time(norm0, Cs)
    if not np.isfinite(T):
        T = 1.0
    res = picard_fixed_point(eta0, T, spec, b["tol"], cfg.params, steps=int(b["steps"]),
                             max_iter=int(b["max_iter"]))
    ratios = [None] + list(res.ratios)
    rows = [(k + 1, d, "" if r is None else fmt(r)) for k, (d, r) in
            enumerate(zip(res.differences, ratios))]
    write_csv(out / "iterations.csv", ["k", "difference", "ratio"], rows)
    plotting.plot_picard(res.differences, out / "picard.png")
    final = res.trajectory.final
    series = res.trajectory.norm_series(spec)
    summary = {"norm0": norm0, "norm_label": spec.label, "Cs": Cs, "T": T,
               "iterations": res.iterations, "converged": res.converged,
               "diverged": res.diverged,
               "max_ratio": max(res.ratios) if res.ratios else None,
               "doubling_ratio": float(series.max() / norm0) if norm0 else None}
    columns = [cfg.grid.x, final.samples]
    header = ["x", "eta_picard"]
    if b["compare"]:
        steps = int(b["steps"])
        ref = solve(eta0, SolveConfig(cfg.grid, cfg.params, T / (4 * steps), T))
        summary["etdrk4_rel_l2"] = relative_l2(final, ref.final)
        columns.append(ref.final.samples)
        header.append("eta_etdrk4")
    write_csv(out / "fixed_point.csv", header, zip(*columns))
    write_json(out / "summary.json", summary)
    if not res.converged:
        raise RunFailure(f"Picard iteration {'diverged' if res.diverged else 'did not converge'} "
                         f"after {res.iterations} iterations")
    return summary


def run_global_split(cfg, out, base_dir, jobs):
    b = cfg.block
    eta0 = make_initial(cfg, base_dir)
    scfg = SolveConfig(cfg.grid, cfg.params, b["dt"], b["T"])
    try:
        res = global_solve(eta0, b["T"], b["s"], b["p"], scfg, b["N_cut"], b["t0_scale"],
                           b["envelope_c"])
    except BlowupError as exc:
        part = exc.partial
        if part is not None:
            write_csv(out / "ledger.csv", LedgerRow.CSV_COLUMNS, ledger_table(part.ledger))
        raise RunFailure(str(exc)) from None
    write_csv(out / "ledger.csv", LedgerRow.CSV_COLUMNS, ledger_table(res.ledger))
    full = ledger_dicts(res.ledger)
    _write_trajectory(out, res.trajectory, b["snapshots"])
    plotting.plot_ledger(full, out / "ledger.png")
    summary = {**res.manifest(), "ledger_health": res.ledger_health(),
               "max_increment": max((abs(r["X_k"]) for r in full[1:]), default=0.0),
               "expansion_mismatch": max((abs(r["X_k"] - r["X_expansion"]) for r in full[1:]),
                                         default=0.0),
               "ledger": full}
    write_json(out / "summary.json", summary)
    return summary


def run_norms(cfg, out, base_dir, jobs):
    b = cfg.block
    eta0 = make_initial(cfg, base_dir)
    rows = []
    for d in b["specs"]:
        spec = NormSpec.from_dict(d)
        rows.append((spec.label, spec.space, spec.s, spec.r, spec.p, space_norm(eta0, spec)))
    write_csv(out / "norms.csv", ["label", "space", "s", "r", "p", "value"], rows)
    prof = NormSpec.from_dict(b["profile"])
    if prof.space != "Modulation":
        prof = NormSpec("Modulation", prof.s, prof.r, prof.p)
    bands, weights = band_profile(eta0, prof)
    write_csv(out / "bands.csv", ["n", "weighted_norm"], zip(bands, weights))
    plotting.plot_bands(bands, weights, f"<n>^s ||Pi_n f|| ({prof.label})", out / "bands.png")
    summary = {r[0]: r[5] for r in rows}
    write_json(out / "summary.json", summary)
    return summary


def run_verify_estimates(cfg, out, base_dir, jobs):
    b = cfg.block
    camp = dict(b["campaign"])
    ens = dict(camp.get("ensemble", {}) or {})
    ens["seed"] = cfg.seed
    camp["ensemble"] = ens
    ccfg = CampaignConfig.from_dict(camp)
    reports = campaign(ccfg, jobs=jobs)
    summaries = []
    for rep in reports:
        write_csv(out / f"estimates_{rep.kind}.csv", ["trial", "s", "p", "N", "ratio"], rep.rows)
        summaries.append(rep.summary())
    plotting.plot_campaign(summaries, out / "campaign.png")
    summary = {"campaign": ccfg.to_dict(), "reports": summaries,
               "passed": all(r.passed for r in reports)}
    if b["growth"] is not None:
        g = {**DEFAULT_GROWTH, **b["growth"]}
        spec = EnsembleSpec(g["L"], g["N"], g["band"], g["decay"], g["count"], cfg.seed)
        ps = g["p"] if isinstance(g["p"], list) else [g["p"]]
        rows, probes = [], {}
        for p in ps:
            slope, ratios = semigroup_growth_probe(g["times"], g["s"], p, growth_params(), spec)
            probes[fmt(p)] = {"slope": slope, "bound_exponent": 2 * abs(0.5 - 1 / p)}
            rows += [(p, t, r) for t, r in zip(g["times"], ratios)]
        write_csv(out / "growth.csv", ["p", "t", "ratio"], rows)
        summary["growth"] = probes
    write_json(out / "summary.json", summary)
    return summary


def run_soliton(cfg, out, base_dir, jobs):
    from .soliton import report, solitary_constants, solitary_model, solitary_profile

    b = cfg.block
    data = report(cfg.grid, b["delta1"])
    sol = solitary_constants()
    profile = solitary_profile(cfg.grid, 0.0, sol)
    evolved = None
    if b["t_end"] and b["t_end"] > 0:
        t = b["t_end"]
        traj = solve(profile, SolveConfig(cfg.grid, solitary_model(sol, b["delta1"]), b["dt"], t))
        evolved = traj.final
        exact = solitary_profile(cfg.grid, sol.c * traj.times[-1], sol)
        data["evolution"] = {"t": float(traj.times[-1]), "displacement": abs(sol.c) * t,
                             "relative_l2_error": relative_l2(evolved, exact)}
    columns = [cfg.grid.x, profile.samples] + ([evolved.samples] if evolved is not None else [])
    header = ["x", "profile"] + (["evolved"] if evolved is not None else [])
    write_csv(out / "profile.csv", header, zip(*columns))
    write_json(out / "soliton.json", data)
    plotting.plot_soliton(cfg.grid.x, profile.samples,
                          None if evolved is None else evolved.samples, out / "soliton.png")
    return data


RUNNERS = {
    "simulate": run_simulate,
    "picard": run_picard,
    "global-split": run_global_split,
    "norms": run_norms,
    "verify-estimates": run_verify_estimates,
    "soliton": run_soliton,
}


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def execute(cfg, out=None, jobs=1, base_dir="."):
    """Run ``cfg`` and write artifacts plus ``manifest.json``; returns the manifest."""
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    status, message, code, summary = "ok", "", EXIT_OK, None
    try:
        summary = RUNNERS[cfg.command](cfg, out, base_dir, jobs)
    except (RunFailure, BlowupError) as exc:
        status, message, code = "numerical-failure", str(exc), EXIT_NUMERIC
    artifacts = {p.name: _sha256(p) for p in sorted(out.iterdir())
                 if p.is_file() and p.name != "manifest.json"}
    manifest = {
        "manifest_version": 1,
        "command": cfg.command,
        "config": cfg.to_dict(),
        "inputs_sha256": cfg.digest(),
        "seed": cfg.seed,
        "versions": {"kdvbbm": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
        "wall_time_s": round(time.perf_counter() - start, 3),
        "status": status,
        "message": message,
        "exit_code": code,
        "artifacts": artifacts,
    }
    write_json(out / "manifest.json", manifest)
    manifest["summary"] = summary
    return manifest


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kdvbbm", description="Fifth-order KdV-BBM spectral simulation and verification lab.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration or manifest")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for campaigns")
    parser.add_argument("--out", default=None, help="output directory (overrides the config)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigurationError as exc:
        problems = getattr(exc, "problems", [str(exc)])
        for p in problems:
            print(f"invalid config: {p}", file=sys.stderr)
        return EXIT_INVALID
    if args.jobs < 1:
        print("invalid config: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    base_dir = str(Path(args.config).resolve().parent)
    try:
        manifest = execute(cfg, args.out, args.jobs, base_dir)
    except ConfigurationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out or cfg.out)
    if manifest["status"] != "ok":
        print(f"{cfg.command}: numerical failure: {manifest['message']}", file=sys.stderr)
    else:
        print(f"{cfg.command}: ok, artifacts in {out}")
    return manifest["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
