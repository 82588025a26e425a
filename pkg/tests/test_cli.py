import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from kdvbbm.cli import EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, EXIT_PARSE, execute, main
from kdvbbm.errors import ConfigurationError
from kdvbbm.io import (SEED_ENV, ConfigParseError, ValidationError, build_config, fmt,
                       load_config, make_initial, parse_length, read_samples)
from kdvbbm.soliton import report
from kdvbbm.spectral import make_grid

SIM = {"command": "simulate", "grid": {"N": 128, "L": "16pi"},
       "simulate": {"dt": 1e-2, "t_end": 0.1, "norms": [{"space": "M", "s": 1.5, "p": 2}]}}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return path


def run(tmp_path, data, out="out", command=None):
    path = write(tmp_path, data)
    command = command or data["command"]
    code = main([command, "--config", str(path), "--out", str(tmp_path / out)])
    return code, tmp_path / out


def artifact_bytes(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


def test_defaults_are_filled(tmp_path):
    cfg = load_config(write(tmp_path, {"command": "simulate"}))
    assert cfg.grid.L == pytest.approx(64 * math.pi) and cfg.grid.N == 1024
    assert cfg.block["dt"] == 1e-4 and cfg.params.hamiltonian
    assert cfg.initial["kind"] == "gaussian"


def test_parse_length():
    assert parse_length("64pi") == pytest.approx(64 * math.pi)
    assert parse_length("8*pi") == pytest.approx(8 * math.pi)
    assert parse_length("pi") == pytest.approx(math.pi)
    assert parse_length(3) == 3.0
    with pytest.raises(ConfigurationError):
        parse_length("tau")


def test_validation_reports_paths_and_modules():
    with pytest.raises(ValidationError) as info:
        build_config({"command": "simulate",
                      "simulate": {"norms": [{"space": "M", "s": 1, "p": 0.5}], "dt": -1},
                      "bogus": 1})
    text = "\n".join(info.value.problems)
    assert "simulate.norms[0]: p >= 1 required" in text and "(norm-engine)" in text
    assert "simulate.dt" in text and "bogus: unknown top-level key" in text


def test_unknown_command_lists_valid_ones():
    with pytest.raises(ValidationError, match="verify-estimates"):
        build_config({"command": "foo"})


def test_exit_codes(tmp_path):
    assert main(["simulate", "--config", str(write(tmp_path, "{bad"))]) == EXIT_PARSE
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == EXIT_PARSE
    p05 = {"command": "simulate", "simulate": {"norms": [{"space": "M", "s": 1, "p": 0.5}]}}
    assert main(["simulate", "--config", str(write(tmp_path, p05))]) == EXIT_INVALID
    assert main(["norms", "--config", str(write(tmp_path, SIM))]) == EXIT_INVALID
    with pytest.raises(ConfigParseError):
        load_config(write(tmp_path, "[1, 2]"))


def test_blowup_exits_with_partial_artifacts(tmp_path):
    data = {"command": "simulate", "grid": {"N": 64},
            "initial": {"kind": "gaussian", "amplitude": 1e5, "width": 0.5},
            "simulate": {"dt": 1e-2, "t_end": 1}}
    code, out = run(tmp_path, data)
    assert code == EXIT_NUMERIC
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "numerical-failure" and manifest["exit_code"] == EXIT_NUMERIC
    assert (out / "diagnostics.csv").exists()


def test_simulate_is_deterministic_and_round_trips(tmp_path):
    code, out = run(tmp_path, SIM, "a")
    assert code == EXIT_OK
    _, again = run(tmp_path, SIM, "b")
    assert artifact_bytes(out) == artifact_bytes(again)
    names = set(artifact_bytes(out))
    assert {"diagnostics.csv", "trajectory.csv", "simulate.png", "summary.json"} <= names
    manifest = json.loads((out / "manifest.json").read_text())
    for name, digest in manifest["artifacts"].items():
        assert len(digest) == 64 and name in names
    assert main(["simulate", "--config", str(out / "manifest.json"),
                 "--out", str(tmp_path / "c")]) == EXIT_OK
    assert artifact_bytes(tmp_path / "c") == artifact_bytes(out)
    assert json.loads((tmp_path / "c" / "manifest.json").read_text())["inputs_sha256"] == \
        manifest["inputs_sha256"]


def test_zero_datum_gives_zero_trajectory(tmp_path):
    data = {**SIM, "initial": {"kind": "zero"}}
    code, out = run(tmp_path, data)
    assert code == EXIT_OK
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(r["eta"]) == 0.0 for r in rows)


def test_csv_formatting(tmp_path):
    assert fmt(0.1) == "0.1" and fmt(3) == "3" and fmt(True) == "1"
    assert float(fmt(1 / 3)) == 1 / 3
    code, out = run(tmp_path, SIM)
    raw = (out / "diagnostics.csv").read_bytes()
    assert b"\r\n" not in raw


def test_seed_environment_overrides(tmp_path, monkeypatch):
    data = {"command": "norms", "grid": {"N": 128}, "initial": {"kind": "random"}, "seed": 3}
    assert build_config(data).seed == 3
    monkeypatch.setenv(SEED_ENV, "17")
    assert build_config(data).seed == 17


def test_initial_data_menu(tmp_path):
    base = {"command": "norms", "grid": {"N": 64, "L": 20.0}}
    g = make_grid(20.0, 64)
    tones = build_config({**base, "initial": {"kind": "tones", "tones": [
        {"amplitude": 2.0, "wavenumber": 2 * math.pi / 20.0 * 3}]}})
    assert np.allclose(make_initial(tones).samples, 2 * np.cos(2 * math.pi * 3 * g.x / 20.0))
    samples = np.sin(g.x)
    (tmp_path / "datum.csv").write_text("x,eta\n" + "".join(f"{float(a)!r},{float(b)!r}\n"
                                                             for a, b in zip(g.x, samples)))
    cfg = build_config({**base, "initial": {"kind": "file", "path": "datum.csv"}})
    assert np.array_equal(make_initial(cfg, tmp_path).samples, samples)
    assert np.array_equal(read_samples(tmp_path / "datum.csv"), samples)
    norm = build_config({**base, "initial": {"kind": "sech2", "normalize": {
        "space": "Modulation", "s": 1.5, "p": 2, "value": 0.5}}})
    from kdvbbm.norms import modulation, space_norm
    assert space_norm(make_initial(norm), modulation(1.5, 2)) == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        build_config({**base, "initial": {"kind": "square"}})
    short = build_config({**base, "grid": {"N": 32, "L": 20.0},
                          "initial": {"kind": "file", "path": "datum.csv"}})
    with pytest.raises(ConfigurationError):
        make_initial(short, tmp_path)
    (tmp_path / "bad.csv").write_text("x,eta\n0,1\n1,oops\n")
    with pytest.raises(ConfigurationError, match="non-numeric"):
        read_samples(tmp_path / "bad.csv")


def test_norms_command(tmp_path):
    data = {"command": "norms", "grid": {"N": 256}, "initial": {"kind": "random", "band": 8},
            "norms": {"specs": [{"space": "M", "s": 1, "p": 2}, {"space": "FL", "s": 0, "p": "inf"}]}}
    code, out = run(tmp_path, data)
    assert code == EXIT_OK
    assert {"norms.csv", "bands.csv", "bands.png", "summary.json"} <= set(artifact_bytes(out))


def test_picard_command(tmp_path):
    data = {"command": "picard", "grid": {"N": 128, "L": "16pi"},
            "initial": {"kind": "gaussian", "amplitude": 1, "width": 2, "normalize": {
                "space": "Modulation", "s": 1.5, "p": 2, "value": 0.5}},
            "picard": {"steps": 16}}
    code, out = run(tmp_path, data)
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["converged"] and summary["max_ratio"] <= 0.6
    assert summary["etdrk4_rel_l2"] <= 1e-6
    assert {"iterations.csv", "fixed_point.csv", "picard.png"} <= set(artifact_bytes(out))


def test_global_split_command(tmp_path):
    data = {"command": "global-split", "grid": {"L": "16pi", "N": 256},
            "initial": {"kind": "gaussian", "amplitude": 0.5, "width": 0.2},
            "global-split": {"T": 0.25, "N_cut": 8}}
    code, out = run(tmp_path, data)
    assert code == EXIT_OK
    with open(out / "ledger.csv") as fh:
        reader = csv.reader(fh)
        assert next(reader) == ["k", "t_k", "E_u", "X_k", "h_H2", "bound_envelope"]
        assert len(list(reader)) == 3
    summary = json.loads((out / "summary.json").read_text())
    assert summary["legs"] == 2 and summary["t0"] == pytest.approx(0.125)


def test_verify_estimates_jobs_invariant(tmp_path):
    data = {"command": "verify-estimates", "seed": 4, "verify-estimates": {
        "campaign": {"kinds": ["TauSquare", "HspTau"], "s_p_grid": [[1.25, 2]],
                     "ensemble": {"count": 3}},
        "growth": {"times": [0, 1, 2], "p": [1, 2]}}}
    path = write(tmp_path, data)
    assert main(["verify-estimates", "--config", str(path), "--out", str(tmp_path / "a")]) == 0
    assert main(["verify-estimates", "--config", str(path), "--out", str(tmp_path / "b"),
                 "--jobs", "2"]) == 0
    assert artifact_bytes(tmp_path / "a") == artifact_bytes(tmp_path / "b")
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["campaign"]["ensemble"]["seed"] == 4
    assert (tmp_path / "a" / "estimates_TauSquare.csv").exists()
    assert (tmp_path / "a" / "growth.csv").exists()


def test_soliton_command_passes_through(tmp_path):
    data = {"command": "soliton", "grid": {"N": 1024}}
    code, out = run(tmp_path, data)
    assert code == EXIT_OK
    got = json.loads((out / "soliton.json").read_text())
    expected = json.loads(json.dumps(report(make_grid(64 * math.pi, 1024))))
    assert got["constants"] == expected["constants"]
    assert got["pde_residual"] == expected["pde_residual"]


def test_execute_returns_manifest(tmp_path):
    cfg = build_config(SIM)
    manifest = execute(cfg, tmp_path / "x")
    assert manifest["status"] == "ok" and manifest["summary"] is not None
    assert manifest["versions"]["kdvbbm"]


def test_console_entry_point(tmp_path):
    path = write(tmp_path, {"command": "soliton", "grid": {"N": 256, "L": "16pi"}})
    proc = subprocess.run([sys.executable, "-m", "kdvbbm.cli", "soliton", "--config", str(path),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "kdvbbm.cli", "nope", "--config", str(path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
