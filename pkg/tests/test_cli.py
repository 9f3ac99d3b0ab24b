import json
import os
from pathlib import Path

import numpy as np
import pytest

from wflow.cli import (
    cmd_crosscheck,
    cmd_oracle,
    cmd_run,
    cmd_study,
    config_hash,
    load_config,
    main,
)


@pytest.fixture
def outroot(tmp_path, monkeypatch):
    root = tmp_path / "artifacts"
    monkeypatch.setenv("WFLOW_OUT", str(root))
    return root


def write_config(tmp_path, name="cfg.json", **overrides):
    cfg = {
        "preset": "fokker-planck",
        "potential": {"kind": "zero"},
        "domain_a": 0.0,
        "domain_b": 1.0,
        "n": 64,
        "m": 64,
        "h": 1e-2,
        "T": 0.05,
        "rho0": {"profile": "cosine", "amplitude": 0.4},
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_load_config_presets(tmp_path):
    path = write_config(tmp_path)
    cfg = load_config(path)
    assert cfg.cost.q == 2.0
    assert cfg.n == 64
    assert cfg.label == "fokker-planck"


def test_config_hash_stable(tmp_path):
    path = write_config(tmp_path)
    cfg = load_config(path)
    assert config_hash(cfg.raw) == config_hash(json.loads(path.read_text()))
    assert len(config_hash(cfg.raw)) == 12


def test_run_writes_artifacts_and_passes(tmp_path, outroot):
    path = write_config(tmp_path)
    code = cmd_run(str(path))
    assert code == 0
    rundirs = list(outroot.iterdir())
    assert len(rundirs) == 1
    files = {p.name for p in rundirs[0].iterdir()}
    assert {"trajectory.csv", "diagnostics.jsonl", "report.json",
            "config.json"} <= files
    report = json.loads((rundirs[0] / "report.json").read_text())
    assert report["ledger"]["all_pass"] is True
    lines = (rundirs[0] / "diagnostics.jsonl").read_text().strip().splitlines()
    assert len(lines) == 5
    rec = json.loads(lines[0])
    assert {"W_value", "E_internal_before", "E_internal_after",
            "E_free_before", "E_free_after", "second_moment", "dissipation",
            "el_residual_L1", "kkt_residual", "iterations"} <= set(rec)


def test_run_byte_identical(tmp_path, outroot):
    path = write_config(tmp_path)
    assert cmd_run(str(path)) == 0
    rundir = next(outroot.iterdir())
    first = {p.name: p.read_bytes() for p in rundir.iterdir()}
    assert cmd_run(str(path)) == 0
    second = {p.name: p.read_bytes() for p in rundir.iterdir()}
    assert first == second


def test_run_rejects_invalid_exponent(tmp_path, outroot):
    path = write_config(tmp_path, cost_terms=[[1.0, 1.0]], preset=None,
                        energy_terms=[{"kind": "entropy"}])
    assert cmd_run(str(path)) == 1


def test_run_force_overrides_assumption_gate(tmp_path, outroot):
    path = write_config(tmp_path, preset=None,
                        cost_terms=[[0.5, 2.0]],
                        energy_terms=[{"kind": "power", "exponent": 0.3}])
    assert cmd_run(str(path)) == 1
    code = cmd_run(str(path), force=True)
    assert code in (0, 2)  # runs; ledger decides the final status


def test_run_solver_failure_exits_2_with_partial(tmp_path, outroot):
    path = write_config(tmp_path, newton_max_iter=0, fista_max_iter=3)
    assert cmd_run(str(path)) == 2
    rundir = next(outroot.iterdir())
    files = {p.name for p in rundir.iterdir()}
    assert "trajectory.csv" in files  # partial trajectory still written
    text = (rundir / "trajectory.csv").read_text()
    assert text.startswith("t,x,rho")


def test_run_missing_rho0_csv(tmp_path, outroot):
    path = write_config(tmp_path, rho0={"csv": str(tmp_path / "nope.csv")})
    assert cmd_run(str(path)) == 1


def test_run_with_rho0_csv_roundtrip(tmp_path, outroot):
    from wflow.density import Domain, density_to_csv, normalize

    xc = Domain(0.0, 1.0).centers(64)
    rho, _ = normalize(1.0 + 0.3 * np.cos(2 * np.pi * xc), Domain(0.0, 1.0))
    csv_path = tmp_path / "rho0.csv"
    csv_path.write_text(density_to_csv(rho))
    path = write_config(tmp_path, rho0={"csv": str(csv_path)})
    assert cmd_run(str(path)) == 0


def test_study_needs_enough_values(tmp_path, outroot):
    path = write_config(tmp_path)
    assert cmd_study(str(path), values=[0.05, 0.025]) == 1


def test_study_rate_report(tmp_path, outroot):
    path = write_config(tmp_path, domain_a=0.0, domain_b=2.0, T=0.5,
                        rho0={"profile": "cosine", "amplitude": 0.4,
                              "frequency": 0.5})
    code = cmd_study(str(path), values=[1 / 20, 1 / 40, 1 / 80, 1 / 160])
    assert code == 0
    rundir = next(outroot.iterdir())
    report = json.loads((rundir / "rate.json").read_text())
    assert report["passes"] is True
    entry = report["rate_fits"][0]
    assert entry["fit"]["slope"] >= entry["expected_exponent"] - 0.15
    csv = (rundir / "rate.csv").read_text().strip().splitlines()
    assert csv[0] == "h,total_second_moment"
    assert len(csv) == 5


def test_study_parallel_workers_match_serial(tmp_path, outroot):
    path = write_config(tmp_path, domain_a=0.0, domain_b=2.0, T=0.2,
                        rho0={"profile": "cosine", "amplitude": 0.4,
                              "frequency": 0.5})
    assert cmd_study(str(path), values=[1 / 10, 1 / 20, 1 / 40, 1 / 80]) == 0
    rundir = next(outroot.iterdir())
    serial = (rundir / "rate.csv").read_bytes()
    assert cmd_study(str(path), values=[1 / 10, 1 / 20, 1 / 40, 1 / 80],
                     workers=2) == 0
    assert (rundir / "rate.csv").read_bytes() == serial


def test_study_member_failure_flags_partial(tmp_path, outroot):
    path = write_config(tmp_path, newton_max_iter=0, fista_max_iter=3,
                        domain_a=0.0, domain_b=2.0, T=0.2,
                        rho0={"profile": "cosine", "amplitude": 0.4,
                              "frequency": 0.5})
    code = cmd_study(str(path), values=[1 / 10, 1 / 20, 1 / 40, 1 / 80])
    assert code == 2
    rundir = next(outroot.iterdir())
    report = json.loads((rundir / "rate.json").read_text())
    assert report["partial"] is True
    assert len(report["failures"]) >= 1


def test_crosscheck_heat(tmp_path, outroot):
    path = write_config(tmp_path, h=1e-3, T=0.05, n=64, m=64)
    assert cmd_crosscheck(str(path), threshold=1e-2) == 0
    rundir = next(outroot.iterdir())
    report = json.loads((rundir / "comparison.json").read_text())
    assert report["passes"] is True


def test_crosscheck_porous_medium_preset_with_floor(tmp_path, outroot):
    cfg = {
        "preset": "porous-medium",
        "exponent_m": 2.0,
        "potential": {"kind": "zero"},
        "domain_a": -1.5, "domain_b": 1.5,
        "n": 96, "m": 96, "h": 2.5e-3, "T": 0.02,
        "rho0": {"profile": "gaussian", "center": 0.0, "width": 0.3,
                 "floor": 0.0},
        "floor_delta": 1e-3,
    }
    path = tmp_path / "pm.json"
    path.write_text(json.dumps(cfg))
    assert cmd_crosscheck(str(path), threshold=5e-2) == 0


def test_oracle_command():
    assert cmd_oracle(k=6, seed=1) == 0
    assert cmd_oracle(k=16, seed=2, q=1.5) == 0
    assert cmd_oracle(k=0, seed=0) == 1
    assert cmd_oracle(k=65, seed=0) == 1


def test_main_dispatch(tmp_path, outroot, capsys):
    path = write_config(tmp_path)
    assert main(["run", "--config", str(path)]) == 0
    assert main(["oracle", "--k", "4", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "deviation" in out
