import json

import numpy as np
import pytest

from torusred.cli import EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main, run

SET1_MODEL = {
    "chain": {
        "alpha": 1.0, "beta": 1.0, "gamma": -1.0, "delta": 1.0,
        "a": 1.0, "b": 2.0, "c": -1.0, "d": -1.0, "epsilon": 0.1,
    }
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return str(path)


def test_reduce_command_writes_report(tmp_path):
    cfg = {
        "command": "reduce",
        "model": SET1_MODEL,
        "numerics": {"K": 8, "K_nf": 6, "J": 2},
        "output_dir": str(tmp_path / "out"),
    }
    status = run(config_path=write_config(tmp_path, cfg))
    assert status == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["abs_dA"] <= 1e-8
    assert report["abs_dB"] <= 1e-8
    assert report["A_formula"] == pytest.approx(0.2)
    assert report["B_formula"] == pytest.approx(-0.6)
    assert abs(report["residual_order_slope"] - 3.0) <= 0.1
    reduction = json.loads((tmp_path / "out" / "reduction.json").read_text())
    assert reduction["order"] == 2
    assert len(reduction["phase_terms"]) == 2


def test_reduce_artifacts_are_deterministic(tmp_path):
    cfg = {
        "command": "reduce",
        "model": SET1_MODEL,
        "numerics": {"K": 8, "K_nf": 6, "J": 2},
        "output_dir": str(tmp_path / "out"),
    }
    path = write_config(tmp_path, cfg)
    assert run(config_path=path) == EXIT_OK
    first = {f.name: f.read_bytes() for f in (tmp_path / "out").iterdir()}
    assert run(config_path=path) == EXIT_OK
    second = {f.name: f.read_bytes() for f in (tmp_path / "out").iterdir()}
    assert first == second


def test_resonant_config_exits_with_config_error(tmp_path, capsys):
    doc = {
        "command": "reduce",
        "model": {"chain": {"alpha": 1.0, "beta": 1.0, "gamma": -1.0, "delta": 1.0,
                            "a": 1.0, "b": 1.0, "c": -1.0, "d": 1.0, "epsilon": 0.1}},
        "output_dir": str(tmp_path / "out"),
    }
    status = run(config_path=write_config(tmp_path, doc))
    assert status == EXIT_CONFIG
    assert "resonance guard" in capsys.readouterr().err


def test_too_small_truncation_exits_with_numerical_error(tmp_path, capsys):
    doc = {
        "command": "reduce",
        "model": SET1_MODEL,
        "numerics": {"K": 1, "K_nf": 1, "J": 2},
        "output_dir": str(tmp_path / "out"),
    }
    status = run(config_path=write_config(tmp_path, doc))
    assert status == EXIT_NUMERICAL
    assert "raise K" in capsys.readouterr().err


def test_invalid_json_is_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert run(config_path=str(path)) == EXIT_CONFIG


def test_missing_config_and_preset_is_config_error():
    assert run() == EXIT_CONFIG


def test_unknown_command_is_config_error(tmp_path):
    doc = {"command": "explode", "model": SET1_MODEL}
    assert run(config_path=write_config(tmp_path, doc)) == EXIT_CONFIG


def test_bundle_command(tmp_path):
    doc = {
        "command": "bundle",
        "model": SET1_MODEL,
        "numerics": {"K": 8},
        "output_dir": str(tmp_path / "out"),
    }
    assert run(config_path=write_config(tmp_path, doc)) == EXIT_OK
    bundle = json.loads((tmp_path / "out" / "bundle.json").read_text())
    assert bundle["omega"] == [2.0, 1.0, 2.0]
    L = np.array(bundle["L"])
    assert np.allclose(L, np.diag([-2.0, -2.0, -2.0]))
    assert bundle["e0"]["m"] == 3 and bundle["e0"]["p"] == 6


def test_simulate_command(tmp_path):
    doc = {
        "command": "simulate",
        "model": SET1_MODEL,
        "numerics": {
            "integrator": {"scheme": "euler", "dt": 0.05, "t_end": 50.0},
            "x0": [[-1.0, 0.0], [1.0, 0.4], [-1.0, 0.3]],
        },
        "output_dir": str(tmp_path / "out"),
    }
    assert run(config_path=write_config(tmp_path, doc)) == EXIT_OK
    lines = (tmp_path / "out" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,re_z1,im_z1,re_z2,im_z2,re_z3,im_z3,phi_hat"
    assert len(lines) == 1 + 1001


def test_sweep_command_small(tmp_path):
    doc = {
        "command": "sweep",
        "model": SET1_MODEL,
        "numerics": {
            "sweep": {"eps_min": 0.07, "eps_max": 0.1, "n": 4, "t_end_ref": 1500.0,
                      "x0": [[-1.0, 0.3], [1.0, 0.4], [-1.0, 0.5]]},
        },
        "output_dir": str(tmp_path / "out"),
    }
    assert run(config_path=write_config(tmp_path, doc)) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["slope"] is not None
    assert abs(report["slope"] + 2.0) <= 0.4
    lines = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "epsilon,T01,converged"
    assert len(lines) == 5


def test_main_parses_flags(tmp_path):
    doc = {
        "command": "bundle",
        "model": SET1_MODEL,
        "output_dir": str(tmp_path / "ignored"),
    }
    path = write_config(tmp_path, doc)
    status = main(["--config", path, "--out", str(tmp_path / "other")])
    assert status == EXIT_OK
    assert (tmp_path / "other" / "bundle.json").exists()


def test_verify_failure_exits_with_acceptance_code(tmp_path, capsys):
    # A sweep horizon far too short for any decay leaves fewer than three
    # converged runs; that criterion fails and the battery reports it.
    doc = {
        "command": "verify",
        "model": SET1_MODEL,
        "numerics": {
            "K": 8, "K_nf": 6, "J": 2,
            "x0": [[-1.0, 0.0], [1.0, 0.4], [-1.0, 0.3]],
            "sweep": {"eps_min": 0.05, "eps_max": 0.1, "n": 4, "t_end_ref": 30.0,
                      "x0": [[-1.0, 0.3], [1.0, 0.4], [-1.0, 0.5]]},
        },
        "output_dir": str(tmp_path / "out"),
    }
    status = run(config_path=write_config(tmp_path, doc))
    assert status == EXIT_ACCEPTANCE
    out = capsys.readouterr().out
    assert "FAIL" in out
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert not report["passed"]


def test_verify_quick_battery(tmp_path, capsys):
    # A trimmed battery: small sweep, but identical criteria and tolerances.
    doc = {
        "command": "verify",
        "model": SET1_MODEL,
        "numerics": {
            "K": 8, "K_nf": 6, "J": 2,
            "x0": [[-1.0, 0.0], [1.0, 0.4], [-1.0, 0.3]],
            "sweep": {"eps_min": 0.05, "eps_max": 0.1, "n": 5, "t_end_ref": 2500.0,
                      "x0": [[-1.0, 0.3], [1.0, 0.4], [-1.0, 0.5]]},
        },
        "output_dir": str(tmp_path / "out"),
    }
    status = run(config_path=write_config(tmp_path, doc))
    captured = capsys.readouterr().out
    assert status == EXIT_OK, captured
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["passed"]
    names = [c["criterion"] for c in report["criteria"]]
    assert "slow-law constants" in names
    assert "decay-time sweep" in names
    assert captured.count("PASS") == len(names)
