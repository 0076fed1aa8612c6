"""End-to-end command-line behavior: exit codes, output routing,
determinism of serialized runs.
"""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pcdnse.cli import OUTPUT_DIR_ENV, main
from pcdnse.collective import SolitonCoords
from pcdnse.io import write_field_csv
from pcdnse.model_continuum import FieldState, make_soliton_field


def small_config(**overrides):
    cfg = {
        "model": "pcdnse",
        "effective": {"g": -2.0, "gamma": 0.05},
        "grid": {"domain_length": 40.0, "n_points": 400},
        "initial": {"soliton": {"psi": 1.0, "x0": 20.0, "w": 1.0}},
        "run": {"t_final": 0.5, "snapshots": 3},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_params_command_prints_checks(tmp_path, capsys):
    rc = main(["params", "--out", str(tmp_path / "sweep"), "--num", "101"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out
    assert (tmp_path / "sweep" / "sweep.csv").exists()


def test_simulate_runs_are_bit_identical(tmp_path):
    cfg = write_config(tmp_path, small_config())
    for run in ("run1", "run2"):
        assert main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / run)]) == 0
    m1 = json.loads((tmp_path / "run1" / "manifest.json").read_text())
    m2 = json.loads((tmp_path / "run2" / "manifest.json").read_text())
    assert m1["files"] == m2["files"]
    assert any(e["path"].startswith("snapshots/") for e in m1["files"])


def test_simulate_solver_flags_reach_the_integrator(tmp_path):
    cfg = write_config(tmp_path, small_config())
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "a"),
                 "--rtol", "1e-6", "--atol", "1e-8"]) == 0
    echoed = json.loads((tmp_path / "a" / "config_echo.json").read_text())
    assert echoed["run"]["solver"]["rtol"] == 1e-6
    assert echoed["run"]["solver"]["atol"] == 1e-8


def test_simulate_rejects_malformed_configs(tmp_path, capsys):
    bad_model = write_config(tmp_path, small_config(model="quantum"), "m.json")
    assert main(["simulate", "--config", bad_model,
                 "--out", str(tmp_path / "x")]) == 2
    assert "configuration error" in capsys.readouterr().err

    assert main(["simulate", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "x")]) == 2
    assert "cannot read" in capsys.readouterr().err

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["simulate", "--config", str(broken),
                 "--out", str(tmp_path / "x")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_simulate_numerical_failure_exits_3(tmp_path, capsys):
    cfg = small_config()
    cfg["run"]["solver"] = {"max_steps": 5}
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", path,
                 "--out", str(tmp_path / "x")]) == 3
    err = capsys.readouterr().err
    assert "numerical failure" in err and "max_steps=5" in err


def test_fit_command_stdout_and_file(tmp_path, capsys):
    coords = SolitonCoords(psi=1.0, x0=20.0, v=0.1, w=1.0, d=0.0, phi=0.3)
    snap = write_field_csv(tmp_path / "snap.csv",
                           make_soliton_field(coords, 40.0, 400))
    assert main(["fit", "--input", str(snap)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["converged"]
    assert_allclose(payload["psi"], 1.0, rtol=1e-6)
    assert_allclose(payload["v"], 0.1, rtol=1e-4)

    out = tmp_path / "fit.json"
    assert main(["fit", "--input", str(snap), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["converged"]

    assert main(["fit", "--input", str(tmp_path / "none.csv")]) == 2


def test_fit_featureless_snapshot_is_numerical_failure(tmp_path, capsys):
    flat = write_field_csv(tmp_path / "flat.csv",
                           FieldState(np.ones(64, dtype=complex), 64.0))
    assert main(["fit", "--input", str(flat)]) == 3
    assert "NoPeakError" in capsys.readouterr().err


def test_output_dir_precedence(tmp_path, monkeypatch):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(env_dir))
    assert main(["params", "--num", "51"]) == 0
    assert (env_dir / "sweep.csv").exists()

    flag_dir = tmp_path / "from_flag"
    assert main(["params", "--num", "51", "--out", str(flag_dir)]) == 0
    assert (flag_dir / "sweep.csv").exists()

    # without the flag, the environment beats the config file
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env2"))
    cfg = write_config(tmp_path, small_config(
        output={"directory": str(tmp_path / "from_config")}))
    assert main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "env2" / "manifest.json").exists()
    assert not (tmp_path / "from_config").exists()

    # without flag and environment, the config file wins
    monkeypatch.delenv(OUTPUT_DIR_ENV)
    assert main(["simulate", "--config", cfg]) == 0
    assert (tmp_path / "from_config" / "manifest.json").exists()


def test_experiment_command(tmp_path, capsys):
    rc = main(["experiment", "fig2", "--out", str(tmp_path / "fig2")])
    assert rc == 0
    assert "PASS" in capsys.readouterr().out
    assert (tmp_path / "fig2" / "report.json").exists()
    with pytest.raises(SystemExit):
        main(["experiment", "fig9"])
