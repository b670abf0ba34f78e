import json
import subprocess
import sys

import pytest

from setkf import validate_model
from setkf.cli import main

SCALAR = validate_model(0.8, 1.0, 1.0, 1.0, 1.0)


@pytest.fixture
def scenario_config(tmp_path):
    cfg = {
        "model": SCALAR.to_dict(),
        "trigger": {"variant": "open_loop", "Y": [[1.0]]},
        "filter": "olset",
        "horizon": 60,
        "runs": 4,
        "seed": 1,
        "burn_in": 10,
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(cfg))
    return path


def test_simulate_writes_csv(scenario_config, tmp_path):
    out = tmp_path / "traj.csv"
    rc = main(["simulate", "--config", str(scenario_config), "--output", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,gamma,P_trace,mse,P11,mse11"
    assert len(lines) == 61


def test_monte_carlo_reproducible(scenario_config, tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["monte-carlo", "--config", str(scenario_config), "--output", str(out1)]) == 0
    assert main(["monte-carlo", "--config", str(scenario_config), "--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_monte_carlo_flag_overrides(scenario_config, tmp_path):
    out = tmp_path / "c.csv"
    rc = main(
        ["monte-carlo", "--config", str(scenario_config), "--horizon", "20",
         "--runs", "2", "--seed", "7", "--output", str(out)]
    )
    assert rc == 0
    assert len(out.read_text().splitlines()) == 21


def test_analyze_open_loop(scenario_config, tmp_path):
    out = tmp_path / "report.csv"
    assert main(["analyze", "--config", str(scenario_config), "--output", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("quantity,value\n")
    rows = dict(line.split(",") for line in text.splitlines()[1:])
    assert float(rows["gamma"]) == pytest.approx(0.54250, abs=1e-4)
    assert float(rows["X_upper_ol[0][0]"]) == pytest.approx(1.56113, abs=1e-4)


def test_analyze_closed_loop(tmp_path):
    cfg = {
        "model": SCALAR.to_dict(),
        "trigger": {"variant": "closed_loop", "Z": [[1.0]]},
    }
    path = tmp_path / "cl.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "cl.csv"
    assert main(["analyze", "--config", str(path), "--output", str(out)]) == 0
    rows = dict(line.split(",") for line in out.read_text().splitlines()[1:])
    assert float(rows["gamma_low"]) == pytest.approx(0.45526, abs=1e-4)
    assert float(rows["gamma_upper"]) == pytest.approx(0.47008, abs=1e-4)


def test_design_search_cli(tmp_path):
    cfg = {"model": SCALAR.to_dict(), "delta0": [[1.5]]}
    path = tmp_path / "design.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "design.csv"
    assert main(["design", "--config", str(path), "--output", str(out)]) == 0
    rows = dict(line.split(",") for line in out.read_text().splitlines()[1:])
    assert float(rows["theta"]) == pytest.approx(1.58622, abs=1e-4)
    assert float(rows["gamma_achieved"]) == pytest.approx(0.62185, abs=1e-4)


def test_design_export_lmi_cli(tmp_path):
    cfg = {"model": SCALAR.to_dict(), "delta0": [[1.5]]}
    path = tmp_path / "design.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "lmi.txt"
    assert main(["design", "export-lmi", "--config", str(path), "--output", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("setkf-lmi v1\n")
    assert "OBJ" in text and "\nF 1 0 " in text


def test_design_infeasible_exit_code(tmp_path):
    cfg = {"model": SCALAR.to_dict(), "delta0": [[1.3]]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert main(["design", "--config", str(path)]) == 3


def test_compare_cli(tmp_path):
    cfg = {"model": SCALAR.to_dict()}
    path = tmp_path / "model.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "cmp.csv"
    rc = main(
        ["compare", "--config", str(path), "--target-rate", "0.5", "--runs", "5",
         "--horizon", "200", "--seed", "3", "--burn-in", "50", "--output", str(out)]
    )
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "scheduler,param,empirical_rate,steady_trace"
    assert [l.split(",")[0] for l in lines[1:]] == ["clset", "olset", "periodic", "random"]


def test_singer_cli(tmp_path):
    out = tmp_path / "singer.csv"
    scn_out = tmp_path / "singer_scenario.json"
    rc = main(
        ["singer", "--z-scale", "0.52", "--runs", "5", "--horizon", "30",
         "--seed", "2", "--output", str(out), "--save-scenario", str(scn_out)]
    )
    assert rc == 0
    assert len(out.read_text().splitlines()) == 31
    saved = json.loads(scn_out.read_text())
    assert saved["filter"] == "clset"
    assert saved["model"]["A"][0][2] == pytest.approx(1.0)


def test_config_error_exit_codes(tmp_path):
    missing = tmp_path / "missing.json"
    assert main(["simulate", "--config", str(missing)]) == 2

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad)]) == 2

    invalid = tmp_path / "invalid.json"
    invalid.write_text(
        json.dumps(
            {
                "model": {"A": [[1.0]], "C": [[0.0]], "Q": [[1.0]], "R": [[1.0]], "Sigma0": [[1.0]]},
                "trigger": {"variant": "open_loop", "Y": [[1.0]]},
                "filter": "olset",
                "horizon": 10,
                "burn_in": 0,
            }
        )
    )
    assert main(["simulate", "--config", str(invalid)]) == 2

    no_cfg = main(["simulate"])
    assert no_cfg == 2

    # unstable model requesting an open-loop analysis is a config-class error
    unstable = tmp_path / "unstable.json"
    unstable.write_text(
        json.dumps(
            {
                "model": {"A": [[1.1]], "C": [[1.0]], "Q": [[1.0]], "R": [[1.0]], "Sigma0": [[1.0]]},
                "trigger": {"variant": "open_loop", "Y": [[1.0]]},
            }
        )
    )
    assert main(["analyze", "--config", str(unstable)]) == 2


def test_module_entry_point(scenario_config):
    proc = subprocess.run(
        [sys.executable, "-m", "setkf", "simulate", "--config", str(scenario_config)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("k,gamma,")
