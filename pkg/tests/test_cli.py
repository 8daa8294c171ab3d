import json
import math

import pytest

from qsched import cli

from . import reference_values as ref


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path)])


def read_json(path):
    return json.loads(path.read_text())


def read_csv(path):
    lines = path.read_text().splitlines()
    meta = json.loads(lines[0][2:])
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return meta, header, rows


def test_simulate_base_config(tmp_path):
    assert run(tmp_path, "simulate", "--stride", "50") == 0
    summary = read_json(tmp_path / "simulate.json")
    assert abs(summary["no_quarantine"]["r_final"] - 0.82) < 0.01
    assert abs(summary["quarantine"]["r_final"] - 0.70) < 0.01
    meta, header, rows = read_csv(tmp_path / "simulate_quarantine.csv")
    assert header == ["t", "s", "i", "r", "beta"]
    assert meta["config"]["r0n"] == 2.1 and meta["version"]
    assert abs(float(rows[-1][3]) - 0.70) < 0.01
    assert math.isclose(summary["window_start"], ref.OPTIMAL_START, abs_tol=1e-6)


def test_simulate_horizon_zero(tmp_path):
    assert run(tmp_path, "simulate", "--horizon", "0", "--start", "5") == 0
    _, _, rows = read_csv(tmp_path / "simulate_no_quarantine.csv")
    assert rows == [["0", "0.99990000000000001", "0.0001", "0", "0.14999999999999999"]]


def test_outputs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(d, "simulate", "--horizon", "50", "--start", "10") == 0
        assert run(d, "sweep", "--r0n-values", "1.5,2.5", "--ratio-values", "0.3,0.6") == 0
    for name in ("simulate_quarantine.csv", "simulate.json", "sweep.csv", "sweep.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert b"\r\n" not in (a / "sweep.csv").read_bytes()


def test_optimize_report(tmp_path):
    assert run(tmp_path, "optimize") == 0
    rep = read_json(tmp_path / "optimize.json")
    assert rep["case"] == "InteriorRoot"
    assert abs(rep["r_inf"] - 0.70) < 0.01
    for key in ("start", "q_residual", "roots", "peak_time", "epsilon0", "t_star"):
        assert key in rep
    assert abs(rep["q_residual"]) <= 1e-6


def test_optimize_subcritical_is_at_origin(tmp_path):
    assert run(tmp_path, "optimize", "--beta-n", "0.05", "--beta-q", "0.02", "--gamma", "0.1") == 0
    rep = read_json(tmp_path / "optimize.json")
    assert rep["case"] == "AtOrigin" and rep["start"] == 0.0
    assert rep["meta"]["config"]["rate_mode"] == "rates"


def test_scan_and_single_cell_sweep(tmp_path):
    assert run(tmp_path, "scan", "--t0-min", "100", "--t0-max", "120", "--t0-step", "2") == 0
    rep = read_json(tmp_path / "scan.json")
    assert rep["points"] == 11 and rep["argmin_t0"] == 112.0
    assert run(tmp_path, "sweep", "--r0n-values", "2.1", "--ratio-values", "0.5") == 0
    _, header, rows = read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 1 and header[:3] == ["r0n", "ratio", "r_inf"]


def test_phase_curves(tmp_path):
    assert run(tmp_path, "phase", "--r0n", "2.4", "--c-values", "1.0,0.2", "--points", "30") == 0
    rep = read_json(tmp_path / "phase.json")
    assert rep["max_residual"] <= 1e-10
    assert rep["curves"][0]["points"] == 30
    assert rep["curves"][1]["points"] == 0 and rep["curves"][1]["note"]
    _, _, rows = read_csv(tmp_path / "phase.csv")
    assert rows[0][2:] == ["1", "0"]
    s = [float(r[2]) for r in rows]
    assert all(x > y for x, y in zip(s, s[1:]))


def test_phase_default_levels_recorded(tmp_path):
    assert run(tmp_path, "phase", "--n-curves", "4", "--points", "10") == 0
    meta, _, _ = read_csv(tmp_path / "phase.csv")
    assert len(meta["c_values"]) == 4


def test_counterexample_command(tmp_path):
    assert run(tmp_path, "counterexample") == 0
    rep = read_json(tmp_path / "counterexample.json")
    assert rep["passed"] and rep["criterion"] > 1
    assert rep["r_inf_delta"] > rep["r_inf"]


@pytest.mark.slow
def test_verify_default_passes(tmp_path):
    assert run(tmp_path, "verify", "--oracle-samples", "5") == 0
    rep = read_json(tmp_path / "verify.json")
    assert rep["passed"]
    assert rep["checks"]["counterexample"]["criterion"] > 1
    assert all(c["status"] != "fail" for c in rep["checks"].values())


def test_verify_rejects_inverted_rates(tmp_path, capsys):
    assert run(tmp_path, "verify", "--beta-n", "0.1", "--beta-q", "0.2") == 2
    assert "config error" in capsys.readouterr().err
    assert not (tmp_path / "verify.json").exists()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"T": 20, "i0": 1e-3, "t0_step": 5}))
    assert run(tmp_path, "scan", "--config", str(cfg), "--T", "10", "--t0-max", "20") == 0
    meta = read_json(tmp_path / "scan.json")["meta"]["config"]
    assert meta["T"] == 10.0 and meta["i0"] == 1e-3 and meta["t0_step"] == 5.0 and meta["t0_max"] == 20.0
    assert meta["gamma"] == 1 / 14


@pytest.mark.parametrize(
    "text, fragment",
    [
        ('{\n  "T": 30,\n  "bogus": 1\n}', "run.json:3: unknown key 'bogus'"),
        ('{\n  "T": 30,\n  "T": 10\n}', "run.json:2: duplicate key 'T'"),
        ('{\n  "T": 30,\n  "i0": x\n}', "run.json:3:9: invalid JSON"),
        ('{\n  "T": {"a": 1}\n}', "run.json:2: config must be flat"),
        ('{\n  "beta_n": 0.2,\n  "beta_q": 0.1,\n  "r0n": 2\n}', "run.json:4: give either"),
        ('{\n  "seed": 1.5\n}', "run.json:2: seed must be an integer"),
    ],
)
def test_config_errors_are_line_precise(tmp_path, capsys, text, fragment):
    cfg = tmp_path / "run.json"
    cfg.write_text(text)
    assert run(tmp_path, "optimize", "--config", str(cfg)) == 2
    assert fragment in capsys.readouterr().err


def test_rate_flags_are_exclusive(tmp_path):
    assert run(tmp_path, "optimize", "--beta-n", "0.2", "--r0n", "2") == 2
    assert run(tmp_path, "optimize", "--beta-n", "0.2") == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--horizon", "-1"],
        ["scan", "--t0-step", "0"],
        ["sweep", "--ratio-values", "0.5,1.0"],
        ["optimize", "--T", "0"],
        ["optimize", "--i0", "1.5"],
        ["optimize", "--threads", "0"],
    ],
)
def test_invalid_values_exit_2(tmp_path, argv):
    assert run(tmp_path, *argv) == 2


def test_env_overrides_out(tmp_path, monkeypatch):
    target = tmp_path / "env"
    monkeypatch.setenv("QSCHED_OUT", str(target))
    assert cli.main(["optimize", "--out", str(tmp_path / "flag")]) == 0
    assert (target / "optimize.json").exists()
    assert not (tmp_path / "flag").exists()


def test_threads_do_not_change_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "scan", "--t0-max", "40", "--threads", "1") == 0
    assert run(b, "scan", "--t0-max", "40") == 0
    _, _, rows_a = read_csv(a / "scan.csv")
    _, _, rows_b = read_csv(b / "scan.csv")
    assert rows_a == rows_b


def test_counterexample_without_witness_exits_1(tmp_path):
    # the witness needs s = rho_q < 1, which R0_q < 1 rules out
    assert run(tmp_path, "counterexample", "--r0n", "1.2", "--r0q", "0.2") == 1
    rep = read_json(tmp_path / "counterexample.json")
    assert not rep["passed"] and rep["message"]
