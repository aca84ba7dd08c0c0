import json
import subprocess
import sys

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from intermittent_attitude.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main, write_outputs
from intermittent_attitude.config import ConfigError, ScenarioConfig, default_config, parse_config


def write_config(tmp_path, **sections):
    data = default_config().model_dump(mode="json")
    for section, fields in sections.items():
        data[section].update(fields)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--out-dir", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["events.jsonl", "summary.json", "telemetry.csv"]
    summary = json.loads((out / "summary.json").read_text())
    events = [json.loads(l) for l in (out / "events.jsonl").read_text().splitlines()]
    assert summary["action_count"] > 0
    assert sum(e["kind"] == "TURN_ON" for e in events) == summary["trigger_counts"]["TURN_ON"]
    assert "action_count=" in capsys.readouterr().out


def test_params_check_ok(capsys):
    assert main(["params-check"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "C1" in out and "r_on" in out and "VIOLATED" not in out


def test_params_check_flags_C1(tmp_path, capsys):
    cfg = write_config(tmp_path, gains={"K_u": 20.0})
    assert main(["params-check", "--config", str(cfg)]) == EXIT_VERIFY
    assert "C1" in capsys.readouterr().out.split("parameter check failed:")[1]


@pytest.mark.parametrize(
    "section, fields, path",
    [
        ("gains", {"P_b": -0.2}, "gains.P_b"),
        ("gains", {"K_omega_Nms_rad": [1.0, 0.0, 1.0]}, "gains.K_omega_Nms_rad"),
        ("simulation", {"dt_s": 0.03}, "simulation.dt_s"),
        ("trigger", {"rho_inf_rad2_s2": 0.1}, "trigger.rho_inf_rad2_s2"),
        ("trigger", {"actuation_grid_s": 0.25}, "trigger.actuation_grid_s"),
        ("initial", {"q_s0": [1.0, 1.0, 0.0, 0.0]}, "initial.q_s0"),
    ],
)
def test_config_errors_exit_1_with_path(tmp_path, capsys, section, fields, path):
    cfg = write_config(tmp_path, **{section: fields})
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out-dir", str(out)]) == EXIT_CONFIG
    assert path in capsys.readouterr().err
    assert not out.exists() or not any(out.iterdir())


def test_unknown_field_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config({"gains": {"P_bb": 0.5}})
    assert info.value.path == "gains.P_bb"


def test_unreadable_config(tmp_path):
    assert main(["params-check", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["params-check", "--config", str(bad)]) == EXIT_CONFIG


@pytest.mark.parametrize("argv", [[], ["launch"], ["run"], ["run", "--out-dir", "x", "--bogus"], ["params-check", "--q-e0-min", "abc"]])
def test_usage_errors_exit_64(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == EXIT_USAGE


def test_divergence_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, initial={"q_s0": [1.0, 0.0, 0.0, 0.0]}, simulation={"duration_s": 2.0})
    assert main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "out")]) == EXIT_DIVERGED
    assert "diverged" in capsys.readouterr().err


def test_compare(tmp_path):
    out = tmp_path / "cmp"
    assert main(["compare", "--out-dir", str(out)]) == EXIT_OK
    comp = json.loads((out / "comparison.json").read_text())
    assert comp["periodic"]["action_count"] == 150
    assert comp["action_count_ratio"] == pytest.approx(comp["intermittent"]["action_count"] / 150)
    assert (out / "summary_intermittent.json").exists() and (out / "summary_periodic.json").exists()


def test_verify_bounds(tmp_path):
    out = tmp_path / "vb"
    assert main(["verify-bounds", "--out-dir", str(out)]) == EXIT_OK
    rep = json.loads((out / "verification.json").read_text())
    assert rep["violation_count"] == 0
    assert rep["judgment_exceedances_outside_windows"] == []
    assert rep["min_margin"] > 0
    assert all(rep["positivity_flags"].values())
    assert rep["segments"][0]["kind"].startswith("OFF")


def test_verify_bounds_invalid_constants(tmp_path):
    cfg = write_config(tmp_path, gains={"K_u": 20.0})
    out = tmp_path / "vb"
    assert main(["verify-bounds", "--config", str(cfg), "--out-dir", str(out)]) == EXIT_VERIFY
    rep = json.loads((out / "verification.json").read_text())
    assert rep["positivity_flags"]["C1"] is False and "error" in rep


def test_atomic_writes(tmp_path):
    def ok(path):
        with open(path, "w") as fh:
            fh.write("x")

    def boom(path):
        raise RuntimeError("disk full")

    with pytest.raises(RuntimeError):
        write_outputs(tmp_path, {"a.txt": ok, "b.txt": boom})
    assert list(tmp_path.iterdir()) == []


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "intermittent_attitude", "params-check"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def test_shipped_config_matches_defaults():
    assert default_config() == ScenarioConfig()


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    P_b=st.floats(0.01, 0.99),
    K_u=st.floats(0.01, 10.0),
    grid=st.sampled_from([0.0, 0.1, 0.5, 1.0, 2.0]),
    hold=st.sampled_from(["from-turn-on", "per-control-period"]),
)
def test_config_round_trip(P_b, K_u, grid, hold):
    data = default_config().model_dump(mode="json")
    data["gains"].update(P_b=P_b, K_u=K_u)
    data["trigger"].update(actuation_grid_s=grid, hold=hold)
    cfg = parse_config(data)
    again = parse_config(json.loads(cfg.to_json()))
    assert again == cfg
    sc = again.build()
    assert sc.gains.P_b == P_b and sc.trigger.actuation_grid == grid
