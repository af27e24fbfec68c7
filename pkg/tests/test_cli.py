import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from etlpv import io as fio
from etlpv.cli import main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
FORMATION = str(SCENARIOS / "formation.yaml")


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert main(["synth", FORMATION, "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="session")
def run_dirs(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    dirs = {}
    for kind in ("zoh", "ole", "cle"):
        assert main(["simulate", FORMATION, "--controller", str(synth_dir / "controllers.json"),
                     "--estimator", kind, "--out", str(out)]) == 0
        dirs[kind] = out / kind
    return dirs


def test_synth_writes_artifacts(synth_dir, capsys):
    cert = fio.read_certificate(synth_dir / "certificate.json")
    ctrl = fio.read_controllers(synth_dir / "controllers.json")
    assert cert.gamma == pytest.approx(ctrl.gamma)
    assert min(cert.min_eig_per_block.values()) > 0
    assert ctrl.F_x[0].shape == (2, 4)


def test_synth_output_root_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ETLPV_OUTPUT_ROOT", str(tmp_path))
    assert main(["synth", FORMATION]) == 0
    assert (tmp_path / "runs" / "formation" / "certificate.json").is_file()
    out = capsys.readouterr().out
    assert "status: feasible" in out and "min_eig=" in out


def test_synth_infeasible_gamma(tmp_path, capsys):
    data = yaml.safe_load(Path(FORMATION).read_text())
    data["synthesis"]["gamma"] = 1e-9
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text(yaml.safe_dump(data))
    assert main(["synth", str(cfg), "--out", str(tmp_path)]) == 2
    assert capsys.readouterr().err.startswith("error: infeasible:")
    assert not (tmp_path / "controllers.json").exists()


def test_simulate_outputs(run_dirs):
    for kind, d in run_dirs.items():
        metrics = fio.read_metrics(d / "metrics.json")
        meta, cols = fio.read_trace_csv(d / "trace.csv")
        assert meta["estimator"] == kind and meta["steps"] == 3000 and meta["handle_offset"] == 0.5
        assert int(sum(cols[f"trigger_{i}"].sum() for i in range(3))) == metrics["trigger_events"]
        lines = (d / "messages.csv").read_text().splitlines()
        assert len(lines) == 1 + metrics["trigger_events"]
    events = {k: fio.read_metrics(d / "metrics.json")["trigger_events"] for k, d in run_dirs.items()}
    assert events["cle"] < events["ole"] < events["zoh"]


def test_report_recomputes_table(run_dirs, tmp_path, capsys):
    out = tmp_path / "report"
    assert main(["report", *(str(d) for d in run_dirs.values()), "--out", str(out)]) == 0
    table = json.loads((out / "table.json").read_text())
    for row, d in zip(table["rows"], run_dirs.values()):
        metrics = fio.read_metrics(d / "metrics.json")
        assert abs(row["mean_formation_error"] - metrics["mean_formation_error"]) <= 1e-12
        assert row["trigger_events"] == metrics["trigger_events"]
        _, cols = fio.read_trace_csv(d / "trace.csv")
        eta = fio.signal_matrix(cols, "eta", 3)
        assert abs(np.linalg.norm(eta.reshape(3000, -1), axis=1).mean() - row["mean_formation_error"]) <= 1e-12
    assert (out / "zoh_formation.csv").is_file() and (out / "cle_xy.csv").is_file()
    assert "Trigger events" in capsys.readouterr().out


def test_report_rejects_non_run_directory(tmp_path, capsys):
    assert main(["report", str(tmp_path), "--out", str(tmp_path / "r")]) == 1
    assert "no trace.csv" in capsys.readouterr().err


@pytest.mark.slow
def test_verify_fresh_certificate_passes(synth_dir, capsys):
    code = main(["verify", FORMATION, "--certificate", str(synth_dir / "certificate.json"),
                 "--controller", str(synth_dir / "controllers.json")])
    out = capsys.readouterr().out
    assert code == 0, out
    assert out.count("PASS") == 4


def test_verify_corrupted_controller_fails(synth_dir, tmp_path, capsys):
    d = json.loads((synth_dir / "controllers.json").read_text())
    d["F_x"] = (10 * np.array(d["F_x"])).tolist()
    d["F_zeta"] = (10 * np.array(d["F_zeta"])).tolist()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    assert main(["verify", FORMATION, "--certificate", str(synth_dir / "certificate.json"),
                 "--controller", str(bad)]) == 3
    out = capsys.readouterr().out
    assert "FAIL modal_stability" in out


def test_simulate_cle_on_path_is_config_error(synth_dir, tmp_path, capsys):
    code = main(["simulate", str(SCENARIOS / "path4.yaml"), "--controller", str(synth_dir / "controllers.json"),
                 "--estimator", "cle", "--out", str(tmp_path)])
    assert code == 1
    assert "fully connected" in capsys.readouterr().err


def test_controller_dimension_mismatch(synth_dir, tmp_path):
    d = json.loads((synth_dir / "controllers.json").read_text())
    d["F_x"] = [np.zeros((2, 3)).tolist()] * 2
    bad = tmp_path / "dims.json"
    bad.write_text(json.dumps(d))
    assert main(["simulate", FORMATION, "--controller", str(bad), "--out", str(tmp_path)]) == 1


def test_runtime_check_exit_code(synth_dir, tmp_path, capsys):
    data = yaml.safe_load(Path(FORMATION).read_text())
    data["simulation"]["initial_states"] = [[0, 0, 0, 5.0], [0, 0, 0, 0], [0, 0, 0, 0]]
    cfg = tmp_path / "fast.yaml"
    cfg.write_text(yaml.safe_dump(data))
    assert main(["simulate", str(cfg), "--controller", str(synth_dir / "controllers.json"),
                 "--out", str(tmp_path)]) == 3
    assert capsys.readouterr().err.startswith("error: runtime-check:")


@pytest.mark.parametrize("argv", [[], ["bogus"], ["synth"], ["simulate", FORMATION]])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1


def test_malformed_config(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("name: x\nmodel: {builtin: unicycle}\n")
    assert main(["synth", str(cfg)]) == 1
    assert capsys.readouterr().err.startswith("error: config:")


def test_single_run_report_has_one_row(run_dirs, tmp_path, capsys):
    assert main(["report", str(run_dirs["ole"]), "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "table.json").read_text())["rows"]
    assert [r["estimator"] for r in rows] == ["ole"]
    table = (tmp_path / "table.txt").read_text().splitlines()
    assert len(table) == 3 and table[0].startswith("Estimator")


def test_equilibrium_scenario_has_no_events(tmp_path, capsys):
    cfg = str(SCENARIOS / "equilibrium.yaml")
    assert main(["synth", cfg, "--out", str(tmp_path)]) == 0
    assert main(["simulate", cfg, "--controller", str(tmp_path / "controllers.json"), "--out", str(tmp_path)]) == 0
    assert fio.read_metrics(tmp_path / "cle" / "metrics.json")["trigger_events"] == 0


def test_single_agent_verify(tmp_path, capsys):
    data = {
        "name": "single",
        "model": {"vertices": [{"A": [[0.5]], "Bw": [[1.0]], "Bu": [[1.0]], "Cy": [[1.0]]}],
                  "polytope": [[0.0]], "scheduling": "constant"},
        "graph": {"nodes": 1, "complete": True},
        "synthesis": {"gamma": 2.0, "lambda_pair": [1.0, 1.0]},
        "simulation": {"horizon": 5.0, "reference": [[1.0]]},
        "verification": {"gain_trials": 3, "gain_horizon": 5.0},
    }
    cfg = tmp_path / "single.yaml"
    cfg.write_text(yaml.safe_dump(data))
    assert main(["synth", str(cfg), "--out", str(tmp_path)]) == 0
    code = main(["verify", str(cfg), "--certificate", str(tmp_path / "certificate.json"),
                 "--controller", str(tmp_path / "controllers.json")])
    out = capsys.readouterr().out
    assert code == 0, out
    assert "PASS network_equivalence: max deviation 0.000e+00" in out
