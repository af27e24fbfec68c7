from pathlib import Path

import numpy as np
import pytest
import yaml

from etlpv.config import (build_graph, build_model, build_problem, build_scenario, dump_config, load_config,
                          parse_config)
from etlpv.errors import ConfigError, ScenarioError
from etlpv.synthesis import Mode

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _base():
    return yaml.safe_load((SCENARIOS / "formation.yaml").read_text())


@pytest.mark.parametrize("name", ["formation", "path4", "equilibrium"])
def test_shipped_scenarios_load_and_round_trip(name):
    cfg = load_config(SCENARIOS / f"{name}.yaml")
    again = parse_config(yaml.safe_load(dump_config(cfg)))
    assert again == cfg
    assert build_graph(cfg).node_count == len(cfg.simulation.reference)


def test_unknown_key_rejected():
    data = _base()
    data["simulation"]["horizn"] = 10
    with pytest.raises(ConfigError, match="horizn"):
        parse_config(data)


def test_bad_yaml_and_missing_file(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("model: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(bad)


def test_defaults_and_model():
    cfg = parse_config(_base())
    model = build_model(cfg)
    assert model.dims == (4, 2, 2, 2)
    assert tuple(model.polytope.vertices[:, 0]) == (-3.0, 3.0)
    assert cfg.simulation.horizon_steps == 3000


def test_auto_gamma_becomes_minimisation():
    cfg = parse_config(_base())
    p = build_problem(cfg, build_model(cfg), build_graph(cfg))
    assert p.mode is Mode.MINIMIZE_GAMMA_SQUARED and p.lambda_pair == (3.0, 3.0)
    assert build_problem(cfg, build_model(cfg), build_graph(cfg), gamma=2.0).mode is Mode.FEASIBILITY


def test_explicit_model_and_single_agent():
    data = {
        "model": {"vertices": [{"A": [[0.5]], "Bw": [[1.0]], "Bu": [[1.0]], "Cy": [[1.0]]}],
                  "polytope": [[0.0]], "scheduling": "constant"},
        "graph": {"nodes": 1, "complete": True},
        "synthesis": {"gamma": 2.0},
        "simulation": {"reference": [[1.0]]},
    }
    cfg = parse_config(data)
    with pytest.raises(ConfigError, match="lambda_pair"):
        build_problem(cfg, build_model(cfg), build_graph(cfg))
    data["synthesis"]["lambda_pair"] = [1.0, 1.0]
    cfg = parse_config(data)
    assert build_problem(cfg, build_model(cfg), build_graph(cfg)).lambdas == (1.0,)


def test_graph_errors_wrapped():
    data = _base()
    data["graph"] = {"nodes": 3, "edges": [[0, 1]]}
    with pytest.raises(ConfigError, match="graph"):
        build_graph(parse_config(data))
    data["graph"] = {"nodes": 3, "complete": True, "edges": [[0, 1]]}
    with pytest.raises(ConfigError):
        parse_config(data)


def test_cle_on_path_graph_rejected(certified):
    cfg = load_config(SCENARIOS / "path4.yaml")
    with pytest.raises(ScenarioError):
        build_scenario(cfg, build_model(cfg), build_graph(cfg), certified[1], estimator="cle")


def test_scenario_from_config(certified):
    cfg = load_config(SCENARIOS / "formation.yaml")
    sc = build_scenario(cfg, build_model(cfg), build_graph(cfg), certified[1])
    assert sc.horizon_steps == 3000 and sc.sigma == 1e-3
    np.testing.assert_array_equal(sc.reference, cfg.simulation.reference)
    assert sc.disturbance_at(400)[0, 0] == 1.0 and sc.disturbance_at(450)[0, 0] == 0.0
