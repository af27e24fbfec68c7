"""YAML scenario configuration.

A config document has the sections ``model``, ``graph``, ``synthesis``,
``simulation``, ``verification`` and ``output``.  Unknown keys are rejected.
Matrices are row-major nested lists.  Agents are numbered from 0.

Example::

    model: {builtin: unicycle, params: {m: 1.0, I: 1.0, d: 0.5, vt_range: [-3.0, 3.0]}}
    graph: {nodes: 3, complete: true}
    synthesis: {gamma: auto, sigma: 1.0e-3, alpha_z: -0.5, beta_z: 0.1}
    simulation:
      Ts: 0.01
      horizon: 30.0
      estimator: zoh
      reference: [[1.0, 0.0], [0.0, 0.5], [0.5, -0.5]]
      disturbances: [{agent: 0, channel: 0, start: 4.0, end: 4.5, magnitude: 1.0}]
"""
from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator

from .errors import ConfigError, EtlpvError, ScenarioError
from .graph import CommGraph, build_laplacian
from .lpv import ParameterPolytope, PolytopicLpvModel, SchedulingMap, VertexMatrices, build_unicycle_lpv
from .sim import Disturbance, NetworkScenario
from .synthesis.problem import Mode, SynthesisProblem

Matrix = list[list[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class UnicycleParams(_Strict):
    m: PositiveFloat = 1.0
    I: PositiveFloat = 1.0
    d: PositiveFloat = 0.5
    vt_range: tuple[float, float] = (-3.0, 3.0)


class VertexSpec(_Strict):
    A: Matrix
    Bw: Matrix
    Bu: Matrix
    Cy: Matrix


class ModelConfig(_Strict):
    builtin: Optional[Literal["unicycle"]] = None
    params: Optional[UnicycleParams] = None
    polytope: Optional[Matrix] = None
    vertices: Optional[list[VertexSpec]] = None
    scheduling: str = "state_component:3"
    scheduling_value: Optional[list[float]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.builtin is None) == (self.vertices is None):
            raise ValueError("give either `builtin` or explicit `vertices`")
        if self.vertices is not None and self.polytope is None:
            raise ValueError("explicit vertices need a `polytope` (one row per vertex)")
        if self.builtin is not None and (self.polytope is not None or self.scheduling_value is not None):
            raise ValueError("`polytope`/`scheduling_value` only apply to explicit models")
        return self


class GraphConfig(_Strict):
    nodes: int = Field(ge=1)
    complete: bool = False
    edges: Optional[list[tuple[int, int]]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if self.complete == (self.edges is not None):
            raise ValueError("set `complete: true` or list `edges`, not both")
        return self


class SynthesisConfig(_Strict):
    gamma: Union[Literal["auto"], PositiveFloat] = "auto"
    sigma: PositiveFloat = 1e-3
    alpha_z: float = -0.5
    beta_z: float = 0.1
    mode: Literal["feasibility", "minimize_gamma"] = "feasibility"
    auto_margin: float = Field(default=1.1, ge=1.0)
    epsilon: float = Field(default=1e-7, ge=0.0)
    lambda_pair: Optional[tuple[float, float]] = None


class DisturbanceConfig(_Strict):
    agent: int = Field(ge=0)
    channel: int = Field(ge=0)
    start: float
    end: float
    magnitude: float


class SimulationConfig(_Strict):
    Ts: PositiveFloat = 0.01
    horizon: PositiveFloat = 30.0
    estimator: Literal["zoh", "ole", "cle"] = "zoh"
    sigma: Optional[PositiveFloat] = None
    reference: Matrix
    disturbances: list[DisturbanceConfig] = []
    initial_states: Optional[Matrix] = None
    clamp_scheduling: bool = False

    @property
    def horizon_steps(self) -> int:
        return int(round(self.horizon / self.Ts))


class VerificationConfig(_Strict):
    seed: int = 0
    stability_samples: int = Field(default=100, ge=0)
    gain_trials: int = Field(default=20, ge=1)
    gain_horizon: PositiveFloat = 15.0
    max_equivalence_nodes: int = 4


class OutputConfig(_Strict):
    directory: str = "runs"
    formats: list[Literal["csv", "json"]] = ["csv", "json"]


class ScenarioConfig(_Strict):
    name: str = "scenario"
    model: ModelConfig
    graph: GraphConfig
    synthesis: SynthesisConfig = SynthesisConfig()
    simulation: SimulationConfig
    verification: VerificationConfig = VerificationConfig()
    output: OutputConfig = OutputConfig()

    def canonical(self) -> dict:
        return self.model_dump(mode="json")


def parse_config(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"{loc}: {first['msg']} ({exc.error_count()} error(s))") from exc


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc.__class__.__name__})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.canonical(), sort_keys=False)


# ---------------------------------------------------------------------------
# config -> domain objects
# ---------------------------------------------------------------------------

def build_model(cfg: ScenarioConfig) -> PolytopicLpvModel:
    mc = cfg.model
    Ts = cfg.simulation.Ts
    try:
        if mc.builtin == "unicycle":
            p = mc.params or UnicycleParams()
            return build_unicycle_lpv(m=p.m, I=p.I, d=p.d, Ts=Ts, vt_range=tuple(p.vt_range))
        polytope = ParameterPolytope(np.array(mc.polytope, dtype=float))
        verts = tuple(VertexMatrices(*(np.array(getattr(v, k), dtype=float) for k in ("A", "Bw", "Bu", "Cy")))
                      for v in mc.vertices)
        smap = SchedulingMap.parse(mc.scheduling, mc.scheduling_value)
        return PolytopicLpvModel(polytope, verts, smap, name=cfg.name)
    except (EtlpvError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def build_graph(cfg: ScenarioConfig) -> CommGraph:
    gc = cfg.graph
    try:
        if gc.complete:
            return CommGraph.complete(gc.nodes)
        return CommGraph.from_edges(gc.nodes, gc.edges)
    except (EtlpvError, ValueError) as exc:
        raise ConfigError(f"graph: {exc}") from exc


def unicycle_handle_offset(cfg: ScenarioConfig) -> float | None:
    if cfg.model.builtin == "unicycle":
        return (cfg.model.params or UnicycleParams()).d
    return None


def design_lambda_pair(cfg: ScenarioConfig, graph: CommGraph) -> tuple[float, float]:
    if cfg.synthesis.lambda_pair is not None:
        return tuple(cfg.synthesis.lambda_pair)
    if graph.node_count < 2:
        raise ConfigError("synthesis.lambda_pair is required for a single-agent graph")
    spec = build_laplacian(graph)
    return spec.lambda2, spec.lambda_max


def build_problem(cfg: ScenarioConfig, model: PolytopicLpvModel, graph: CommGraph,
                  gamma: float | None = None) -> SynthesisProblem:
    """Synthesis problem; ``gamma`` overrides the configured value (used for ``auto``)."""
    sc = cfg.synthesis
    mode = Mode(sc.mode)
    if gamma is None and sc.gamma != "auto":
        gamma = float(sc.gamma)
    if gamma is None and mode is Mode.FEASIBILITY:
        mode = Mode.MINIMIZE_GAMMA_SQUARED
    try:
        return SynthesisProblem(model, design_lambda_pair(cfg, graph), gamma, sc.sigma, sc.alpha_z, sc.beta_z,
                                mode, sc.epsilon)
    except ValueError as exc:
        raise ConfigError(f"synthesis: {exc}") from exc


def build_scenario(cfg: ScenarioConfig, model: PolytopicLpvModel, graph: CommGraph, controllers,
                   estimator: str | None = None) -> NetworkScenario:
    sim = cfg.simulation
    try:
        scenario = NetworkScenario(
            model=model,
            graph=graph,
            controllers=controllers,
            estimator=estimator or sim.estimator,
            sigma=sim.sigma if sim.sigma is not None else cfg.synthesis.sigma,
            Ts=sim.Ts,
            horizon_steps=sim.horizon_steps,
            reference=np.array(sim.reference, dtype=float),
            disturbances=[Disturbance(d.agent, d.channel, d.start, d.end, d.magnitude) for d in sim.disturbances],
            initial_states=None if sim.initial_states is None else np.array(sim.initial_states, dtype=float),
            alpha_z=cfg.synthesis.alpha_z,
            beta_z=cfg.synthesis.beta_z,
            clamp_scheduling=sim.clamp_scheduling,
            name=cfg.name,
        )
        scenario.validate()
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ConfigError(f"simulation: {exc}") from exc
    return scenario
