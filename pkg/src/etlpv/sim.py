"""Discrete-time simulation of the event-triggered formation network.

One call to :meth:`Simulator.step` is a synchronous round over all agents:

1. every agent predicts outputs with its estimator,
2. trigger resolution: agents whose estimation error violates
   ``e'e <= sigma * eta_hat' eta_hat`` broadcast, messages are applied and the
   check is repeated until nobody else fires (at most ``N`` rounds),
3. ``zeta += eta_hat``, ``u = F_zeta zeta + F_x x`` (gains blended at the
   agent's own scheduling value),
4. performance filter ``z~+ = -alpha_z z~ + beta_z (r - y)``, ``z = (L kron I) z~``,
5. plant update, then every estimator advances one step.

Nothing in the loop is random, so identical scenarios give identical traces.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels as kernels
from .errors import NonConvergence, NumericalInstability, OutOfPolytope, ScenarioError
from .estimators import (KINDS, NetworkTruth, PrescribedScheduling, StateScheduling, TriggerMessage,
                         check_graph, make_estimators)
from .graph import CommGraph
from .lpv import PolytopicLpvModel, coordinates_rows
from .synthesis.problem import VertexControllerSet

log = logging.getLogger(__name__)

OVERFLOW_LIMIT = 1e9


@dataclass(frozen=True)
class Disturbance:
    """Constant ``magnitude`` on input channel ``channel`` of ``agent`` for t in [start, end)."""

    agent: int
    channel: int
    start: float
    end: float
    magnitude: float


@dataclass
class NetworkScenario:
    model: PolytopicLpvModel
    graph: CommGraph
    controllers: VertexControllerSet
    estimator: str
    sigma: float
    Ts: float
    horizon_steps: int
    reference: np.ndarray                      # (N, n_y) constant or (H, N, n_y)
    disturbances: Sequence[Disturbance] = ()
    disturbance_series: np.ndarray | None = None  # (H, N, n_w), added to the pulses
    initial_states: np.ndarray | None = None   # (N, n_x); zero when omitted
    alpha_z: float | None = None               # default: the controllers' filter
    beta_z: float | None = None
    scheduling: np.ndarray | None = None       # prescribed common theta, (H + 1, n_theta)
    clamp_scheduling: bool = False
    name: str = "scenario"

    def __post_init__(self):
        self.reference = np.asarray(self.reference, dtype=float)
        if self.alpha_z is None:
            self.alpha_z = self.controllers.alpha_z
        if self.beta_z is None:
            self.beta_z = self.controllers.beta_z
        self.disturbances = tuple(self.disturbances)

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    def validate(self) -> None:
        nx, nw, nu, ny = self.model.dims
        N, H = self.node_count, self.horizon_steps
        if self.estimator not in KINDS:
            raise ScenarioError(f"unknown estimator {self.estimator!r}; expected one of {KINDS}")
        if not self.sigma > 0:
            raise ScenarioError("trigger level sigma must be positive")
        if not self.Ts > 0:
            raise ScenarioError("sampling time must be positive")
        if int(H) != H or H < 1:
            raise ScenarioError("horizon must be at least one step")
        if self.reference.shape not in ((N, ny), (H, N, ny)):
            raise ScenarioError(f"reference has shape {self.reference.shape}, expected ({N}, {ny}) or ({H}, {N}, {ny})")
        if self.controllers.F_x[0].shape != (nu, nx) or self.controllers.F_zeta[0].shape != (nu, ny):
            raise ScenarioError("controller gains do not match the model dimensions")
        if len(self.controllers.F_x) != self.model.vertex_count:
            raise ScenarioError("one controller per polytope vertex is required")
        for d in self.disturbances:
            if not (0 <= d.agent < N and 0 <= d.channel < nw):
                raise ScenarioError(f"disturbance {d} addresses a missing agent or channel")
            if d.end < d.start:
                raise ScenarioError(f"disturbance {d} ends before it starts")
        if self.disturbance_series is not None and np.shape(self.disturbance_series) != (H, N, nw):
            raise ScenarioError(f"disturbance series must have shape ({H}, {N}, {nw})")
        if self.initial_states is not None and np.shape(self.initial_states) != (N, nx):
            raise ScenarioError(f"initial states must have shape ({N}, {nx})")
        if self.scheduling is not None:
            th = np.asarray(self.scheduling, dtype=float)
            if th.ndim == 1:
                th = th[:, None]
            if th.shape != (H + 1, self.model.polytope.dimension):
                raise ScenarioError(f"prescribed scheduling must have shape ({H + 1}, {self.model.polytope.dimension})")
        if not abs(self.alpha_z) < 1:
            raise ScenarioError("performance filter pole must satisfy |alpha_z| < 1")
        check_graph(self.estimator, self.graph)

    def reference_at(self, k: int) -> np.ndarray:
        return self.reference if self.reference.ndim == 2 else self.reference[k]

    def disturbance_at(self, k: int) -> np.ndarray:
        nw = self.model.dims[1]
        W = np.zeros((self.node_count, nw))
        if self.disturbance_series is not None:
            W += self.disturbance_series[k]
        t = k * self.Ts
        for d in self.disturbances:
            if d.start <= t < d.end:
                W[d.agent, d.channel] += d.magnitude
        return W

    def scheduling_policy(self):
        if self.scheduling is None:
            return StateScheduling(self.model)
        th = np.asarray(self.scheduling, dtype=float)
        return PrescribedScheduling(th[:, None] if th.ndim == 1 else th)


@dataclass
class WorldState:
    k: int
    x: np.ndarray       # (N, n_x)
    zeta: np.ndarray    # (N, n_y)
    ztilde: np.ndarray  # (N, n_y)


class StepRecord(NamedTuple):
    theta: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray      # each agent's own estimate of itself after resolution
    e: np.ndarray
    eta: np.ndarray
    eta_hat: np.ndarray
    u: np.ndarray
    z: np.ndarray
    w: np.ndarray
    r: np.ndarray
    triggers: np.ndarray   # bool (N,)
    rounds: int


@dataclass
class MessageRecord:
    step: int
    sender: int
    kind: str
    scalar_count: int
    message: TriggerMessage | None = field(default=None, repr=False, compare=False)


_STEP_FIELDS = StepRecord._fields[:-1]


@dataclass
class SimulationTrace:
    """Signals per step; ``x``, ``zeta`` and ``ztilde`` also hold the final state (length H + 1)."""

    Ts: float
    estimator: str
    sigma: float
    x: np.ndarray
    zeta: np.ndarray
    ztilde: np.ndarray
    theta: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    e: np.ndarray
    eta: np.ndarray
    eta_hat: np.ndarray
    u: np.ndarray
    z: np.ndarray
    w: np.ndarray
    r: np.ndarray
    triggers: np.ndarray
    rounds: np.ndarray
    messages: list[MessageRecord] = field(default_factory=list)
    homogeneous: bool = False

    @property
    def horizon(self) -> int:
        return self.triggers.shape[0]

    @property
    def node_count(self) -> int:
        return self.triggers.shape[1]


@dataclass
class RunMetrics:
    estimator: str
    horizon_steps: int
    node_count: int
    mean_formation_error: float
    trigger_events: int
    trigger_rate: float
    trigger_rate_per_agent_step: float
    events_per_agent: list[int]
    payload_scalars: int
    max_resolution_rounds: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def compute_metrics(trace: SimulationTrace) -> RunMetrics:
    """Mean of ``||eta_k||`` over the horizon plus trigger statistics."""
    H, N = trace.triggers.shape
    norms = np.linalg.norm(trace.eta.reshape(H, -1), axis=1)
    events = int(trace.triggers.sum())
    return RunMetrics(
        estimator=trace.estimator,
        horizon_steps=H,
        node_count=N,
        mean_formation_error=float(norms.mean()),
        trigger_events=events,
        trigger_rate=events / H,
        trigger_rate_per_agent_step=events / (H * N),
        events_per_agent=[int(v) for v in trace.triggers.sum(axis=0)],
        payload_scalars=int(sum(m.scalar_count for m in trace.messages)),
        max_resolution_rounds=int(trace.rounds.max()) if H else 0,
    )


def trigger_mask(e, eta_hat, sigma: float) -> np.ndarray:
    """Rows where ``e'e > sigma * eta_hat' eta_hat`` (the agent must broadcast)."""
    e, eta_hat = np.atleast_2d(e), np.atleast_2d(eta_hat)
    return np.einsum("ij,ij->i", e, e) > sigma * np.einsum("ij,ij->i", eta_hat, eta_hat)


class Simulator:
    def __init__(self, scenario: NetworkScenario):
        scenario.validate()
        self.scenario = sc = scenario
        nx, nw, nu, ny = sc.model.dims
        N = sc.node_count
        self.L = sc.graph.laplacian_matrix()
        self.policy = sc.scheduling_policy()
        self.estimators = make_estimators(sc.estimator, sc.graph, sc.model, sc.controllers,
                                          scheduling=self.policy, clamp=sc.clamp_scheduling)
        self._Fx, self._Fz = sc.controllers.Fx_stack, sc.controllers.Fz_stack
        self.trackers = [[i for i, est in enumerate(self.estimators) if j in est.tracked] for j in range(N)]
        x0 = np.zeros((N, nx)) if sc.initial_states is None else np.array(sc.initial_states, dtype=float)
        self.state = WorldState(0, x0, np.zeros((N, ny)), np.zeros((N, ny)))
        self.messages: list[MessageRecord] = []
        truth = self._truth(self.state)
        for est in self.estimators:
            est.initialize(truth)

    # -- helpers -------------------------------------------------------------
    def _theta(self, X, k) -> tuple[np.ndarray, np.ndarray]:
        theta = self.policy.theta(X, k)
        try:
            alphas = coordinates_rows(self.scenario.model, theta, clamp=self.scenario.clamp_scheduling)
        except OutOfPolytope as exc:
            exc.step = k
            raise
        return theta, alphas

    def _truth(self, st: WorldState) -> NetworkTruth:
        theta, alphas = self._theta(st.x, st.k)
        y = kernels.network_output(self.scenario.model.stacks["Cy"], alphas, st.x)
        truth = NetworkTruth(st.x, st.zeta, theta, y)
        truth.alphas = alphas
        return truth

    def _estimates(self, R) -> tuple[np.ndarray, np.ndarray]:
        """Own-output estimates ``y_hat^i`` and formation errors ``eta_hat^i``."""
        N = self.scenario.node_count
        ny = self.scenario.model.dims[3]
        y_own = np.empty((N, ny))
        eta_hat = np.empty((N, ny))
        for i, est in enumerate(self.estimators):
            Yh = est.predict()
            y_own[i] = Yh[i]
            eta_hat[i] = kernels.formation_error(self.L[i], R, Yh)
        return y_own, eta_hat

    # -- one synchronous round ----------------------------------------------
    def step(self) -> StepRecord:
        sc = self.scenario
        st = self.state
        k = st.k
        N = sc.node_count
        R = sc.reference_at(k)
        W = sc.disturbance_at(k)
        truth = self._truth(st)
        y = truth.y

        triggers = np.zeros(N, dtype=bool)
        rounds = 0
        while True:
            y_own, eta_hat = self._estimates(R)
            e = y_own - y
            fire = np.flatnonzero(trigger_mask(e, eta_hat, sc.sigma))
            if fire.size == 0:
                break
            rounds += 1
            if rounds > N:
                raise AssertionError(f"trigger resolution did not reach a fixed point at step {k}")
            for i in fire:  # ordered by agent id
                msg: TriggerMessage = truth.message(sc.estimator, int(i))
                for j in self.trackers[i]:
                    self.estimators[j].apply_message(msg)
                triggers[i] = True
                self.messages.append(MessageRecord(k, int(i), msg.kind, msg.scalar_count, msg))

        eta = np.stack([self.L[i] @ (R - y) for i in range(N)])
        zeta_next = st.zeta + eta_hat
        st_ = sc.model.stacks
        x_next, U = kernels.network_step(st_["A"], st_["Bw"], st_["Bu"], self._Fx,
                                         self._Fz, truth.alphas, st.x, st.zeta, W)
        z = self.L @ st.ztilde
        ztilde_next = -sc.alpha_z * st.ztilde + sc.beta_z * (R - y)
        if not np.all(np.isfinite(x_next)) or np.max(np.abs(x_next)) > OVERFLOW_LIMIT:
            raise NumericalInstability(f"state norm exceeded {OVERFLOW_LIMIT:.0e} at step {k}; closed loop unstable")
        for est in self.estimators:
            est.advance(k, R)
        self.state = WorldState(k + 1, x_next, zeta_next, ztilde_next)
        return StepRecord(truth.theta, y, y_own, e, eta, eta_hat, U, z, W, R.copy(), triggers, rounds)

    def run(self) -> SimulationTrace:
        sc = self.scenario
        H = sc.horizon_steps
        xs, zetas, zts = [self.state.x], [self.state.zeta], [self.state.ztilde]
        rows = []
        for _ in range(H):
            rows.append(self.step())
            xs.append(self.state.x)
            zetas.append(self.state.zeta)
            zts.append(self.state.ztilde)
        cols = {name: np.array([getattr(r, name) for r in rows]) for name in _STEP_FIELDS}
        return SimulationTrace(
            Ts=sc.Ts, estimator=sc.estimator, sigma=sc.sigma,
            x=np.array(xs), zeta=np.array(zetas), ztilde=np.array(zts),
            rounds=np.array([r.rounds for r in rows], dtype=int),
            messages=list(self.messages),
            homogeneous=sc.scheduling is not None,
            **cols,
        )


def run(scenario: NetworkScenario) -> tuple[SimulationTrace, RunMetrics]:
    trace = Simulator(scenario).run()
    return trace, compute_metrics(trace)


# ---------------------------------------------------------------------------
# empirical l2 gain
# ---------------------------------------------------------------------------

@dataclass
class GainReport:
    max_ratio: float
    ratios: list[float]
    gamma: float
    tail_fractions: list[float]

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.gamma * (1 + 1e-3)


def l2_ratio(trace: SimulationTrace, tail_fraction: float = 0.1, tail_tol: float = 1e-9) -> tuple[float, float]:
    """``||z||_2 / ||(r, w)||_2`` for a run from rest, with the z tail-energy share."""
    H = trace.horizon
    z2 = np.einsum("kij,kij->k", trace.z, trace.z)
    f2 = float(np.sum(trace.r ** 2) + np.sum(trace.w ** 2))
    total = float(z2.sum())
    if f2 == 0.0:
        return 0.0, 0.0
    tail = float(z2[int(np.floor(H * (1 - tail_fraction))):].sum())
    share = tail / total if total > 0 else 0.0
    if share > tail_tol:
        raise NonConvergence(f"z tail energy share {share:.3e} exceeds {tail_tol:.0e}; lengthen the horizon")
    return float(np.sqrt(total / f2)), share


def empirical_l2_gain(scenario: NetworkScenario, controllers: VertexControllerSet | None = None,
                      trials: int = 20, seed: int = 0, truncate_fraction: float = 0.4,
                      tail_fraction: float = 0.1, tail_tol: float = 1e-9,
                      amplitude: float = 1.0) -> GainReport:
    """Largest observed ``||z|| / ||f||`` over random finite-energy inputs.

    Each trial starts from rest, draws i.i.d. Gaussian references and
    disturbances on the first ``truncate_fraction`` of the horizon (zero
    afterwards) and a common random scheduling trajectory in the polytope.
    """
    controllers = scenario.controllers if controllers is None else controllers
    model = scenario.model
    nx, nw, nu, ny = model.dims
    N, H = scenario.node_count, scenario.horizon_steps
    cut = int(np.ceil(truncate_fraction * H))
    rng = np.random.default_rng(seed)
    ratios, tails = [], []
    for _ in range(trials):
        R = np.zeros((H, N, ny))
        Wd = np.zeros((H, N, nw))
        R[:cut] = amplitude * rng.standard_normal((cut, N, ny))
        Wd[:cut] = amplitude * rng.standard_normal((cut, N, nw))
        thetas = model.polytope.sample(rng, size=H + 1)
        trial = dataclasses.replace(
            scenario, controllers=controllers, reference=R, disturbances=(), disturbance_series=Wd,
            initial_states=np.zeros((N, nx)), scheduling=thetas, alpha_z=controllers.alpha_z,
            beta_z=controllers.beta_z)
        trace, _ = run(trial)
        ratio, share = l2_ratio(trace, tail_fraction, tail_tol)
        ratios.append(ratio)
        tails.append(share)
    return GainReport(max(ratios) if ratios else 0.0, ratios, controllers.gamma, tails)
