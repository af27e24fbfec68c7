"""Neighbour output estimators driven by trigger messages.

Each agent owns one estimator instance that tracks itself and its neighbours
(zero-order hold, open-loop) or the whole network (closed-loop).  All
instances tracking agent ``j`` apply the same deterministic update rule, so
they hold bit-identical estimates of ``j`` when fed the same messages in the
same order.  Arrays always carry every agent's row; untracked rows stay zero.

Initial estimates equal the true network state (every agent is treated as
having just broadcast at k = 0).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Sequence

import numpy as np

from . import _kernels as kernels
from .errors import ScenarioError, UnknownSender
from .graph import CommGraph, is_fully_connected
from .lpv import PolytopicLpvModel, coordinates_rows

KINDS = ("zoh", "ole", "cle")


@dataclass(frozen=True)
class TriggerMessage:
    sender: int
    kind: str
    y: np.ndarray | None = None
    x: np.ndarray | None = None
    zeta: np.ndarray | None = None
    theta: np.ndarray | None = None

    @property
    def scalar_count(self) -> int:
        return sum(int(np.size(v)) for v in (self.y, self.x, self.zeta, self.theta) if v is not None)


@dataclass
class NetworkTruth:
    """True per-agent signals at one step, used for messages and initialisation."""

    x: np.ndarray      # (N, n_x)
    zeta: np.ndarray   # (N, n_y)
    theta: np.ndarray  # (N, n_theta)
    y: np.ndarray      # (N, n_y)

    def message(self, kind: str, i: int) -> TriggerMessage:
        if kind == "zoh":
            return TriggerMessage(i, kind, y=self.y[i].copy())
        if kind == "ole":
            return TriggerMessage(i, kind, x=self.x[i].copy(), theta=self.theta[i].copy())
        if kind == "cle":
            return TriggerMessage(i, kind, x=self.x[i].copy(), zeta=self.zeta[i].copy(), theta=self.theta[i].copy())
        raise ValueError(f"unknown estimator kind {kind!r}")


class StateScheduling:
    """theta = g(x) through the model's scheduling map (constant maps hold)."""

    def __init__(self, model: PolytopicLpvModel):
        self.model = model

    def theta(self, X, k: int) -> np.ndarray:
        g = self.model.scheduling_map
        return np.stack([g(x) for x in X])


class PrescribedScheduling:
    """Homogeneous exogenous scheduling: every agent uses ``thetas[k]``."""

    def __init__(self, thetas):
        self.thetas = np.atleast_2d(np.asarray(thetas, dtype=float))

    def theta(self, X, k: int) -> np.ndarray:
        return np.tile(self.thetas[k], (len(X), 1))


class Estimator:
    kind: ClassVar[str] = ""

    def __init__(self, owner: int, tracked: Sequence[int], model: PolytopicLpvModel, node_count: int,
                 scheduling=None, clamp: bool = False):
        self.owner = owner
        self.tracked = tuple(sorted(set(int(j) for j in tracked)))
        self.model = model
        self.N = node_count
        self.scheduling = StateScheduling(model) if scheduling is None else scheduling
        self.clamp = clamp

    def _check_sender(self, msg: TriggerMessage):
        if msg.kind != self.kind:
            raise ValueError(f"{self.kind} estimator received a {msg.kind} message")
        if msg.sender not in self.tracked:
            raise UnknownSender(f"agent {self.owner} does not track agent {msg.sender}")

    def _alphas(self, thetas) -> np.ndarray:
        return coordinates_rows(self.model, thetas, self.tracked, clamp=self.clamp)

    def initialize(self, truth: NetworkTruth) -> None:
        for j in self.tracked:
            self.apply_message(truth.message(self.kind, j))

    def predict(self) -> np.ndarray:
        """Estimated outputs of every tracked agent at the current step."""
        raise NotImplementedError

    def apply_message(self, msg: TriggerMessage) -> None:
        raise NotImplementedError

    def advance(self, k: int, reference) -> None:
        """Propagate the estimates from step ``k`` to ``k + 1``."""
        raise NotImplementedError

    def snapshot(self) -> tuple[np.ndarray, ...]:
        raise NotImplementedError


class ZohEstimator(Estimator):
    kind = "zoh"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.y_hat = np.zeros((self.N, self.model.dims[3]))

    def predict(self):
        return self.y_hat.copy()

    def apply_message(self, msg):
        self._check_sender(msg)
        self.y_hat[msg.sender] = msg.y

    def advance(self, k, reference):
        pass

    def snapshot(self):
        return (self.y_hat.copy(),)


class OpenLoopEstimator(Estimator):
    """x_hat+ = A(theta_hat) x_hat, y_hat = C_y(theta_hat) x_hat; no input term."""

    kind = "ole"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        nx = self.model.dims[0]
        self.x_hat = np.zeros((self.N, nx))
        self.theta_hat = np.zeros((self.N, self.model.polytope.dimension))
        self.alpha_hat = np.zeros((self.N, self.model.vertex_count))
        self.alpha_hat[:, 0] = 1.0

    def predict(self):
        return kernels.network_output(self.model.stacks["Cy"], self.alpha_hat, self.x_hat)

    def apply_message(self, msg):
        self._check_sender(msg)
        i = msg.sender
        self.x_hat[i] = msg.x
        self.theta_hat[i] = msg.theta
        self.alpha_hat[i] = self.model.coordinates(msg.theta, clamp=self.clamp).alpha

    def advance(self, k, reference):
        x_next = kernels.open_loop_step(self.model.stacks["A"], self.alpha_hat, self.x_hat)
        mask = np.zeros(self.N, dtype=bool)
        mask[list(self.tracked)] = True
        x_next[~mask] = 0.0
        self.x_hat = x_next
        self.theta_hat = self.scheduling.theta(x_next, k + 1)
        self.alpha_hat = self._alphas(self.theta_hat)

    def snapshot(self):
        return (self.x_hat.copy(), self.theta_hat.copy())


class ClosedLoopEstimator(Estimator):
    """Replica of the whole closed-loop network (complete graphs only)."""

    kind = "cle"

    def __init__(self, owner, tracked, model, node_count, controllers=None, laplacian=None, **kwargs):
        super().__init__(owner, tracked, model, node_count, **kwargs)
        if len(self.tracked) != node_count:
            raise ScenarioError("closed-loop estimation tracks every agent")
        if controllers is None or laplacian is None:
            raise ValueError("closed-loop estimation needs the controllers and the Laplacian")
        nx, nw, nu, ny = model.dims
        self.Fx_stack = controllers.Fx_stack
        self.Fz_stack = controllers.Fz_stack
        self.L = np.asarray(laplacian, dtype=float)
        self.x_hat = np.zeros((self.N, nx))
        self.zeta_hat = np.zeros((self.N, ny))
        self.theta_hat = np.zeros((self.N, model.polytope.dimension))
        self.alpha_hat = np.zeros((self.N, model.vertex_count))
        self.alpha_hat[:, 0] = 1.0
        self._w0 = np.zeros((self.N, nw))

    def predict(self):
        return kernels.network_output(self.model.stacks["Cy"], self.alpha_hat, self.x_hat)

    def apply_message(self, msg):
        self._check_sender(msg)
        i = msg.sender
        self.x_hat[i] = msg.x
        self.zeta_hat[i] = msg.zeta
        self.theta_hat[i] = msg.theta
        self.alpha_hat[i] = self.model.coordinates(msg.theta, clamp=self.clamp).alpha

    def advance(self, k, reference):
        R = np.asarray(reference, dtype=float)
        y_hat = self.predict()
        st = self.model.stacks
        x_next, _ = kernels.network_step(st["A"], st["Bw"], st["Bu"], self.Fx_stack, self.Fz_stack,
                                         self.alpha_hat, self.x_hat, self.zeta_hat, self._w0)
        zeta_next = np.empty_like(self.zeta_hat)
        for j in range(self.N):
            zeta_next[j] = self.zeta_hat[j] + kernels.formation_error(self.L[j], R, y_hat)
        self.x_hat = x_next
        self.zeta_hat = zeta_next
        self.theta_hat = self.scheduling.theta(x_next, k + 1)
        self.alpha_hat = self._alphas(self.theta_hat)

    def snapshot(self):
        return (self.x_hat.copy(), self.zeta_hat.copy(), self.theta_hat.copy())


def required_graph(kind: str) -> str:
    """``"connected"`` for zoh/ole, ``"complete"`` for cle."""
    if kind not in KINDS:
        raise ValueError(f"unknown estimator kind {kind!r}")
    return "complete" if kind == "cle" else "connected"


def check_graph(kind: str, graph: CommGraph) -> None:
    # CommGraph construction already guarantees connectivity
    if required_graph(kind) == "complete" and not is_fully_connected(graph):
        raise ScenarioError("closed-loop estimation requires a fully connected communication graph")


def make_estimators(kind: str, graph: CommGraph, model: PolytopicLpvModel, controllers=None,
                    scheduling=None, clamp: bool = False) -> list[Estimator]:
    check_graph(kind, graph)
    N = graph.node_count
    out = []
    for i in range(N):
        if kind == "zoh":
            est = ZohEstimator(i, (i,) + graph.neighbors(i), model, N, scheduling=scheduling, clamp=clamp)
        elif kind == "ole":
            est = OpenLoopEstimator(i, (i,) + graph.neighbors(i), model, N, scheduling=scheduling, clamp=clamp)
        else:
            est = ClosedLoopEstimator(i, range(N), model, N, controllers=controllers,
                                      laplacian=graph.laplacian_matrix(), scheduling=scheduling, clamp=clamp)
        out.append(est)
    return out
