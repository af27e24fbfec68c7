"""Polytopic LPV agent models.

A model holds one tuple ``(A, B_w, B_u, C_y)`` per polytope vertex; the
matrices at an arbitrary scheduling value are the convex blend of the vertex
tuples.  The dynamic unicycle with a handle point is provided as a ready-made
two-vertex model scheduled by its lateral velocity ``v_t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import DimensionMismatch, InvalidPhysicalParameter, OutOfPolytope

POLYTOPE_TOL = 1e-9


@dataclass(frozen=True)
class ParameterPolytope:
    vertices: np.ndarray  # (s, n_theta)

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError("polytope needs at least one vertex")
        if len({tuple(row) for row in v}) != v.shape[0]:
            raise ValueError("duplicate polytope vertices")
        if v.shape[1] == 1 and v.shape[0] != 1:
            if v.shape[0] != 2 or not v[0, 0] < v[1, 0]:
                raise ValueError("a 1-D polytope is an interval [theta_min, theta_max]")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "ParameterPolytope":
        return cls(np.array([[lo], [hi]], dtype=float))

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Random interior points (Dirichlet-weighted vertex blends)."""
        n = 1 if size is None else size
        alpha = rng.dirichlet(np.ones(self.vertex_count), size=n)
        pts = alpha @ self.vertices
        return pts[0] if size is None else pts


class SchedulingValue(NamedTuple):
    theta: np.ndarray
    alpha: np.ndarray


def convex_coordinates(polytope: ParameterPolytope, theta, clamp: bool = False) -> SchedulingValue:
    """Convex coordinates of ``theta`` with respect to the polytope vertices.

    Raises :class:`OutOfPolytope` when ``theta`` lies outside the hull by more
    than ``POLYTOPE_TOL``, unless ``clamp`` is set, in which case the nearest
    point of the hull is used instead.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    verts = polytope.vertices
    if theta.shape != (polytope.dimension,):
        raise DimensionMismatch(f"theta has shape {theta.shape}, polytope dimension is {polytope.dimension}")
    s = polytope.vertex_count
    if s == 1:
        if not clamp and np.max(np.abs(theta - verts[0])) > POLYTOPE_TOL:
            raise OutOfPolytope(f"theta={theta} differs from the single vertex {verts[0]}", theta=theta)
        return SchedulingValue(verts[0].copy(), np.ones(1))

    if polytope.dimension == 1:
        lo, hi = verts[0, 0], verts[1, 0]
        th = theta[0]
        if th < lo - POLYTOPE_TOL or th > hi + POLYTOPE_TOL:
            if not clamp:
                raise OutOfPolytope(f"theta={th:.6g} outside [{lo:.6g}, {hi:.6g}]", theta=theta)
        th = min(max(th, lo), hi)
        a2 = (th - lo) / (hi - lo)
        return SchedulingValue(np.array([th]), np.array([1.0 - a2, a2]))

    # general polytope: feasibility LP for alpha >= 0, V^T alpha = theta, sum(alpha) = 1
    a_eq = np.vstack([verts.T, np.ones((1, s))])
    b_eq = np.concatenate([theta, [1.0]])
    res = linprog(np.zeros(s), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * s, method="highs")
    if res.status == 0:
        alpha = np.clip(res.x, 0.0, None)
        alpha /= alpha.sum()
        return SchedulingValue(theta.copy(), alpha)
    # outside: nearest hull point via a heavily weighted NNLS
    weight = 1e6
    alpha, _ = nnls(np.vstack([verts.T, weight * np.ones((1, s))]), np.concatenate([theta, [weight]]))
    alpha /= alpha.sum()
    nearest = alpha @ verts
    if not clamp and np.linalg.norm(nearest - theta) > POLYTOPE_TOL:
        raise OutOfPolytope(f"theta={theta} outside the parameter polytope", theta=theta)
    return SchedulingValue(nearest, alpha)


class VertexMatrices(NamedTuple):
    A: np.ndarray
    Bw: np.ndarray
    Bu: np.ndarray
    Cy: np.ndarray


@dataclass(frozen=True)
class SchedulingMap:
    """State-to-scheduling map ``g``.

    ``kind`` is ``"state_component"`` (theta = x[index]) or ``"constant"``
    (theta = value, not state derived).
    """

    kind: str
    index: int | None = None
    value: tuple[float, ...] | None = None

    @classmethod
    def parse(cls, spec: str, constant_value=None) -> "SchedulingMap":
        if spec.startswith("state_component:"):
            return cls("state_component", index=int(spec.split(":", 1)[1]))
        if spec == "constant":
            val = None if constant_value is None else tuple(float(v) for v in np.atleast_1d(constant_value))
            return cls("constant", value=val)
        raise ValueError(f"unknown scheduling map {spec!r}")

    @property
    def identifier(self) -> str:
        return f"state_component:{self.index}" if self.kind == "state_component" else "constant"

    @property
    def state_derived(self) -> bool:
        return self.kind == "state_component"

    def __call__(self, x) -> np.ndarray:
        if self.kind == "state_component":
            return np.array([x[self.index]], dtype=float)
        return np.array(self.value, dtype=float)


@dataclass(frozen=True)
class PolytopicLpvModel:
    polytope: ParameterPolytope
    vertex_matrices: tuple[VertexMatrices, ...]
    scheduling_map: SchedulingMap
    name: str = "lpv"
    # stacked (s, rows, cols) copies for the numerical kernels
    stacks: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        verts = tuple(VertexMatrices(*(np.array(m, dtype=float, ndmin=2) for m in vm)) for vm in self.vertex_matrices)
        if len(verts) != self.polytope.vertex_count:
            raise DimensionMismatch(
                f"{len(verts)} vertex tuples for a polytope with {self.polytope.vertex_count} vertices")
        nx, nw = verts[0].Bw.shape
        nu = verts[0].Bu.shape[1]
        ny = verts[0].Cy.shape[0]
        for l, vm in enumerate(verts):
            expect = {"A": (nx, nx), "Bw": (nx, nw), "Bu": (nx, nu), "Cy": (ny, nx)}
            for name, shape in expect.items():
                if getattr(vm, name).shape != shape:
                    raise DimensionMismatch(f"vertex {l}: {name} has shape {getattr(vm, name).shape}, expected {shape}")
        smap = self.scheduling_map
        if smap.kind == "state_component" and not (0 <= smap.index < nx):
            raise DimensionMismatch(f"scheduling map index {smap.index} out of range for n_x={nx}")
        if smap.kind == "state_component" and self.polytope.dimension != 1:
            raise DimensionMismatch("state_component scheduling yields a scalar theta")
        if smap.kind == "constant" and smap.value is None:
            if self.polytope.vertex_count != 1:
                raise ValueError("a constant scheduling map on a multi-vertex model needs a value")
            smap = SchedulingMap("constant", value=tuple(self.polytope.vertices[0]))
            object.__setattr__(self, "scheduling_map", smap)
        for vm in verts:
            for m in vm:
                m.setflags(write=False)
        object.__setattr__(self, "vertex_matrices", verts)
        stacks = {name: np.ascontiguousarray(np.stack([getattr(vm, name) for vm in verts]))
                  for name in VertexMatrices._fields}
        object.__setattr__(self, "stacks", stacks)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """(n_x, n_w, n_u, n_y)."""
        vm = self.vertex_matrices[0]
        return vm.A.shape[0], vm.Bw.shape[1], vm.Bu.shape[1], vm.Cy.shape[0]

    @property
    def vertex_count(self) -> int:
        return self.polytope.vertex_count

    def coordinates(self, theta, clamp: bool = False) -> SchedulingValue:
        return convex_coordinates(self.polytope, theta, clamp=clamp)

    def schedule(self, x, clamp: bool = False) -> SchedulingValue:
        return self.coordinates(self.scheduling_map(x), clamp=clamp)

    def evaluate(self, sv: SchedulingValue) -> VertexMatrices:
        return evaluate_model(self, sv)


def evaluate_model(model: PolytopicLpvModel, sv: SchedulingValue) -> VertexMatrices:
    """Blend the vertex matrices with the convex coordinates in ``sv``."""
    alpha = np.asarray(sv.alpha, dtype=float)
    if alpha.shape != (model.vertex_count,):
        raise DimensionMismatch(f"alpha has shape {alpha.shape}")
    return VertexMatrices(*(np.tensordot(alpha, model.stacks[name], axes=1) for name in VertexMatrices._fields))


def unicycle_continuous(m: float, I: float, d: float, v_t: float) -> tuple[np.ndarray, np.ndarray]:
    """Continuous handle-point unicycle at lateral velocity ``v_t``.

    State order (x_d, y_d, v_n, v_t) in body coordinates, inputs (f, tau).
    """
    for name, val in (("m", m), ("I", I), ("d", d)):
        if not val > 0:
            raise InvalidPhysicalParameter(f"{name} must be positive, got {val}")
    w = v_t / d
    A = np.array([
        [0.0, w, 1.0, 0.0],
        [-w, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])
    B = np.array([
        [0.0, 0.0],
        [0.0, 0.0],
        [1.0 / m, 0.0],
        [0.0, d / I],
    ])
    return A, B


def euler_discretize(A_c, B_c, Ts: float) -> tuple[np.ndarray, np.ndarray]:
    if not Ts > 0:
        raise ValueError("Ts must be positive")
    A_c = np.asarray(A_c, dtype=float)
    return np.eye(A_c.shape[0]) + Ts * A_c, Ts * np.asarray(B_c, dtype=float)


UNICYCLE_OUTPUT = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])


def build_unicycle_lpv(m: float = 1.0, I: float = 1.0, d: float = 0.5, Ts: float = 0.01,
                       vt_range: Sequence[float] = (-3.0, 3.0)) -> PolytopicLpvModel:
    """Two-vertex discrete unicycle model scheduled by ``v_t = x[3]``.

    The disturbance enters through the actuation channels (``B_w = B_u``) and
    the measured output is the handle position.
    """
    vt_min, vt_max = (float(v) for v in vt_range)
    if not vt_min < vt_max:
        raise ValueError("vt_range must satisfy vt_min < vt_max")
    verts = []
    for vt in (vt_min, vt_max):
        A_d, B_d = euler_discretize(*unicycle_continuous(m, I, d, vt), Ts)
        verts.append(VertexMatrices(A_d, B_d.copy(), B_d, UNICYCLE_OUTPUT.copy()))
    return PolytopicLpvModel(
        ParameterPolytope.interval(vt_min, vt_max),
        tuple(verts),
        SchedulingMap("state_component", index=3),
        name="unicycle",
    )


def heading_and_global_positions(states, d: float, Ts: float, phi0: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Global handle positions from a body-frame unicycle trajectory.

    The heading is reconstructed by integrating ``omega = v_t / d`` with the
    same Euler step as the model; positions are rotated back with
    ``T_phi^T``.  ``states`` has shape (K, 4); returns ``(phi, xy)``.
    """
    states = np.asarray(states, dtype=float)
    k = states.shape[0]
    phi = np.empty(k)
    phi[0] = phi0
    if k > 1:
        phi[1:] = phi0 + Ts * np.cumsum(states[:-1, 3] / d)
    c, s = np.cos(phi), np.sin(phi)
    xt, yt = states[:, 0], states[:, 1]
    xy = np.column_stack([c * xt - s * yt, s * xt + c * yt])
    return phi, xy


def coordinates_rows(model: PolytopicLpvModel, thetas, rows=None, clamp: bool = False) -> np.ndarray:
    """Convex coordinates for several agents at once.

    ``thetas`` has shape (N, n_theta); only ``rows`` (default: all) are
    evaluated, the others get the first vertex.  OutOfPolytope carries the
    offending agent index.
    """
    thetas = np.asarray(thetas, dtype=float)
    N = thetas.shape[0]
    s = model.vertex_count
    out = np.zeros((N, s))
    out[:, 0] = 1.0
    idx = range(N) if rows is None else rows
    for i in idx:
        try:
            out[i] = model.coordinates(thetas[i], clamp=clamp).alpha
        except OutOfPolytope as exc:
            exc.agent = i
            raise
    return out
