from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..lpv import PolytopicLpvModel


class Mode(str, Enum):
    FEASIBILITY = "feasibility"
    # leaves t = gamma^2 free and minimises it (used for `gamma: auto`)
    MINIMIZE_GAMMA_SQUARED = "minimize_gamma"


@dataclass(frozen=True)
class SynthesisProblem:
    model: PolytopicLpvModel
    lambda_pair: tuple[float, float]
    gamma: float | None
    sigma: float
    alpha_z: float
    beta_z: float
    mode: Mode = Mode.FEASIBILITY
    epsilon: float = 1e-7

    def __post_init__(self):
        lam2, lamN = (float(v) for v in self.lambda_pair)
        object.__setattr__(self, "lambda_pair", (lam2, lamN))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not lam2 > 0:
            raise ValueError("lambda_2 must be positive (connected graph)")
        if lam2 > lamN:
            raise ValueError("lambda_2 must not exceed lambda_N")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not abs(self.alpha_z) < 1:
            raise ValueError("|alpha_z| < 1 is required for a stable performance filter")
        if self.beta_z == 0:
            raise ValueError("beta_z must be nonzero")
        if self.mode is Mode.FEASIBILITY and not (self.gamma is not None and self.gamma > 0):
            raise ValueError("feasibility mode needs a positive gamma")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be nonnegative")

    @property
    def lambdas(self) -> tuple[float, ...]:
        lam2, lamN = self.lambda_pair
        return (lam2,) if lam2 == lamN else (lam2, lamN)


@dataclass(frozen=True)
class SynthesisCertificate:
    """Decision variables of a solved LMI together with its bookkeeping."""

    S: np.ndarray
    G1: tuple[np.ndarray, ...]
    G2: tuple[np.ndarray, ...]
    K1: tuple[np.ndarray, ...]
    t: float
    sigma_x: float
    lambdas: tuple[float, ...]
    alpha_z: float
    beta_z: float
    epsilon: float
    dims: tuple[int, int, int, int]
    status: str = "optimal"
    min_eig_per_block: dict = field(default_factory=dict)  # (vertex, lambda) -> float

    @property
    def gamma(self) -> float:
        return float(np.sqrt(self.t))

    @property
    def sigma(self) -> float:
        return 1.0 / self.sigma_x

    @property
    def vertex_count(self) -> int:
        return len(self.G1)

    def G(self, l: int) -> np.ndarray:
        g1, g2 = self.G1[l], self.G2[l]
        n1, n2 = g1.shape[0], g2.shape[0]
        out = np.zeros((n1 + n2, n1 + n2))
        out[:n1, :n1] = g1
        out[n1:, n1:] = g2
        return out

    def K(self, l: int) -> np.ndarray:
        ny = self.dims[3]
        return np.hstack([self.K1[l], np.zeros((self.K1[l].shape[0], ny))])


@dataclass(frozen=True)
class VertexControllerSet:
    F_x: tuple[np.ndarray, ...]
    F_zeta: tuple[np.ndarray, ...]
    gamma: float
    sigma: float
    alpha_z: float = float("nan")
    beta_z: float = float("nan")

    def __post_init__(self):
        fx = tuple(np.array(f, dtype=float, ndmin=2) for f in self.F_x)
        fz = tuple(np.array(f, dtype=float, ndmin=2) for f in self.F_zeta)
        if len(fx) != len(fz) or not fx:
            raise ValueError("need one (F_x, F_zeta) pair per vertex")
        object.__setattr__(self, "F_x", fx)
        object.__setattr__(self, "F_zeta", fz)

    @property
    def vertex_count(self) -> int:
        return len(self.F_x)

    @property
    def Fx_stack(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack(self.F_x))

    @property
    def Fz_stack(self) -> np.ndarray:
        return np.ascontiguousarray(np.stack(self.F_zeta))

    def gains(self, alpha) -> tuple[np.ndarray, np.ndarray]:
        """Blended (F_x, F_zeta) at convex coordinates ``alpha``."""
        alpha = np.asarray(alpha, dtype=float)
        return (np.tensordot(alpha, self.Fx_stack, axes=1),
                np.tensordot(alpha, self.Fz_stack, axes=1))

    def scaled(self, factor: float) -> "VertexControllerSet":
        return VertexControllerSet(tuple(factor * f for f in self.F_x), tuple(factor * f for f in self.F_zeta),
                                   self.gamma, self.sigma, self.alpha_z, self.beta_z)
