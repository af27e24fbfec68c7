"""Semidefinite-programming backends.

The synthesis code only talks to :class:`SdpBackend`: it declares matrix
variables, adds PSD constraints on affine expressions built with
:meth:`SdpBackend.bmat`, optionally sets a linear objective and solves.
:class:`CvxpyBackend` implements it on top of cvxpy.
"""
from __future__ import annotations

import logging
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class SolveResult:
    status: str  # "optimal" | "infeasible" | "failed"
    solver: str = ""
    message: str = ""
    inaccurate: bool = False


class SdpBackend(ABC):
    @abstractmethod
    def symmetric(self, n: int, name: str | None = None): ...

    @abstractmethod
    def matrix(self, rows: int, cols: int, name: str | None = None): ...

    @abstractmethod
    def scalar(self, name: str | None = None): ...

    @abstractmethod
    def bmat(self, blocks): ...

    @abstractmethod
    def add_psd(self, expr, margin: float = 0.0) -> None:
        """Constrain ``expr - margin * I`` to be positive semidefinite."""

    @abstractmethod
    def minimize(self, expr) -> None: ...

    @abstractmethod
    def solve(self) -> SolveResult: ...

    @abstractmethod
    def value(self, var) -> np.ndarray: ...


class CvxpyBackend(SdpBackend):
    """cvxpy front end; tries ``solvers`` in order until one returns a verdict."""

    def __init__(self, solvers=("CLARABEL", "CVXOPT", "SCS"), verbose: bool = False, **solver_options):
        import cvxpy as cp

        self._cp = cp
        self.solvers = tuple(solvers)
        self.verbose = verbose
        self.solver_options = solver_options
        self._constraints = []
        self._objective = None

    def symmetric(self, n, name=None):
        return self._cp.Variable((n, n), symmetric=True, name=name)

    def matrix(self, rows, cols, name=None):
        return self._cp.Variable((rows, cols), name=name)

    def scalar(self, name=None):
        return self._cp.Variable(name=name)

    def bmat(self, blocks):
        return self._cp.bmat(blocks)

    def add_psd(self, expr, margin=0.0):
        n = expr.shape[0]
        sym = (expr + expr.T) / 2
        self._constraints.append(sym >> margin * np.eye(n))

    def minimize(self, expr):
        self._objective = expr

    def solve(self):
        cp = self._cp
        objective = cp.Minimize(0 if self._objective is None else self._objective)
        prob = cp.Problem(objective, self._constraints)
        messages = []
        for solver in self.solvers:
            if solver not in cp.installed_solvers():
                messages.append(f"{solver}: not installed")
                continue
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    prob.solve(solver=solver, verbose=self.verbose, **self.solver_options.get(solver, {}))
            except cp.error.SolverError as exc:
                messages.append(f"{solver}: {exc}")
                log.debug("solver %s failed: %s", solver, exc)
                continue
            status = prob.status
            if status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
                return SolveResult("optimal", solver, status, inaccurate=status == cp.OPTIMAL_INACCURATE)
            if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
                return SolveResult("infeasible", solver, status, inaccurate=status == cp.INFEASIBLE_INACCURATE)
            messages.append(f"{solver}: status {status}")
        return SolveResult("failed", "", "; ".join(messages))

    def value(self, var):
        if isinstance(var, (int, float, np.ndarray)):
            return np.asarray(var, dtype=float)
        val = var.value
        if val is None:
            raise ValueError("variable has no value; solve first")
        return np.asarray(val, dtype=float)
