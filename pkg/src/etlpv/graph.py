"""Undirected communication graphs and their Laplacian spectra.

Agents are indexed from 0.  The spectral basis ``Z`` returned by
:func:`build_laplacian` is orthonormal, ordered by ascending eigenvalue and
has the normalised agreement vector ``1/sqrt(N)`` as its first column.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DisconnectedGraph, InvalidGraph

CONNECTIVITY_TOL = 1e-9


@dataclass(frozen=True)
class CommGraph:
    node_count: int
    adjacency: np.ndarray

    def __post_init__(self):
        if int(self.node_count) < 1:
            raise InvalidGraph("node_count must be positive")
        adj = np.asarray(self.adjacency, dtype=bool)
        n = int(self.node_count)
        if adj.shape != (n, n):
            raise InvalidGraph(f"adjacency must be {n}x{n}, got {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise InvalidGraph("adjacency must be symmetric (undirected graph)")
        if adj.diagonal().any():
            raise InvalidGraph("adjacency must have an empty diagonal")
        adj = adj.copy()
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "node_count", n)
        if not _is_connected(adj):
            raise DisconnectedGraph("communication graph is not connected")

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence[int]]) -> "CommGraph":
        adj = np.zeros((node_count, node_count), dtype=bool)
        for edge in edges:
            i, j = (int(v) for v in edge)
            if not (0 <= i < node_count and 0 <= j < node_count):
                raise InvalidGraph(f"edge ({i}, {j}) references an unknown node")
            if i == j:
                raise InvalidGraph(f"self loop at node {i}")
            adj[i, j] = adj[j, i] = True
        return cls(node_count, adj)

    @classmethod
    def complete(cls, node_count: int) -> "CommGraph":
        adj = ~np.eye(node_count, dtype=bool)
        return cls(node_count, adj)

    @classmethod
    def path(cls, node_count: int) -> "CommGraph":
        return cls.from_edges(node_count, [(i, i + 1) for i in range(node_count - 1)])

    def neighbors(self, i: int) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.adjacency[i]))

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency))
        return [(int(i), int(j)) for i, j in zip(rows, cols)]

    def laplacian_matrix(self) -> np.ndarray:
        adj = self.adjacency.astype(float)
        return np.diag(adj.sum(axis=1)) - adj


def _is_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            stack.append(int(j))
    return bool(seen.all())


@dataclass(frozen=True)
class LaplacianSpectrum:
    laplacian: np.ndarray
    eigenvalues: np.ndarray
    basis: np.ndarray

    @property
    def lambda2(self) -> float:
        if len(self.eigenvalues) < 2:
            return 0.0
        return float(self.eigenvalues[1])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def design_lambdas(self) -> tuple[float, ...]:
        """Distinct eigenvalues among (lambda_2, lambda_N) used for synthesis."""
        if len(self.eigenvalues) < 2:
            return ()
        lo, hi = self.lambda2, self.lambda_max
        return (lo,) if np.isclose(lo, hi, rtol=0, atol=1e-12) else (lo, hi)


def build_laplacian(graph: CommGraph) -> LaplacianSpectrum:
    """L = D - A with its sorted spectrum and orthonormal eigenbasis."""
    lap = graph.laplacian_matrix()
    n = graph.node_count
    vals, vecs = np.linalg.eigh(lap)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    if n > 1 and vals[1] <= CONNECTIVITY_TOL:
        raise DisconnectedGraph(f"lambda_2 = {vals[1]:.3e} <= {CONNECTIVITY_TOL}")
    # the null space of a connected graph is exactly span(1)
    vals[0] = 0.0
    vecs[:, 0] = 1.0 / np.sqrt(n)
    if n > 1:
        # re-orthogonalise the rest against the exact agreement vector
        rest = vecs[:, 1:] - np.outer(vecs[:, 0], vecs[:, 0] @ vecs[:, 1:])
        q, _ = np.linalg.qr(rest)
        signs = np.sign(np.sum(q * rest, axis=0))
        signs[signs == 0] = 1.0
        vecs[:, 1:] = q * signs
    for arr in (lap, vals, vecs):
        arr.setflags(write=False)
    return LaplacianSpectrum(lap, vals, vecs)


def is_fully_connected(graph: CommGraph) -> bool:
    off_diag = ~np.eye(graph.node_count, dtype=bool)
    return bool(graph.adjacency[off_diag].all())


def kron_expand(M, n: int) -> np.ndarray:
    """M_(n) = M kron I_n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.kron(np.asarray(M, dtype=float), np.eye(n))
