"""Numerical checks of a synthesized certificate.

None of these trust the solver status: stability is checked by eigensolves,
the modal decomposition by assembling the full-network inequality
independently, and dissipation by evaluating the storage function along a
simulated trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from ..errors import DissipationViolation, EquivalenceFailure, StabilityViolation
from ..graph import CommGraph, build_laplacian
from ..lpv import PolytopicLpvModel, SchedulingValue
from .assembly import assemble_lmi_block, mode_matrices, stack_K
from .problem import SynthesisCertificate, VertexControllerSet

STABILITY_MARGIN = 1e-9
EQUIVALENCE_TOL = 1e-8
DISSIPATION_TOL = 1e-6


# ---------------------------------------------------------------------------
# modal stability
# ---------------------------------------------------------------------------

def modal_closed_loop(model: PolytopicLpvModel, controllers: VertexControllerSet, alpha, lam: float,
                      alpha_z: float, beta_z: float) -> np.ndarray:
    """A_OL(theta, lam) + B_F(theta) [F_x(theta)  F_zeta(theta)  0]."""
    alpha = np.asarray(alpha, dtype=float)
    vm = model.evaluate(SchedulingValue(alpha @ model.polytope.vertices, alpha))
    mm = mode_matrices(vm, lam, alpha_z, beta_z)
    Fx, Fz = controllers.gains(alpha)
    ny = model.dims[3]
    F_bar = np.hstack([Fx, Fz, np.zeros((Fx.shape[0], ny))])
    return mm.A_ol + mm.B_F @ F_bar


def spectral_radius(M) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


@dataclass
class ModalStabilityReport:
    max_radius: float
    worst_alpha: np.ndarray
    worst_lambda: float
    vertex_radii: dict = field(default_factory=dict)  # (l, lam) -> radius
    samples: int = 0

    @property
    def passed(self) -> bool:
        return self.max_radius < 1.0 - STABILITY_MARGIN


def verify_modal_stability(model: PolytopicLpvModel, controllers: VertexControllerSet, lambda_pair,
                           alpha_z: float, beta_z: float, samples: int = 100, seed: int = 0,
                           raise_on_failure: bool = True) -> ModalStabilityReport:
    """Spectral radius of the modal closed loop at the vertices and at random
    interior ``(theta, lam)`` pairs, ``lam`` uniform in ``[lambda_2, lambda_N]``."""
    lam2, lamN = (float(v) for v in lambda_pair)
    lams = (lam2,) if lam2 == lamN else (lam2, lamN)
    s = model.vertex_count
    worst = (-1.0, None, None)
    vertex_radii = {}
    for l in range(s):
        alpha = np.eye(s)[l]
        for lam in lams:
            rho = spectral_radius(modal_closed_loop(model, controllers, alpha, lam, alpha_z, beta_z))
            vertex_radii[(l, lam)] = rho
            if rho > worst[0]:
                worst = (rho, alpha, lam)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        alpha = rng.dirichlet(np.ones(s))
        lam = float(rng.uniform(lam2, lamN))
        rho = spectral_radius(modal_closed_loop(model, controllers, alpha, lam, alpha_z, beta_z))
        if rho > worst[0]:
            worst = (rho, alpha, lam)
    report = ModalStabilityReport(worst[0], worst[1], worst[2], vertex_radii, samples)
    if raise_on_failure and not report.passed:
        theta = report.worst_alpha @ model.polytope.vertices
        raise StabilityViolation(
            f"modal spectral radius {report.max_radius:.6f} >= 1 at theta={theta}, lambda={report.worst_lambda:.4g}",
            theta=theta, lam=report.worst_lambda, radius=report.max_radius)
    return report


# ---------------------------------------------------------------------------
# full-network inequality vs. direct sum of modal blocks
# ---------------------------------------------------------------------------

def lift_signal_major(M, row_parts, col_parts, N: int) -> np.ndarray:
    """Replace every (a, b) sub-block of a per-agent matrix by ``I_N kron M_ab``."""
    r_off = np.concatenate([[0], np.cumsum(row_parts)])
    c_off = np.concatenate([[0], np.cumsum(col_parts)])
    eye = np.eye(N)
    return np.block([[np.kron(eye, M[r_off[a]:r_off[a + 1], c_off[b]:c_off[b + 1]])
                      for b in range(len(col_parts))] for a in range(len(row_parts))])


def full_network_lmi(model: PolytopicLpvModel, certificate: SynthesisCertificate, graph: CommGraph,
                     vertex: int) -> np.ndarray:
    """Network-sized inequality under homogeneous scheduling at one vertex.

    Signals are stacked signal-major (all agents' x, then all zeta, ...), in
    the order psi=(x, zeta, z~), e, f=(r, w) | psi, eta_hat, z.
    """
    N = graph.node_count
    L = graph.laplacian_matrix()
    nx, nw, nu, ny = model.dims
    A, Bw, Bu, Cy = model.vertex_matrices[vertex]
    a_z, b_z = certificate.alpha_z, certificate.beta_z
    I_N = np.eye(N)
    Iy = np.eye(N * ny)
    Ly = np.kron(L, np.eye(ny))
    A_c, C_c = np.kron(I_N, A), np.kron(I_N, Cy)
    Bw_c, Bu_c = np.kron(I_N, Bw), np.kron(I_N, Bu)
    Z = np.zeros
    nX, nY, nW, nU = N * nx, N * ny, N * nw, N * nu

    A_ol = np.block([[A_c, Z((nX, nY)), Z((nX, nY))],
                     [-Ly @ C_c, Iy, Z((nY, nY))],
                     [-b_z * C_c, Z((nY, nY)), -a_z * Iy]])
    B_e = np.vstack([Z((nX, nY)), -Ly, Z((nY, nY))])
    B_f = np.block([[Z((nX, nY)), Bw_c], [Ly, Z((nY, nW))], [b_z * Iy, Z((nY, nW))]])
    C_eta = np.hstack([-Ly @ C_c, Z((nY, 2 * nY))])
    D_eta_e = -Ly
    D_eta_f = np.hstack([Ly, Z((nY, nW))])
    C_z = np.hstack([Z((nY, nX + nY)), Ly])
    B_F = np.vstack([Bu_c, Z((2 * nY, nU))])

    parts = [nx, ny, ny]
    S_bar = lift_signal_major(certificate.S, parts, parts, N)
    G_bar = lift_signal_major(certificate.G(vertex), parts, parts, N)
    K_bar = lift_signal_major(stack_K(certificate.K1[vertex], ny), [nu], parts, N)
    n_psi = N * (nx + 2 * ny)
    n_f = N * (ny + nw)

    M11 = block_diag(G_bar + G_bar.T - S_bar, np.eye(nY), certificate.t * np.eye(n_f))
    M21 = np.block([
        [A_ol @ G_bar + B_F @ K_bar, B_e, B_f],
        [C_eta @ G_bar, D_eta_e, D_eta_f],
        [C_z @ G_bar, Z((nY, nY)), Z((nY, n_f))],
    ])
    M22 = block_diag(S_bar, certificate.sigma_x * np.eye(nY), np.eye(nY))
    return np.block([[M11, M21.T], [M21, M22]])


def _group_dims(model: PolytopicLpvModel) -> list[int]:
    nx, nw, nu, ny = model.dims
    # x, zeta, z~, e, r, w | x, zeta, z~, eta_hat, z
    return [nx, ny, ny, ny, ny, nw, nx, ny, ny, ny, ny]


def modal_transform(Z: np.ndarray, group_dims) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal ``T = diag(Z kron I_d ...)`` and the permutation taking
    signal-major modal coordinates to mode-major order."""
    N = Z.shape[0]
    T = block_diag(*[np.kron(Z, np.eye(d)) for d in group_dims])
    g_off = np.concatenate([[0], np.cumsum([N * d for d in group_dims])])
    perm = []
    for i in range(N):
        for g, d in enumerate(group_dims):
            perm.extend(int(g_off[g] + i * d + c) for c in range(d))
    return T, np.asarray(perm)


def verify_full_network_equivalence(model: PolytopicLpvModel, certificate: SynthesisCertificate, graph: CommGraph,
                                    vertex: int, modal_lambdas=None, tol: float = EQUIVALENCE_TOL,
                                    raise_on_failure: bool = True) -> float:
    """Max elementwise deviation between the block-diagonalised network
    inequality and the direct sum of modal blocks for ``lam_1 .. lam_N``.

    ``modal_lambdas`` overrides the eigenvalues used on the modal side (for
    probing the sensitivity of the check).
    """
    spectrum = build_laplacian(graph)
    lams = spectrum.eigenvalues if modal_lambdas is None else np.asarray(modal_lambdas, dtype=float)
    full = full_network_lmi(model, certificate, graph, vertex)
    T, perm = modal_transform(spectrum.basis, _group_dims(model))
    transformed = (T.T @ full @ T)[np.ix_(perm, perm)]

    ny = model.dims[3]
    G = certificate.G(vertex)
    K = stack_K(certificate.K1[vertex], ny)
    vm = model.vertex_matrices[vertex]
    modal = block_diag(*[
        assemble_lmi_block(mode_matrices(vm, lam, certificate.alpha_z, certificate.beta_z),
                           certificate.S, G, K, certificate.t, certificate.sigma_x)
        for lam in lams])
    deviation = float(np.max(np.abs(transformed - modal)))
    if raise_on_failure and not deviation < tol:
        raise EquivalenceFailure(f"full-network vs modal deviation {deviation:.3e} >= {tol:.1e}")
    return deviation


# ---------------------------------------------------------------------------
# dissipation along a trajectory
# ---------------------------------------------------------------------------

def network_storage_matrix(certificate: SynthesisCertificate, graph: CommGraph,
                           include_agreement: bool = False) -> np.ndarray:
    """``P = T_psi (W kron S^-1) T_psi^T`` in signal-major psi coordinates.

    ``W = I_N`` with ``include_agreement``; otherwise the agreement mode is
    dropped (``W = diag(0, 1, ..., 1)``), which is the part the certificate
    actually covers.
    """
    spectrum = build_laplacian(graph)
    N = graph.node_count
    nx, nw, nu, ny = certificate.dims
    dims = [nx, ny, ny]
    T, perm = modal_transform(spectrum.basis, dims)
    weights = np.ones(N)
    if not include_agreement:
        weights[0] = 0.0
    P_mode_major = np.kron(np.diag(weights), np.linalg.inv(certificate.S))
    n = N * sum(dims)
    # undo the mode-major permutation, then rotate back to agent coordinates
    P_modal = np.empty((n, n))
    P_modal[np.ix_(perm, perm)] = P_mode_major
    P = T @ P_modal @ T.T
    return (P + P.T) / 2


@dataclass
class DissipationReport:
    max_violation: float  # normalised by the per-step signal scale
    worst_step: int
    raw_max_violation: float
    steps: int

    @property
    def passed(self) -> bool:
        return self.max_violation <= DISSIPATION_TOL


def _psi(trace, k):
    return np.concatenate([trace.x[k].ravel(), trace.zeta[k].ravel(), trace.ztilde[k].ravel()])


def verify_lyapunov_decrease(trace, certificate: SynthesisCertificate, graph: CommGraph,
                             tol: float = DISSIPATION_TOL, include_agreement: bool = False,
                             require_homogeneous: bool = True, raise_on_failure: bool = True) -> DissipationReport:
    """Check, step by step,

        V(psi_{k+1}) - V(psi_k) <= -|z_k|^2 + gamma^2 |f_k|^2 - sigma |eta_hat_k|^2 + |e_k|^2.

    Violations are normalised by ``max(1, |terms|)`` of the same step.
    """
    if require_homogeneous:
        spread = np.max(np.ptp(trace.theta, axis=1)) if trace.theta.size else 0.0
        if spread > 1e-12:
            raise ValueError(f"trace scheduling is not homogeneous (spread {spread:.3e})")
    P = network_storage_matrix(certificate, graph, include_agreement)
    gamma2 = certificate.t
    sigma = certificate.sigma
    H = trace.horizon
    worst, worst_k, raw_worst = -np.inf, -1, -np.inf
    V_next = None
    for k in range(H):
        psi_k = _psi(trace, k)
        psi_n = _psi(trace, k + 1)
        V_k = float(psi_k @ P @ psi_k) if V_next is None else V_next
        V_next = float(psi_n @ P @ psi_n)
        zz = float(np.sum(trace.z[k] ** 2))
        ff = float(np.sum(trace.r[k] ** 2) + np.sum(trace.w[k] ** 2))
        ee = float(np.sum(trace.e[k] ** 2))
        hh = float(np.sum(trace.eta_hat[k] ** 2))
        rhs = -zz + gamma2 * ff - sigma * hh + ee
        violation = (V_next - V_k) - rhs
        scale = max(1.0, abs(V_k), abs(V_next), zz, gamma2 * ff, sigma * hh, ee)
        norm = violation / scale
        if norm > worst:
            worst, worst_k, raw_worst = norm, k, violation
    report = DissipationReport(float(worst), worst_k, float(raw_worst), H)
    if raise_on_failure and not report.max_violation <= tol:
        raise DissipationViolation(
            f"dissipation inequality violated at step {worst_k} by {worst:.3e} (normalised)",
            step=worst_k, slack=worst)
    return report
