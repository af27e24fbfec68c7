from __future__ import annotations

import logging

import numpy as np

from ..errors import BackendFailure, IllConditioned, Infeasible
from .assembly import assemble_lmi_block, assemble_mode_matrices, stack_G, stack_K
from .backend import CvxpyBackend, SdpBackend
from .problem import Mode, SynthesisCertificate, SynthesisProblem, VertexControllerSet

log = logging.getLogger(__name__)

ACCEPT_MIN_EIG = -1e-7
MAX_G1_CONDITION = 1e10


def certificate_blocks(model, certificate: SynthesisCertificate, lambdas=None):
    """Numerically assembled LMI blocks ``{(l, lam): matrix}`` at the certificate."""
    lambdas = certificate.lambdas if lambdas is None else lambdas
    ny = certificate.dims[3]
    out = {}
    for l in range(model.vertex_count):
        G = certificate.G(l)
        K = stack_K(certificate.K1[l], ny)
        for lam in lambdas:
            mm = assemble_mode_matrices(model, l, lam, certificate.alpha_z, certificate.beta_z)
            out[(l, float(lam))] = assemble_lmi_block(mm, certificate.S, G, K, certificate.t, certificate.sigma_x)
    return out


def block_min_eigenvalues(model, certificate: SynthesisCertificate, lambdas=None) -> dict:
    blocks = certificate_blocks(model, certificate, lambdas)
    return {key: float(np.linalg.eigvalsh((M + M.T) / 2)[0]) for key, M in blocks.items()}


def recover_controllers(certificate: SynthesisCertificate, max_condition: float = MAX_G1_CONDITION) -> VertexControllerSet:
    """(F_x^l  F_zeta^l) = K_1^l (G_1^l)^{-1} for every vertex."""
    nx = certificate.dims[0]
    F_x, F_zeta = [], []
    for l, (G1, K1) in enumerate(zip(certificate.G1, certificate.K1)):
        cond = np.linalg.cond(G1)
        if not np.isfinite(cond) or cond > max_condition:
            raise IllConditioned(f"cond(G1[{l}]) = {cond:.3e} exceeds {max_condition:.0e}")
        F = np.linalg.solve(G1.T, K1.T).T
        F_x.append(F[:, :nx])
        F_zeta.append(F[:, nx:])
    return VertexControllerSet(tuple(F_x), tuple(F_zeta), certificate.gamma, certificate.sigma,
                               certificate.alpha_z, certificate.beta_z)


def synthesize(problem: SynthesisProblem, backend: SdpBackend | None = None
               ) -> tuple[SynthesisCertificate, VertexControllerSet]:
    """Solve the vertex/eigenvalue LMIs with one shared ``S``.

    Feasibility mode fixes ``t = gamma^2``; MINIMIZE_GAMMA_SQUARED leaves
    ``t`` free and minimises it.  ``sigma_x = 1/sigma`` is fixed in both.
    Every strict inequality is imposed as ``>= epsilon * I``.
    """
    backend = CvxpyBackend() if backend is None else backend
    model = problem.model
    nx, nw, nu, ny = model.dims
    n_psi = nx + 2 * ny
    eps = problem.epsilon
    sigma_x = 1.0 / problem.sigma

    if problem.mode is Mode.FEASIBILITY:
        t_fixed = float(problem.gamma) ** 2
        if t_fixed < eps:
            # the t*I diagonal block alone already violates >= eps*I
            raise Infeasible(f"gamma^2 = {t_fixed:.3e} below the strictness margin {eps:.1e}")
        t = t_fixed
    else:
        t = backend.scalar("t")

    S = backend.symmetric(n_psi, "S")
    G1s, G2s, K1s = [], [], []
    for l in range(model.vertex_count):
        G1 = backend.matrix(nx + ny, nx + ny, f"G1_{l}")
        G2 = backend.matrix(ny, ny, f"G2_{l}")
        K1 = backend.matrix(nu, nx + ny, f"K1_{l}")
        G1s.append(G1)
        G2s.append(G2)
        K1s.append(K1)
        G = stack_G(G1, G2, backend.bmat)
        K = stack_K(K1, ny, backend.bmat)
        for lam in problem.lambdas:
            mm = assemble_mode_matrices(model, l, lam, problem.alpha_z, problem.beta_z)
            backend.add_psd(assemble_lmi_block(mm, S, G, K, t, sigma_x, backend.bmat), eps)
    backend.add_psd(S, eps)
    if problem.mode is Mode.MINIMIZE_GAMMA_SQUARED:
        backend.minimize(t)

    result = backend.solve()
    if result.status == "infeasible":
        raise Infeasible(f"LMIs infeasible ({result.solver}: {result.message})")
    if result.status != "optimal":
        raise BackendFailure(result.message or "backend returned no solution")

    cert = SynthesisCertificate(
        S=_sym(backend.value(S)),
        G1=tuple(backend.value(v) for v in G1s),
        G2=tuple(backend.value(v) for v in G2s),
        K1=tuple(backend.value(v) for v in K1s),
        t=float(backend.value(t)),
        sigma_x=sigma_x,
        lambdas=tuple(float(v) for v in problem.lambdas),
        alpha_z=float(problem.alpha_z),
        beta_z=float(problem.beta_z),
        epsilon=eps,
        dims=(nx, nw, nu, ny),
        status=result.message,
    )
    min_eigs = block_min_eigenvalues(model, cert)
    object.__setattr__(cert, "min_eig_per_block", min_eigs)
    worst = min(min_eigs.values())
    s_min = float(np.linalg.eigvalsh(cert.S)[0])
    if worst < ACCEPT_MIN_EIG or s_min <= 0:
        raise BackendFailure(
            f"{result.solver} reported {result.message} but the re-evaluated LMI has "
            f"min eigenvalue {worst:.3e} (S min eig {s_min:.3e})")
    log.info("synthesis %s via %s: gamma=%.6g, worst block eig %.3e", problem.mode.value, result.solver,
             cert.gamma, worst)
    return cert, recover_controllers(cert)


def _sym(M):
    return (M + M.T) / 2
