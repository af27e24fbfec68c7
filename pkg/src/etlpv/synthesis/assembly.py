"""Per-mode closed-loop matrices and the single-agent-sized LMI block.

For vertex ``l`` and Laplacian eigenvalue ``lam`` the modal state is
``psi = (x, zeta, z_tilde)`` of size ``n_x + 2 n_y``; the exogenous inputs
are the trigger error ``e`` (``n_y``) and ``f = (r, w)`` (``n_y + n_w``).
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import DimensionMismatch
from ..lpv import PolytopicLpvModel, VertexMatrices


class ModeMatrices(NamedTuple):
    A_ol: np.ndarray
    B_e: np.ndarray
    B_f: np.ndarray
    C_eta: np.ndarray
    D_eta_e: np.ndarray
    D_eta_f: np.ndarray
    C_z: np.ndarray
    D_ze: np.ndarray
    D_zf: np.ndarray
    B_F: np.ndarray


def mode_matrices(vm: VertexMatrices, lam: float, alpha_z: float, beta_z: float) -> ModeMatrices:
    """Modal system for one set of plant matrices (vertex or blended)."""
    A, Bw, Bu, Cy = (np.asarray(m, dtype=float) for m in vm)
    nx, nw = Bw.shape
    nu = Bu.shape[1]
    ny = Cy.shape[0]
    if A.shape != (nx, nx) or Bu.shape[0] != nx or Cy.shape[1] != nx:
        raise DimensionMismatch("inconsistent plant matrices")
    Iy = np.eye(ny)
    Z = np.zeros
    A_ol = np.block([
        [A, Z((nx, ny)), Z((nx, ny))],
        [-lam * Cy, Iy, Z((ny, ny))],
        [-beta_z * Cy, Z((ny, ny)), -alpha_z * Iy],
    ])
    B_e = np.vstack([Z((nx, ny)), -lam * Iy, Z((ny, ny))])
    B_f = np.block([
        [Z((nx, ny)), Bw],
        [lam * Iy, Z((ny, nw))],
        [beta_z * Iy, Z((ny, nw))],
    ])
    C_eta = np.hstack([-lam * Cy, Z((ny, 2 * ny))])
    D_eta_e = -lam * Iy
    D_eta_f = np.hstack([lam * Iy, Z((ny, nw))])
    C_z = np.hstack([Z((ny, nx + ny)), lam * Iy])
    D_ze = Z((ny, ny))
    D_zf = Z((ny, ny + nw))
    B_F = np.vstack([Bu, Z((2 * ny, nu))])
    return ModeMatrices(A_ol, B_e, B_f, C_eta, D_eta_e, D_eta_f, C_z, D_ze, D_zf, B_F)


def assemble_mode_matrices(model: PolytopicLpvModel, l: int, lam: float, alpha_z: float, beta_z: float) -> ModeMatrices:
    if not 0 <= l < model.vertex_count:
        raise DimensionMismatch(f"vertex index {l} out of range")
    return mode_matrices(model.vertex_matrices[l], lam, alpha_z, beta_z)


def block_sizes(mm: ModeMatrices) -> list[int]:
    """Row sizes of the six block rows: psi, e, f, psi, eta_hat, z."""
    n_psi = mm.A_ol.shape[0]
    ny = mm.B_e.shape[1]
    nf = mm.B_f.shape[1]
    return [n_psi, ny, nf, n_psi, ny, ny]


def assemble_lmi_block(mm: ModeMatrices, S, G, K, t, sigma_x, bmat=np.block):
    """Symmetric LMI block for one (vertex, eigenvalue) pair.

    ``S``, ``G`` (``n_psi x n_psi``), ``K`` (``n_u x n_psi``), ``t`` and
    ``sigma_x`` may be numbers/arrays or backend expressions; ``bmat``
    concatenates the blocks (``np.block`` for numeric evaluation).
    """
    n_psi, ny, nf = mm.A_ol.shape[0], mm.B_e.shape[1], mm.B_f.shape[1]
    if getattr(G, "shape", None) != (n_psi, n_psi) or getattr(S, "shape", None) != (n_psi, n_psi):
        raise DimensionMismatch(f"S and G must be {n_psi}x{n_psi}")
    if getattr(K, "shape", None) != (mm.B_F.shape[1], n_psi):
        raise DimensionMismatch(f"K must be {mm.B_F.shape[1]}x{n_psi}")
    Z = np.zeros
    AG = mm.A_ol @ G + mm.B_F @ K
    CG = mm.C_eta @ G
    ZG = mm.C_z @ G
    rows = [
        [G.T + G - S, Z((n_psi, ny)), Z((n_psi, nf)), AG.T, CG.T, ZG.T],
        [Z((ny, n_psi)), np.eye(ny), Z((ny, nf)), mm.B_e.T, mm.D_eta_e.T, mm.D_ze.T],
        [Z((nf, n_psi)), Z((nf, ny)), t * np.eye(nf), mm.B_f.T, mm.D_eta_f.T, mm.D_zf.T],
        [AG, mm.B_e, mm.B_f, S, Z((n_psi, ny)), Z((n_psi, ny))],
        [CG, mm.D_eta_e, mm.D_eta_f, Z((ny, n_psi)), sigma_x * np.eye(ny), Z((ny, ny))],
        [ZG, mm.D_ze, mm.D_zf, Z((ny, n_psi)), Z((ny, ny)), np.eye(ny)],
    ]
    return bmat(rows)


def stack_G(G1, G2, bmat=np.block):
    n1, n2 = G1.shape[0], G2.shape[0]
    return bmat([[G1, np.zeros((n1, n2))], [np.zeros((n2, n1)), G2]])


def stack_K(K1, ny: int, bmat=np.block):
    return bmat([[K1, np.zeros((K1.shape[0], ny))]])
