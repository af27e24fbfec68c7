"""Pure numpy implementation of the per-step kernels (fallback)."""
import numpy as np


def blend_rows(alphas, stack):
    """(N, s) weights against an (s, r, c) vertex stack -> (N, r, c)."""
    s, r, c = stack.shape
    return (alphas @ stack.reshape(s, r * c)).reshape(alphas.shape[0], r, c)


def _matvec(M, X):
    return np.matmul(M, X[:, :, None])[:, :, 0]


def network_output(C_stack, alphas, X):
    return _matvec(blend_rows(alphas, C_stack), X)


def open_loop_step(A_stack, alphas, X):
    return _matvec(blend_rows(alphas, A_stack), X)


def network_step(A_stack, Bw_stack, Bu_stack, Fx_stack, Fz_stack, alphas, X, Zeta, W):
    """u = F_zeta(theta) zeta + F_x(theta) x;  x+ = A x + B_w w + B_u u."""
    U = _matvec(blend_rows(alphas, Fz_stack), Zeta) + _matvec(blend_rows(alphas, Fx_stack), X)
    X_next = (_matvec(blend_rows(alphas, A_stack), X)
              + _matvec(blend_rows(alphas, Bw_stack), W)
              + _matvec(blend_rows(alphas, Bu_stack), U))
    return X_next, U


def formation_error(l_row, R, Yhat):
    """sum_j l_ij (r_j - yhat_j) for one Laplacian row."""
    return l_row @ (R - Yhat)
