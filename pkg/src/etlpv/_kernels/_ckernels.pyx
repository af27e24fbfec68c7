# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-step kernels; same API and semantics as ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _blend(const double[:, ::1] alphas, Py_ssize_t n,
                        const double[:, :, ::1] stack, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t s = stack.shape[0], r = stack.shape[1], c = stack.shape[2]
    cdef Py_ssize_t l, i, j
    cdef double a
    for i in range(r):
        for j in range(c):
            out[i, j] = 0.0
    for l in range(s):
        a = alphas[n, l]
        for i in range(r):
            for j in range(c):
                out[i, j] += a * stack[l, i, j]


cdef inline void _matvec_add(const double[:, ::1] M, const double[:] v, double[:] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(M.shape[0]):
        acc = 0.0
        for j in range(M.shape[1]):
            acc += M[i, j] * v[j]
        out[i] += acc


def blend_rows(alphas, stack):
    cdef const double[:, ::1] a = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef const double[:, :, ::1] st = np.ascontiguousarray(stack, dtype=np.float64)
    cdef Py_ssize_t n
    out = np.empty((a.shape[0], st.shape[1], st.shape[2]))
    cdef double[:, :, ::1] o = out
    for n in range(a.shape[0]):
        _blend(a, n, st, o[n])
    return out


def network_output(C_stack, alphas, X):
    cdef const double[:, ::1] a = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef const double[:, :, ::1] st = np.ascontiguousarray(C_stack, dtype=np.float64)
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n
    cdef double[:, ::1] C = np.empty((st.shape[1], st.shape[2]))
    out = np.zeros((x.shape[0], st.shape[1]))
    cdef double[:, ::1] o = out
    with nogil:
        for n in range(x.shape[0]):
            _blend(a, n, st, C)
            _matvec_add(C, x[n], o[n])
    return out


def open_loop_step(A_stack, alphas, X):
    return network_output(A_stack, alphas, X)


def network_step(A_stack, Bw_stack, Bu_stack, Fx_stack, Fz_stack, alphas, X, Zeta, W):
    cdef const double[:, ::1] a = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef const double[:, :, ::1] sA = np.ascontiguousarray(A_stack, dtype=np.float64)
    cdef const double[:, :, ::1] sBw = np.ascontiguousarray(Bw_stack, dtype=np.float64)
    cdef const double[:, :, ::1] sBu = np.ascontiguousarray(Bu_stack, dtype=np.float64)
    cdef const double[:, :, ::1] sFx = np.ascontiguousarray(Fx_stack, dtype=np.float64)
    cdef const double[:, :, ::1] sFz = np.ascontiguousarray(Fz_stack, dtype=np.float64)
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] z = np.ascontiguousarray(Zeta, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(W, dtype=np.float64)
    cdef Py_ssize_t N = x.shape[0], nx = sA.shape[1], nu = sBu.shape[2], n
    cdef double[:, ::1] M_A = np.empty((nx, nx))
    cdef double[:, ::1] M_Bw = np.empty((nx, sBw.shape[2]))
    cdef double[:, ::1] M_Bu = np.empty((nx, nu))
    cdef double[:, ::1] M_Fx = np.empty((nu, nx))
    cdef double[:, ::1] M_Fz = np.empty((nu, sFz.shape[2]))
    x_next = np.zeros((N, nx))
    u_out = np.zeros((N, nu))
    cdef double[:, ::1] xn = x_next
    cdef double[:, ::1] u = u_out
    with nogil:
        for n in range(N):
            _blend(a, n, sFz, M_Fz)
            _blend(a, n, sFx, M_Fx)
            _matvec_add(M_Fz, z[n], u[n])
            _matvec_add(M_Fx, x[n], u[n])
            _blend(a, n, sA, M_A)
            _blend(a, n, sBw, M_Bw)
            _blend(a, n, sBu, M_Bu)
            _matvec_add(M_A, x[n], xn[n])
            _matvec_add(M_Bw, w[n], xn[n])
            _matvec_add(M_Bu, u[n], xn[n])
    return x_next, u_out


def formation_error(l_row, R, Yhat):
    cdef const double[:] l = np.ascontiguousarray(l_row, dtype=np.float64)
    cdef const double[:, ::1] r = np.ascontiguousarray(R, dtype=np.float64)
    cdef const double[:, ::1] y = np.ascontiguousarray(Yhat, dtype=np.float64)
    cdef Py_ssize_t j, c
    out = np.zeros(r.shape[1])
    cdef double[:] o = out
    for j in range(r.shape[0]):
        if l[j] != 0.0:
            for c in range(r.shape[1]):
                o[c] += l[j] * (r[j, c] - y[j, c])
    return out
