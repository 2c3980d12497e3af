# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sequence kernels.

Same functions and layouts as headtag.kernels.reference; that module is the
semantic contract.  All inputs must be C-contiguous float64.  The per-step
matrix-vector products go through BLAS (a C-order (m, n) array is its own
transpose in column-major terms, hence the flipped trans flags).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, tanh
from scipy.linalg.cython_blas cimport dgemv, dger

cnp.import_array()


cdef inline double _sigmoid(double x) noexcept nogil:
    return 1.0 / (1.0 + exp(-x))


cdef inline void _matvec(double* a, int rows, int cols, double* x,
                         double* y, double beta) noexcept nogil:
    # y = a @ x + beta * y for C-order a (rows, cols)
    cdef int m = cols, n = rows, inc = 1
    cdef double one = 1.0
    dgemv("t", &m, &n, &one, a, &m, x, &inc, &beta, y, &inc)


cdef inline void _matvec_t(double* a, int rows, int cols, double* x,
                           double* y, double beta) noexcept nogil:
    # y = a.T @ x + beta * y for C-order a (rows, cols)
    cdef int m = cols, n = rows, inc = 1
    cdef double one = 1.0
    dgemv("n", &m, &n, &one, a, &m, x, &inc, &beta, y, &inc)


cdef inline void _rank1(double* a, int rows, int cols, double* x,
                        double* y) noexcept nogil:
    # a += x outer y for C-order a (rows, cols), x (rows,), y (cols,)
    cdef int m = cols, n = rows, inc = 1
    cdef double one = 1.0
    dger(&m, &n, &one, y, &inc, x, &inc, a, &m)


cdef void _gru_segment_forward(double[:, ::1] gi, double[:, ::1] w_hh,
                               double[::1] b_hh, double[::1] h0,
                               double[:, ::1] h, double[:, ::1] r,
                               double[:, ::1] z, double[:, ::1] n,
                               double[:, ::1] ghn, double[::1] gh,
                               Py_ssize_t begin, Py_ssize_t stop) noexcept nogil:
    cdef Py_ssize_t H = w_hh.shape[1]
    cdef Py_ssize_t G = 3 * H
    cdef Py_ssize_t t, i
    cdef double rt, zt, nt
    cdef double* h_prev
    for t in range(begin, stop):
        h_prev = &h0[0] if t == begin else &h[t - 1, 0]
        for i in range(G):
            gh[i] = b_hh[i]
        _matvec(&w_hh[0, 0], <int> G, <int> H, h_prev, &gh[0], 1.0)
        for i in range(H):
            rt = _sigmoid(gi[t, i] + gh[i])
            zt = _sigmoid(gi[t, H + i] + gh[H + i])
            ghn[t, i] = gh[2 * H + i]
            nt = tanh(gi[t, 2 * H + i] + rt * ghn[t, i])
            r[t, i] = rt
            z[t, i] = zt
            n[t, i] = nt
            h[t, i] = (1.0 - zt) * nt + zt * h_prev[i]


cdef void _gru_segment_backward(double[:, ::1] dh, double[:, ::1] h,
                                double[:, ::1] r, double[:, ::1] z,
                                double[:, ::1] n, double[:, ::1] ghn,
                                double[:, ::1] w_hh, double[::1] h0,
                                double[:, ::1] dgi, double[:, ::1] dw_hh,
                                double[::1] db_hh, double[::1] dgh,
                                double[::1] carry,
                                Py_ssize_t begin, Py_ssize_t stop) noexcept nogil:
    cdef Py_ssize_t H = w_hh.shape[1]
    cdef Py_ssize_t G = 3 * H
    cdef Py_ssize_t t, i
    cdef double dht, dn, dz, dpre_n, dr
    cdef double* h_prev
    for i in range(H):
        carry[i] = 0.0
    for t in range(stop - 1, begin - 1, -1):
        h_prev = &h0[0] if t == begin else &h[t - 1, 0]
        for i in range(H):
            dht = dh[t, i] + carry[i]
            dn = dht * (1.0 - z[t, i])
            dz = dht * (h_prev[i] - n[t, i])
            dpre_n = dn * (1.0 - n[t, i] * n[t, i])
            dr = dpre_n * ghn[t, i]
            dgi[t, i] = dr * r[t, i] * (1.0 - r[t, i])
            dgi[t, H + i] = dz * z[t, i] * (1.0 - z[t, i])
            dgi[t, 2 * H + i] = dpre_n
            dgh[i] = dgi[t, i]
            dgh[H + i] = dgi[t, H + i]
            dgh[2 * H + i] = dpre_n * r[t, i]
            carry[i] = dht * z[t, i]
        for i in range(G):
            db_hh[i] += dgh[i]
        _rank1(&dw_hh[0, 0], <int> G, <int> H, &dgh[0], h_prev)
        _matvec_t(&w_hh[0, 0], <int> G, <int> H, &dgh[0], &carry[0], 1.0)


def gru_forward(double[:, ::1] gi, double[:, ::1] w_hh, double[::1] b_hh,
                double[::1] h0):
    cdef Py_ssize_t T = gi.shape[0]
    cdef Py_ssize_t H = w_hh.shape[1]

    h_arr = np.empty((T, H))
    r_arr = np.empty((T, H))
    z_arr = np.empty((T, H))
    n_arr = np.empty((T, H))
    ghn_arr = np.empty((T, H))
    gh_arr = np.empty(3 * H)

    cdef double[:, ::1] h = h_arr, r = r_arr, z = z_arr, n = n_arr, ghn = ghn_arr
    cdef double[::1] gh = gh_arr

    with nogil:
        _gru_segment_forward(gi, w_hh, b_hh, h0, h, r, z, n, ghn, gh, 0, T)
    return h_arr, r_arr, z_arr, n_arr, ghn_arr


def gru_backward(double[:, ::1] dh, double[:, ::1] h, double[:, ::1] r,
                 double[:, ::1] z, double[:, ::1] n, double[:, ::1] ghn,
                 double[:, ::1] w_hh, double[::1] h0):
    cdef Py_ssize_t T = dh.shape[0]
    cdef Py_ssize_t H = dh.shape[1]
    cdef Py_ssize_t G = 3 * H

    dgi_arr = np.empty((T, G))
    dw_hh_arr = np.zeros((G, H))
    db_hh_arr = np.zeros(G)
    dgh_arr = np.empty(G)
    carry_arr = np.zeros(H)

    cdef double[:, ::1] dgi = dgi_arr, dw_hh = dw_hh_arr
    cdef double[::1] db_hh = db_hh_arr, dgh = dgh_arr, carry = carry_arr

    with nogil:
        _gru_segment_backward(dh, h, r, z, n, ghn, w_hh, h0,
                              dgi, dw_hh, db_hh, dgh, carry, 0, T)
    return dgi_arr, dw_hh_arr, db_hh_arr, carry_arr


def gru_forward_packed(double[:, ::1] gi, long long[::1] lengths,
                       double[:, ::1] w_hh, double[::1] b_hh):
    cdef Py_ssize_t N = gi.shape[0]
    cdef Py_ssize_t H = w_hh.shape[1]
    cdef Py_ssize_t S = lengths.shape[0]

    h_arr = np.empty((N, H))
    r_arr = np.empty((N, H))
    z_arr = np.empty((N, H))
    n_arr = np.empty((N, H))
    ghn_arr = np.empty((N, H))
    gh_arr = np.empty(3 * H)
    h0_arr = np.zeros(H)

    cdef double[:, ::1] h = h_arr, r = r_arr, z = z_arr, n = n_arr, ghn = ghn_arr
    cdef double[::1] gh = gh_arr, h0 = h0_arr
    cdef Py_ssize_t s, begin = 0, stop

    with nogil:
        for s in range(S):
            stop = begin + lengths[s]
            _gru_segment_forward(gi, w_hh, b_hh, h0, h, r, z, n, ghn, gh,
                                 begin, stop)
            begin = stop
    return h_arr, r_arr, z_arr, n_arr, ghn_arr


def gru_backward_packed(double[:, ::1] dh, long long[::1] lengths,
                        double[:, ::1] h, double[:, ::1] r, double[:, ::1] z,
                        double[:, ::1] n, double[:, ::1] ghn,
                        double[:, ::1] w_hh):
    cdef Py_ssize_t N = dh.shape[0]
    cdef Py_ssize_t H = dh.shape[1]
    cdef Py_ssize_t G = 3 * H
    cdef Py_ssize_t S = lengths.shape[0]

    dgi_arr = np.empty((N, G))
    dw_hh_arr = np.zeros((G, H))
    db_hh_arr = np.zeros(G)
    dgh_arr = np.empty(G)
    carry_arr = np.empty(H)
    h0_arr = np.zeros(H)

    cdef double[:, ::1] dgi = dgi_arr, dw_hh = dw_hh_arr
    cdef double[::1] db_hh = db_hh_arr, dgh = dgh_arr, carry = carry_arr
    cdef double[::1] h0 = h0_arr
    cdef Py_ssize_t s, begin, stop

    with nogil:
        stop = N
        for s in range(S - 1, -1, -1):
            begin = stop - lengths[s]
            _gru_segment_backward(dh, h, r, z, n, ghn, w_hh, h0,
                                  dgi, dw_hh, db_hh, dgh, carry, begin, stop)
            stop = begin
    return dgi_arr, dw_hh_arr, db_hh_arr


def crf_forward(double[:, ::1] emissions, double[:, ::1] transitions,
                double[::1] start, double[::1] end):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t K = emissions.shape[1]

    alpha_arr = np.empty((T, K))
    cdef double[:, ::1] alpha = alpha_arr
    cdef Py_ssize_t t, i, j
    cdef double m, s, v, logz

    with nogil:
        for j in range(K):
            alpha[0, j] = start[j] + emissions[0, j]
        for t in range(1, T):
            for j in range(K):
                m = alpha[t - 1, 0] + transitions[0, j]
                for i in range(1, K):
                    v = alpha[t - 1, i] + transitions[i, j]
                    if v > m:
                        m = v
                s = 0.0
                for i in range(K):
                    s += exp(alpha[t - 1, i] + transitions[i, j] - m)
                alpha[t, j] = emissions[t, j] + m + log(s)
        m = alpha[T - 1, 0] + end[0]
        for j in range(1, K):
            v = alpha[T - 1, j] + end[j]
            if v > m:
                m = v
        s = 0.0
        for j in range(K):
            s += exp(alpha[T - 1, j] + end[j] - m)
        logz = m + log(s)
    return logz, alpha_arr


def crf_backward(double[:, ::1] emissions, double[:, ::1] transitions,
                 double[::1] end):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t K = emissions.shape[1]

    beta_arr = np.empty((T, K))
    cdef double[:, ::1] beta = beta_arr
    cdef Py_ssize_t t, i, j
    cdef double m, s, v

    with nogil:
        for i in range(K):
            beta[T - 1, i] = end[i]
        for t in range(T - 2, -1, -1):
            for i in range(K):
                m = transitions[i, 0] + emissions[t + 1, 0] + beta[t + 1, 0]
                for j in range(1, K):
                    v = transitions[i, j] + emissions[t + 1, j] + beta[t + 1, j]
                    if v > m:
                        m = v
                s = 0.0
                for j in range(K):
                    s += exp(transitions[i, j] + emissions[t + 1, j] + beta[t + 1, j] - m)
                beta[t, i] = m + log(s)
    return beta_arr


def viterbi(double[:, ::1] emissions, double[:, ::1] transitions,
            double[::1] start, double[::1] end):
    cdef Py_ssize_t T = emissions.shape[0]
    cdef Py_ssize_t K = emissions.shape[1]

    score_arr = np.empty(K)
    new_arr = np.empty(K)
    backptr_arr = np.empty((T - 1 if T > 1 else 0, K), dtype=np.int64)
    path_arr = np.empty(T, dtype=np.int64)

    cdef double[::1] score = score_arr
    cdef double[::1] new_score = new_arr
    cdef long long[:, ::1] backptr = backptr_arr
    cdef long long[::1] path = path_arr
    cdef Py_ssize_t t, i, j, best
    cdef double m, v

    with nogil:
        for j in range(K):
            score[j] = start[j] + emissions[0, j]
        for t in range(1, T):
            for j in range(K):
                best = 0
                m = score[0] + transitions[0, j]
                for i in range(1, K):
                    v = score[i] + transitions[i, j]
                    if v > m:
                        m = v
                        best = i
                backptr[t - 1, j] = best
                new_score[j] = emissions[t, j] + m
            for j in range(K):
                score[j] = new_score[j]
        best = 0
        m = score[0] + end[0]
        for j in range(1, K):
            v = score[j] + end[j]
            if v > m:
                m = v
                best = j
        path[T - 1] = best
        for t in range(T - 2, -1, -1):
            path[t] = backptr[t, path[t + 1]]
    return path_arr
