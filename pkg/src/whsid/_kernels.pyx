# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Signatures mirror ``whsid._fallback``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def df2t_filter(const double[::1] b, const double[::1] a, const double[::1] x,
                double[::1] zi):
    """Transposed direct-form II recursion with ``a[0] == 1``.

    ``b`` and ``a`` have equal length L; ``zi`` (length L - 1) is updated in place.
    """
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t L = b.shape[0]
    cdef Py_ssize_t t, i
    cdef double xt, yt
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    if L == 1:
        with nogil:
            for t in range(n):
                y[t] = b[0] * x[t]
        return out
    with nogil:
        for t in range(n):
            xt = x[t]
            yt = b[0] * xt + zi[0]
            for i in range(L - 2):
                zi[i] = b[i + 1] * xt - a[i + 1] * yt + zi[i + 1]
            zi[L - 2] = b[L - 1] * xt - a[L - 1] * yt
            y[t] = yt
    return out


def period_variance(const double[:, :, ::1] y):
    """Unbiased variance across axis 1 of an (M, P, N) block, shape (M, N).

    Welford updates, one pass over each experiment.
    """
    cdef Py_ssize_t M = y.shape[0], P = y.shape[1], N = y.shape[2]
    cdef Py_ssize_t m, p, t
    cdef double delta
    out = np.empty((M, N), dtype=np.float64)
    cdef double[:, ::1] var = out
    mean_buf = np.empty(N, dtype=np.float64)
    cdef double[::1] mean = mean_buf
    with nogil:
        for m in range(M):
            for t in range(N):
                mean[t] = 0.0
                var[m, t] = 0.0
            for p in range(P):
                for t in range(N):
                    delta = y[m, p, t] - mean[t]
                    mean[t] += delta / (p + 1)
                    var[m, t] += delta * (y[m, p, t] - mean[t])
            for t in range(N):
                var[m, t] /= P - 1
    return out
