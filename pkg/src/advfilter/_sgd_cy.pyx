# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled mini-batch SGD kernel for multinomial logistic regression.

Mirrors _sgd_py.sgd_train: same batch order, same update rule. Plain C
loops, double precision throughout.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp


def sgd_train(double[:, ::1] X, long[::1] y, int num_classes,
              long[:, ::1] perms, int batch_size, double lr, double l2):
    cdef int n = X.shape[0]
    cdef int d = X.shape[1]
    cdef int L = num_classes
    cdef int epochs = perms.shape[0]

    W_arr = np.zeros((L, d), dtype=np.float64)
    b_arr = np.zeros(L, dtype=np.float64)
    gW_arr = np.zeros((L, d), dtype=np.float64)
    gb_arr = np.zeros(L, dtype=np.float64)
    p_arr = np.zeros(L, dtype=np.float64)

    cdef double[:, ::1] W = W_arr
    cdef double[::1] b = b_arr
    cdef double[:, ::1] gW = gW_arr
    cdef double[::1] gb = gb_arr
    cdef double[::1] p = p_arr

    cdef int e, start, stop, m, bi, c, j, i
    cdef long yi
    cdef double z, zmax, zsum, coef, inv_m

    for e in range(epochs):
        start = 0
        while start < n:
            stop = start + batch_size
            if stop > n:
                stop = n
            m = stop - start
            inv_m = 1.0 / m
            for c in range(L):
                gb[c] = 0.0
                for j in range(d):
                    gW[c, j] = 0.0
            for bi in range(start, stop):
                i = perms[e, bi]
                yi = y[i]
                zmax = -1e308
                for c in range(L):
                    z = b[c]
                    for j in range(d):
                        z += W[c, j] * X[i, j]
                    p[c] = z
                    if z > zmax:
                        zmax = z
                zsum = 0.0
                for c in range(L):
                    p[c] = exp(p[c] - zmax)
                    zsum += p[c]
                for c in range(L):
                    p[c] /= zsum
                p[yi] -= 1.0
                for c in range(L):
                    gb[c] += p[c]
                    coef = p[c]
                    for j in range(d):
                        gW[c, j] += coef * X[i, j]
            for c in range(L):
                b[c] -= lr * gb[c] * inv_m
                for j in range(d):
                    W[c, j] -= lr * (gW[c, j] * inv_m + l2 * W[c, j])
            start = stop
    return W_arr, b_arr
