# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation kernels; see _pykernels.py for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def h1_bits(const double[:, ::1] u, const double[:, ::1] w, const double[:, ::1] v,
            double p10_init, double p01, double p10, double sigma0, double sigma1,
            double corr, double innov, double noise_std):
    cdef Py_ssize_t m = u.shape[0], n = u.shape[1], t, i
    cdef cnp.ndarray[cnp.int8_t, ndim=2] out = np.empty((m, n), dtype=np.int8)
    cdef cnp.int8_t[:, ::1] bits = out
    cdef bint active, prev
    cdef double s
    with nogil:
        for t in range(m):
            active = u[t, 0] >= p10_init
            if active:
                s = sigma1 * w[t, 0]
            else:
                s = sigma0 * w[t, 0]
            bits[t, 0] = 1 if s + noise_std * v[t, 0] >= 0.0 else -1
            for i in range(1, n):
                prev = active
                if prev:
                    active = u[t, i] >= p10
                else:
                    active = u[t, i] < p01
                if active and prev:
                    s = corr * s + innov * w[t, i]
                elif active:
                    s = sigma1 * w[t, i]
                else:
                    s = sigma0 * w[t, i]
                bits[t, i] = 1 if s + noise_std * v[t, i] >= 0.0 else -1
    return out


def h0_bits(const double[:, ::1] v, double noise_std):
    cdef Py_ssize_t m = v.shape[0], n = v.shape[1], t, i
    cdef cnp.ndarray[cnp.int8_t, ndim=2] out = np.empty((m, n), dtype=np.int8)
    cdef cnp.int8_t[:, ::1] bits = out
    with nogil:
        for t in range(m):
            for i in range(n):
                bits[t, i] = 1 if noise_std * v[t, i] >= 0.0 else -1
    return out


def scores(const cnp.int8_t[:, ::1] bits, const double[:, ::1] gain_agree,
           const double[:, ::1] gain_disagree):
    cdef Py_ssize_t m = bits.shape[0], n = bits.shape[1], k = gain_agree.shape[0]
    cdef Py_ssize_t t, i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, k))
    cdef double[:, ::1] res = out
    cdef double acc
    with nogil:
        for t in range(m):
            for j in range(k):
                acc = 0.0
                for i in range(n - 1):
                    if bits[t, i + 1] == bits[t, i]:
                        acc = acc + gain_agree[j, i]
                    else:
                        acc = acc + gain_disagree[j, i]
                res[t, j] = acc
    return out
