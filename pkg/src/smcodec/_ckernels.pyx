# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Contract identical to ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"

cdef double ALPHA = -1.586134342059924
cdef double BETA = -0.052980118572961
cdef double GAMMA = 0.882911075530934
cdef double DELTA = 0.443506852043971
cdef double KAPPA = 1.149604398860241

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL


cdef inline uint64_t _word(uint64_t seed, uint64_t counter) nogil:
    cdef uint64_t z = seed + (counter + 1) * GOLDEN
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t _below(uint64_t seed, uint64_t *counter, uint64_t k) nogil:
    # 2**64 mod k == (2**64 - k) mod k
    cdef uint64_t thr = (<uint64_t>0 - k) % k
    cdef uint64_t r
    while True:
        r = _word(seed, counter[0])
        counter[0] += 1
        if r >= thr:
            return r % k


def fisher_yates(seed, Py_ssize_t n):
    cdef uint64_t s = <uint64_t>int(seed)
    cdef cnp.ndarray[int64_t, ndim=1] perm = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] p = perm
    cdef uint64_t counter = 0
    cdef Py_ssize_t i, j
    cdef int64_t tmp
    with nogil:
        i = n - 1
        while i > 0:
            j = <Py_ssize_t>_below(s, &counter, <uint64_t>(i + 1))
            tmp = p[i]
            p[i] = p[j]
            p[j] = tmp
            i -= 1
    return perm


def partial_fisher_yates(seed, Py_ssize_t n, Py_ssize_t m):
    cdef uint64_t s = <uint64_t>int(seed)
    cdef cnp.ndarray[int64_t, ndim=1] perm = np.arange(n, dtype=np.int64)
    cdef int64_t[::1] p = perm
    cdef uint64_t counter = 0
    cdef Py_ssize_t i, j
    cdef int64_t tmp
    with nogil:
        for i in range(m):
            j = i + <Py_ssize_t>_below(s, &counter, <uint64_t>(n - i))
            tmp = p[i]
            p[i] = p[j]
            p[j] = tmp
    return perm[:m].copy()


def fwht_blocks(double[:, ::1] a):
    cdef Py_ssize_t nb = a.shape[0], B = a.shape[1]
    cdef Py_ssize_t b, h, i, j
    cdef double x, y
    with nogil:
        for b in range(nb):
            h = 1
            while h < B:
                i = 0
                while i < B:
                    for j in range(i, i + h):
                        x = a[b, j]
                        y = a[b, j + h]
                        a[b, j] = x + y
                        a[b, j + h] = x - y
                    i += 2 * h
                h *= 2
    return np.asarray(a)


cdef inline void _predict(double *s, double *d, Py_ssize_t n, double c) nogil:
    cdef Py_ssize_t i
    for i in range(n - 1):
        d[i] += c * (s[i] + s[i + 1])
    d[n - 1] += 2.0 * c * s[n - 1]


cdef inline void _update(double *s, double *d, Py_ssize_t n, double c) nogil:
    cdef Py_ssize_t i
    i = n - 1
    while i > 0:
        s[i] += c * (d[i - 1] + d[i])
        i -= 1
    s[0] += 2.0 * c * d[0]


cdef inline void _predict_t(double *s, double *d, Py_ssize_t n, double c) nogil:
    cdef Py_ssize_t j
    for j in range(n):
        s[j] += c * d[j]
    for j in range(1, n):
        s[j] += c * d[j - 1]
    s[n - 1] += c * d[n - 1]


cdef inline void _update_t(double *s, double *d, Py_ssize_t n, double c) nogil:
    cdef Py_ssize_t j
    for j in range(n):
        d[j] += c * s[j]
    for j in range(n - 1):
        d[j] += c * s[j + 1]
    d[0] += c * s[0]


def lift_analysis_rows(double[:, :] a):
    cdef Py_ssize_t r = a.shape[0], n = a.shape[1] // 2
    cdef Py_ssize_t row, i
    out_arr = np.empty((r, 2 * n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double *s
    cdef double *d
    cdef double ik = 1.0 / KAPPA
    with nogil:
        for row in range(r):
            s = &out[row, 0]
            d = &out[row, n]
            for i in range(n):
                s[i] = a[row, 2 * i]
                d[i] = a[row, 2 * i + 1]
            _predict(s, d, n, ALPHA)
            _update(s, d, n, BETA)
            _predict(s, d, n, GAMMA)
            _update(s, d, n, DELTA)
            for i in range(n):
                s[i] *= KAPPA
                d[i] *= ik
    return out_arr


def lift_synthesis_rows(double[:, :] c):
    cdef Py_ssize_t r = c.shape[0], n = c.shape[1] // 2
    cdef Py_ssize_t row, i
    out_arr = np.empty((r, 2 * n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    tmp_arr = np.empty(2 * n, dtype=np.float64)
    cdef double[::1] tmp = tmp_arr
    cdef double *s = &tmp[0]
    cdef double *d = &tmp[n]
    cdef double ik = 1.0 / KAPPA
    with nogil:
        for row in range(r):
            for i in range(n):
                s[i] = c[row, i] * ik
                d[i] = c[row, n + i] * KAPPA
            _update(s, d, n, -DELTA)
            _predict(s, d, n, -GAMMA)
            _update(s, d, n, -BETA)
            _predict(s, d, n, -ALPHA)
            for i in range(n):
                out[row, 2 * i] = s[i]
                out[row, 2 * i + 1] = d[i]
    return out_arr


def lift_synthesis_adjoint_rows(double[:, :] a):
    cdef Py_ssize_t r = a.shape[0], n = a.shape[1] // 2
    cdef Py_ssize_t row, i
    out_arr = np.empty((r, 2 * n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double *s
    cdef double *d
    cdef double ik = 1.0 / KAPPA
    with nogil:
        for row in range(r):
            s = &out[row, 0]
            d = &out[row, n]
            for i in range(n):
                s[i] = a[row, 2 * i]
                d[i] = a[row, 2 * i + 1]
            _predict_t(s, d, n, -ALPHA)
            _update_t(s, d, n, -BETA)
            _predict_t(s, d, n, -GAMMA)
            _update_t(s, d, n, -DELTA)
            for i in range(n):
                s[i] *= ik
                d[i] *= KAPPA
    return out_arr
