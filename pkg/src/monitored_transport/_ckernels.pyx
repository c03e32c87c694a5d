# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-frequency kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport cython
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free


cdef inline double cabs1(double complex z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef int _invert(double complex* a, double complex* inv, int n) nogil:
    """Gauss-Jordan with partial pivoting; a is destroyed. Returns 1 if singular."""
    cdef int i, j, k, p
    cdef double best, v
    cdef double complex t, pivot
    for i in range(n):
        for j in range(n):
            inv[i * n + j] = 1.0 if i == j else 0.0
    for k in range(n):
        p = k
        best = cabs1(a[k * n + k])
        for i in range(k + 1, n):
            v = cabs1(a[i * n + k])
            if v > best:
                best = v
                p = i
        if best == 0.0:
            return 1
        if p != k:
            for j in range(n):
                t = a[k * n + j]; a[k * n + j] = a[p * n + j]; a[p * n + j] = t
                t = inv[k * n + j]; inv[k * n + j] = inv[p * n + j]; inv[p * n + j] = t
        pivot = 1.0 / a[k * n + k]
        for j in range(n):
            a[k * n + j] = a[k * n + j] * pivot
            inv[k * n + j] = inv[k * n + j] * pivot
        for i in range(n):
            if i != k:
                t = a[i * n + k]
                if t != 0:
                    for j in range(n):
                        a[i * n + j] = a[i * n + j] - t * a[k * n + j]
                        inv[i * n + j] = inv[i * n + j] - t * inv[k * n + j]
    return 0


def resolvent(omega, h_eff, sig_l, p_l, sig_r, p_r):
    cdef const double[::1] w = np.ascontiguousarray(omega, dtype=np.float64)
    cdef const double complex[:, ::1] h = np.ascontiguousarray(h_eff, dtype=np.complex128)
    cdef const double complex[::1] sl = np.ascontiguousarray(sig_l, dtype=np.complex128)
    cdef const double complex[::1] sr = np.ascontiguousarray(sig_r, dtype=np.complex128)
    cdef const double complex[:, ::1] pl = np.ascontiguousarray(p_l, dtype=np.complex128)
    cdef const double complex[:, ::1] pr = np.ascontiguousarray(p_r, dtype=np.complex128)
    cdef Py_ssize_t K = w.shape[0]
    cdef int n = h.shape[0]
    g_arr = np.empty((K, n, n), dtype=np.complex128)
    rc_arr = np.empty(K, dtype=np.float64)
    cdef double complex[:, :, ::1] g = g_arr
    cdef double[::1] rc = rc_arr
    cdef double complex* a = <double complex*> malloc(n * n * sizeof(double complex))
    cdef double complex* inv = <double complex*> malloc(n * n * sizeof(double complex))
    cdef Py_ssize_t k
    cdef int i, j, sing
    cdef double na, ng, col
    try:
        with nogil:
            for k in range(K):
                for i in range(n):
                    for j in range(n):
                        a[i * n + j] = -h[i, j] - sl[k] * pl[i, j] - sr[k] * pr[i, j]
                    a[i * n + i] = a[i * n + i] + w[k]
                na = 0.0
                for j in range(n):
                    col = 0.0
                    for i in range(n):
                        col = col + cabs1(a[i * n + j])
                    if col > na:
                        na = col
                sing = _invert(a, inv, n)
                if sing:
                    rc[k] = 0.0
                    for i in range(n * n):
                        g[k, i // n, i % n] = 0.0
                    continue
                ng = 0.0
                for j in range(n):
                    col = 0.0
                    for i in range(n):
                        col = col + cabs1(inv[i * n + j])
                        g[k, i, j] = inv[i * n + j]
                    if col > ng:
                        ng = col
                rc[k] = 1.0 / (na * ng)
    finally:
        free(a)
        free(inv)
    return g_arr, rc_arr


def sandwich(g_in, x_in):
    cdef const double complex[:, :, ::1] g = np.ascontiguousarray(g_in, dtype=np.complex128)
    x_arr = np.asarray(x_in, dtype=np.complex128)
    cdef Py_ssize_t K = g.shape[0]
    cdef int n = g.shape[1]
    cdef bint stacked = x_arr.ndim == 3
    cdef const double complex[:, :, ::1] x = np.ascontiguousarray(
        x_arr if stacked else x_arr[None], dtype=np.complex128)
    out_arr = np.empty((K, n, n), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef double complex* tmp = <double complex*> malloc(n * n * sizeof(double complex))
    cdef Py_ssize_t k, kx
    cdef int i, j, l
    cdef double complex s
    try:
        with nogil:
            for k in range(K):
                kx = k if stacked else 0
                for i in range(n):
                    for j in range(n):
                        s = 0
                        for l in range(n):
                            s = s + g[k, i, l] * x[kx, l, j]
                        tmp[i * n + j] = s
                for i in range(n):
                    for j in range(n):
                        s = 0
                        for l in range(n):
                            s = s + tmp[i * n + l] * g[k, j, l].conjugate()
                        out[k, i, j] = s
    finally:
        free(tmp)
    return out_arr


def trace_sandwich(a_in, g_in, b_in):
    cdef const double complex[:, ::1] a = np.ascontiguousarray(a_in, dtype=np.complex128)
    cdef const double complex[:, ::1] b = np.ascontiguousarray(b_in, dtype=np.complex128)
    cdef const double complex[:, :, ::1] g = np.ascontiguousarray(g_in, dtype=np.complex128)
    cdef Py_ssize_t K = g.shape[0]
    cdef int n = g.shape[1]
    out_arr = np.empty(K, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double complex* gb = <double complex*> malloc(n * n * sizeof(double complex))
    cdef Py_ssize_t k
    cdef int i, j, l
    cdef double complex s, agb
    try:
        with nogil:
            for k in range(K):
                for i in range(n):
                    for j in range(n):
                        s = 0
                        for l in range(n):
                            s = s + g[k, i, l] * b[l, j]
                        gb[i * n + j] = s
                s = 0
                for i in range(n):
                    for j in range(n):
                        agb = 0
                        for l in range(n):
                            agb = agb + a[i, l] * gb[l * n + j]
                        s = s + agb * g[k, i, j].conjugate()
                out[k] = s.real
    finally:
        free(gb)
    return out_arr


def superop(g_in):
    cdef const double complex[:, :, ::1] g = np.ascontiguousarray(g_in, dtype=np.complex128)
    cdef Py_ssize_t K = g.shape[0]
    cdef int n = g.shape[1]
    cdef int m = n * n
    out_arr = np.empty((K, m, m), dtype=np.complex128)
    cdef double complex[:, :, ::1] out = out_arr
    cdef Py_ssize_t k
    cdef int i, j, p, q
    with nogil:
        for k in range(K):
            for i in range(n):
                for j in range(n):
                    for p in range(n):
                        for q in range(n):
                            out[k, i * n + j, p * n + q] = g[k, i, p] * g[k, j, q].conjugate()
    return out_arr
