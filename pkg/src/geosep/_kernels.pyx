# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the fused solver and diagnostics kernels.

Signatures and results match ``geosep._kernels_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def dual_step(double[:, :, ::1] y, double[:, :, ::1] v_new, double[:, :, ::1] v_old,
              double[::1] sigma, double[::1] bound):
    cdef Py_ssize_t nb = y.shape[0], n1 = y.shape[1], n2 = y.shape[2]
    cdef Py_ssize_t b, i, k
    cdef double s, c, t, v, yo, r, acc_abs, acc_inner, acc_res
    l1 = np.zeros(nb)
    inner = np.zeros(nb)
    dres = np.zeros(nb)
    cdef double[::1] l1v = l1
    cdef double[::1] innerv = inner
    cdef double[::1] resv = dres
    with nogil:
        for b in range(nb):
            s = sigma[b]
            c = bound[b]
            acc_abs = 0.0
            acc_inner = 0.0
            acc_res = 0.0
            for i in range(n1):
                for k in range(n2):
                    v = v_new[b, i, k]
                    yo = y[b, i, k]
                    t = yo + s * (2.0 * v - v_old[b, i, k])
                    if t > c:
                        t = c
                    elif t < -c:
                        t = -c
                    y[b, i, k] = t
                    acc_abs += fabs(v)
                    acc_inner += t * v
                    r = (yo - t) / s - (v_old[b, i, k] - v)
                    acc_res += r * r
            l1v[b] = acc_abs
            innerv[b] = acc_inner
            resv[b] = acc_res
    return l1, inner, dres


def soft_shrink(c, double tau):
    arr = np.asarray(c)
    if np.iscomplexobj(arr):
        return _shrink_complex(np.ascontiguousarray(arr, dtype=np.complex128).ravel(),
                               tau).reshape(arr.shape)
    return _shrink_real(np.ascontiguousarray(arr, dtype=np.float64).ravel(),
                        tau).reshape(arr.shape)


cdef _shrink_real(double[::1] x, double tau):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.zeros(n)
    cdef double[::1] o = out
    cdef double a
    with nogil:
        for i in range(n):
            a = fabs(x[i])
            if a > tau:
                o[i] = x[i] * ((a - tau) / a)
    return out


cdef _shrink_complex(double complex[::1] x, double tau):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef double a, re, im
    with nogil:
        for i in range(n):
            re = x[i].real
            im = x[i].imag
            a = sqrt(re * re + im * im)
            if a > tau:
                o[i] = x[i] * ((a - tau) / a)
    return out


def gather_sums(table, rows, cols):
    t = np.ascontiguousarray(table, dtype=np.float64)
    r = np.ascontiguousarray(rows, dtype=np.int64)
    c = np.ascontiguousarray(cols, dtype=np.int64)
    return _gather_sums(t, r, c)


cdef _gather_sums(double[:, ::1] table, long long[:, ::1] rows, long long[:, ::1] cols):
    cdef Py_ssize_t A = rows.shape[0], B = cols.shape[0], n = rows.shape[1]
    cdef Py_ssize_t a, b, m
    cdef double acc
    out = np.zeros((A, B))
    cdef double[:, ::1] o = out
    with nogil:
        for a in range(A):
            for b in range(B):
                acc = 0.0
                for m in range(n):
                    acc = acc + table[rows[a, m], cols[b, m]]
                o[a, b] = acc
    return out
