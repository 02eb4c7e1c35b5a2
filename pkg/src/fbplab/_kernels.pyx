# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil kernels; same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport M_PI

cnp.import_array()


def metric_coefficients(h, hp, hpp, double L, Py_ssize_t n, bint upper):
    cdef const double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef const double[::1] hpv = np.ascontiguousarray(hp, dtype=np.float64)
    cdef const double[::1] hppv = np.ascontiguousarray(hpp, dtype=np.float64)
    A_arr = np.empty((n, n))
    B_arr = np.empty((n, n))
    C_arr = np.empty((n, n))
    cdef double[:, ::1] A = A_arr
    cdef double[:, ::1] B = B_arr
    cdef double[:, ::1] C = C_arr
    cdef Py_ssize_t i, j
    cdef double t, z, d, g
    for j in range(n):
        t = <double>j / (n - 1)
        for i in range(n):
            g = hpv[i]
            if upper:
                d = L - hv[i]
                z = 1.0 - t
                A[j, i] = (1.0 + g * g * z * z) / (d * d)
                B[j, i] = -2.0 * z * g / d
                C[j, i] = -(2.0 * g * g + hppv[i] * d) / (d * d) * z
            else:
                d = hv[i]
                A[j, i] = (1.0 + g * g * t * t) / (d * d)
                B[j, i] = -2.0 * t * g / d
                C[j, i] = (2.0 * g * g - hppv[i] * d) / (d * d) * t
    return A_arr, B_arr, C_arr


def interior_triplets(h, hp, hpp, double L, Py_ssize_t n, bint upper):
    A_arr, B_arr, C_arr = metric_coefficients(h, hp, hpp, L, n, upper)
    cdef double[:, ::1] A = A_arr
    cdef double[:, ::1] B = B_arr
    cdef double[:, ::1] C = C_arr
    cdef Py_ssize_t m = 9 * (n - 2) * n
    rows_arr = np.empty(m, dtype=np.int64)
    cols_arr = np.empty(m, dtype=np.int64)
    vals_arr = np.empty(m, dtype=np.float64)
    cdef cnp.int64_t[::1] rows = rows_arr
    cdef cnp.int64_t[::1] cols = cols_arr
    cdef double[::1] vals = vals_arr
    cdef double dx = 2.0 * M_PI / n
    cdef double dy = 1.0 / (n - 1)
    cdef double ex = 1.0 / (dx * dx)
    cdef double ey, cy, cxy
    cdef Py_ssize_t i, j, ip, im, r, k = 0
    for j in range(1, n - 1):
        for i in range(n):
            ip = i + 1 if i + 1 < n else 0
            im = i - 1 if i > 0 else n - 1
            r = j * n + i
            ey = A[j, i] / (dy * dy)
            cy = C[j, i] / (2.0 * dy)
            cxy = B[j, i] / (4.0 * dx * dy)
            rows[k] = r; cols[k] = r; vals[k] = -2.0 * ey - 2.0 * ex; k += 1
            rows[k] = r; cols[k] = j * n + ip; vals[k] = ex; k += 1
            rows[k] = r; cols[k] = j * n + im; vals[k] = ex; k += 1
            rows[k] = r; cols[k] = (j + 1) * n + i; vals[k] = ey + cy; k += 1
            rows[k] = r; cols[k] = (j - 1) * n + i; vals[k] = ey - cy; k += 1
            rows[k] = r; cols[k] = (j + 1) * n + ip; vals[k] = cxy; k += 1
            rows[k] = r; cols[k] = (j - 1) * n + im; vals[k] = cxy; k += 1
            rows[k] = r; cols[k] = (j + 1) * n + im; vals[k] = -cxy; k += 1
            rows[k] = r; cols[k] = (j - 1) * n + ip; vals[k] = -cxy; k += 1
    return rows_arr, cols_arr, vals_arr
