# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for batch displacement and lattice-residual queries."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor

cnp.import_array()


def displacements(const double[:, :, ::1] linear, const double[:, ::1] translation,
                  const double[:, ::1] points):
    """Return the (K, M) matrix of |A_k x_m + b_k - x_m|."""
    cdef Py_ssize_t K = linear.shape[0]
    cdef Py_ssize_t n = linear.shape[1]
    cdef Py_ssize_t M = points.shape[0]
    cdef Py_ssize_t k, m, i, j
    cdef double acc, d, s
    out = np.empty((K, M), dtype=np.float64)
    cdef double[:, ::1] res = out
    for k in range(K):
        for m in range(M):
            s = 0.0
            for i in range(n):
                acc = translation[k, i] - points[m, i]
                for j in range(n):
                    acc += linear[k, i, j] * points[m, j]
                s += acc * acc
            res[k, m] = sqrt(s)
    return out


def lattice_residuals(const double[:, :, ::1] linear, const double[:, ::1] translation,
                      const double[:, ::1] basis, const double[:, ::1] basis_inv,
                      const double[:, ::1] points):
    """For each coset representative k and point m, snap the displacement to the lattice.

    Returns ``(residual, shifts)`` where ``shifts[k, m]`` are the integer lattice
    coordinates of the translation t closing ``A_k x_m + b_k + t = x_m`` as well
    as possible, and ``residual[k, m]`` is the remaining distance.
    """
    cdef Py_ssize_t K = linear.shape[0]
    cdef Py_ssize_t n = linear.shape[1]
    cdef Py_ssize_t M = points.shape[0]
    cdef Py_ssize_t k, m, i, j
    cdef double acc, s
    cdef double[16] disp
    cdef double[16] coef
    if n > 16:
        raise ValueError("dimension above 16 not supported by compiled kernel")
    res_arr = np.empty((K, M), dtype=np.float64)
    shift_arr = np.empty((K, M, n), dtype=np.int64)
    cdef double[:, ::1] res = res_arr
    cdef long long[:, :, ::1] shifts = shift_arr
    for k in range(K):
        for m in range(M):
            for i in range(n):
                acc = translation[k, i] - points[m, i]
                for j in range(n):
                    acc += linear[k, i, j] * points[m, j]
                disp[i] = acc
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc -= basis_inv[i, j] * disp[j]
                coef[i] = floor(acc + 0.5)
                shifts[k, m, i] = <long long> coef[i]
            s = 0.0
            for i in range(n):
                acc = disp[i]
                for j in range(n):
                    acc += basis[i, j] * coef[j]
                s += acc * acc
            res[k, m] = sqrt(s)
    return res_arr, shift_arr
