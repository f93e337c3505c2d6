# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: register swaps on dense states and Hermite tables."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, M_PI

cnp.import_array()


def swap_particles(double complex[:, ::1] state, Py_ssize_t[::1] rows,
                   double[::1] signs, int n_particles, Py_ssize_t d,
                   int i, int j):
    """Swap particle registers ``i`` and ``j`` in the selected rows, in place.

    ``state`` is viewed as (control rows) x (d ** n_particles); each selected
    row is also multiplied by the matching entry of ``signs``.
    """
    cdef Py_ssize_t stride_i = 1, stride_j = 1, r, row, ncols, n_outer, n_mid
    cdef Py_ssize_t a, b, c, ki, kj, base, p, q
    cdef int k
    cdef double complex tmp
    cdef double s
    if i > j:
        i, j = j, i
    for k in range(n_particles - 1 - i):
        stride_i *= d
    for k in range(n_particles - 1 - j):
        stride_j *= d
    ncols = state.shape[1]
    # column index = a*(d*stride_i) + ki*stride_i + b*(d*stride_j) + kj*stride_j + c
    n_outer = ncols // (d * stride_i)
    n_mid = stride_i // (d * stride_j)
    for r in range(rows.shape[0]):
        row = rows[r]
        s = signs[r]
        if i != j:
            for a in range(n_outer):
                for ki in range(d):
                    for b in range(n_mid):
                        base = a * d * stride_i + b * d * stride_j
                        for kj in range(ki + 1, d):
                            p = base + ki * stride_i + kj * stride_j
                            q = base + kj * stride_i + ki * stride_j
                            for c in range(stride_j):
                                tmp = state[row, p + c]
                                state[row, p + c] = state[row, q + c]
                                state[row, q + c] = tmp
        if s != 1.0:
            for p in range(ncols):
                state[row, p] = s * state[row, p]


def hermite_functions(int nmax, double[::1] xi):
    """Orthonormal Hermite functions h_0..h_nmax at points ``xi``.

    Uses the normalized three-term recurrence, so no factorials appear.
    """
    cdef Py_ssize_t npts = xi.shape[0], p
    cdef int n
    out_arr = np.zeros((nmax + 1, npts), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double c0 = M_PI ** -0.25
    for p in range(npts):
        out[0, p] = c0 * exp(-0.5 * xi[p] * xi[p])
    if nmax >= 1:
        for p in range(npts):
            out[1, p] = sqrt(2.0) * xi[p] * out[0, p]
    for n in range(1, nmax):
        for p in range(npts):
            out[n + 1, p] = (sqrt(2.0 / (n + 1)) * xi[p] * out[n, p]
                             - sqrt(n / (n + 1.0)) * out[n - 1, p])
    return out_arr
