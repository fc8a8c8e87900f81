# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""
Compiled kernels for the per-step propagation loops.

Both kernels skip structurally zero entries of ``phi`` (the error models
used here have identity/zero blocks for random-constant states) and use a
fixed summation order, so results do not depend on BLAS threading.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef _row_nonzeros(double[:, ::1] phi, Py_ssize_t[:, ::1] cols, Py_ssize_t[::1] counts):
    cdef Py_ssize_t n = phi.shape[0], i, j, c
    for i in range(n):
        c = 0
        for j in range(n):
            if phi[i, j] != 0.0:
                cols[i, c] = j
                c += 1
        counts[i] = c


def congruence_batch(phi_in, parts_in):
    """Return ``phi @ parts[k] @ phi.T`` for every k, exactly symmetric."""
    cdef double[:, ::1] phi = np.ascontiguousarray(phi_in, dtype=np.float64)
    cdef double[:, :, ::1] parts = np.ascontiguousarray(parts_in, dtype=np.float64)
    cdef Py_ssize_t K = parts.shape[0], n = phi.shape[0]
    if parts.shape[1] != n or parts.shape[2] != n or phi.shape[1] != n:
        raise ValueError("phi and parts dimensions disagree")

    cdef Py_ssize_t[:, ::1] cols = np.empty((n, n), dtype=np.intp)
    cdef Py_ssize_t[::1] counts = np.empty(n, dtype=np.intp)
    _row_nonzeros(phi, cols, counts)

    out_arr = np.empty((K, n, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] T = np.empty((n, n), dtype=np.float64)
    cdef Py_ssize_t k, a, b, c, j, idx
    cdef double acc, f

    for k in range(K):
        # T = phi @ P
        for a in range(n):
            for b in range(n):
                T[a, b] = 0.0
            for idx in range(counts[a]):
                c = cols[a, idx]
                f = phi[a, c]
                for b in range(n):
                    T[a, b] += f * parts[k, c, b]
        # out = T @ phi.T, upper triangle then mirror
        for a in range(n):
            for b in range(a, n):
                acc = 0.0
                for idx in range(counts[b]):
                    j = cols[b, idx]
                    acc += T[a, j] * phi[b, j]
                out[k, a, b] = acc
        for a in range(n):
            for b in range(a + 1, n):
                out[k, b, a] = out[k, a, b]
    return out_arr


def transition_batch(phi_in, states_in, bint inplace=False):
    """
    Return ``states @ phi.T``: rows of `states` are state vectors.

    With `inplace`, `states` (C-contiguous float64) is overwritten and returned.
    """
    cdef double[:, ::1] phi = np.ascontiguousarray(phi_in, dtype=np.float64)
    if inplace:
        out_arr = states_in
    else:
        out_arr = np.array(states_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] X = out_arr
    cdef Py_ssize_t N = X.shape[0], n = phi.shape[0]
    if X.shape[1] != n or phi.shape[1] != n:
        raise ValueError("phi and states dimensions disagree")

    # CSR form of phi; rows that are exactly e_a^T are skipped (value kept)
    cdef Py_ssize_t[::1] start = np.zeros(n + 1, dtype=np.intp)
    cdef Py_ssize_t[::1] col = np.empty(n * n, dtype=np.intp)
    cdef double[::1] val = np.empty(n * n, dtype=np.float64)
    cdef Py_ssize_t[::1] active = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t a, j, c = 0, n_active = 0, p, k
    for a in range(n):
        start[a] = c
        for j in range(n):
            if phi[a, j] != 0.0:
                col[c] = j
                val[c] = phi[a, j]
                c += 1
        if not (c - start[a] == 1 and col[start[a]] == a and val[start[a]] == 1.0):
            active[n_active] = a
            n_active += 1
    start[n] = c

    # blocks of ensemble rows give independent accumulators per output
    cdef Py_ssize_t B = 64, r0, r1, rr, m
    cdef double[:, ::1] acc = np.empty((n, B), dtype=np.float64)
    cdef double v
    for r0 in range(0, N, B):
        r1 = min(r0 + B, N)
        m = r1 - r0
        for k in range(n_active):
            a = active[k]
            for rr in range(m):
                acc[k, rr] = 0.0
            for p in range(start[a], start[a + 1]):
                v = val[p]
                j = col[p]
                for rr in range(m):
                    acc[k, rr] += v * X[r0 + rr, j]
        for k in range(n_active):
            a = active[k]
            for rr in range(m):
                X[r0 + rr, a] = acc[k, rr]
    return out_arr
