# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled graph and loss kernels.

Every function here has a pure-Python twin in ``_kernels_py`` with the same
signature and the same results; ``netlowrank.kernels`` picks one at import.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs

cnp.import_array()

ctypedef cnp.int64_t i64


def node_triangles(const i64[::1] indptr, const i64[::1] indices):
    """Per-node triangle counts of a simple undirected CSR graph.

    Edges are oriented from lower to higher (degree, id) rank and each
    triangle is found exactly once by merging the oriented neighbor lists
    of an edge's endpoints.
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[i64, ndim=1] tri_arr = np.zeros(n, dtype=np.int64)
    cdef i64[::1] tri = tri_arr
    cdef cnp.ndarray[i64, ndim=1] optr_arr = np.zeros(n + 1, dtype=np.int64)
    cdef i64[::1] optr = optr_arr
    cdef cnp.ndarray[i64, ndim=1] oidx_arr = np.empty(max(indices.shape[0] // 2, 1), dtype=np.int64)
    cdef i64[::1] oidx = oidx_arr
    cdef Py_ssize_t u, v, w, a, b, a_end, b_end, p, pos
    cdef i64 du, dv

    with nogil:
        for u in range(n):
            pos = optr[u]
            du = indptr[u + 1] - indptr[u]
            for p in range(indptr[u], indptr[u + 1]):
                v = indices[p]
                dv = indptr[v + 1] - indptr[v]
                if du < dv or (du == dv and u < v):
                    oidx[pos] = v
                    pos += 1
            optr[u + 1] = pos

        for u in range(n):
            for p in range(optr[u], optr[u + 1]):
                v = oidx[p]
                a = optr[u]
                a_end = optr[u + 1]
                b = optr[v]
                b_end = optr[v + 1]
                while a < a_end and b < b_end:
                    if oidx[a] < oidx[b]:
                        a += 1
                    elif oidx[a] > oidx[b]:
                        b += 1
                    else:
                        w = oidx[a]
                        tri[u] += 1
                        tri[v] += 1
                        tri[w] += 1
                        a += 1
                        b += 1
    return tri_arr


def core_numbers(const i64[::1] indptr, const i64[::1] indices):
    """Core number of every node by bucket-sorted min-degree peeling."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[i64, ndim=1] deg_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] deg = deg_arr
    cdef Py_ssize_t u, v, w, p, i, du, pu, pw, start
    cdef i64 md = 0

    for u in range(n):
        deg[u] = indptr[u + 1] - indptr[u]
        if deg[u] > md:
            md = deg[u]

    cdef cnp.ndarray[i64, ndim=1] bin_arr = np.zeros(md + 1, dtype=np.int64)
    cdef i64[::1] bins = bin_arr
    cdef cnp.ndarray[i64, ndim=1] vert_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] vert = vert_arr
    cdef cnp.ndarray[i64, ndim=1] pos_arr = np.empty(n, dtype=np.int64)
    cdef i64[::1] pos = pos_arr
    cdef i64 num

    with nogil:
        for u in range(n):
            bins[deg[u]] += 1
        start = 0
        for i in range(md + 1):
            num = bins[i]
            bins[i] = start
            start += num
        for u in range(n):
            pos[u] = bins[deg[u]]
            vert[pos[u]] = u
            bins[deg[u]] += 1
        for i in range(md, 0, -1):
            bins[i] = bins[i - 1]
        bins[0] = 0

        for i in range(n):
            v = vert[i]
            for p in range(indptr[v], indptr[v + 1]):
                u = indices[p]
                if deg[u] > deg[v]:
                    du = deg[u]
                    pu = pos[u]
                    pw = bins[du]
                    w = vert[pw]
                    if u != w:
                        pos[u] = pw
                        vert[pu] = w
                        pos[w] = pu
                        vert[pw] = u
                    bins[du] += 1
                    deg[u] -= 1
    return deg_arr


def logistic_loss_residual(const double[:, ::1] signs, const double[:, ::1] scores,
                           double[:, ::1] residual):
    """Sum of softplus(-s*z) over all entries; writes -s*sigmoid(-s*z) into ``residual``."""
    cdef Py_ssize_t n = signs.shape[0], m = signs.shape[1], i, j
    cdef double total = 0.0, row, margin, e, s
    with nogil:
        for i in range(n):
            row = 0.0
            for j in range(m):
                s = signs[i, j]
                margin = s * scores[i, j]
                e = exp(-fabs(margin))
                if margin >= 0:
                    row += log1p(e)
                    residual[i, j] = -s * e / (1.0 + e)
                else:
                    row += -margin + log1p(e)
                    residual[i, j] = -s / (1.0 + e)
            total += row
    return total


def pegasos_epochs(const double[:, ::1] Xa, const double[::1] y, double lam,
                   const i64[::1] order):
    """Stochastic subgradient steps of a binary hinge-loss SVM.

    ``order`` lists the row visited at each step (all epochs concatenated).
    Returns the last iterate and the running average of iterates.
    """
    cdef Py_ssize_t d = Xa.shape[1], T = order.shape[0], t, j, i
    cdef cnp.ndarray[double, ndim=1] w_arr = np.zeros(d)
    cdef cnp.ndarray[double, ndim=1] avg_arr = np.zeros(d)
    cdef double[::1] w = w_arr
    cdef double[::1] avg = avg_arr
    cdef double eta, dot, norm, radius = 1.0 / lam ** 0.5, scale, inv
    with nogil:
        for t in range(T):
            i = order[t]
            eta = 1.0 / (lam * (t + 1))
            dot = 0.0
            for j in range(d):
                dot += Xa[i, j] * w[j]
            scale = 1.0 - eta * lam
            for j in range(d):
                w[j] *= scale
            if y[i] * dot < 1.0:
                for j in range(d):
                    w[j] += eta * y[i] * Xa[i, j]
            norm = 0.0
            for j in range(d):
                norm += w[j] * w[j]
            norm = norm ** 0.5
            if norm > radius:
                for j in range(d):
                    w[j] *= radius / norm
            inv = 1.0 / (t + 1)
            for j in range(d):
                avg[j] += (w[j] - avg[j]) * inv
    return w_arr, avg_arr
