# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: single-swap cost scan and residual-graph Dijkstra."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY

cnp.import_array()

cdef long long INF = (2 ** 63 - 1) // 4


def nearest_two(double[:, ::1] dist, cnp.intp_t[::1] centers):
    cdef Py_ssize_t n = dist.shape[0], k = centers.shape[0]
    cdef Py_ssize_t j, q
    cdef double v, a, b
    cdef cnp.intp_t best
    near = np.empty(n, dtype=np.intp)
    d1 = np.empty(n, dtype=np.float64)
    d2 = np.empty(n, dtype=np.float64)
    cdef cnp.intp_t[::1] nv = near
    cdef double[::1] d1v = d1, d2v = d2
    for j in range(n):
        a = INFINITY
        b = INFINITY
        best = 0
        for q in range(k):
            v = dist[j, centers[q]]
            if v < a:
                b = a
                a = v
                best = q
            elif v < b:
                b = v
        nv[j] = best
        d1v[j] = a
        d2v[j] = b
    return near, d1, d2


def swap_costs(double[:, ::1] dist, cnp.intp_t[::1] centers):
    cdef Py_ssize_t n = dist.shape[0], m = dist.shape[1], k = centers.shape[0]
    cdef Py_ssize_t j, c, o
    cdef double v, keep, alt, base
    near, d1, d2 = nearest_two(dist, centers)
    cdef cnp.intp_t[::1] nv = near
    cdef double[::1] d1v = d1, d2v = d2
    out = np.empty((k, m), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef double *corr = <double *> malloc(k * sizeof(double))
    try:
        for c in range(m):
            base = 0.0
            for o in range(k):
                corr[o] = 0.0
            for j in range(n):
                v = dist[j, c]
                keep = v if v < d1v[j] else d1v[j]
                alt = v if v < d2v[j] else d2v[j]
                base += keep
                corr[nv[j]] += alt - keep
            for o in range(k):
                ov[o, c] = base + corr[o]
    finally:
        free(corr)
    return out


cdef inline void _push(long long *hk, int *hv, int *size, long long key, int val) nogil:
    cdef int i = size[0]
    cdef int p
    size[0] += 1
    while i > 0:
        p = (i - 1) >> 1
        if hk[p] <= key:
            break
        hk[i] = hk[p]
        hv[i] = hv[p]
        i = p
    hk[i] = key
    hv[i] = val


cdef inline void _pop(long long *hk, int *hv, int *size) nogil:
    cdef int n = size[0] - 1
    cdef long long key = hk[n]
    cdef int val = hv[n]
    cdef int i = 0, c
    size[0] = n
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and hk[c + 1] < hk[c]:
            c += 1
        if key <= hk[c]:
            break
        hk[i] = hk[c]
        hv[i] = hv[c]
        i = c
    hk[i] = key
    hv[i] = val


def dijkstra(cnp.int64_t[::1] start, cnp.int64_t[::1] to, cnp.int64_t[::1] cap,
             cnp.int64_t[::1] cost, cnp.int64_t[::1] pot, Py_ssize_t source):
    cdef Py_ssize_t n = start.shape[0] - 1
    cdef Py_ssize_t n_edges = to.shape[0]
    dist = np.full(n, INF, dtype=np.int64)
    prev = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] dv = dist, pv = prev
    cdef char *done = <char *> malloc(n)
    cdef long long *hk = <long long *> malloc((n_edges + n + 1) * sizeof(long long))
    cdef int *hv = <int *> malloc((n_edges + n + 1) * sizeof(int))
    cdef int size = 0
    cdef int u, v
    cdef long long du, nd, pu
    cdef Py_ssize_t e, i
    try:
        for i in range(n):
            done[i] = 0
        dv[source] = 0
        _push(hk, hv, &size, 0, <int> source)
        while size > 0:
            du = hk[0]
            u = hv[0]
            _pop(hk, hv, &size)
            if done[u] or du > dv[u]:
                continue
            done[u] = 1
            pu = pot[u]
            for e in range(start[u], start[u + 1]):
                if cap[e] <= 0:
                    continue
                v = <int> to[e]
                if done[v]:
                    continue
                nd = du + cost[e] + pu - pot[v]
                if nd < dv[v]:
                    dv[v] = nd
                    pv[v] = e
                    _push(hk, hv, &size, nd, v)
    finally:
        free(done)
        free(hk)
        free(hv)
    return dist, prev
