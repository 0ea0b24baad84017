"""Pure-Python fallbacks for the compiled kernels in ``_kernels.pyx``.

Signatures and results must match the compiled module exactly (up to float
summation order in ``swap_costs``).
"""

import heapq

import numpy as np

INF = np.iinfo(np.int64).max // 4


def nearest_two(dist, centers):
    """Nearest and second-nearest open center per point.

    ``dist`` is (n, m); ``centers`` are column indices. Returns
    ``(near_pos, d1, d2)`` where ``near_pos`` indexes into ``centers``.
    Ties go to the earlier entry of ``centers``.
    """
    sub = dist[:, centers]
    n, k = sub.shape
    near = np.argmin(sub, axis=1)
    d1 = sub[np.arange(n), near]
    if k == 1:
        d2 = np.full(n, np.inf)
    else:
        masked = sub.copy()
        masked[np.arange(n), near] = np.inf
        d2 = masked.min(axis=1)
    return near.astype(np.intp), d1, d2


def swap_costs(dist, centers):
    """Cost of every single swap.

    Entry ``[o, c]`` is the k-median cost after closing ``centers[o]`` and
    opening candidate column ``c``.
    """
    dist = np.asarray(dist, dtype=float)
    centers = np.asarray(centers, dtype=np.intp)
    k = centers.size
    near, d1, d2 = nearest_two(dist, centers)
    keep = np.minimum(dist, d1[:, None])
    base = keep.sum(axis=0)
    corr = np.minimum(dist, d2[:, None]) - keep
    onehot = np.zeros((k, dist.shape[0]))
    onehot[near, np.arange(dist.shape[0])] = 1.0
    return base[None, :] + onehot @ corr


def dijkstra(start, to, cap, cost, pot, source):
    """Shortest reduced-cost distances from ``source`` in a residual graph.

    Graph in CSR form: edges of node ``v`` are ``start[v]:start[v+1]``.
    Edges with ``cap <= 0`` are absent. Reduced cost of edge ``e = (u, v)`` is
    ``cost[e] + pot[u] - pot[v]`` and must be nonnegative.
    Returns ``(dist, prev_edge)``; unreachable nodes get ``INF`` / -1.
    """
    n = len(start) - 1
    dist = np.full(n, INF, dtype=np.int64)
    prev = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    start_l = start.tolist()
    to_l = to.tolist()
    cap_l = cap.tolist()
    cost_l = cost.tolist()
    pot_l = pot.tolist()
    dl = [INF] * n
    pl = [-1] * n
    dl[source] = 0
    heap = [(0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if done[u] or du > dl[u]:
            continue
        done[u] = True
        pu = pot_l[u]
        for e in range(start_l[u], start_l[u + 1]):
            if cap_l[e] <= 0:
                continue
            v = to_l[e]
            if done[v]:
                continue
            nd = du + cost_l[e] + pu - pot_l[v]
            if nd < dl[v]:
                dl[v] = nd
                pl[v] = e
                heapq.heappush(heap, (nd, v))
    dist[:] = dl
    prev[:] = pl
    return dist, prev
