"""Min-cost flow with integer lower/upper bounds.

Successive shortest augmenting paths with node potentials. Lower bounds are
removed by the usual excess transformation: an edge ``u -> v`` with bounds
``[lb, ub]`` becomes capacity ``ub - lb`` plus ``lb`` units of demand at ``u``
and supply at ``v``; a super source and super sink then route the excesses.
Costs must be nonnegative integers.
"""

from __future__ import annotations

import numpy as np

from . import kernels


class FlowInfeasible(RuntimeError):
    """Bounds/balances admit no feasible flow.

    ``cut`` is the node set reachable from the super source in the final
    residual graph; the demand crossing it exceeds its capacity.
    """

    def __init__(self, msg, cut=(), shortfall=0):
        super().__init__(msg)
        self.cut = tuple(cut)
        self.shortfall = shortfall


class MinCostFlow:
    def __init__(self, n_nodes: int):
        self.n = n_nodes
        self.balance = np.zeros(n_nodes, dtype=np.int64)
        self._tail: list[int] = []
        self._head: list[int] = []
        self._lb: list[int] = []
        self._ub: list[int] = []
        self._cost: list[int] = []

    def add_edge(self, u: int, v: int, lb: int, ub: int, cost: int) -> int:
        if lb < 0 or ub < lb:
            raise ValueError(f"bad bounds [{lb}, {ub}] on edge {u}->{v}")
        if cost < 0:
            raise ValueError("costs must be nonnegative")
        self._tail.append(u)
        self._head.append(v)
        self._lb.append(int(lb))
        self._ub.append(int(ub))
        self._cost.append(int(cost))
        return len(self._tail) - 1

    def add_supply(self, v: int, amount: int) -> None:
        self.balance[v] += amount

    def solve(self) -> np.ndarray:
        """Return integral flow per user edge (in insertion order)."""
        n_user = len(self._tail)
        tail = np.asarray(self._tail, dtype=np.int64)
        head = np.asarray(self._head, dtype=np.int64)
        lb = np.asarray(self._lb, dtype=np.int64)
        ub = np.asarray(self._ub, dtype=np.int64)
        cost = np.asarray(self._cost, dtype=np.int64)
        if self.balance.sum() != 0:
            raise FlowInfeasible(f"supplies sum to {int(self.balance.sum())}, not 0")

        bal = self.balance.copy()
        np.subtract.at(bal, tail, lb)
        np.add.at(bal, head, lb)
        src, snk = self.n, self.n + 1
        pos = np.flatnonzero(bal > 0)
        neg = np.flatnonzero(bal < 0)
        need = int(bal[pos].sum())

        e_tail = np.concatenate([tail, np.full(pos.size, src), neg])
        e_head = np.concatenate([head, pos, np.full(neg.size, snk)])
        e_cap = np.concatenate([ub - lb, bal[pos], -bal[neg]])
        e_cost = np.concatenate([cost, np.zeros(pos.size + neg.size, dtype=np.int64)])
        m = e_tail.size
        n_nodes = self.n + 2

        # residual arcs: 2e forward, 2e+1 backward; then reorder by tail (CSR)
        r_tail = np.empty(2 * m, dtype=np.int64)
        r_head = np.empty(2 * m, dtype=np.int64)
        r_cap = np.empty(2 * m, dtype=np.int64)
        r_cost = np.empty(2 * m, dtype=np.int64)
        r_tail[0::2], r_tail[1::2] = e_tail, e_head
        r_head[0::2], r_head[1::2] = e_head, e_tail
        r_cap[0::2], r_cap[1::2] = e_cap, 0
        r_cost[0::2], r_cost[1::2] = e_cost, -e_cost
        order = np.argsort(r_tail, kind="stable")
        where = np.empty_like(order)
        where[order] = np.arange(order.size)
        to = np.ascontiguousarray(r_head[order])
        cap = np.ascontiguousarray(r_cap[order])
        arc_cost = np.ascontiguousarray(r_cost[order])
        rev = where[order ^ 1]
        start = np.zeros(n_nodes + 1, dtype=np.int64)
        np.add.at(start, r_tail + 1, 1)
        start = np.cumsum(start)
        arc_tail = r_tail[order]

        pot = np.zeros(n_nodes, dtype=np.int64)
        sent = 0
        while sent < need:
            dist, prev = kernels.dijkstra(start, to, cap, arc_cost, pot, src)
            d_snk = dist[snk]
            if d_snk >= kernels.INF:
                break
            pot += np.minimum(dist, d_snk)
            push = need - sent
            v = snk
            path = []
            while v != src:
                e = int(prev[v])
                path.append(e)
                push = min(push, int(cap[e]))
                v = int(arc_tail[e])
            for e in path:
                cap[e] -= push
                cap[rev[e]] += push
            sent += push

        if sent < need:
            dist, _ = kernels.dijkstra(start, to, cap, np.zeros_like(arc_cost),
                                       np.zeros_like(pot), src)
            cut = [int(v) for v in np.flatnonzero(dist < kernels.INF) if v < self.n]
            raise FlowInfeasible(
                f"only {sent} of {need} units routable; violated cut {cut}",
                cut=cut, shortfall=need - sent,
            )

        live = cap > 0
        reduced = arc_cost + pot[arc_tail] - pot[to]
        assert np.all(reduced[live] >= 0), "negative reduced cost after SSP"

        fwd = where[0::2][:n_user]
        flow = ub - cap[fwd]
        return flow
