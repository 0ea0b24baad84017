import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pfkm import _kernels_py
from pfkm.flow import FlowInfeasible, MinCostFlow
from pfkm.instance import Instance, InstanceError, cluster_counts, is_fair, solution_cost
from pfkm.lp import build_lp, group_lower_bounds, solve_lp, support_components
from pfkm.transport import (TransportInfeasible, TransportProblem, component_bounds,
                            reassign_fixed_counts, round_component, solve_transport)
from _gen import random_instance, random_transport
from _oracles import exhaustive_transport

try:
    from pfkm import _kernels as _compiled
except ImportError:  # pragma: no cover
    _compiled = None


def check_against_exhaustive(seed):
    rng = np.random.default_rng(seed)
    n, lb, ub, edges = random_transport(rng)
    keys = list(edges)
    prob = TransportProblem(n, lb, ub, [k[0] for k in keys], [k[1] for k in keys],
                            [edges[k] for k in keys])
    ref = exhaustive_transport(n, lb, ub, edges)
    if ref is None:
        with pytest.raises(TransportInfeasible):
            solve_transport(prob)
        return None
    sol = solve_transport(prob)
    load = np.bincount(sol.right_of, minlength=len(lb))
    assert np.all(load >= lb) and np.all(load <= ub)
    assert all((j, int(r)) in edges for j, r in enumerate(sol.right_of))
    assert sol.cost == ref  # quarter-integers: exact in floating point
    return sol.cost


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_transport_matches_exhaustive(seed):
    check_against_exhaustive(seed)


def test_forced_single_center():
    prob = TransportProblem(3, [2, 1], [2, 1], [0, 1, 2], [0, 0, 1], [1.0, 2.0, 3.5])
    assert solve_transport(prob).cost == 6.5


def test_two_by_two_matching():
    d = np.array([[1.0, 4.0], [2.0, 7.0]])
    prob = TransportProblem(2, [1, 1], [1, 1], [0, 0, 1, 1], [0, 1, 0, 1], d.ravel())
    assert solve_transport(prob).cost == min(d[0, 0] + d[1, 1], d[0, 1] + d[1, 0])


def test_infeasible_names_cut():
    prob = TransportProblem(2, [0, 2], [2, 2], [0, 1], [0, 0], [1.0, 1.0])
    with pytest.raises(TransportInfeasible) as info:
        solve_transport(prob)
    assert "cut" in str(info.value)


class TestMinCostFlow:
    def test_lower_bounds(self):
        g = MinCostFlow(3)
        g.add_supply(0, 4)
        g.add_supply(2, -4)
        e1 = g.add_edge(0, 1, 3, 5, 10)  # expensive but lower-bounded
        e2 = g.add_edge(0, 2, 0, 4, 1)
        e3 = g.add_edge(1, 2, 0, 5, 0)
        f = g.solve()
        assert f[e1] == 3 and f[e2] == 1 and f[e3] == 3

    def test_unbalanced_supplies(self):
        g = MinCostFlow(2)
        g.add_supply(0, 1)
        with pytest.raises(FlowInfeasible):
            g.solve()

    def test_bad_edges(self):
        g = MinCostFlow(2)
        with pytest.raises(ValueError):
            g.add_edge(0, 1, 2, 1, 0)
        with pytest.raises(ValueError):
            g.add_edge(0, 1, 0, 1, -1)

    def test_capacity_shortfall(self):
        g = MinCostFlow(3)
        g.add_supply(0, 3)
        g.add_supply(2, -3)
        g.add_edge(0, 1, 0, 2, 1)
        g.add_edge(1, 2, 0, 5, 1)
        with pytest.raises(FlowInfeasible) as info:
            g.solve()
        assert info.value.shortfall == 1


class TestRounding:
    def test_bounds(self):
        lo, hi = component_bounds({7: 1.5}, [7], 2)
        assert (lo[0], hi[0]) == (1, 3)
        lo, hi = component_bounds({7: 2.0}, [7], 3)
        assert (lo[0], hi[0]) == (2, 6)

    def test_integral_x_unchanged(self):
        xs = np.array([0, 0.1, 0.2, 5, 5.1, 5.2])
        inst = Instance.from_labels([0, 1, 0, 1, 0, 1], coords=xs[:, None], k=2, t=2)
        m = build_lp(inst, [0, 3], 10)
        x = np.array([1.0 if (m.var_point[v] < 3) == (m.var_center[v] == 0) else 0.0
                      for v in range(m.n_vars)])
        for comp in support_components(m, x):
            sig = round_component(inst, m, comp, group_lower_bounds(m, x, comp))
            for p in comp.points:
                assert sig.assignment[p] == (0 if p < 3 else 3)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 31))
    def test_near_fair_and_below_lp(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, 8, 2, 2)
        centers = np.sort(rng.choice(8, 2, replace=False))
        Ds = np.unique(inst.metric.block(np.arange(8), centers))
        D = Ds[int(rng.integers(Ds.size))]
        sol = solve_lp(build_lp(inst, centers, D))
        if not sol.feasible:
            return
        t = inst.t
        for comp in support_components(sol.model, sol.x):
            ell_map = group_lower_bounds(sol.model, sol.x, comp)
            sig = round_component(inst, sol.model, comp, ell_map)
            mask = np.isin(sol.model.var_point, comp.points)
            lp_obj = float(sol.model.cost[mask] @ sol.x[mask])
            assert sig.cost <= lp_obj + 1e-7
            c = sig.counts
            for i in range(c.shape[0]):
                for a in range(c.shape[1]):
                    for b in range(c.shape[1]):
                        assert c[i, a] <= t * c[i, b] + t
            assert np.all(c >= sig.lower[:, None]) and np.all(c <= sig.upper[:, None])
            for p in comp.points:
                assert inst.metric(int(p), int(sig.assignment[p])) <= D + 1e-12


class TestFixedCounts:
    def test_k1(self):
        rng = np.random.default_rng(1)
        inst = random_instance(rng, 7, 1, 2)
        sizes = inst.group_sizes()
        a = reassign_fixed_counts(inst, [2], sizes[None, :])
        assert a.tolist() == [2] * 7

    def test_inconsistent_totals(self):
        rng = np.random.default_rng(1)
        inst = random_instance(rng, 6, 2, 2)
        with pytest.raises(InstanceError):
            reassign_fixed_counts(inst, [0, 1], [[1, 0], [0, 0]])

    @pytest.mark.parametrize("seed", range(12))
    def test_brute_force(self, seed):
        rng = np.random.default_rng(100 + seed)
        inst = random_instance(rng, 6, 2, 2)
        centers = [0, 5]
        target = np.zeros((2, 2), dtype=int)
        for a, s in enumerate(inst.group_sizes()):
            target[0, a] = rng.integers(0, s + 1)
            target[1, a] = s - target[0, a]
        got = reassign_fixed_counts(inst, centers, target)
        _, counts = cluster_counts(inst, got, centers)
        assert np.array_equal(counts, target)
        best = min(solution_cost(inst, np.array(a))
                   for a in itertools.product(centers, repeat=6)
                   if np.array_equal(cluster_counts(inst, np.array(a), centers)[1], target))
        assert solution_cost(inst, got) == pytest.approx(best, abs=1e-9)


@pytest.mark.skipif(_compiled is None, reason="compiled kernels not built")
class TestKernelEquivalence:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 31))
    def test_nearest_two_and_swaps(self, seed):
        rng = np.random.default_rng(seed)
        n, m = int(rng.integers(2, 40)), int(rng.integers(2, 40))
        dist = np.ascontiguousarray(rng.integers(0, 5, (n, m)).astype(float))  # many ties
        k = int(rng.integers(1, min(m, 6) + 1))
        centers = np.sort(rng.choice(m, k, replace=False)).astype(np.intp)
        a, b = _kernels_py.nearest_two(dist, centers), _compiled.nearest_two(dist, centers)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) and np.array_equal(a[2], b[2])
        assert np.allclose(_kernels_py.swap_costs(dist, centers), _compiled.swap_costs(dist, centers),
                           rtol=1e-12, atol=1e-9)
        direct = np.array([[dist[:, np.r_[np.delete(centers, o), c]].min(1).sum() for c in range(m)]
                           for o in range(k)]) if k > 1 else dist.sum(0)[None, :]
        assert np.allclose(_kernels_py.swap_costs(dist, centers), direct)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 31))
    def test_dijkstra(self, seed):
        rng = np.random.default_rng(seed)
        nodes, deg = int(rng.integers(2, 30)), int(rng.integers(1, 5))
        start = np.arange(0, nodes * deg + 1, deg, dtype=np.int64)
        to = rng.integers(0, nodes, nodes * deg).astype(np.int64)
        cap = rng.integers(0, 2, nodes * deg).astype(np.int64)
        cost = rng.integers(0, 50, nodes * deg).astype(np.int64)
        pot = np.zeros(nodes, dtype=np.int64)
        da, _ = _kernels_py.dijkstra(start, to, cap, cost, pot, 0)
        db, _ = _compiled.dijkstra(start, to, cap, cost, pot, 0)
        assert np.array_equal(da, db)
