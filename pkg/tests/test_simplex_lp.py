import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pfkm.instance import Instance
from pfkm.lp import (EDGE_TOL, build_lp, check_feasible, group_lower_bounds, group_masses, snap,
                     solve_lp, support_components, write_mps)
from pfkm.oracle import exact_fair_assignment
from pfkm.simplex import linprog_simplex
from _gen import random_instance, random_lp
from _oracles import bfs_components, vertex_enumeration


def compare_with_vertices(seed):
    rng = np.random.default_rng(seed)
    c, A_ub, b_ub, A_eq, b_eq = random_lp(rng)
    res = linprog_simplex(c, A_ub, b_ub, A_eq, b_eq)
    ref = vertex_enumeration(c, A_ub, b_ub, A_eq, b_eq)
    if ref is None:
        assert res.status == "infeasible"
        return None
    assert res.status == "optimal"
    assert abs(res.objective - ref) <= 1e-7 * max(1.0, abs(ref))
    x = res.x
    assert np.all(x >= -1e-9)
    assert np.all(A_ub @ x <= b_ub + 1e-7)
    if A_eq.size:
        assert np.allclose(A_eq @ x, b_eq, atol=1e-7)
    return res.objective


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_simplex_matches_vertex_enumeration(seed):
    compare_with_vertices(seed)


def test_simplex_degenerate_and_redundant():
    # duplicated equality rows and a degenerate vertex
    res = linprog_simplex([1, 1, 0], None, None, [[1, 1, 1], [2, 2, 2]], [1, 2])
    assert res.status == "optimal" and res.objective == pytest.approx(0)
    res = linprog_simplex([-1, -1], [[1, 0], [0, 1], [1, 1]], [1, 1, 2])
    assert res.objective == pytest.approx(-2)


def test_simplex_unbounded_and_infeasible():
    assert linprog_simplex([-1, 0], [[0, 1]], [1]).status == "unbounded"
    assert linprog_simplex([1], None, None, [[1], [1]], [1, 2]).status == "infeasible"


def line_inst(xs, labels, k, t):
    return Instance.from_labels(labels, coords=np.asarray(xs, float)[:, None], k=k, t=t)


class TestBuild:
    def test_uncovered_point(self):
        inst = line_inst([0, 1, 10], [0, 1, 0], 1, 2)
        m = build_lp(inst, [0], 2.0)
        assert m.structurally_infeasible and m.uncovered_points().tolist() == [2]
        assert solve_lp(m).status == "infeasible"

    def test_full_at_diameter(self):
        rng = np.random.default_rng(0)
        inst = random_instance(rng, 9, 3, 3)
        m = build_lp(inst, [0, 4, 7], inst.metric.diameter())
        assert m.n_vars == 27 and len(m.fair_rows) == 3 * 3 * 2

    def test_row_counts(self):
        inst = line_inst([0, 1], [0, 1], 1, 1)
        m = build_lp(inst, [0], 5)
        assert m.equality_matrix().shape[0] == 2 and len(m.fair_rows) == 2


class TestSolve:
    def test_forced(self):
        # one point per group at distance 3 from the only center: x = 1 each
        inst = Instance.from_labels([0, 1, 0, 1], dist=np.array(
            [[0, 0, 3, 3], [0, 0, 3, 3], [3, 3, 0, 0], [3, 3, 0, 0]], float), k=1, t=1)
        sol = solve_lp(build_lp(inst, [2], 3))
        assert sol.feasible and sol.objective == pytest.approx(6)
        assert np.allclose(sol.x, 1)

    def test_one_parameter_family(self):
        # points a (group 0) at center 0 and b (group 1) at center 1, d=1
        inst = Instance.from_labels([0, 1], dist=np.array([[0, 1.0], [1.0, 0]]), k=2, t=1)
        sol = solve_lp(build_lp(inst, [0, 1], 1.0))
        # feasible x: a->0 with s, b->0 with s (t=1 forces equal mass); cost 2(1-s)... sweep
        best = min((1 - s) * 1 + s * 1 for s in np.linspace(0, 1, 101))
        assert sol.objective == pytest.approx(best)

    @pytest.mark.parametrize("backend", ["simplex", "highs"])
    def test_lp_below_fair_assignment(self, backend):
        rng = np.random.default_rng(11)
        for _ in range(10):
            inst = random_instance(rng, 7, 2, 2)
            centers = [0, 3]
            gamma = exact_fair_assignment(inst, centers)
            D = max(inst.metric(p, int(c)) for p, c in enumerate(gamma.assignment))
            sol = solve_lp(build_lp(inst, centers, D), backend)
            assert sol.feasible
            check_feasible(sol)
            assert sol.objective <= gamma.cost + 1e-7

    def test_backends_agree_and_monotone(self):
        rng = np.random.default_rng(12)
        for _ in range(8):
            inst = random_instance(rng, 12, 3, 3)
            centers = [1, 5, 9]
            Ds = np.unique(inst.metric.block(np.arange(12), centers))
            feas = []
            for D in Ds:
                a = solve_lp(build_lp(inst, centers, D), "simplex")
                b = solve_lp(build_lp(inst, centers, D), "highs")
                assert a.status == b.status
                if a.feasible:
                    assert a.objective == pytest.approx(b.objective, rel=1e-7, abs=1e-9)
                feas.append(a.feasible)
            assert feas[-1]
            first = feas.index(True)
            assert all(feas[first:])


class TestComponents:
    def test_integral_and_uniform(self):
        inst = line_inst([0, 1, 10, 11], [0, 1, 0, 1], 2, 1)
        m = build_lp(inst, [0, 2], 100)
        x = np.zeros(m.n_vars)
        for v in range(m.n_vars):
            j, q = m.var_point[v], m.var_center[v]
            x[v] = 1.0 if (j < 2) == (q == 0) else 0.0
        comps = support_components(m, x)
        assert sorted(c.points.tolist() for c in comps) == [[0, 1], [2, 3]]
        comps = support_components(m, np.full(m.n_vars, 0.5))
        assert len(comps) == 1 and comps[0].hop_diameter_bound == 200

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 31))
    def test_matches_bfs(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 10))
        k = int(rng.integers(1, 4))
        inst = random_instance(rng, n, k, 2)
        centers = np.sort(rng.choice(n, k, replace=False))
        m = build_lp(inst, centers, np.inf)
        x = rng.random(m.n_vars) * (rng.random(m.n_vars) < 0.35)
        for j in range(n):  # every point keeps at least one edge
            v = np.flatnonzero(m.var_point == j)
            if not np.any(x[v] >= EDGE_TOL):
                x[rng.choice(v)] = 0.5
        comps = support_components(m, x)
        edges = [(int(m.var_point[v]), int(m.var_center[v])) for v in range(m.n_vars) if x[v] >= EDGE_TOL]
        ref = {c for c in bfs_components(n, k, edges) if any(lab == "p" for lab, _ in c)}
        got = {frozenset([("p", int(j)) for j in c.points] + [("c", int(q)) for q in c.center_pos])
               for c in comps}
        assert got == ref
        covered = np.concatenate([c.points for c in comps])
        assert np.array_equal(np.sort(covered), np.arange(n))


class TestLowerBounds:
    def test_min_and_snap(self):
        assert snap(2.0000000001) == 2.0 and snap(1.5) == 1.5
        inst = line_inst([0, 0, 0, 0, 0, 0], [0, 0, 0, 1, 1, 1], 1, 2)
        m = build_lp(inst, [0], 1)
        x = np.array([0.5, 0.5, 0.5, 1, 1, 0.0])
        comp = support_components(m, x)[0]
        assert group_lower_bounds(m, x, comp) == {0: 1.5}
        x2 = np.array([1, 1, 0.0000000001, 1, 1, 1.0])
        comp = support_components(m, np.ones(6))[0]
        assert group_lower_bounds(m, x2, comp)[0] == 2.0

    def test_recomputed(self):
        rng = np.random.default_rng(3)
        inst = random_instance(rng, 10, 3, 3)
        centers = [0, 4, 8]
        sol = solve_lp(build_lp(inst, centers, inst.metric.diameter()))
        X = sol.matrix()
        for comp in support_components(sol.model, sol.x):
            got = group_lower_bounds(sol.model, sol.x, comp)
            for q, c in zip(comp.center_pos, comp.centers):
                direct = min(X[inst.labels == a, q].sum() for a in range(3))
                assert got[int(c)] == pytest.approx(direct, abs=1e-6)
        assert np.allclose(group_masses(sol.model, sol.x).sum(1), X.sum(0))


def test_mps_dump_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    inst = random_instance(rng, 6, 2, 2)
    m = build_lp(inst, [0, 3], inst.metric.diameter())
    path = tmp_path / "lp.mps"
    write_mps(m, path)
    text = path.read_text()
    for section in ("NAME", "ROWS", "COLUMNS", "RHS", "ENDATA"):
        assert section in text
    assert text.count("\n E ") + text.count("\n L ") == m.n + len(m.fair_rows)
