"""Integral bipartite transportation with per-node bounds.

Left nodes are points with unit supply; right nodes carry integer ``[lb, ub]``
demand bounds. Used to round the fractional LP assignment and to re-solve an
assignment for fixed per-center group counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .flow import FlowInfeasible, MinCostFlow
from .instance import Instance, InstanceError
from .lp import FractionalSolution, LPModel, SupportComponent

COST_SCALE = 1e9
_MAX_SCALED = 2.0 ** 52


class TransportInfeasible(RuntimeError):
    def __init__(self, msg, cut=()):
        super().__init__(msg)
        self.cut = tuple(cut)


@dataclass
class TransportProblem:
    n_left: int
    lb: np.ndarray
    ub: np.ndarray
    edge_left: np.ndarray
    edge_right: np.ndarray
    edge_cost: np.ndarray
    right_labels: Optional[list] = None

    def __post_init__(self):
        self.lb = np.asarray(self.lb, dtype=np.int64)
        self.ub = np.asarray(self.ub, dtype=np.int64)
        self.edge_left = np.asarray(self.edge_left, dtype=np.intp)
        self.edge_right = np.asarray(self.edge_right, dtype=np.intp)
        self.edge_cost = np.asarray(self.edge_cost, dtype=float)

    @property
    def n_right(self) -> int:
        return self.lb.size


@dataclass
class TransportSolution:
    right_of: np.ndarray  # per left node, the right node it is sent to
    cost: float


def _scale(costs: np.ndarray, n_units: int) -> float:
    top = float(costs.max()) if costs.size else 0.0
    if top <= 0:
        return COST_SCALE
    return min(COST_SCALE, _MAX_SCALED / (top * (n_units + 1)))


def solve_transport(problem: TransportProblem) -> TransportSolution:
    """Minimum-cost integral transport respecting every right-node bound."""
    nl, nr = problem.n_left, problem.n_right
    scale = _scale(problem.edge_cost, nl)
    net = MinCostFlow(nl + nr + 1)
    sink = nl + nr
    for j in range(nl):
        net.add_supply(j, 1)
    net.add_supply(sink, -nl)
    scaled = np.rint(problem.edge_cost * scale).astype(np.int64)
    first = len(net._tail)
    for e in range(problem.edge_left.size):
        net.add_edge(int(problem.edge_left[e]), nl + int(problem.edge_right[e]), 0, 1, int(scaled[e]))
    for r in range(nr):
        net.add_edge(nl + r, sink, int(problem.lb[r]), int(problem.ub[r]), 0)
    try:
        flow = net.solve()
    except FlowInfeasible as exc:
        lefts = [v for v in exc.cut if v < nl]
        rights = [v - nl for v in exc.cut if nl <= v < nl + nr]
        names = [problem.right_labels[r] for r in rights] if problem.right_labels else rights
        raise TransportInfeasible(
            f"transport bounds infeasible (short {exc.shortfall}); cut holds "
            f"{len(lefts)} left nodes and right nodes {names}",
            cut=exc.cut,
        ) from exc
    used = np.flatnonzero(flow[first:first + problem.edge_left.size] > 0)
    right_of = np.full(nl, -1, dtype=np.intp)
    right_of[problem.edge_left[used]] = problem.edge_right[used]
    assert np.all(right_of >= 0)
    cost = float(problem.edge_cost[used].sum())
    return TransportSolution(right_of, cost)


@dataclass
class IntegralAssignment:
    """Assignment of a subset of points; entries of ``assignment`` are center
    point ids or -1 for points outside the subset."""

    assignment: np.ndarray
    points: np.ndarray
    centers: np.ndarray
    counts: np.ndarray  # (len(centers), ell)
    cost: float
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None


def component_bounds(ell_map: dict, centers, t: int) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([math.floor(ell_map[int(c)]) for c in centers], dtype=np.int64)
    hi = np.array([math.ceil(t * ell_map[int(c)] - 1e-9) for c in centers], dtype=np.int64)
    return lo, hi


def round_component(instance: Instance, model: LPModel, component: SupportComponent,
                    ell_map: dict, t: Optional[int] = None) -> IntegralAssignment:
    """Round the component's fractional assignment to an integral one.

    Each (center, group) receives between floor(l_i) and ceil(t * l_i)
    clients; edges are the LP variables inside the component.
    """
    t = instance.t if t is None else t
    ell = instance.n_groups
    pts = component.points
    cpos = component.center_pos
    lo, hi = component_bounds(ell_map, component.centers, t)
    local_pt = {int(p): r for r, p in enumerate(pts)}
    local_c = {int(q): r for r, q in enumerate(cpos)}
    in_comp = np.isin(model.var_point, pts) & np.isin(model.var_center, cpos)
    vp = model.var_point[in_comp]
    vc = model.var_center[in_comp]
    lab = instance.labels
    problem = TransportProblem(
        n_left=pts.size,
        lb=np.repeat(lo, ell),
        ub=np.repeat(hi, ell),
        edge_left=np.array([local_pt[int(p)] for p in vp], dtype=np.intp),
        edge_right=np.array([local_c[int(q)] * ell + lab[p] for q, p in zip(vc, vp)], dtype=np.intp),
        edge_cost=model.cost[in_comp],
        right_labels=[(int(c), a) for c in component.centers for a in range(ell)],
    )
    sol = solve_transport(problem)
    assignment = np.full(instance.n, -1, dtype=np.intp)
    assignment[pts] = component.centers[sol.right_of // ell]
    counts = np.zeros((cpos.size, ell), dtype=np.int64)
    np.add.at(counts, (sol.right_of // ell, sol.right_of % ell), 1)
    return IntegralAssignment(assignment, pts, component.centers, counts, sol.cost, lo, hi)


def reassign_fixed_counts(instance: Instance, centers, target_counts) -> np.ndarray:
    """Cheapest assignment realizing exactly ``target_counts[i, a]`` clients of
    group ``a`` at ``centers[i]``."""
    if not instance.disjoint:
        raise InstanceError("fixed-count reassignment needs disjoint groups")
    centers = np.asarray(centers, dtype=np.intp)
    target = np.asarray(target_counts, dtype=np.int64)
    ell = instance.n_groups
    if target.shape != (centers.size, ell):
        raise InstanceError(f"target counts must be {(centers.size, ell)}")
    if np.any(target < 0) or not np.array_equal(target.sum(0), instance.group_sizes()):
        raise InstanceError("target counts do not add up to the group sizes")
    n, k = instance.n, centers.size
    dist = instance.metric.block(np.arange(n), centers)
    lab = instance.labels
    jj = np.repeat(np.arange(n), k)
    qq = np.tile(np.arange(k), n)
    problem = TransportProblem(
        n_left=n, lb=target.ravel(), ub=target.ravel(),
        edge_left=jj, edge_right=qq * ell + lab[jj], edge_cost=dist[jj, qq],
    )
    sol = solve_transport(problem)
    return centers[sol.right_of // ell]
