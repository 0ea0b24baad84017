"""The distance-capped fair assignment LP, its support graph and lower bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .instance import Instance, InstanceError
from .simplex import SimplexIterationLimit, linprog_simplex

EDGE_TOL = 1e-7
SNAP_TOL = 1e-6
FEAS_TOL = 1e-7
# dense tableau cells above which the "auto" backend hands off to HiGHS
DENSE_CELL_LIMIT = 400_000


class LPIterationLimit(RuntimeError):
    pass


@dataclass
class LPModel:
    """Variables are (point, center) pairs with distance at most ``D``.

    ``var_point[v]`` is a point id, ``var_center[v]`` a position in
    ``centers``. Fairness rows are indexed ``(center position, a, b)`` with
    ``a != b``.
    """

    centers: np.ndarray
    D: float
    t: int
    n: int
    n_groups: int
    labels: np.ndarray
    var_point: np.ndarray
    var_center: np.ndarray
    cost: np.ndarray
    fair_rows: list = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return self.var_point.size

    @property
    def structurally_infeasible(self) -> bool:
        return np.unique(self.var_point).size < self.n

    def uncovered_points(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n), self.var_point)

    def equality_matrix(self):
        ones = np.ones(self.n_vars)
        return sparse.csr_matrix((ones, (self.var_point, np.arange(self.n_vars))),
                                 shape=(self.n, self.n_vars))

    def fairness_matrix(self):
        rows, cols, vals = [], [], []
        group_of_var = self.labels[self.var_point]
        by_center = [np.flatnonzero(self.var_center == q) for q in range(self.centers.size)]
        for r, (q, a, b) in enumerate(self.fair_rows):
            vq = by_center[q]
            va = vq[group_of_var[vq] == a]
            vb = vq[group_of_var[vq] == b]
            rows.extend([r] * (va.size + vb.size))
            cols.extend(va.tolist())
            cols.extend(vb.tolist())
            vals.extend([1.0] * va.size)
            vals.extend([-float(self.t)] * vb.size)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(len(self.fair_rows), self.n_vars))

    def x_matrix(self, x) -> np.ndarray:
        X = np.zeros((self.n, self.centers.size))
        X[self.var_point, self.var_center] = x
        return X


@dataclass
class FractionalSolution:
    model: LPModel
    x: Optional[np.ndarray]
    objective: float
    status: str  # "feasible" | "infeasible"
    pivots: int = 0
    backend: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def matrix(self) -> np.ndarray:
        return self.model.x_matrix(self.x)


@dataclass
class SupportComponent:
    centers: np.ndarray  # center point ids
    center_pos: np.ndarray  # positions in model.centers
    points: np.ndarray
    hop_diameter_bound: float  # |F∩C|·D
    path_bound: float  # (2|F∩C|-1)·D: any in-component pair joins by that many <= D edges

    @property
    def n_centers(self) -> int:
        return self.centers.size


def build_lp(instance: Instance, centers, D: float) -> LPModel:
    if not instance.disjoint:
        raise InstanceError("the LP relaxation needs disjoint groups")
    centers = np.asarray(centers, dtype=np.intp)
    if centers.size == 0:
        raise InstanceError("need at least one center")
    dist = instance.metric.block(np.arange(instance.n), centers)
    jj, qq = np.nonzero(dist <= D)
    ell = instance.n_groups
    fair_rows = [(q, a, b) for q in range(centers.size) for a in range(ell) for b in range(ell) if a != b]
    return LPModel(
        centers=centers, D=float(D), t=instance.t, n=instance.n, n_groups=ell,
        labels=np.asarray(instance.labels), var_point=jj.astype(np.intp),
        var_center=qq.astype(np.intp), cost=dist[jj, qq].astype(float), fair_rows=fair_rows,
    )


def _solve_highs(model: LPModel):
    from scipy.optimize import linprog

    res = linprog(
        model.cost,
        A_ub=model.fairness_matrix() if model.fair_rows else None,
        b_ub=np.zeros(len(model.fair_rows)) if model.fair_rows else None,
        A_eq=model.equality_matrix(), b_eq=np.ones(model.n),
        bounds=(0, None), method="highs-ds",
    )
    if res.status == 0:
        return "feasible", res.x, float(res.fun), int(res.nit)
    if res.status == 2:
        return "infeasible", None, math.nan, int(res.nit)
    if res.status == 1:
        raise LPIterationLimit(res.message)
    raise RuntimeError(f"HiGHS failed: {res.message}")


def _solve_dense(model: LPModel, max_iter=None):
    A_eq = model.equality_matrix().toarray()
    A_ub = model.fairness_matrix().toarray()
    try:
        res = linprog_simplex(model.cost, A_ub, np.zeros(A_ub.shape[0]), A_eq, np.ones(model.n),
                              max_iter=max_iter)
    except SimplexIterationLimit as exc:
        raise LPIterationLimit(str(exc)) from exc
    if res.status == "optimal":
        return "feasible", res.x, res.objective, res.iterations
    if res.status == "infeasible":
        return "infeasible", None, math.nan, res.iterations
    raise RuntimeError("LP(D) cannot be unbounded: costs are nonnegative")


def solve_lp(model: LPModel, backend: str = "auto", max_iter=None) -> FractionalSolution:
    """Solve to an optimal basic solution, or report infeasibility.

    ``backend`` is ``"simplex"`` (dense two-phase tableau), ``"highs"``
    (scipy's dual simplex) or ``"auto"`` (dense unless the tableau is large).
    """
    if model.structurally_infeasible:
        return FractionalSolution(model, None, math.nan, "infeasible", backend="structural")
    if backend == "auto":
        rows = model.n + len(model.fair_rows)
        cells = (rows + 1) * (model.n_vars + len(model.fair_rows) + model.n + 1)
        backend = "simplex" if cells <= DENSE_CELL_LIMIT else "highs"
    if backend == "simplex":
        status, x, obj, piv = _solve_dense(model, max_iter)
    elif backend == "highs":
        status, x, obj, piv = _solve_highs(model)
    else:
        raise ValueError(f"unknown LP backend {backend!r}")
    if x is not None:
        x = np.clip(x, 0.0, None)
        x[x < 1e-12] = 0.0
    return FractionalSolution(model, x, obj, status, pivots=piv, backend=backend)


def check_feasible(sol: FractionalSolution, tol: float = FEAS_TOL) -> None:
    m = sol.model
    X = sol.matrix()
    rows = X.sum(1)
    if np.max(np.abs(rows - 1.0)) > tol:
        raise AssertionError(f"assignment rows off by {np.max(np.abs(rows - 1.0))}")
    if m.fair_rows:
        viol = m.fairness_matrix() @ sol.x
        if viol.max() > tol:
            raise AssertionError(f"fairness row violated by {viol.max()}")


def support_components(model: LPModel, x_star, edge_tolerance: float = EDGE_TOL) -> list[SupportComponent]:
    """Connected components of the bipartite support graph.

    Nodes ``0..n-1`` are points, ``n..n+k-1`` centers. Centers without support
    edges form singleton components with no points and are dropped.
    """
    if isinstance(x_star, FractionalSolution):
        x_star = x_star.x
    x_star = np.asarray(x_star)
    n, k = model.n, model.centers.size
    live = x_star >= edge_tolerance
    g = sparse.coo_matrix(
        (np.ones(int(live.sum())), (model.var_point[live], n + model.var_center[live])),
        shape=(n + k, n + k),
    )
    n_comp, lab = connected_components(g, directed=False)
    out = []
    seen = {}
    for node in range(n + k):
        c = lab[node]
        if c not in seen:
            seen[c] = len(seen)
    groups = [[] for _ in seen]
    for node in range(n + k):
        groups[seen[lab[node]]].append(node)
    for nodes in groups:
        nodes = np.asarray(nodes)
        pts = nodes[nodes < n]
        cpos = nodes[nodes >= n] - n
        if pts.size == 0:
            continue
        out.append(SupportComponent(
            centers=model.centers[cpos], center_pos=cpos.astype(np.intp), points=pts.astype(np.intp),
            hop_diameter_bound=cpos.size * model.D,
            path_bound=(2 * cpos.size - 1) * model.D,
        ))
    return out


def group_masses(model: LPModel, x_star) -> np.ndarray:
    """``(k, ell)`` fractional mass per center and group."""
    if isinstance(x_star, FractionalSolution):
        x_star = x_star.x
    M = np.zeros((model.centers.size, model.n_groups))
    np.add.at(M, (model.var_center, model.labels[model.var_point]), x_star)
    return M


def snap(v: float, tol: float = SNAP_TOL) -> float:
    r = round(v)
    return float(r) if abs(v - r) <= tol else float(v)


def group_lower_bounds(model: LPModel, x_star, component: SupportComponent) -> dict[int, float]:
    """Per-center minimum group mass, snapped to the nearest integer within 1e-6."""
    M = group_masses(model, x_star)
    return {int(model.centers[q]): snap(float(M[q].min())) for q in component.center_pos}


def _mps_name(prefix, i):
    return f"{prefix}{i}"


def write_mps(model: LPModel, path) -> None:
    """Fixed-column MPS dump for cross-checking with external solvers."""
    eq = model.equality_matrix().tocsc()
    fa = model.fairness_matrix().tocsc()
    lines = [f"NAME          LPD{model.n}", "ROWS", " N  COST"]
    lines += [f" E  {_mps_name('A', j)}" for j in range(model.n)]
    lines += [f" L  {_mps_name('F', r)}" for r in range(len(model.fair_rows))]
    lines.append("COLUMNS")

    def field(name, col, val):
        return f"    {name:<8}  {col:<8}  {val:>12.6g}"

    for v in range(model.n_vars):
        name = _mps_name("X", v)
        lines.append(field(name, "COST", model.cost[v]))
        for r, val in zip(eq.indices[eq.indptr[v]:eq.indptr[v + 1]], eq.data[eq.indptr[v]:eq.indptr[v + 1]]):
            lines.append(field(name, _mps_name("A", r), val))
        for r, val in zip(fa.indices[fa.indptr[v]:fa.indptr[v + 1]], fa.data[fa.indptr[v]:fa.indptr[v + 1]]):
            lines.append(field(name, _mps_name("F", r), val))
    lines.append("RHS")
    lines += [field("RHS", _mps_name("A", j), 1.0) for j in range(model.n)]
    lines.append("ENDATA")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
