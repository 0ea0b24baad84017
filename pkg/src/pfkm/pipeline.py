"""End-to-end pairwise fair k-median: vanilla centers, LP sweep over the
distance cap D, per-component rounding and repair, cheapest candidate."""

from __future__ import annotations

import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .instance import (Instance, InfeasibleInstance, InstanceError, Solution,
                       cluster_counts, feasibility_precheck, fairness_violations,
                       is_fair, solution_cost)
from .kmedian import local_search_kmedian
from .lp import (build_lp, check_feasible, group_lower_bounds, group_masses,
                 solve_lp, support_components, write_mps)
from .repair import build_unassigned, repair, write_trace
from .transport import reassign_fixed_counts, round_component

log = logging.getLogger(__name__)


class BalanceOneError(InstanceError):
    """t = 1 is outside this algorithm; use a t = 1 specific method."""


class EmptyCandidatePool(RuntimeError):
    pass


@dataclass
class RunConfig:
    d_mode: str = "geometric"  # or "exact"
    base: float = 1.1
    seed: int = 0
    post: bool = True
    lp_backend: str = "auto"
    bisect: bool = True
    max_iters: Optional[int] = None
    lp_dump_dir: Optional[str] = None
    trace_dir: Optional[str] = None

    def __post_init__(self):
        if self.d_mode not in ("exact", "geometric"):
            raise ValueError(f"unknown d_mode {self.d_mode!r}")
        if self.base <= 1:
            raise ValueError("geometric base must exceed 1")

    @property
    def local_search_seed(self) -> int:
        return self.seed

    @property
    def subsample_seed(self) -> int:
        return self.seed + 1


@dataclass
class ComponentReport:
    centers: list
    n_points: int
    hop_bound: float
    path_bound: float
    lp_objective: float
    sigma_int_cost: float
    final_cost: float
    s_initial: int
    gamma: int
    moved_second_case: int
    taken_from_s: int
    changed: int
    i_star: int
    init_diverged: bool
    mark_violations: int
    max_in_component_distance: float
    points: list = field(default_factory=list, repr=False)  # kept out of the JSON report


@dataclass
class Candidate:
    D: float
    lp_objective: float
    cost: float
    post_cost: Optional[float]
    components: list
    assignment: np.ndarray = field(repr=False, default=None)
    post_assignment: Optional[np.ndarray] = field(repr=False, default=None)

    @property
    def best_cost(self) -> float:
        return self.cost if self.post_cost is None else min(self.cost, self.post_cost)

    @property
    def best_assignment(self) -> np.ndarray:
        if self.post_cost is not None and self.post_cost < self.cost:
            return self.post_assignment
        return self.assignment

    def ledger(self) -> float:
        """Sum over components of (changed clients) * (hop bound)."""
        return float(sum(c.changed * c.hop_bound for c in self.components))

    def path_ledger(self) -> float:
        """Same sum with the path bound, which always dominates the move cost."""
        return float(sum(c.changed * c.path_bound for c in self.components))


@dataclass
class RunReport:
    n: int = 0
    k: int = 0
    t: int = 0
    n_groups: int = 0
    seed: int = 0
    local_search_seed: int = 0
    subsample_seed: Optional[int] = None
    d_mode: str = ""
    kernel_backend: str = ""
    vanilla_centers: list = field(default_factory=list)
    vanilla_cost: float = 0.0
    vanilla_swaps: int = 0
    fair_cost: float = 0.0
    post_cost: Optional[float] = None
    final_cost: float = 0.0
    chosen_D: float = 0.0
    lp_runs: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, default=_jsonable)


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def min_nonzero_distance(instance: Instance) -> float:
    n = instance.n
    best = math.inf
    step = 512
    for lo in range(0, n, step):
        blk = instance.metric.block(np.arange(lo, min(n, lo + step)), np.arange(n))
        nz = blk[blk > 0]
        if nz.size:
            best = min(best, float(nz.min()))
    return best


def d_candidates(instance: Instance, centers, mode: str = "geometric", base: float = 1.1) -> list:
    """Distance caps to try, ascending.

    ``exact``: every distinct point-center distance. ``geometric``:
    ``delta * base**j`` up to the largest point-center distance (which is
    appended), ``delta`` the smallest nonzero distance in the metric.
    """
    centers = np.asarray(centers, dtype=np.intp)
    dpc = instance.metric.block(np.arange(instance.n), centers)
    top = float(dpc.max())
    if mode == "exact":
        return [float(v) for v in np.unique(dpc)]
    if mode != "geometric":
        raise ValueError(f"unknown d_mode {mode!r}")
    if top <= 0:
        return [0.0]
    delta = min_nonzero_distance(instance)
    out = []
    j = 0
    while True:
        v = delta * base ** j
        if v >= top:
            break
        out.append(v)
        j += 1
    out.append(top)
    return out


def check_input(instance: Instance) -> None:
    if not instance.disjoint:
        raise InstanceError("the approximation pipeline needs disjoint groups")
    if instance.t < 2:
        raise BalanceOneError("t = 1 is not handled here (needs t >= 2); use a dedicated t = 1 method")
    pre = feasibility_precheck(instance)
    if not pre:
        a, b = pre.witness
        raise InfeasibleInstance(
            f"groups {instance.group_names[a]!r} and {instance.group_names[b]!r} are not "
            f"{instance.t}-balanced; no fair clustering exists")


def _component_objective(model, x, comp) -> float:
    mask = np.isin(model.var_point, comp.points)
    return float(model.cost[mask] @ x[mask])


def run_candidate(instance: Instance, centers, D: float, sol, config: RunConfig,
                  timings: dict) -> Candidate:
    """Round and repair every support component of one feasible LP solution."""
    model = sol.model
    t, k, ell = instance.t, instance.k, instance.n_groups
    check_feasible(sol)
    comps = support_components(model, sol.x)
    assignment = np.full(instance.n, -1, dtype=np.intp)
    reports = []
    masses = group_masses(model, sol.x)
    for comp in comps:
        sizes = instance.membership[comp.points].sum(0)
        if sizes.max() > t * sizes.min():
            raise AssertionError(f"support component at D={D} is not {t}-balanced: {sizes.tolist()}")
        for q in comp.center_pos:
            if masses[q].max() > t * masses[q].min() + 1e-6:
                raise AssertionError("restricted LP solution violates fairness")
        block = instance.metric.block(comp.points, comp.centers)
        max_d = float(block.max())
        if max_d > comp.path_bound + 1e-9:
            raise AssertionError(f"path bound violated: {max_d} > {comp.path_bound}")
        lp_obj = _component_objective(model, sol.x, comp)

        t0 = time.perf_counter()
        ell_map = group_lower_bounds(model, sol.x, comp)
        sigma = round_component(instance, model, comp, ell_map, t)
        timings["round"] = timings.get("round", 0.0) + time.perf_counter() - t0
        if sigma.cost > lp_obj + 1e-7 + 1e-9 * comp.points.size:
            raise AssertionError(f"rounded cost {sigma.cost} above LP value {lp_obj}")
        if np.any(sigma.counts.max(1) > t * sigma.counts.min(1) + t):
            raise AssertionError("rounded assignment breaks near-fairness")

        t0 = time.perf_counter()
        state = build_unassigned(instance, sigma, t, ell_map)
        fixed, stats = repair(state, t, trace=config.trace_dir is not None)
        timings["repair"] = timings.get("repair", 0.0) + time.perf_counter() - t0
        if config.trace_dir is not None:
            os.makedirs(config.trace_dir, exist_ok=True)
            name = f"repair_D{D:.6g}_c{int(comp.centers[0])}.jsonl"
            with open(os.path.join(config.trace_dir, name), "w") as fh:
                write_trace(state.trace, fh)

        final_cost = float(sum(instance.metric(int(p), int(fixed[p])) for p in comp.points))
        if stats.gamma > k:
            raise AssertionError(f"Gamma={stats.gamma} exceeds k={k}")
        if stats.changed > stats.s_initial + k * ell:
            raise AssertionError(f"{stats.changed} clients changed; bound {stats.s_initial + k * ell}")
        if final_cost > sigma.cost + stats.changed * comp.path_bound + 1e-6:
            raise AssertionError("repair exceeded its cost ledger")
        _, cnt = cluster_counts(instance, np.where(np.isin(np.arange(instance.n), comp.points), fixed, -1),
                                comp.centers)
        if not is_fair(cnt, t):
            raise AssertionError("repaired component is not fair")
        assignment[comp.points] = fixed[comp.points]
        reports.append(ComponentReport(
            centers=[int(c) for c in comp.centers], n_points=int(comp.points.size),
            hop_bound=float(comp.hop_diameter_bound), path_bound=float(comp.path_bound),
            lp_objective=lp_obj,
            sigma_int_cost=float(sigma.cost), final_cost=final_cost,
            s_initial=stats.s_initial, gamma=stats.gamma,
            moved_second_case=stats.moved_second_case, taken_from_s=stats.taken_from_s,
            changed=stats.changed, i_star=stats.i_star, init_diverged=stats.init_diverged,
            mark_violations=stats.mark_violations, max_in_component_distance=max_d,
            points=[int(p) for p in comp.points],
        ))
    if np.any(assignment < 0):
        raise AssertionError("components do not cover every point")
    cost = solution_cost(instance, assignment)
    _, counts = cluster_counts(instance, assignment, centers)
    if not is_fair(counts, t):
        raise AssertionError(f"union not fair: {fairness_violations(counts, t)[:3]}")
    cand = Candidate(D=float(D), lp_objective=float(sol.objective), cost=cost, post_cost=None,
                     components=reports, assignment=assignment)
    if config.post:
        t0 = time.perf_counter()
        post = reassign_fixed_counts(instance, centers, counts)
        timings["post"] = timings.get("post", 0.0) + time.perf_counter() - t0
        cand.post_cost = solution_cost(instance, post)
        cand.post_assignment = post
        if cand.post_cost > cost + 1e-7 + 1e-9 * instance.n:
            raise AssertionError("fixed-count reassignment worse than its own feasible point")
    return cand


def solve(instance: Instance, config: Optional[RunConfig] = None, centers=None):
    """Returns ``(Solution, RunReport, candidates)``."""
    config = config or RunConfig()
    check_input(instance)
    timings = {}
    t_start = time.perf_counter()
    report = RunReport(n=instance.n, k=instance.k, t=instance.t, n_groups=instance.n_groups,
                       seed=config.seed, local_search_seed=config.local_search_seed,
                       d_mode=config.d_mode, kernel_backend=kernels.BACKEND)

    t0 = time.perf_counter()
    if centers is None:
        base = local_search_kmedian(instance, instance.k, seed=config.local_search_seed,
                                    max_iters=config.max_iters)
        centers = np.asarray(base.centers, dtype=np.intp)
        report.vanilla_cost = base.cost
        report.vanilla_swaps = base.swaps
    else:
        centers = np.sort(np.asarray(centers, dtype=np.intp))
        report.vanilla_cost = float(instance.metric.block(np.arange(instance.n), centers).min(1).sum())
    timings["vanilla"] = time.perf_counter() - t0
    report.vanilla_centers = [int(c) for c in centers]

    Ds = d_candidates(instance, centers, config.d_mode, config.base)
    lp_time = 0.0
    results = {}

    def lp_at(i):
        nonlocal lp_time
        if i in results:
            return results[i]
        t1 = time.perf_counter()
        model = build_lp(instance, centers, Ds[i])
        sol = solve_lp(model, config.lp_backend)
        lp_time += time.perf_counter() - t1
        results[i] = sol
        if config.lp_dump_dir is not None:
            os.makedirs(config.lp_dump_dir, exist_ok=True)
            write_mps(model, os.path.join(config.lp_dump_dir, f"lp_D{Ds[i]:.6g}.mps"))
        return sol

    first = 0
    if config.bisect:
        # LP(D) feasibility is monotone in D: locate the first feasible cap
        lo, hi = 0, len(Ds) - 1
        if not lp_at(hi).feasible:
            raise AssertionError("LP infeasible at the largest distance cap on a balanced instance")
        while lo < hi:
            mid = (lo + hi) // 2
            if lp_at(mid).feasible:
                hi = mid
            else:
                lo = mid + 1
        first = lo

    cands = []
    for i, D in enumerate(Ds):
        if i < first:
            sol = results.get(i)
            report.lp_runs.append({"D": D, "status": "infeasible",
                                   "solved": sol is not None,
                                   "backend": sol.backend if sol is not None else "bisect"})
            continue
        sol = lp_at(i)
        report.lp_runs.append({"D": D, "status": sol.status, "solved": True,
                               "objective": None if not sol.feasible else sol.objective,
                               "backend": sol.backend, "pivots": sol.pivots,
                               "n_vars": int(sol.model.n_vars)})
        if not sol.feasible:
            if i == len(Ds) - 1:
                raise AssertionError("LP infeasible at the largest distance cap on a balanced instance")
            continue
        cands.append(run_candidate(instance, centers, D, sol, config, timings))
    timings["lp"] = lp_time
    if not cands:
        raise EmptyCandidatePool("no distance cap gave a feasible LP")

    best = min(cands, key=lambda c: (c.best_cost, c.D))
    assignment = best.best_assignment
    report.fair_cost = best.cost
    report.post_cost = best.post_cost
    report.final_cost = best.best_cost
    report.chosen_D = best.D
    report.candidates = [
        {"D": c.D, "lp_objective": c.lp_objective, "cost": c.cost, "post_cost": c.post_cost,
         "ledger": c.ledger(),
         "components": [{k: v for k, v in asdict(r).items() if k != "points"} for r in c.components]}
        for c in cands
    ]
    timings.setdefault("round", 0.0)
    timings.setdefault("repair", 0.0)
    timings.setdefault("post", 0.0)
    timings["fair"] = time.perf_counter() - t_start - timings["vanilla"]
    timings["total"] = time.perf_counter() - t_start
    report.timings = timings

    _, counts = cluster_counts(instance, assignment, centers)
    if not is_fair(counts, instance.t):
        raise AssertionError("final solution is not fair")
    sol = Solution(tuple(int(c) for c in centers), assignment, solution_cost(instance, assignment))
    return sol, report, cands


def write_assignment_csv(instance: Instance, assignment, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("point_id,group,center_id\n")
        for p, c in enumerate(assignment):
            fh.write(f"{instance.point_ids[p]},{instance.group_names[instance.labels[p]]},"
                     f"{instance.point_ids[int(c)]}\n")
