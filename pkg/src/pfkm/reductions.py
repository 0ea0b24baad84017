"""Instance transformations into pairwise fair k-median.

* Soft uniform capacitated k-median (CkM) -> two-group fair k-median, plus
  the way back: turning a fair solution into a capacity-respecting CkM
  solution through an integral min-cost flow.
* 3-uniform hypergraph 2-coloring -> overlapping-group fair 2-median on
  three locations of a line.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .instance import Instance, InstanceError, Metric
from .transport import TransportInfeasible, TransportProblem, solve_transport

BLACK, RED = 0, 1


class ExtractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class CkmInstance:
    """Soft uniform capacitated k-median over the locations of ``dist``."""

    dist: np.ndarray
    k: int
    u: int

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InstanceError("CkM distance matrix must be square")
        if not np.allclose(d, d.T) or np.any(np.diag(d) != 0) or np.any(d < 0):
            raise InstanceError("CkM distances must form a metric")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        if self.k < 1 or self.u < 1:
            raise InstanceError("k and u must be positive")

    @property
    def m(self) -> int:
        return self.dist.shape[0]

    @property
    def diam(self) -> float:
        return float(self.dist.max()) if self.m else 0.0

    def min_positive(self) -> float:
        pos = self.dist[self.dist > 0]
        return float(pos.min()) if pos.size else 1.0

    def rescaled(self) -> "CkmInstance":
        """Scale so the smallest positive distance is 1."""
        return CkmInstance(self.dist / self.min_positive(), self.k, self.u)

    def feasible(self) -> bool:
        return self.m <= self.k * self.u


@dataclass(frozen=True)
class CkmSolution:
    facilities: tuple  # location per opened facility
    assignment: np.ndarray  # location -> index into ``facilities``
    cost: float

    def loads(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=len(self.facilities))


@dataclass(frozen=True)
class CkmMapping:
    W: int
    R: int  # location index of the extra point
    location: np.ndarray  # point -> location (0..m-1 are X, m is R)
    color: np.ndarray  # point -> BLACK / RED
    loc_dist: np.ndarray  # (m+1, m+1)
    ckm: CkmInstance


def reduce_ckm_to_pfkm(ckm: CkmInstance, eps: float):
    """Build the two-group fair instance: ``W`` black points per location,
    ``k`` red points at an extra location ``R`` at distance ``diam`` from
    everything, balance ``t = u * W``."""
    if eps <= 0:
        raise InstanceError("eps must be positive")
    if ckm.min_positive() < 1 - 1e-12:
        raise InstanceError("rescale the CkM instance first (smallest positive distance >= 1)")
    m, k, diam = ckm.m, ckm.k, ckm.diam
    W = math.ceil(k * diam / eps - 1e-12)
    W = max(W, 1)
    L = np.zeros((m + 1, m + 1))
    L[:m, :m] = ckm.dist
    L[m, :m] = L[:m, m] = diam
    location = np.concatenate([np.repeat(np.arange(m), W), np.full(k, m)]).astype(np.intp)
    color = np.concatenate([np.full(m * W, BLACK), np.full(k, RED)]).astype(np.intp)
    dist = L[np.ix_(location, location)]
    inst = Instance.from_labels(color, dist=dist, k=k, t=ckm.u * W,
                                group_names=("black", "red"))
    return inst, CkmMapping(W, m, location, color, L, ckm)


def _assign_facilities(ckm: CkmInstance, facilities: Sequence[int]) -> CkmSolution:
    """Cheapest capacity-respecting assignment of all locations to ``facilities``
    (source -> x cap 1 -> f_i -> sink cap u)."""
    m, nf = ckm.m, len(facilities)
    jj = np.repeat(np.arange(m), nf)
    ff = np.tile(np.arange(nf), m)
    problem = TransportProblem(
        n_left=m, lb=np.zeros(nf), ub=np.full(nf, ckm.u),
        edge_left=jj, edge_right=ff, edge_cost=ckm.dist[jj, np.asarray(facilities)[ff]],
    )
    sol = solve_transport(problem)
    return CkmSolution(tuple(int(f) for f in facilities), sol.right_of.copy(), sol.cost)


def extract_ckm_solution(instance: Instance, assignment, mapping: CkmMapping) -> CkmSolution:
    """CkM solution of cost at most (fair cost) / W from a fair solution."""
    assignment = np.asarray(assignment, dtype=np.intp)
    loc, color, L = mapping.location, mapping.color, mapping.loc_dist
    ckm = mapping.ckm
    facilities = []
    for c in np.unique(assignment):
        members = np.flatnonzero(assignment == c)
        blacks = members[color[members] == BLACK]
        reds = members[color[members] == RED]
        if reds.size == 0:
            if blacks.size:
                raise ExtractionError(f"cluster {int(c)} has black points but no red point; not fair")
            continue
        if blacks.size == 0:
            raise ExtractionError(f"cluster {int(c)} has red points only; not fair")
        where = int(loc[c])
        if where == mapping.R:
            # black points sent to R pay diam each; any location in X is no farther
            spots = np.unique(loc[blacks])
            where = int(spots[np.argmin([L[loc[blacks], s].sum() for s in spots])])
        facilities.extend([where] * reds.size)
    try:
        sol = _assign_facilities(ckm, facilities)
    except TransportInfeasible as exc:
        raise ExtractionError(f"max flow below |X|: {exc}") from exc
    used = np.flatnonzero(sol.loads() > 0)
    remap = np.full(len(facilities), -1, dtype=np.intp)
    remap[used] = np.arange(used.size)
    return CkmSolution(tuple(facilities[i] for i in used), remap[sol.assignment], sol.cost)


def fill_empty_facilities(sol: CkmSolution, ckm: CkmInstance) -> CkmSolution:
    """Give every facility a client without raising the cost.

    An idle facility moves onto the farthest client of a facility serving two
    or more, which then pays 0. Stops when no such donor exists (m < k).
    """
    fac = list(sol.facilities)
    assign = sol.assignment.copy()
    while True:
        loads = np.bincount(assign, minlength=len(fac))
        idle = np.flatnonzero(loads == 0)
        donors = np.flatnonzero(loads >= 2)
        if idle.size == 0 or donors.size == 0:
            break
        clients = np.flatnonzero(np.isin(assign, donors))
        far = clients[np.argmax([ckm.dist[x, fac[assign[x]]] for x in clients])]
        z = int(idle[0])
        fac[z] = int(far)
        assign[far] = z
    cost = float(sum(ckm.dist[x, fac[assign[x]]] for x in range(ckm.m)))
    return CkmSolution(tuple(fac), assign, cost)


def ckm_to_pfkm_solution(sol: CkmSolution, instance: Instance, mapping: CkmMapping) -> np.ndarray:
    """Fair assignment of cost at most ``W * z + k * diam`` built from a CkM solution."""
    loc, color = mapping.location, mapping.color
    sol = fill_empty_facilities(sol, mapping.ckm)
    loads = sol.loads()
    used = [i for i in range(len(sol.facilities)) if loads[i] > 0]
    if not used:
        raise InstanceError("CkM solution assigns nothing")
    center_at = {}
    for i in used:
        f = sol.facilities[i]
        if f not in center_at:
            center_at[f] = int(np.flatnonzero((loc == f) & (color == BLACK))[0])
    assignment = np.empty(instance.n, dtype=np.intp)
    for p in np.flatnonzero(color == BLACK):
        assignment[p] = center_at[sol.facilities[sol.assignment[loc[p]]]]
    reds = np.flatnonzero(color == RED)
    for r, p in enumerate(reds):
        # facilities without clients (or beyond the opened count) join an used one
        i = r if r < len(sol.facilities) and loads[r] > 0 else used[0]
        assignment[p] = center_at[sol.facilities[i]]
    return assignment


def brute_force_ckm(ckm: CkmInstance) -> CkmSolution:
    """Optimal soft CkM: every multiset of k facility locations, each solved
    exactly as a capacitated assignment."""
    if not ckm.feasible():
        raise InstanceError("m > k*u: no capacity-respecting assignment")
    best = None
    for combo in itertools.combinations_with_replacement(range(ckm.m), ckm.k):
        sol = _assign_facilities(ckm, combo)
        if best is None or sol.cost < best.cost - 1e-12:
            best = sol
    return best


@dataclass(frozen=True)
class Hypergraph3:
    n_vertices: int
    edges: tuple

    def __post_init__(self):
        edges = tuple(tuple(int(v) for v in e) for e in self.edges)
        for e in edges:
            if len(e) != 3 or len(set(e)) != 3:
                raise InstanceError(f"hyperedge {e} must have 3 distinct vertices")
            if min(e) < 0 or max(e) >= self.n_vertices:
                raise InstanceError(f"hyperedge {e} out of range")
        object.__setattr__(self, "edges", edges)


def is_two_colorable(H: Hypergraph3) -> bool:
    for mask in range(1 << max(H.n_vertices - 1, 0)):
        color = [(mask >> v) & 1 for v in range(H.n_vertices)]
        if all(len({color[v] for v in e}) == 2 for e in H.edges):
            return True
    return False


@dataclass(frozen=True)
class HypergraphMapping:
    N: int
    side: int  # points at each of p1, p2
    location: np.ndarray  # 0 = p1, 1 = q, 2 = p2


def reduce_hypergraph_to_pfkm(H: Hypergraph3, rho: int):
    """Overlapping-group fair 2-median instance.

    One point per vertex at ``q``; ``N ** rho`` points at each of ``p1``,
    ``p2``; group 0 holds all ``p1``/``p2`` points and group ``e + 1`` the
    three vertex points of hyperedge ``e``; ``t = n``.
    """
    if rho < 1:
        raise InstanceError("rho must be >= 1")
    if not H.edges:
        raise InstanceError("need at least one hyperedge")
    N = H.n_vertices
    side = N ** rho
    location = np.concatenate([np.ones(N), np.zeros(side), np.full(side, 2)]).astype(np.intp)
    line = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)
    n = N + 2 * side
    groups = [[e + 1 for e, edge in enumerate(H.edges) if v in edge] for v in range(N)]
    groups += [[0]] * (2 * side)
    inst = Instance.from_groups(groups, dist=line[np.ix_(location, location)],
                                n_groups=len(H.edges) + 1, k=2, t=n)
    return inst, HypergraphMapping(N, side, location)


def load_ckm_json(path_or_obj) -> CkmInstance:
    obj = _load(path_or_obj)
    return CkmInstance(np.asarray(obj["dist"], dtype=float), int(obj["k"]), int(obj["u"]))


def load_hypergraph_json(path_or_obj) -> Hypergraph3:
    """``{"n_vertices": N, "edges": [[a, b, c], ...]}``; vertices 0-based, or
    1-based when every id lies in 1..N and N itself occurs."""
    obj = _load(path_or_obj)
    N = int(obj["n_vertices"])
    edges = [tuple(int(v) for v in e) for e in obj["edges"]]
    flat = [v for e in edges for v in e]
    if flat and min(flat) >= 1 and max(flat) == N:
        edges = [tuple(v - 1 for v in e) for e in edges]
    return Hypergraph3(N, tuple(edges))


def _load(path_or_obj):
    if isinstance(path_or_obj, dict):
        return path_or_obj
    with open(path_or_obj) as fh:
        return json.load(fh)
