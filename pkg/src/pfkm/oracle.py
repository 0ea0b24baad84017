"""Brute-force ground truth for tiny fair k-median instances.

Three enumeration modes for a fixed center set:

* ``"A"``: every assignment of points to centers (``k ** n`` rows).
* ``"B"``: every per-(center, group) count matrix that is fair and sums to
  the group sizes, each solved by a fixed-count transport (disjoint groups).
* ``"classes"``: ``"A"`` modulo symmetry. Points with identical distance rows
  and group memberships are interchangeable, so only how many of each class
  go to each center matters. Handles the many co-located points of the
  hardness constructions.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .instance import (Instance, InfeasibleInstance, InstanceError, Solution,
                       feasibility_precheck)
from .transport import reassign_fixed_counts

MODE_A_LIMIT = 2_000_000
CLASS_LIMIT = 5_000_000
_CHUNK = 1 << 18


def _positions(n: int, k: int, lo: int, hi: int) -> np.ndarray:
    """Rows ``lo..hi`` of all length-``n`` base-``k`` vectors, lexicographic."""
    idx = np.arange(lo, hi, dtype=np.int64)
    out = np.empty((idx.size, n), dtype=np.int8)
    for p in range(n - 1, -1, -1):
        out[:, p] = idx % k
        idx //= k
    return out


def _fair_rows(pos: np.ndarray, membership: np.ndarray, k: int, t: int) -> np.ndarray:
    ok = np.ones(pos.shape[0], dtype=bool)
    mem = membership.astype(np.int32)
    for q in range(k):
        counts = (pos == q).astype(np.int32) @ mem
        ok &= counts.max(axis=1) <= t * counts.min(axis=1)
    return ok


def _better(cand, best, tol=1e-9):
    """Cost-then-lexicographic comparison on ``(cost, assignment tuple)``."""
    if best is None:
        return True
    c0, a0 = cand
    c1, a1 = best
    if c0 < c1 - tol * max(1.0, abs(c1)):
        return True
    if c0 > c1 + tol * max(1.0, abs(c1)):
        return False
    return a0 < a1


def _mode_a(instance: Instance, centers: np.ndarray):
    n, k = instance.n, centers.size
    total = k ** n
    if total > MODE_A_LIMIT:
        raise InstanceError(f"mode A would enumerate {total} assignments")
    dist = instance.metric.block(np.arange(n), centers)
    best = None
    for lo in range(0, total, _CHUNK):
        pos = _positions(n, k, lo, min(total, lo + _CHUNK))
        fair = _fair_rows(pos, instance.membership, k, instance.t)
        if not fair.any():
            continue
        pf = pos[fair].astype(np.intp)
        cost = dist[np.arange(n)[None, :], pf].sum(axis=1)
        r = int(np.argmin(cost))
        tied = np.flatnonzero(cost <= cost[r] + 1e-9 * max(1.0, abs(cost[r])))
        r = int(tied[0])  # rows are in lexicographic order
        cand = (float(cost[r]), tuple(int(c) for c in centers[pf[r]]))
        if _better(cand, best):
            best = cand
    return best


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(total + parts - 2 - prev)
        rows.append(row)
    return np.array(rows, dtype=np.int64)


def _mode_b(instance: Instance, centers: np.ndarray):
    if not instance.disjoint:
        raise InstanceError("mode B needs disjoint groups")
    k, ell, t = centers.size, instance.n_groups, instance.t
    sizes = instance.group_sizes()
    per_group = [_compositions(int(s), k) for s in sizes]
    space = math.prod(len(c) for c in per_group)
    if space > 1_000_000:
        raise InstanceError(f"mode B count space {space} too large")
    best = None

    def rec(a, cols):
        nonlocal best
        if a == ell:
            counts = np.stack(cols, axis=1)
            assign = reassign_fixed_counts(instance, centers, counts)
            cost = float(instance.metric.block(np.arange(instance.n), centers)[
                np.arange(instance.n), np.searchsorted(centers, assign)].sum())
            cand = (cost, tuple(int(c) for c in assign))
            if _better(cand, best):
                best = cand
            return
        for comp in per_group[a]:
            # columns already fixed are final, so fairness among them prunes exactly
            part = np.stack(cols + [comp], axis=1)
            if np.any(part.max(axis=1) > t * part.min(axis=1)):
                continue
            rec(a + 1, cols + [comp])

    rec(0, [])
    return best


def _classes(instance: Instance):
    """Partition points by (distance row, membership row)."""
    if instance.metric.is_dense:
        rows = instance.metric.matrix
    else:
        rows = instance.metric.block(np.arange(instance.n), np.arange(instance.n))
    key = {}
    cls = np.empty(instance.n, dtype=np.intp)
    for p in range(instance.n):
        kk = (rows[p].tobytes(), instance.membership[p].tobytes())
        cls[p] = key.setdefault(kk, len(key))
    return cls


def _location_classes(instance: Instance):
    rows = instance.metric.matrix if instance.metric.is_dense else \
        instance.metric.block(np.arange(instance.n), np.arange(instance.n))
    key = {}
    loc = np.empty(instance.n, dtype=np.intp)
    for p in range(instance.n):
        loc[p] = key.setdefault(rows[p].tobytes(), len(key))
    return loc


def _mode_classes(instance: Instance, centers: np.ndarray, cls=None):
    """Returns ``(cost, assignment tuple)`` or None when no fair assignment exists."""
    n, k, t = instance.n, centers.size, instance.t
    cls = _classes(instance) if cls is None else cls
    n_cls = int(cls.max()) + 1
    members = [np.flatnonzero(cls == c) for c in range(n_cls)]
    dist = instance.metric.block(np.arange(n), centers)
    comps = [_compositions(m.size, k) for m in members]
    space = math.prod(len(c) for c in comps)
    if space > CLASS_LIMIT:
        raise InstanceError(f"class enumeration space {space} too large")
    ell = instance.n_groups
    cost = np.zeros(1)
    counts = np.zeros((1, k, ell), dtype=np.int64)
    choice = np.zeros((1, 0), dtype=np.int64)
    for c, comp in enumerate(comps):
        rep = members[c][0]
        mem = instance.membership[rep].astype(np.int64)
        dc = dist[rep]
        add_cost = comp @ dc
        add_counts = comp[:, :, None] * mem[None, None, :]
        m0, m1 = cost.size, comp.shape[0]
        cost = (cost[:, None] + add_cost[None, :]).ravel()
        counts = (counts[:, None] + add_counts[None, :]).reshape(m0 * m1, k, ell)
        choice = np.concatenate([np.repeat(choice, m1, axis=0),
                                 np.tile(np.arange(m1), m0)[:, None]], axis=1)
    fair = np.all(counts.max(axis=2) <= t * counts.min(axis=2), axis=1)
    if not fair.any():
        return None
    idx = np.flatnonzero(fair)
    best_cost = cost[idx].min()
    tied = idx[cost[idx] <= best_cost + 1e-9 * max(1.0, abs(best_cost))]
    best = None
    for r in tied[:64]:
        assign = np.empty(n, dtype=np.intp)
        for c, ch in enumerate(choice[r]):
            split = comps[c][ch]
            mem = members[c]
            cut = np.cumsum(split)[:-1]
            for q, part in enumerate(np.split(mem, cut)):
                assign[part] = centers[q]
        cand = (float(cost[r]), tuple(int(x) for x in assign))
        if _better(cand, best):
            best = cand
    return best


def enumerate_fair_class_solutions(instance: Instance, centers, limit: int = 100_000):
    """Yield ``(cost, assignment)`` for every class-level fair assignment to ``centers``.

    One representative assignment per class-count configuration.
    """
    centers = np.sort(np.asarray(centers, dtype=np.intp))
    cls = _classes(instance)
    n_cls = int(cls.max()) + 1
    members = [np.flatnonzero(cls == c) for c in range(n_cls)]
    comps = [_compositions(m.size, centers.size) for m in members]
    dist = instance.metric.block(np.arange(instance.n), centers)
    emitted = 0
    for choice in itertools.product(*[range(len(c)) for c in comps]):
        assign = np.empty(instance.n, dtype=np.intp)
        for c, ch in enumerate(choice):
            cut = np.cumsum(comps[c][ch])[:-1]
            for q, part in enumerate(np.split(members[c], cut)):
                assign[part] = centers[q]
        pos = np.searchsorted(centers, assign)
        counts = np.zeros((centers.size, instance.n_groups), dtype=np.int64)
        np.add.at(counts, pos, instance.membership.astype(np.int64))
        if np.all(counts.max(1) <= instance.t * counts.min(1)):
            yield float(dist[np.arange(instance.n), pos].sum()), assign
            emitted += 1
            if emitted >= limit:
                return


def exact_fair_assignment(instance: Instance, centers, mode: str = "auto") -> Solution:
    """Minimum-cost fair assignment to the given centers.

    Raises ``InfeasibleInstance`` when no fair assignment exists.
    """
    centers = np.sort(np.asarray(centers, dtype=np.intp))
    if mode == "auto":
        if centers.size ** instance.n <= MODE_A_LIMIT:
            mode = "A"
        else:
            mode = "classes"
    if mode == "A":
        best = _mode_a(instance, centers)
    elif mode == "B":
        best = _mode_b(instance, centers)
    elif mode == "classes":
        best = _mode_classes(instance, centers)
    else:
        raise ValueError(f"unknown oracle mode {mode!r}")
    if best is None:
        raise InfeasibleInstance("no fair assignment to these centers")
    cost, assign = best
    return Solution(tuple(int(c) for c in centers), np.array(assign, dtype=np.intp), cost)


def exact_pfkm(instance: Instance, mode: str = "auto") -> Solution:
    """Optimal pairwise fair k-median by enumerating all center subsets."""
    if instance.disjoint and not feasibility_precheck(instance):
        raise InfeasibleInstance("group sizes are not t-balanced")
    cand = np.sort(np.asarray(instance.candidate_centers, dtype=np.intp))
    k = min(instance.k, cand.size)
    n = instance.n
    if mode == "auto":
        mode = "A" if k ** n <= MODE_A_LIMIT else "classes"

    best = None
    if mode == "A":
        total = k ** n
        if total > MODE_A_LIMIT:
            raise InstanceError(f"mode A would enumerate {total} assignments")
        fair_pos = []
        for lo in range(0, total, _CHUNK):
            pos = _positions(n, k, lo, min(total, lo + _CHUNK))
            fair_pos.append(pos[_fair_rows(pos, instance.membership, k, instance.t)])
        pf = np.concatenate(fair_pos).astype(np.intp)
        if pf.shape[0] == 0:
            raise InfeasibleInstance("no fair assignment for any center set")
        dist = instance.metric.block(np.arange(n), cand)
        rows = np.arange(n)[None, :]
        for sub in itertools.combinations(range(cand.size), k):
            sub = np.array(sub, dtype=np.intp)
            cost = dist[rows, sub[pf]].sum(axis=1)
            r = int(np.argmin(cost))
            tied = np.flatnonzero(cost <= cost[r] + 1e-9 * max(1.0, abs(cost[r])))
            r = int(tied[0])
            cand_sol = (float(cost[r]), tuple(int(c) for c in cand[sub[pf[r]]]), tuple(int(c) for c in cand[sub]))
            if _better(cand_sol[:2], None if best is None else best[:2]):
                best = cand_sol
    elif mode == "classes":
        loc = _location_classes(instance)
        cls = _classes(instance)
        reps = {}
        for p in cand:
            reps.setdefault(int(loc[p]), []).append(int(p))
        # center multisets by location; co-located centers use distinct points
        locs = sorted(reps)
        for combo in itertools.combinations_with_replacement(locs, k):
            need = {}
            for l in combo:
                need[l] = need.get(l, 0) + 1
            if any(need[l] > len(reps[l]) for l in need):
                continue
            centers = np.array(sorted(p for l in need for p in reps[l][:need[l]]), dtype=np.intp)
            got = _mode_classes(instance, centers, cls)
            if got is None:
                continue
            cand_sol = (got[0], got[1], tuple(int(c) for c in centers))
            if _better(cand_sol[:2], None if best is None else best[:2]):
                best = cand_sol
    else:
        for sub in itertools.combinations(cand, k):
            try:
                sol = exact_fair_assignment(instance, sub, mode=mode)
            except InfeasibleInstance:
                continue
            cand_sol = (sol.cost, tuple(int(c) for c in sol.assignment), sol.centers)
            if _better(cand_sol[:2], None if best is None else best[:2]):
                best = cand_sol
    if best is None:
        raise InfeasibleInstance("no fair clustering exists")
    cost, assign, centers = best
    return Solution(tuple(centers), np.array(assign, dtype=np.intp), cost)
