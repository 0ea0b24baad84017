"""Vanilla k-median: nearest-center assignment and single-swap local search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .instance import Instance, InstanceError

MIN_REL_GAIN = 1e-6


@dataclass(frozen=True)
class BaselineSolution:
    centers: tuple
    assignment: np.ndarray
    cost: float
    swaps: int = 0
    local_optimal: bool = True


def nearest_assignment(instance: Instance, centers) -> np.ndarray:
    """Map every point to its nearest center; ties go to the smallest center id."""
    centers = np.sort(np.asarray(centers, dtype=np.intp))
    if centers.size == 0:
        raise InstanceError("need at least one center")
    d = instance.metric.block(np.arange(instance.n), centers)
    return centers[np.argmin(d, axis=1)]


def farthest_point_seeding(dist_pc: np.ndarray, cand: np.ndarray, k: int, start: int) -> list[int]:
    """Greedy farthest-first seeding over candidate columns.

    ``dist_pc`` is (n, m) point-to-candidate; ``cand`` maps columns to point
    ids; returns column indices.
    """
    chosen = [start]
    closest = dist_pc[:, start].copy()
    while len(chosen) < k:
        score = closest[cand].copy()
        score[chosen] = -1.0
        nxt = int(np.argmax(score))
        chosen.append(nxt)
        np.minimum(closest, dist_pc[:, nxt], out=closest)
    return chosen


def local_search_kmedian(instance: Instance, k: int | None = None, seed: int = 0,
                         max_iters: int | None = None) -> BaselineSolution:
    """Single-swap local search.

    Each round evaluates every (open, closed) swap and applies the best one
    if it lowers the cost by a relative margin above ``MIN_REL_GAIN``. Stops at
    a swap-local optimum or after ``max_iters`` accepted swaps.
    """
    k = instance.k if k is None else k
    cand = np.asarray(instance.candidate_centers, dtype=np.intp)
    if k > cand.size:
        raise InstanceError(f"k={k} exceeds the {cand.size} candidate centers")
    n = instance.n
    if max_iters is None:
        max_iters = 10 * k * n
    dist = np.ascontiguousarray(instance.metric.block(np.arange(n), cand))
    rng = np.random.default_rng(seed)
    open_cols = farthest_point_seeding(dist, cand, k, int(rng.integers(cand.size)))
    open_cols = np.array(open_cols, dtype=np.intp)

    cost = float(dist[:, open_cols].min(axis=1).sum())
    swaps = 0
    local_opt = False
    while swaps < max_iters:
        table = kernels.swap_costs(dist, open_cols)
        table[:, open_cols] = np.inf
        o, c = np.unravel_index(int(np.argmin(table)), table.shape)
        new = float(table[o, c])
        if not new < cost - MIN_REL_GAIN * max(cost, 1e-300):
            local_opt = True
            break
        open_cols[o] = c
        cost = float(dist[:, open_cols].min(axis=1).sum())
        swaps += 1

    centers = np.sort(cand[open_cols])
    assignment = nearest_assignment(instance, centers)
    cost = float(instance.metric.block(np.arange(n), centers).min(axis=1).sum())
    return BaselineSolution(tuple(int(c) for c in centers), assignment, cost, swaps, local_opt)
