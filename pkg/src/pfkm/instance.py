"""Instances, solutions and fairness bookkeeping for pairwise fair k-median."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

DENSE_LIMIT = 4096


class InstanceError(ValueError):
    pass


class InfeasibleInstance(InstanceError):
    """No fair clustering exists for the requested balance parameter."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class Metric:
    """Symmetric distance access over ``n`` points.

    Dense matrix for small ``n``; above ``DENSE_LIMIT`` distances are computed
    from coordinates on demand.
    """

    def __init__(self, matrix=None, coords=None):
        if matrix is None and coords is None:
            raise InstanceError("need a distance matrix or coordinates")
        self.coords = None if coords is None else _frozen(np.asarray(coords, dtype=float))
        if matrix is not None:
            m = np.asarray(matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InstanceError("distance matrix must be square")
            self._dense = _frozen(m)
            self.n = m.shape[0]
        else:
            if self.coords.ndim == 1:
                self.coords = _frozen(self.coords[:, None])
            self.n = self.coords.shape[0]
            self._dense = None
            if self.n <= DENSE_LIMIT:
                self._dense = _frozen(self._euclid(self.coords, self.coords))

    @staticmethod
    def _euclid(a, b):
        # direct differences: duplicates get exactly 0 and the matrix is symmetric
        return cdist(a, b)

    @property
    def is_dense(self) -> bool:
        return self._dense is not None

    @property
    def matrix(self) -> np.ndarray:
        if self._dense is None:
            raise InstanceError(f"metric with n={self.n} is not materialized")
        return self._dense

    def block(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        if self._dense is not None:
            return self._dense[np.ix_(rows, cols)]
        return self._euclid(self.coords[rows], self.coords[cols])

    def __call__(self, i: int, j: int) -> float:
        if self._dense is not None:
            return float(self._dense[i, j])
        return float(np.linalg.norm(self.coords[i] - self.coords[j]))

    def diameter(self) -> float:
        if self._dense is not None:
            return float(self._dense.max()) if self.n else 0.0
        return float(max(self.block([i], np.arange(self.n)).max() for i in range(self.n)))

    def check(self, samples: int = 2000, rtol: float = 1e-9, seed: int = 0) -> None:
        """Validate zero diagonal, symmetry and sampled triangle inequalities."""
        n = self.n
        if n == 0:
            return
        rng = np.random.default_rng(seed)
        if self._dense is not None:
            m = self._dense
            if np.any(m < 0):
                raise InstanceError("negative distance")
            if np.any(np.diag(m) != 0):
                raise InstanceError("nonzero self-distance")
            if not np.allclose(m, m.T, rtol=rtol, atol=0):
                raise InstanceError("distance matrix not symmetric")
        if n ** 3 <= samples:
            i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
            i, j, k = i.ravel(), j.ravel(), k.ravel()
        else:
            i, j, k = rng.integers(0, n, size=(3, samples))
        if self._dense is not None:
            dij, dik, dkj = self._dense[i, j], self._dense[i, k], self._dense[k, j]
        else:
            dij = np.array([self(a, b) for a, b in zip(i, j)])
            dik = np.array([self(a, b) for a, b in zip(i, k)])
            dkj = np.array([self(a, b) for a, b in zip(k, j)])
        scale = np.maximum(dij, 1.0)
        bad = dij > dik + dkj + rtol * scale
        if np.any(bad):
            w = int(np.argmax(bad))
            raise InstanceError(
                f"triangle inequality fails on ({i[w]}, {j[w]}, {k[w]}): "
                f"{dij[w]} > {dik[w]} + {dkj[w]}"
            )


@dataclass(frozen=True)
class Instance:
    """A (pairwise fair) k-median input.

    ``membership`` is an ``(n, ell)`` boolean matrix. In the disjoint variant
    every row has exactly one True entry and ``labels`` holds the group index
    per point; in the overlapping variant ``labels`` is None.
    """

    metric: Metric
    membership: np.ndarray
    k: int
    t: int
    candidate_centers: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    point_ids: Optional[tuple] = None
    group_names: Optional[tuple] = None

    def __post_init__(self):
        mem = np.asarray(self.membership, dtype=bool)
        if mem.ndim != 2 or mem.shape[0] != self.metric.n:
            raise InstanceError("membership must be (n, ell) matching the metric")
        object.__setattr__(self, "membership", _frozen(mem))
        if self.k < 1:
            raise InstanceError("k must be >= 1")
        if self.t < 1:
            raise InstanceError("t must be >= 1")
        if mem.shape[1] < 2:
            raise InstanceError("need at least two groups")
        per_point = mem.sum(1)
        disjoint = bool(np.all(per_point == 1))
        if disjoint:
            object.__setattr__(self, "labels", _frozen(np.argmax(mem, axis=1).astype(np.intp)))
        else:
            object.__setattr__(self, "labels", None)
        cc = self.candidate_centers
        cc = np.arange(self.n, dtype=np.intp) if cc is None else np.asarray(cc, dtype=np.intp)
        if cc.size and (cc.min() < 0 or cc.max() >= self.n):
            raise InstanceError("candidate center out of range")
        object.__setattr__(self, "candidate_centers", _frozen(cc))
        if self.point_ids is None:
            object.__setattr__(self, "point_ids", tuple(range(self.n)))
        if self.group_names is None:
            object.__setattr__(self, "group_names", tuple(str(a) for a in range(mem.shape[1])))

    @classmethod
    def from_labels(cls, labels, *, dist=None, coords=None, k: int, t: int, **kw) -> "Instance":
        labels = np.asarray(labels, dtype=np.intp)
        ell = int(labels.max()) + 1 if labels.size else 0
        mem = np.zeros((labels.size, ell), dtype=bool)
        mem[np.arange(labels.size), labels] = True
        return cls(Metric(dist, coords), mem, k=k, t=t, **kw)

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[int]], *, dist=None, coords=None,
                    n_groups: Optional[int] = None, k: int, t: int, **kw) -> "Instance":
        """Overlapping-group constructor: ``groups[p]`` lists the groups of point p."""
        ell = n_groups if n_groups is not None else 1 + max((max(g) for g in groups if g), default=1)
        mem = np.zeros((len(groups), ell), dtype=bool)
        for p, gs in enumerate(groups):
            mem[p, list(gs)] = True
        return cls(Metric(dist, coords), mem, k=k, t=t, **kw)

    @property
    def n(self) -> int:
        return self.metric.n

    @property
    def n_groups(self) -> int:
        return self.membership.shape[1]

    @property
    def disjoint(self) -> bool:
        return self.labels is not None

    def group_sizes(self) -> np.ndarray:
        return self.membership.sum(0).astype(np.int64)

    def with_t(self, t: int) -> "Instance":
        return Instance(self.metric, self.membership, self.k, t, self.candidate_centers,
                        point_ids=self.point_ids, group_names=self.group_names)

    def with_k(self, k: int) -> "Instance":
        return Instance(self.metric, self.membership, k, self.t, self.candidate_centers,
                        point_ids=self.point_ids, group_names=self.group_names)

    def take(self, idx) -> "Instance":
        """Sub-instance on the points ``idx`` (candidate centers restricted too)."""
        idx = np.asarray(idx, dtype=np.intp)
        m = self.metric
        if m.coords is not None:
            metric = Metric(coords=m.coords[idx])
        else:
            metric = Metric(m.block(idx, idx))
        pos = {int(p): r for r, p in enumerate(idx)}
        cc = np.array([pos[int(c)] for c in self.candidate_centers if int(c) in pos], dtype=np.intp)
        return Instance(metric, self.membership[idx], self.k, self.t, cc,
                        point_ids=tuple(self.point_ids[p] for p in idx),
                        group_names=self.group_names)

    def validate(self, samples: int = 2000) -> None:
        # group-less points are tolerated only in the overlapping variant
        # (isolated hypergraph vertices)
        self.metric.check(samples=samples)


@dataclass(frozen=True)
class Solution:
    centers: tuple
    assignment: np.ndarray
    cost: float

    def __post_init__(self):
        object.__setattr__(self, "assignment", _frozen(np.asarray(self.assignment, dtype=np.intp)))


@dataclass
class FeasibilityResult:
    ok: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.ok


def cluster_counts(instance: Instance, assignment, centers=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-(center, group) counts. Returns ``(centers, counts)``.

    Unassigned points (negative entries) are ignored.
    """
    assignment = np.asarray(assignment, dtype=np.intp)
    if centers is None:
        centers = np.unique(assignment[assignment >= 0])
    centers = np.asarray(centers, dtype=np.intp)
    pos = {int(c): r for r, c in enumerate(centers)}
    counts = np.zeros((len(centers), instance.n_groups), dtype=np.int64)
    for p, c in enumerate(assignment):
        if c < 0:
            continue
        counts[pos[int(c)]] += instance.membership[p]
    return centers, counts


def is_fair(counts, t) -> bool:
    """True iff ``counts[c, a] <= t * counts[c, b]`` for every row and group pair."""
    counts = np.atleast_2d(np.asarray(counts))
    if counts.size == 0:
        return True
    return bool(np.all(counts.max(axis=1) <= t * counts.min(axis=1)))


def fairness_violations(counts, t) -> list[tuple[int, int, int]]:
    counts = np.atleast_2d(np.asarray(counts))
    out = []
    for r, row in enumerate(counts):
        for a in range(row.size):
            for b in range(row.size):
                if row[a] > t * row[b]:
                    out.append((r, a, b))
    return out


def feasibility_precheck(instance: Instance) -> FeasibilityResult:
    if not instance.disjoint:
        raise InstanceError("feasibility precheck requires disjoint groups")
    sizes = instance.group_sizes()
    a, b = int(np.argmax(sizes)), int(np.argmin(sizes))
    if sizes[a] <= instance.t * sizes[b]:
        return FeasibilityResult(True)
    return FeasibilityResult(False, (a, b))


def min_feasible_t(instance_or_sizes) -> int:
    if isinstance(instance_or_sizes, Instance):
        sizes = instance_or_sizes.group_sizes()
    else:
        sizes = np.asarray(instance_or_sizes, dtype=np.int64)
    if sizes.size == 0 or sizes.min() < 1:
        raise InstanceError("every group needs at least one point")
    hi, lo = int(sizes.max()), int(sizes.min())
    return max(1, -(-hi // lo))


def solution_cost(instance: Instance, assignment) -> float:
    assignment = np.asarray(assignment, dtype=np.intp)
    if assignment.shape != (instance.n,):
        raise InstanceError("assignment must cover every point")
    if np.any(assignment < 0):
        raise InstanceError(f"point {int(np.argmax(assignment < 0))} is unassigned")
    if instance.metric.is_dense:
        return float(instance.metric.matrix[np.arange(instance.n), assignment].sum())
    return float(sum(instance.metric(p, int(c)) for p, c in enumerate(assignment)))


def make_solution(instance: Instance, assignment) -> Solution:
    assignment = np.asarray(assignment, dtype=np.intp)
    centers = tuple(int(c) for c in np.unique(assignment))
    return Solution(centers, assignment, solution_cost(instance, assignment))
