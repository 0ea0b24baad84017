"""Turn a nearly-fair rounded assignment into an exactly fair one.

Clients in excess of ``t * floor(l_i)`` are unassigned into ``S``; the loop
then reinserts them, either directly (first case) or by raising the lower
bound of one designated center ``i*`` and pulling one client of every group
sitting at that bound over to ``i*`` (second case).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .instance import Instance
from .transport import IntegralAssignment


class RepairError(RuntimeError):
    pass


@dataclass
class RepairStats:
    s_initial: int = 0
    gamma: int = 0
    moved_second_case: int = 0
    taken_from_s: int = 0
    first_case: int = 0
    iterations: int = 0
    changed: int = 0
    i_star: int = -1
    lprime_istar_initial: int = 0
    floor_ell_istar: int = 0
    init_diverged: bool = False
    mark_violations: int = 0

    def as_dict(self):
        return asdict(self)


@dataclass
class RepairState:
    instance: Instance
    t: int
    centers: np.ndarray
    assignment: np.ndarray  # (n,), -1 outside the component or unassigned
    sigma_int: np.ndarray
    counts: np.ndarray
    lprime: np.ndarray
    floor_ell: np.ndarray
    S: list
    i_star: int  # position in ``centers``
    stats: RepairStats
    marks: set = field(default_factory=set)
    trace: list = field(default_factory=list)

    def check_invariant(self) -> None:
        lo = self.lprime[:, None]
        if np.any(self.counts < lo) or np.any(self.counts > self.t * lo):
            bad = np.argwhere((self.counts < lo) | (self.counts > self.t * lo))[0]
            r, a = int(bad[0]), int(bad[1])
            raise RepairError(
                f"invariant broken at center {int(self.centers[r])}, group {a}: "
                f"count {int(self.counts[r, a])} not in [{int(self.lprime[r])}, {self.t * int(self.lprime[r])}]"
            )


def _dist(instance, p, c):
    return instance.metric(int(p), int(c))


def build_unassigned(instance: Instance, sigma_int: IntegralAssignment, t: int,
                     ell_map: Optional[dict] = None) -> RepairState:
    centers = np.asarray(sigma_int.centers, dtype=np.intp)
    if ell_map is not None:
        floor_ell = np.array([int(np.floor(ell_map[int(c)])) for c in centers], dtype=np.int64)
    else:
        floor_ell = np.asarray(sigma_int.lower, dtype=np.int64)
    lab = instance.labels
    assignment = sigma_int.assignment.copy()
    counts = sigma_int.counts.copy()
    S = []
    for r, c in enumerate(centers):
        for a in range(instance.n_groups):
            excess = int(counts[r, a] - t * floor_ell[r])
            if excess <= 0:
                continue
            members = [int(p) for p in sigma_int.points if assignment[p] == c and lab[p] == a]
            members.sort(key=lambda p: (-_dist(instance, p, c), p))
            for p in members[:excess]:
                S.append(p)
                assignment[p] = -1
            counts[r, a] -= excess
    lprime = counts.min(axis=1).astype(np.int64)
    i_star = int(np.argmax(floor_ell)) if centers.size else -1
    k, ell = centers.size, instance.n_groups
    if len(S) > k * ell * t:
        raise RepairError(f"|S|={len(S)} exceeds k*ell*t={k * ell * t}")
    stats = RepairStats(
        s_initial=len(S), i_star=int(centers[i_star]) if centers.size else -1,
        lprime_istar_initial=int(lprime[i_star]) if centers.size else 0,
        floor_ell_istar=int(floor_ell[i_star]) if centers.size else 0,
    )
    stats.init_diverged = stats.lprime_istar_initial != stats.floor_ell_istar
    state = RepairState(instance, t, centers, assignment, sigma_int.assignment.copy(), counts,
                        lprime, floor_ell, S, i_star, stats)
    state.check_invariant()
    return state


def _first_case(state: RepairState):
    inst = state.instance
    cap = state.t * state.lprime
    for idx, j in enumerate(state.S):
        a = inst.labels[j]
        ok = np.flatnonzero(state.counts[:, a] < cap)
        if ok.size:
            d = [(_dist(inst, j, state.centers[r]), int(state.centers[r]), r) for r in ok]
            return idx, min(d)[2]
    return None


def _surplus_client(state: RepairState, b: int):
    """Best (center position, client) donating one group-``b`` client to ``i*``."""
    inst = state.instance
    star = state.centers[state.i_star]
    best = None
    for r in np.flatnonzero(state.counts[:, b] > state.lprime):
        if r == state.i_star:
            continue
        c = state.centers[r]
        members = np.flatnonzero((state.assignment == c) & (inst.labels == b))
        far = max(members, key=lambda p: (_dist(inst, p, c), -p))
        key = (_dist(inst, far, star), int(c))
        if best is None or key < best[0]:
            best = (key, int(r), int(far))
    return None if best is None else best[1:]


def repair(state: RepairState, t: Optional[int] = None, trace: bool = False):
    """Run the reinsertion loop to completion; returns ``(assignment, stats)``.

    ``assignment`` covers the component's points (entries -1 elsewhere).
    """
    t = state.t if t is None else t
    if t < 2:
        raise RepairError("the repair loop requires t >= 2")
    inst = state.instance
    lab = inst.labels
    stats = state.stats
    star = state.i_star
    while state.S:
        stats.iterations += 1
        hit = _first_case(state)
        event = {}
        if hit is not None:
            idx, r = hit
            j = state.S.pop(idx)
            state.assignment[j] = state.centers[r]
            state.counts[r, lab[j]] += 1
            stats.first_case += 1
            event = {"case": 1, "j": int(j), "center": int(state.centers[r]), "moves": []}
        else:
            j = state.S.pop(0)
            a = lab[j]
            if state.counts[star, a] != t * state.lprime[star]:
                raise RepairError(
                    f"second case with count {int(state.counts[star, a])} != t*l' at i*")
            star_id = state.centers[star]
            at_star = np.flatnonzero((state.assignment == star_id) & (lab == a))
            if any(int(p) in state.marks for p in at_star):
                stats.mark_violations += 1
            A = [b for b in range(inst.n_groups) if state.counts[star, b] == state.lprime[star]]
            moves = []
            for b in A:
                donor = _surplus_client(state, b)
                if donor is not None:
                    r, jb = donor
                    state.assignment[jb] = star_id
                    state.counts[r, b] -= 1
                    state.counts[star, b] += 1
                    state.marks.add(jb)
                    stats.moved_second_case += 1
                    moves.append((jb, int(state.centers[r]), int(star_id)))
                    continue
                # no center holds a surplus client of b: only possible while
                # l'_{i*} == 0. For b == a, j itself supplies the group-b
                # client; otherwise S must still contain one.
                if b == a:
                    continue
                pool = [p for p in state.S if lab[p] == b]
                if not pool:
                    raise RepairError(f"no donor for group {b} at i*={int(star_id)}")
                jb = min(pool, key=lambda p: (_dist(inst, p, star_id), p))
                state.S.remove(jb)
                state.assignment[jb] = star_id
                state.counts[star, b] += 1
                stats.taken_from_s += 1
                moves.append((int(jb), -1, int(star_id)))
            state.assignment[j] = star_id
            state.counts[star, a] += 1
            state.lprime[star] += 1
            stats.gamma += 1
            event = {"case": 2, "j": int(j), "center": int(star_id), "A": [int(b) for b in A],
                     "moves": moves}
        state.check_invariant()
        if trace:
            event["iter"] = stats.iterations
            event["lprime"] = {int(c): int(v) for c, v in zip(state.centers, state.lprime)}
            state.trace.append(event)
    changed = (state.assignment != state.sigma_int) & (state.sigma_int >= 0)
    stats.changed = int(changed.sum())
    return state.assignment.copy(), stats


def write_trace(trace, fh) -> None:
    for event in trace:
        fh.write(json.dumps(event, sort_keys=True) + "\n")
