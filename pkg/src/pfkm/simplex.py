"""Dense two-phase tableau simplex.

Solves ``min c@x  s.t.  A_ub@x <= b_ub, A_eq@x == b_eq, x >= 0`` and returns a
basic optimal solution. Dantzig pricing until ``2 * (rows + cols)`` pivots,
then Bland's rule to rule out cycling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
INFEASIBLE_TOL = 1e-7


class SimplexIterationLimit(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray
    objective: float
    iterations: int


class _Tableau:
    def __init__(self, T, basis, bland_after, max_iter):
        self.T = T
        self.basis = basis
        self.pivots = 0
        self.bland_after = bland_after
        self.max_iter = max_iter

    def pivot(self, r, c):
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        nz = np.flatnonzero(np.abs(col) > 0)
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        T[:, c] = 0.0
        T[r, c] = 1.0
        self.basis[r] = c
        self.pivots += 1
        if self.pivots > self.max_iter:
            raise SimplexIterationLimit(f"more than {self.max_iter} pivots")

    def run(self, allowed):
        """Minimize the objective row over columns where ``allowed`` is True."""
        T = self.T
        m = T.shape[0] - 1
        while True:
            red = T[-1, :-1]
            cand = np.flatnonzero(allowed & (red < -COST_TOL))
            if cand.size == 0:
                return "optimal"
            if self.pivots >= self.bland_after:
                c = int(cand[0])
            else:
                c = int(cand[np.argmin(red[cand])])
            colv = T[:m, c]
            pos = np.flatnonzero(colv > PIVOT_TOL)
            if pos.size == 0:
                return "unbounded"
            ratios = T[pos, -1] / colv[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = int(ties[np.argmin(self.basis[ties])])
            self.pivot(r, c)


def linprog_simplex(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter=None) -> LPResult:
    c = np.asarray(c, dtype=float)
    nv = c.size
    A_ub = np.zeros((0, nv)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, nv)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    A_eq = np.zeros((0, nv)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, nv)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # [x | slacks | artificials | rhs]
    A = np.zeros((m, nv + m_ub))
    A[:m_ub, :nv] = A_ub
    A[:m_ub, nv:] = np.eye(m_ub)
    A[m_ub:, :nv] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1
    b = np.where(neg, -b, b)

    needs_art = np.ones(m, dtype=bool)
    basis = np.full(m, -1, dtype=np.intp)
    for r in range(m_ub):
        if not neg[r]:
            basis[r] = nv + r
            needs_art[r] = False
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    ncol = nv + m_ub + n_art
    T = np.zeros((m + 1, ncol + 1))
    T[:m, : nv + m_ub] = A
    T[:m, -1] = b
    for q, r in enumerate(art_rows):
        T[r, nv + m_ub + q] = 1.0
        basis[r] = nv + m_ub + q

    if max_iter is None:
        max_iter = 50 * (m + ncol) + 1000
    tab = _Tableau(T, basis, bland_after=2 * (m + ncol), max_iter=max_iter)
    is_art = np.zeros(ncol, dtype=bool)
    is_art[nv + m_ub:] = True

    if n_art:
        T[-1, :] = 0.0
        T[-1, nv + m_ub: ncol] = 1.0
        T[-1] -= T[art_rows].sum(axis=0)
        tab.run(np.ones(ncol, dtype=bool))
        if -T[-1, -1] > INFEASIBLE_TOL:
            return LPResult("infeasible", np.full(nv, np.nan), np.nan, tab.pivots)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for r in range(m):
            if is_art[tab.basis[r]]:
                row = T[r, :ncol].copy()
                row[is_art] = 0.0
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if nz.size:
                    tab.pivot(r, int(nz[0]))
                else:
                    keep[r] = False
        if not keep.all():
            tab.T = T = T[keep]
            tab.basis = tab.basis[keep[:-1]]

    T[-1, :] = 0.0
    T[-1, :nv] = c
    for r, bcol in enumerate(tab.basis):
        if T[-1, bcol] != 0.0:
            T[-1] -= T[-1, bcol] * T[r]
    status = tab.run(~is_art)
    x = np.zeros(ncol)
    x[tab.basis] = tab.T[:-1, -1]
    x = x[:nv]
    if status == "unbounded":
        return LPResult("unbounded", x, -np.inf, tab.pivots)
    x[np.abs(x) < 1e-13] = 0.0
    return LPResult("optimal", x, float(c @ x), tab.pivots)
