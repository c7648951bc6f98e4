"""Dense two-phase primal simplex for the small linear programs that arise
from barycentric weight optimization."""

from __future__ import annotations

import numpy as np


class LPResult:
    """Solver outcome: status is one of optimal | infeasible | unbounded."""

    def __init__(self, status: str, x, value: float):
        self.status = status
        self.x = x
        self.value = value

    def __repr__(self) -> str:
        return f"LPResult({self.status}, value={self.value!r})"


def _pivot(T, basis, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    T[:, j] = 0.0
    T[r, j] = 1.0
    basis[r] = j


def _simplex(T, basis, m, tol=1e-9, limit=200000):
    """Run primal simplex on tableau T in place; True if optimal, False if
    unbounded.  Dantzig pricing with a largest-pivot tie-break, falling back
    to Bland's rule after a while so cycling cannot occur."""
    ncols = T.shape[1] - 1
    bland_after = 20 * (m + ncols) + 200
    it = 0
    while True:
        red = T[m, :ncols]
        if it < bland_after:
            j = int(np.argmin(red))
            if red[j] >= -tol:
                return True
        else:
            cand = np.nonzero(red < -tol)[0]
            if cand.size == 0:
                return True
            j = int(cand[0])
        col = T[:m, j]
        pos = col > 1e-11
        if not pos.any():
            return False
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        rmin = float(ratios.min())
        ties = np.nonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))[0]
        if it < bland_after:
            r = int(ties[np.argmax(col[ties])])
        else:
            r = int(ties[np.argmin(basis[ties])])
        _pivot(T, basis, r, j)
        it += 1
        if it > limit:
            raise ArithmeticError("simplex iteration limit exceeded")


def solve_lp(c, a_eq=None, b_eq=None, a_ub=None, b_ub=None,
             maximize: bool = False, feas_tol: float = 1e-9) -> LPResult:
    """Optimize c @ x over x >= 0 subject to a_eq x = b_eq and a_ub x <= b_ub."""
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.size
    rows, rhs, senses = [], [], []
    if a_ub is not None and len(a_ub):
        for row, b in zip(np.atleast_2d(np.asarray(a_ub, float)),
                          np.asarray(b_ub, float).reshape(-1)):
            rows.append(row)
            rhs.append(float(b))
            senses.append("le")
    if a_eq is not None and len(a_eq):
        for row, b in zip(np.atleast_2d(np.asarray(a_eq, float)),
                          np.asarray(b_eq, float).reshape(-1)):
            rows.append(row)
            rhs.append(float(b))
            senses.append("eq")
    m = len(rows)
    if m == 0:
        # nothing binds x except x >= 0
        x = np.zeros(n)
        if (maximize and (c > 0).any()) or (not maximize and (c < 0).any()):
            return LPResult("unbounded", x, np.inf if maximize else -np.inf)
        return LPResult("optimal", x, 0.0)

    n_slack = senses.count("le")
    ncols = n + n_slack
    A = np.zeros((m, ncols))
    b = np.array(rhs)
    si = n
    slack_col = np.full(m, -1, dtype=int)
    for i, (row, s) in enumerate(zip(rows, senses)):
        A[i, :n] = row
        if s == "le":
            A[i, si] = 1.0
            slack_col[i] = si
            si += 1
    flip = b < 0.0
    A[flip] *= -1.0
    b[flip] *= -1.0

    need_art = [(slack_col[i] < 0) or flip[i] for i in range(m)]
    n_art = int(sum(need_art))
    T = np.zeros((m + 1, ncols + n_art + 1))
    T[:m, :ncols] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=int)
    ai = ncols
    for i in range(m):
        if need_art[i]:
            T[i, ai] = 1.0
            basis[i] = ai
            ai += 1
        else:
            basis[i] = slack_col[i]

    if n_art:
        T[m, ncols:ncols + n_art] = 1.0
        for i in range(m):
            if need_art[i]:
                T[m] -= T[i]
        if not _simplex(T, basis, m):
            return LPResult("infeasible", np.zeros(n), np.nan)
        if -T[m, -1] > feas_tol:
            return LPResult("infeasible", np.zeros(n), np.nan)
        # push zero-level artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= ncols:
                row = np.abs(T[i, :ncols])
                j = int(np.argmax(row))
                if row[j] > 1e-9:
                    _pivot(T, basis, i, j)
        live = {int(v) for v in basis if v >= ncols}
        for j in range(ncols, ncols + n_art):
            if j not in live:
                T[:m, j] = 0.0

    c_eff = -c if maximize else c
    T[m, :] = 0.0
    T[m, :n] = c_eff
    for i in range(m):
        bj = basis[i]
        if bj < n and c_eff[bj] != 0.0:
            T[m] -= c_eff[bj] * T[i]
    if n_art:
        for j in range(ncols, ncols + n_art):
            if j not in live:
                T[m, j] = 1.0

    if not _simplex(T, basis, m):
        return LPResult("unbounded", np.zeros(n), -np.inf if not maximize else np.inf)
    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, -1]
    x = np.clip(x, 0.0, None)
    return LPResult("optimal", x, float(c @ x))
