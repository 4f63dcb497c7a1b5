"""Dense two-phase simplex with Bland's anti-cycling rule.

Small self-contained LP routine used for the continuous scheduling
subproblems of the built-in exact solver.  Problems here have at most a few
hundred variables, so a dense tableau is fast enough and keeps the solver
dependency-free.

    minimize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                lo <= x <= hi   (lo finite, hi may be None)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_TOL = 1e-9


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    objective: float | None


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
             max_iter: int = 100_000) -> LpResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if bounds is None:
        bounds = [(0.0, None)] * n
    lo = np.array([b[0] if b[0] is not None else 0.0 for b in bounds])
    hi = [b[1] for b in bounds]

    # shift to x' = x - lo >= 0; finite upper bounds become <= rows
    b_ub = b_ub - A_ub @ lo
    b_eq = b_eq - A_eq @ lo
    extra_rows = []
    extra_rhs = []
    for j, h in enumerate(hi):
        if h is not None and np.isfinite(h):
            row = np.zeros(n)
            row[j] = 1.0
            extra_rows.append(row)
            extra_rhs.append(h - lo[j])
    if extra_rows:
        A_ub = np.vstack([A_ub, np.array(extra_rows)])
        b_ub = np.concatenate([b_ub, np.array(extra_rhs)])

    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # standard form: A x' + slack = b, with b >= 0 after sign flips
    A = np.zeros((m, n + m_ub))
    A[:m_ub, :n] = A_ub
    A[:m_ub, n:n + m_ub] = np.eye(m_ub)
    A[m_ub:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] = -b[neg]

    n_total = n + m_ub
    # artificial variables for all rows (simple and robust); slack columns that
    # survived the sign flip could seed the basis, but phase 1 drives the
    # artificials out regardless.
    tableau = np.zeros((m + 1, n_total + m + 1))
    tableau[:m, :n_total] = A
    tableau[:m, n_total:n_total + m] = np.eye(m)
    tableau[:m, -1] = b
    basis = list(range(n_total, n_total + m))

    # phase 1 objective: minimize sum of artificials
    tableau[m, n_total:n_total + m] = 1.0
    for r in range(m):
        tableau[m] -= tableau[r]

    status = _iterate(tableau, basis, n_total + m, max_iter)
    if status == UNBOUNDED or tableau[m, -1] < -1e-7:
        return LpResult(INFEASIBLE, None, None)

    # drive remaining artificials out of the basis
    for r in range(m):
        if basis[r] >= n_total:
            piv = None
            for j in range(n_total):
                if abs(tableau[r, j]) > _TOL:
                    piv = j
                    break
            if piv is None:
                continue  # redundant row
            _pivot(tableau, basis, r, piv)

    # phase 2
    tableau[m, :] = 0.0
    tableau[m, :n] = c
    for r in range(m):
        if basis[r] < n_total:
            tableau[m] -= c_at(c, basis[r], n) * tableau[r]
    tableau[:, n_total:n_total + m] = 0.0  # retire artificial columns

    status = _iterate(tableau, basis, n_total, max_iter)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, None)

    x = np.zeros(n_total)
    for r in range(m):
        if basis[r] < n_total:
            x[basis[r]] = tableau[r, -1]
    xs = x[:n] + lo
    return LpResult(OPTIMAL, xs, float(c @ xs))


def c_at(c: np.ndarray, j: int, n: int) -> float:
    return c[j] if j < n else 0.0


def _iterate(tableau: np.ndarray, basis: list, n_cols: int, max_iter: int) -> str:
    m = tableau.shape[0] - 1
    for _ in range(max_iter):
        # Bland: entering = lowest-index column with negative reduced cost
        enter = -1
        for j in range(n_cols):
            if tableau[m, j] < -_TOL:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        # leaving: min ratio, ties by lowest basis variable index (Bland)
        best_ratio = None
        leave = -1
        for r in range(m):
            a = tableau[r, enter]
            if a > _TOL:
                ratio = tableau[r, -1] / a
                if (best_ratio is None or ratio < best_ratio - _TOL
                        or (abs(ratio - best_ratio) <= _TOL and basis[r] < basis[leave])):
                    best_ratio = ratio
                    leave = r
        if leave < 0:
            return UNBOUNDED
        _pivot(tableau, basis, leave, enter)
    raise RuntimeError("simplex iteration limit exceeded")


def _pivot(tableau: np.ndarray, basis: list, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    for r in range(tableau.shape[0]):
        if r != row and abs(tableau[r, col]) > 0:
            tableau[r] -= tableau[r, col] * tableau[row]
    basis[row] = col
