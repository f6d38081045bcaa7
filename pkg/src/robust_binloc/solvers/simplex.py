"""Dense two-phase tableau simplex for desk-scale LPs.

All LP routines here share one calling convention::

    status, x, objective = solve_lp(c, A, senses, b, lower, upper)

minimizing c @ x subject to A x (<=, =, >=) b row-wise (senses -1 / 0 / +1)
and lower <= x <= upper.  status is "optimal", "infeasible" or "unbounded".
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7


class SimplexError(RuntimeError):
    """Numerical breakdown (e.g. iteration cap reached)."""


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    nz = np.nonzero(col)[0]
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])


def _run(T: np.ndarray, basis: np.ndarray, allowed: np.ndarray, max_iter: int) -> str:
    """Minimize the objective held in the last row of T. Returns 'optimal' or 'unbounded'."""
    m = T.shape[0] - 1
    bland_after = 10 * (m + T.shape[1])
    it = 0
    while True:
        rc = T[-1, :-1]
        cand = np.nonzero((rc < -PIVOT_TOL) & allowed)[0]
        if cand.size == 0:
            return "optimal"
        bland = it >= bland_after
        if bland:
            c = int(cand[0])
        else:
            c = int(cand[np.argmin(rc[cand])])
        col = T[:m, c]
        rows = np.nonzero(col > PIVOT_TOL)[0]
        if rows.size == 0:
            return "unbounded"
        ratios = np.maximum(T[rows, -1], 0.0) / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-11 * max(1.0, best)]
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            # largest pivot among ties keeps the tableau well conditioned
            r = int(ties[np.argmax(col[ties])])
        _pivot(T, r, c)
        basis[r] = c
        it += 1
        if it > max_iter:
            raise SimplexError("simplex iteration limit reached")


def solve_lp(c, A, senses, b, lower, upper, max_iter: int | None = None):
    c = np.asarray(c, dtype=float)
    n = c.size
    A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float).reshape(-1, n)
    senses = np.asarray(senses, dtype=int)
    b = np.asarray(b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper + FEAS_TOL):
        return "infeasible", None, np.inf

    # substitute x = offset + sign * x'  (plus a negative part for free variables)
    free = np.isinf(lower) & np.isinf(upper)
    flip = np.isinf(lower) & ~np.isinf(upper)
    sign = np.where(flip, -1.0, 1.0)
    offset = np.where(np.isinf(lower), np.where(flip, upper, 0.0), lower)
    width = np.where(flip | free, np.inf, upper - lower)

    cols = A * sign
    cost = c * sign
    b_adj = b - A @ offset
    if free.any():
        cols = np.hstack([cols, -A[:, free]])
        cost = np.concatenate([cost, -c[free]])
    n_struct = cols.shape[1]

    bounded = np.nonzero(np.isfinite(width))[0]
    bounded = bounded[width[bounded] >= 0]
    if bounded.size:
        U = np.zeros((bounded.size, n_struct))
        U[np.arange(bounded.size), bounded] = 1.0
        cols = np.vstack([cols, U])
        b_adj = np.concatenate([b_adj, width[bounded]])
        senses = np.concatenate([senses, -np.ones(bounded.size, dtype=int)])

    neg = b_adj < 0
    cols[neg] *= -1
    b_adj = np.where(neg, -b_adj, b_adj)
    senses = np.where(neg, -senses, senses)
    m = cols.shape[0]

    n_slack = int(np.count_nonzero(senses != 0))
    need_art = senses >= 0  # '=' and '>=' rows get artificials
    n_art = int(np.count_nonzero(need_art))
    width_total = n_struct + n_slack + n_art
    T = np.zeros((m + 1, width_total + 1))
    T[:m, :n_struct] = cols
    T[:m, -1] = b_adj
    basis = np.empty(m, dtype=np.int64)
    s = n_struct
    a = n_struct + n_slack
    for r in range(m):
        if senses[r] == -1:
            T[r, s] = 1.0
            basis[r] = s
            s += 1
        else:
            if senses[r] == 1:
                T[r, s] = -1.0
                s += 1
            T[r, a] = 1.0
            basis[r] = a
            a += 1
    art = np.zeros(width_total, dtype=bool)
    art[n_struct + n_slack:] = True
    max_iter = max_iter or 50 * (m + width_total) + 1000

    if n_art:
        # phase 1: minimize the sum of artificials
        T[-1, :] = 0.0
        art_rows = np.nonzero(art[basis])[0]
        T[-1, :] = -T[art_rows].sum(axis=0)
        T[-1, np.nonzero(art)[0]] = 0.0
        _run(T, basis, np.ones(width_total, dtype=bool), max_iter)
        if -T[-1, -1] > FEAS_TOL * max(1.0, np.abs(b_adj).max(initial=0.0)):
            return "infeasible", None, np.inf
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for r in np.nonzero(art[basis])[0]:
            row = T[r, :width_total]
            cand = np.nonzero((np.abs(row) > PIVOT_TOL) & ~art)[0]
            if cand.size:
                c0 = int(cand[0])
                _pivot(T, r, c0)
                basis[r] = c0
            else:
                keep[r] = False
        if not keep.all():
            T = T[keep]
            basis = basis[keep[:-1]]
        T = np.delete(T, np.nonzero(art)[0], axis=1)
        width_total = n_struct + n_slack

    # phase 2
    full_cost = np.zeros(width_total)
    full_cost[:n_struct] = cost
    T[-1, :-1] = full_cost
    T[-1, -1] = 0.0
    for r, j in enumerate(basis):
        if full_cost[j] != 0:
            T[-1] -= full_cost[j] * T[r]
    status = _run(T, basis, np.ones(width_total, dtype=bool), max_iter)
    if status == "unbounded":
        return "unbounded", None, -np.inf

    xs = np.zeros(width_total)
    xs[basis] = T[:-1, -1]
    xp = xs[:n]
    x = offset + sign * xp
    if free.any():
        x[free] -= xs[n:n_struct]
    return "optimal", x, float(c @ x)


def solve_lp_highs(c, A, senses, b, lower, upper, max_iter: int | None = None):
    """Same contract as solve_lp, backed by scipy's HiGHS."""
    from scipy.optimize import linprog

    senses = np.asarray(senses, dtype=int)
    b = np.asarray(b, dtype=float)
    A = sp.csr_matrix(A)
    le, ge, eq = senses == -1, senses == 1, senses == 0
    A_ub = sp.vstack([A[le], -A[ge]], format="csr") if (le.any() or ge.any()) else None
    b_ub = np.concatenate([b[le], -b[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = b[eq] if eq.any() else None
    bounds = np.column_stack([np.where(np.isinf(lower), None, lower).astype(object),
                              np.where(np.isinf(upper), None, upper).astype(object)])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 0:
        return "optimal", np.asarray(res.x), float(res.fun)
    if res.status == 2:
        return "infeasible", None, np.inf
    if res.status == 3:
        return "unbounded", None, -np.inf
    raise SimplexError(f"HiGHS failed: {res.message}")


LP_ENGINES = {"dense": solve_lp, "highs": solve_lp_highs}
