"""Dense bounded-variable primal simplex for small linear programs.

Solves ``min c.x  s.t.  A_ub x <= b_ub,  lb <= x <= ub`` with a revised
simplex that keeps nonbasic variables at either bound, so box constraints
never become rows.  The problems met here have a couple of dozen rows and
at most a few hundred columns; the basis is re-solved densely each step.
Once the optimal basis is found the vertex is recomputed from it directly,
which removes drift accumulated over the pivots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = 0
INFEASIBLE = 2
UNBOUNDED = 3
ITERATION_LIMIT = 1

#: bound violation tolerated by the ratio test in exchange for larger pivots
HARRIS_DELTA = 1e-13


@dataclass
class LPResult:
    x: np.ndarray | None
    fun: float
    status: int
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _iterate(M, rhs, cost, lb, ub, basis, at_upper, tol, max_iter, price=None):
    """Run primal simplex pivots in place.  Returns (status, iterations).

    ``price`` weights the reduced costs for Dantzig pricing (default 1).
    """
    m, ntot = M.shape
    is_basic = np.zeros(ntot, dtype=bool)
    is_basic[basis] = True
    stall = 0
    last_obj = np.inf
    for it in range(max_iter):
        x_n = np.where(at_upper, ub, lb)
        x_n[is_basic] = 0.0
        B = M[:, basis]
        x_b = np.linalg.solve(B, rhs - M @ x_n)
        y = np.linalg.solve(B.T, cost[basis])
        d = cost - M.T @ y
        d[is_basic] = 0.0

        fixed = ub - lb <= 0.0
        can_inc = (~is_basic) & (~at_upper) & (d < -tol) & ~fixed
        can_dec = (~is_basic) & at_upper & (d > tol) & ~fixed
        candidates = np.flatnonzero(can_inc | can_dec)
        if candidates.size == 0:
            return OPTIMAL, it

        obj = float(cost[basis] @ x_b + cost @ x_n)
        stall = stall + 1 if obj >= last_obj - tol * (1.0 + abs(obj)) else 0
        last_obj = min(last_obj, obj)
        if stall > 2 * m:
            j = int(candidates[0])  # Bland's rule against cycling
        else:
            score = np.abs(d[candidates]) if price is None else np.abs(d[candidates]) * price[candidates]
            j = int(candidates[np.argmax(score)])
        sigma = 1.0 if not at_upper[j] else -1.0

        w = np.linalg.solve(B, M[:, j])
        rate = -sigma * w  # d x_B / dt
        # Harris two-pass ratio test: the first pass finds the largest step that
        # keeps every basic variable within HARRIS_DELTA of its bounds, the second
        # picks the largest pivot among rows blocking inside that step.
        zero = max(tol, 1e-12 * float(np.abs(w).max(initial=0.0)))
        lb_b, ub_b = lb[basis], ub[basis]
        dec = rate < -zero
        inc = (rate > zero) & np.isfinite(ub_b)
        room_lo = np.maximum(x_b - lb_b, 0.0)
        room_hi = np.maximum(ub_b - x_b, 0.0)
        t_relax = ub[j] - lb[j]
        if dec.any():
            t_relax = min(t_relax, float(((room_lo[dec] + HARRIS_DELTA) / -rate[dec]).min()))
        if inc.any():
            t_relax = min(t_relax, float(((room_hi[inc] + HARRIS_DELTA) / rate[inc]).min()))
        t_best = ub[j] - lb[j]
        leave = -1
        leave_to_upper = False
        if t_relax < t_best:
            t_row = np.full(m, np.inf)
            t_row[dec] = room_lo[dec] / -rate[dec]
            t_row[inc] = room_hi[inc] / rate[inc]
            blocking = np.flatnonzero(t_row <= t_relax)
            if blocking.size:
                leave = int(blocking[np.argmax(np.abs(rate[blocking]))])
                t_best = float(t_row[leave])
                leave_to_upper = bool(inc[leave])
        if not np.isfinite(t_best):
            return UNBOUNDED, it

        if leave < 0:
            at_upper[j] = not at_upper[j]
            continue
        out = basis[leave]
        basis[leave] = j
        is_basic[out] = False
        is_basic[j] = True
        at_upper[out] = leave_to_upper
        at_upper[j] = False
    return ITERATION_LIMIT, max_iter


def linprog_bounded(c, A_ub, b_ub, lb=None, ub=None, tol=1e-11, max_iter=None) -> LPResult:
    """Minimize ``c @ x`` subject to ``A_ub @ x <= b_ub`` and ``lb <= x <= ub``.

    Lower bounds must be finite; upper bounds may be ``inf``.  Rows, then
    columns, are rescaled to unit max-norm before solving.
    """
    A = np.atleast_2d(np.asarray(A_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float).copy()
    c = c_orig = np.asarray(c, dtype=float)
    m, n = A.shape
    lb = np.zeros(n) if lb is None else np.broadcast_to(np.asarray(lb, float), (n,)).copy()
    ub = np.full(n, np.inf) if ub is None else np.broadcast_to(np.asarray(ub, float), (n,)).copy()
    if not np.all(np.isfinite(lb)):
        raise ValueError("lower bounds must be finite")
    if np.any(lb > ub):
        return LPResult(None, np.nan, INFEASIBLE, 0)
    if max_iter is None:
        max_iter = 50 * (m + n) + 100

    scale = np.abs(A).max(axis=1)
    scale[scale == 0.0] = 1.0
    A = A / scale[:, None]
    b = b / scale
    # column equilibration: x = z / col, so every column of A has unit max-norm
    col = np.abs(A).max(axis=0)
    col[col == 0.0] = 1.0
    A = A / col[None, :]
    c = c / col
    lb, ub = lb * col, ub * col

    r = b - A @ lb
    need_art = np.flatnonzero(r < 0.0)
    n_art = need_art.size
    ntot = n + m + n_art
    M = np.zeros((m, ntot))
    M[:, :n] = A
    M[:, n:n + m] = np.eye(m)
    for k, i in enumerate(need_art):
        M[i, n + m + k] = -1.0
    # price on the unscaled reduced costs: the pivot path stays that of the
    # original problem while the basis solves use the equilibrated matrix
    price = np.concatenate([col, np.ones(m + n_art)])
    lo = np.concatenate([lb, np.zeros(m + n_art)])
    hi = np.concatenate([ub, np.full(m + n_art, np.inf)])
    basis = np.arange(n, n + m)
    for k, i in enumerate(need_art):
        basis[i] = n + m + k
    at_upper = np.zeros(ntot, dtype=bool)

    iterations = 0
    if n_art:
        cost1 = np.zeros(ntot)
        cost1[n + m:] = 1.0
        status, its = _iterate(M, b, cost1, lo, hi, basis, at_upper, tol, max_iter, price)
        iterations += its
        if status != OPTIMAL:
            return LPResult(None, np.nan, status, iterations)
        x_full = _vertex(M, b, lo, hi, basis, at_upper)
        infeas = x_full[n + m:].sum()
        if infeas > 1e-9 * (1.0 + np.abs(b).max()):
            return LPResult(None, np.nan, INFEASIBLE, iterations)
        # Artificials are pinned at zero for the second phase.
        hi[n + m:] = 0.0
        at_upper[n + m:] = False

    cost2 = np.concatenate([c, np.zeros(m + n_art)])
    status, its = _iterate(M, b, cost2, lo, hi, basis, at_upper, tol, max_iter, price)
    iterations += its
    if status != OPTIMAL:
        return LPResult(None, np.nan, status, iterations)
    x_full = _vertex(M, b, lo, hi, basis, at_upper)
    x = np.clip(x_full[:n], lb, ub) / col
    return LPResult(x, float(c_orig @ x), OPTIMAL, iterations)


def _vertex(M, rhs, lo, hi, basis, at_upper):
    ntot = M.shape[1]
    x = np.where(at_upper, hi, lo)
    x[basis] = 0.0
    x[basis] = np.linalg.solve(M[:, basis], rhs - M @ x)
    return x
