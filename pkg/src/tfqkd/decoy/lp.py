"""Linear-programming decoy bounds, used as a reference for the closed forms.

The yields Y_nm for n, m <= cutoff are free variables in [0, 1].  Each
decoy gain interval gives two rows; photon numbers above the cutoff can
contribute anything between zero and their probability mass, which is
absorbed as slack on the lower row.
"""

from __future__ import annotations

import numpy as np

from ..channel import PAIRS
from ..errors import EstimationInfeasible
from ..interval import Interval
from .bounds import Q_NAMES, QBounds
from .poisson import PoissonCoeffs, poisson_vector
from .simplex import linprog_bounded


def _constraints(gain_intervals, coeffs: PoissonCoeffs, cutoff: int):
    vec = {r: poisson_vector(coeffs.intensity(r), cutoff) for r in "mnwo"}
    rows, rhs = [], []
    for pair in PAIRS:
        iv = Interval.coerce(gain_intervals[pair])
        px, py = vec[pair[0]], vec[pair[1]]
        w = np.outer(px, py).ravel()
        slack = max(1.0 - px.sum() * py.sum(), 0.0)
        rows.append(w)
        rhs.append(iv.hi)
        rows.append(-w)
        rhs.append(-(iv.lo - slack))
    return np.array(rows), np.array(rhs)


def _solve(cost, A, b, n_var, target):
    res = linprog_bounded(cost, A, b, lb=np.zeros(n_var), ub=np.ones(n_var))
    if not res.success:
        raise EstimationInfeasible(f"decoy LP for {target} failed (status {res.status})", bound="lp")
    return res


def lp_q_bounds(gain_intervals, coeffs: PoissonCoeffs, cutoff: int = 12) -> QBounds:
    """Tightest bounds implied by the gain intervals under a photon cutoff.

    ``gain_intervals`` maps each pair to an :class:`Interval` or a float.
    """
    A, b = _constraints(gain_intervals, coeffs, cutoff)
    size = cutoff + 1
    n_var = size * size
    a = poisson_vector(coeffs.mu, cutoff)
    out = {}
    for name in Q_NAMES:
        n, m = int(name[1]), int(name[2])
        cost = np.zeros(n_var)
        cost[n * size + m] = -1.0
        res = _solve(cost, A, b, n_var, name)
        out[name + "_u"] = float(min(max(a[n] * a[m] * -res.fun, 0.0), 1.0))
    cost = np.zeros(n_var)
    for name in Q_NAMES:
        n, m = int(name[1]), int(name[2])
        cost[n * size + m] = a[n] * a[m]
    res = _solve(cost, A, b, n_var, "qsum")
    out["qsum_l"] = float(min(max(res.fun, 0.0), 1.0))
    return QBounds(**out)
