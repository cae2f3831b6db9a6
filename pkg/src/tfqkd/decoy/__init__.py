"""Decoy-state estimation of the weighted low-photon yields."""

from .bounds import (
    Q_NAMES,
    QBounds,
    YieldTable,
    analytic_q_bounds,
    estimate_core,
    finalize,
    synth_gains_from_yields,
)
from .lp import lp_q_bounds
from .poisson import DEFAULT_CUTOFF, PoissonCoeffs, poisson_pn, poisson_tail, poisson_vector
from .simplex import linprog_bounded

__all__ = [
    "DEFAULT_CUTOFF",
    "PoissonCoeffs",
    "QBounds",
    "Q_NAMES",
    "YieldTable",
    "analytic_q_bounds",
    "estimate_core",
    "finalize",
    "linprog_bounded",
    "lp_q_bounds",
    "poisson_pn",
    "poisson_tail",
    "poisson_vector",
    "synth_gains_from_yields",
]
