"""Concentration bounds and composable-security bookkeeping.

All failure probabilities are carried as natural logarithms.  The
collective-attack budget at N = 1e12 is around 1e-766, far below the
smallest double, so nothing here ever exponentiates an epsilon unless a
caller asks for the (possibly underflowing) linear value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .interval import Interval

# d = 8 for the post-selection lift; the exponent is d**2 - 1.
POSTSELECTION_EXPONENT = 63
# Number of estimated gains charged against the parameter-estimation budget.
N_ESTIMATED_GAINS = 11

LN2 = math.log(2.0)


def _f_ln(ln_inv_eps: float) -> float:
    """f(eps) = sqrt(2 ln(1/eps)) given ln(1/eps)."""
    return math.sqrt(2.0 * max(ln_inv_eps, 0.0))


def chernoff_interval(observed_gain: float, trial_count: int, ln_eps_pe: float):
    """Two-sided multiplicative Chernoff interval for an i.i.d. gain.

    Parameters
    ----------
    observed_gain : float
        Observed click frequency in [0, 1].
    trial_count : int
        Number of trials the frequency was observed over.
    ln_eps_pe : float
        Natural log of the parameter-estimation failure probability.

    Returns
    -------
    (lower, upper) : tuple of float
        ``lower = Q(1 - f(eps^4/16)/sqrt(N Q))`` and
        ``upper = Q(1 + f(eps^(3/2))/sqrt(N Q))``, clamped to [0, 1].  For a
        zero observation the upper end is ``f(eps^(3/2))**2 / N``.
    """
    if trial_count <= 0:
        raise DomainError("trial_count must be positive")
    if not 0.0 <= observed_gain <= 1.0:
        raise DomainError(f"observed_gain {observed_gain} outside [0, 1]")
    if ln_eps_pe > 0.0:
        raise DomainError("ln_eps_pe must be <= 0")
    f_up = _f_ln(-1.5 * ln_eps_pe)
    f_lo = _f_ln(-4.0 * ln_eps_pe + math.log(16.0))
    if observed_gain == 0.0:
        return 0.0, min(f_up * f_up / trial_count, 1.0)
    root = math.sqrt(trial_count * observed_gain)
    lo = observed_gain * (1.0 - f_lo / root)
    hi = observed_gain * (1.0 + f_up / root)
    return min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)


def azuma_interval(observed_count: int, total: int, ln_eps_h: float):
    """Azuma-type interval ``(n +- sqrt(2 n ln(1/eps_h))) / total`` on a click rate."""
    if total <= 0:
        raise DomainError("total must be positive")
    if not 0 <= observed_count <= total:
        raise DomainError("observed_count must lie in [0, total]")
    if ln_eps_h > 0.0:
        raise DomainError("ln_eps_h must be <= 0")
    spread = math.sqrt(2.0 * observed_count * -ln_eps_h)
    lo = (observed_count - spread) / total
    hi = (observed_count + spread) / total
    return min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)


@dataclass(frozen=True)
class EpsilonBudget:
    """Failure probabilities of the finite-key analysis, in natural-log form."""

    ln_eps_coh: float
    ln_eps_col: float
    ln_eps_pa: float
    ln_eps_cor: float
    ln_eps_s: float
    ln_eps_pe: float
    r_sec: float
    r_cor: float
    r_s: float

    @property
    def eps_coh(self) -> float:
        return math.exp(self.ln_eps_coh)

    @property
    def eps_col(self) -> float:
        return math.exp(self.ln_eps_col)

    @property
    def eps_pa(self) -> float:
        return math.exp(self.ln_eps_pa)

    @property
    def eps_cor(self) -> float:
        return math.exp(self.ln_eps_cor)

    @property
    def eps_s(self) -> float:
        return math.exp(self.ln_eps_s)

    @property
    def eps_pe(self) -> float:
        return math.exp(self.ln_eps_pe)

    def log10(self, name: str) -> float:
        """log10 of one of the budget entries, e.g. ``log10("eps_col")``."""
        return getattr(self, "ln_" + name) / math.log(10.0)

    def ln_total(self) -> float:
        """ln(eps_pa + eps_cor + eps_s + 11 eps_pe), evaluated without underflow."""
        terms = np.array(
            [
                self.ln_eps_pa,
                self.ln_eps_cor,
                self.ln_eps_s,
                math.log(N_ESTIMATED_GAINS) + self.ln_eps_pe,
            ]
        )
        top = terms.max()
        return float(top + math.log(np.exp(terms - top).sum()))


def log2_inv(ln_eps: float, scale: float = 1.0) -> float:
    """log2(scale / eps) for an epsilon given as ln(eps)."""
    return (math.log(scale) - ln_eps) / LN2


def budget_split(eps_coh: float, N: int, r_sec: float, r_cor: float, r_s: float,
                 *, ln_eps_coh: float | None = None) -> EpsilonBudget:
    """Split the coherent-attack budget into its collective-attack parts.

    eps_col = eps_coh / (N+1)**63, then eps_PA, eps_cor, eps_s take the
    fractions r_sec, r_cor, r_s of eps_col and the remainder is shared by
    the eleven gain estimates.  ``ln_eps_coh`` may be passed instead of
    ``eps_coh`` for budgets below double range.
    """
    for name, r in (("r_sec", r_sec), ("r_cor", r_cor), ("r_s", r_s)):
        if not 0.0 < r < 1.0:
            raise DomainError(f"{name}={r} must lie in (0, 1)")
    rest = 1.0 - r_sec - r_cor - r_s
    if rest <= 0.0:
        raise DomainError("r_sec + r_cor + r_s must be < 1")
    if N < 0:
        raise DomainError("N must be nonnegative")
    if ln_eps_coh is None:
        if not 0.0 < eps_coh <= 1.0:
            raise DomainError("eps_coh must lie in (0, 1]")
        ln_eps_coh = math.log(eps_coh)
    ln_col = ln_eps_coh - POSTSELECTION_EXPONENT * math.log1p(N)
    return EpsilonBudget(
        ln_eps_coh=ln_eps_coh,
        ln_eps_col=ln_col,
        ln_eps_pa=ln_col + math.log(r_sec),
        ln_eps_cor=ln_col + math.log(r_cor),
        ln_eps_s=ln_col + math.log(r_s),
        ln_eps_pe=ln_col + math.log(rest) - math.log(N_ESTIMATED_GAINS),
        r_sec=r_sec,
        r_cor=r_cor,
        r_s=r_s,
    )


@dataclass(frozen=True)
class GainIntervals:
    """Expectation intervals for the code gain and the nine decoy gains."""

    code: Interval
    decoy: dict = field(default_factory=dict)

    def __getitem__(self, pair: str) -> Interval:
        return self.decoy[pair]

    def widened(self, pair: str, lo_shift: float = 0.0, hi_shift: float = 0.0):
        """Copy with one decoy interval widened by the given (nonnegative) shifts."""
        iv = self.decoy[pair]
        decoy = dict(self.decoy)
        decoy[pair] = Interval(max(iv.lo - lo_shift, 0.0), min(iv.hi + hi_shift, 1.0))
        return GainIntervals(code=self.code, decoy=decoy)

    @classmethod
    def exact(cls, gains) -> GainIntervals:
        """Zero-width intervals at the given gain values."""
        return cls(
            code=Interval.point(gains.q_code),
            decoy={p: Interval.point(q) for p, q in gains.decoy_gains.items()},
        )


def gain_intervals(gains, ln_eps_pe: float) -> GainIntervals:
    """Chernoff intervals for every gain of a :class:`~tfqkd.channel.GainSet`."""
    def iv(q, n):
        if n <= 0:
            return Interval(0.0, 1.0)
        return Interval(*chernoff_interval(q, n, ln_eps_pe))

    return GainIntervals(
        code=iv(gains.q_code, gains.code_count),
        decoy={p: iv(q, gains.pair_counts[p]) for p, q in gains.decoy_gains.items()},
    )
