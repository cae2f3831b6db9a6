"""Analytical four-intensity decoy bounds on the weighted yields q_nm.

q_nm = p_n(mu) p_m(mu) Y_nm, where mu is the code-mode intensity.  The
estimator needs upper bounds on q00, q10, q01, q20, q02, q11 and a lower
bound on their sum.

The closed forms are written once, in :func:`estimate_core`, over values
that may be floats or :class:`~tfqkd.interval.Interval` objects.  With
floats they are the exact-intensity bounds; with intervals they become the
fluctuation-robust bounds, each endpoint picked by interval arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..channel import PAIRS, GainSet
from ..errors import DomainError, EstimationInfeasible
from ..interval import Interval, lower, upper
from .poisson import PoissonCoeffs, poisson_vector

Q_NAMES = ("q00", "q10", "q01", "q20", "q02", "q11")


@dataclass(frozen=True)
class YieldTable:
    """Ground-truth yields Y_nm for 0 <= n, m <= cutoff (zero beyond)."""

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise DomainError("yield table must be square")
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise DomainError("yields must lie in [0, 1]")
        object.__setattr__(self, "y", y)

    @property
    def cutoff(self) -> int:
        return self.y.shape[0] - 1

    @classmethod
    def random(cls, rng, cutoff: int = 10) -> YieldTable:
        """Random table mixing flat, skewed and tiny yields."""
        y = rng.uniform(0.0, 1.0, (cutoff + 1, cutoff + 1))
        kind = rng.integers(0, 4)
        if kind == 1:
            y = y ** rng.uniform(1.0, 8.0)
        elif kind == 2:
            y = y * 10.0 ** rng.uniform(-8.0, -1.0)
        elif kind == 3:
            y = np.where(rng.random(y.shape) < 0.5, 0.0, y)
        return cls(y)

    def q_values(self, a_alice, a_bob=None) -> dict:
        """True q_nm given the code-intensity photon distributions of both users."""
        a_bob = a_alice if a_bob is None else a_bob
        out = {}
        for name in Q_NAMES:
            n, m = int(name[1]), int(name[2])
            out[name] = float(a_alice[n] * a_bob[m] * self.y[n, m])
        out["qsum"] = sum(out[k] for k in Q_NAMES)
        return out


@dataclass(frozen=True)
class QBounds:
    q00_u: float
    q10_u: float
    q01_u: float
    q20_u: float
    q02_u: float
    q11_u: float
    qsum_l: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{f.name}={v} outside [0, 1]")

    @property
    def upper_sum(self) -> float:
        return self.q00_u + self.q10_u + self.q01_u + self.q20_u + self.q02_u + self.q11_u

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def zeros(cls) -> QBounds:
        return cls(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def synth_gains_from_yields(yt: YieldTable, intensities) -> GainSet:
    """Gains Q_xy = sum_{n,m} p_n(x) p_m(y) Y_nm of a yield table (truncated at its cutoff)."""
    mu, nu, omega = intensities
    roles = {"m": mu, "n": nu, "w": omega, "o": 0.0}
    vec = {r: poisson_vector(x, yt.cutoff) for r, x in roles.items()}
    gains = {}
    for pair in PAIRS:
        q = float(vec[pair[0]] @ yt.y @ vec[pair[1]])
        gains[pair] = min(max(q, 0.0), 1.0)
    return GainSet(q_code=0.0, e_code=0.0, decoy_gains=gains)


def _positive(den, name, fallback):
    """Check a sign-normalized denominator; intervals must exclude zero."""
    if lower(den) > 0.0:
        return True
    if fallback:
        return False
    raise EstimationInfeasible(
        f"denominator of {name} is not positive ({lower(den)!r}); intensity ordering violated",
        bound=name,
    )


def _den_y1(a, b, c):
    return (b[2] * (c[1] * a[3] - a[1] * c[3])
            + b[1] * (c[3] * a[2] - c[2] * a[3])
            + b[3] * (a[1] * c[2] - a[2] * c[1]))


def _y1(k1, k2, k3, a, b, c, name, fallback):
    """Single-photon yield bound from three vacuum-subtracted gains.

    Cramer solution of the system truncated at three photons; numerator and
    denominator carry a common sign flip so the denominator is positive.
    The dropped higher-photon terms only ever push the result upwards.
    """
    den = _den_y1(a, b, c)
    if not _positive(den, name, fallback):
        # a_1 Y1 <= K holds for each intensity on its own
        cands = [upper(k) / lower(x[1]) for k, x in ((k1, a), (k2, b), (k3, c)) if lower(x[1]) > 0]
        return min([1.0] + cands)
    num = (k2 * (c[3] * a[2] - c[2] * a[3])
           + k1 * (b[3] * c[2] - b[2] * c[3])
           + k3 * (a[3] * b[2] - a[2] * b[3]))
    return num / den


def _y2(h1, l3, a, c, name, fallback):
    den = a[2] * c[1] - a[1] * c[2]
    if not _positive(den, name, fallback):
        return min(1.0, upper(h1) / lower(a[2])) if lower(a[2]) > 0 else 1.0
    return (h1 * c[1] - l3 * a[1]) / den


def estimate_core(Q, a, b, c, tail_a3, tail_c3, fallback=False) -> dict:
    """Raw bounds from gains ``Q[pair]`` and coefficients ``a``, ``b``, ``c``.

    Inputs are floats or intervals.  Returns upper bounds for the six q_nm
    and the two lower partial sums ``t1`` (q00+q10+q01+q20+q02) and ``t2``
    (q11), unclamped.  With ``fallback`` an interval denominator that
    touches zero degrades to a trivially valid bound instead of raising.
    """
    qoo = Q["oo"]
    out = {}
    out["q00"] = upper(a[0] * a[0] * qoo)

    for name, side in (("q10", 0), ("q01", 1)):
        g = (lambda r: Q[r + "o"]) if side == 0 else (lambda r: Q["o" + r])
        k1 = g("m") - a[0] * qoo
        k2 = g("n") - b[0] * qoo
        k3 = g("w") - c[0] * qoo
        out[name] = upper(a[0] * a[1] * _y1(k1, k2, k3, a, b, c, name, fallback))

    for name, side in (("q20", 0), ("q02", 1)):
        g = (lambda r: Q[r + "o"]) if side == 0 else (lambda r: Q["o" + r])
        h1 = g("m") - a[0] * qoo
        l3 = g("w") - c[0] * qoo - tail_c3
        out[name] = upper(a[0] * a[2] * _y2(h1, l3, a, c, name, fallback))

    t1_sum = Q["mm"] - a[0] * (Q["mo"] + Q["om"]) + a[0] * a[0] * qoo
    out["q11"] = upper(t1_sum)

    out["t1"] = lower(a[0] * (Q["om"] + Q["mo"] - 2.0 * tail_a3) - a[0] * a[0] * qoo)
    t2_sum = Q["nn"] - b[0] * (Q["on"] + Q["no"]) + b[0] * b[0] * qoo
    den = a[1] * b[1] * (b[1] * a[2] - a[1] * b[2])
    if _positive(den, "q11_lower", fallback):
        out["t2"] = lower(a[1] * a[1] * ((t2_sum * a[1] * a[2] - t1_sum * b[1] * b[2]) / den))
    else:
        out["t2"] = 0.0
    return out



def finalize(raw: dict) -> QBounds:
    """Clamp raw core output into a :class:`QBounds`.

    Each upper bound is clamped to [0, 1]; the two partial lower sums are
    floored at zero separately and their total is capped by the sum of the
    upper bounds.
    """
    ups = {k: min(max(float(raw[k]), 0.0), 1.0) for k in Q_NAMES}
    lo = max(float(raw["t1"]), 0.0) + max(float(raw["t2"]), 0.0)
    lo = min(lo, 1.0, sum(ups.values()))
    return QBounds(**{k + "_u": v for k, v in ups.items()}, qsum_l=lo)


def _decoy_map(gains) -> dict:
    if isinstance(gains, GainSet):
        return dict(gains.decoy_gains)
    return dict(gains)


def analytic_q_bounds(gains, coeffs: PoissonCoeffs) -> QBounds:
    """Exact-intensity decoy bounds.

    Parameters
    ----------
    gains : GainSet or mapping
        The nine decoy gains, keyed by pair (``"oo"``, ``"mo"``, ...).
    coeffs : PoissonCoeffs
        Photon-number distributions of mu, nu, omega.

    Raises
    ------
    EstimationInfeasible
        If a denominator is not positive, i.e. the intensities are not
        ordered mu > nu > omega > 0.
    """
    Q = _decoy_map(gains)
    missing = set(PAIRS) - set(Q)
    if missing:
        raise DomainError(f"missing decoy gains: {sorted(missing)}")
    a = [float(v) for v in coeffs.a[:4]]
    b = [float(v) for v in coeffs.b[:4]]
    c = [float(v) for v in coeffs.c[:4]]
    raw = estimate_core(Q, a, b, c, coeffs.tail("m", 3), coeffs.tail("w", 3))
    return finalize(raw)
