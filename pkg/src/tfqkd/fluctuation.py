"""Intensity fluctuation: tomography of the mean intensity and coefficient intervals.

Each pulse carries mu_i = mu_bar (1 + delta_i) with delta_i in
[delta_minus, delta_plus] and sum(delta_i) = 0.  The averaged photon-number
probability then factors exactly as

    a_n = g_n(mu_bar) * mean_i F_n(delta_i; mu_bar),
    g_n(m) = e^{-m} m^n / n!,
    F_n(delta; m) = e^{-delta m} (1 + delta)^n - (n - m) delta,

because the linear term of F_n averages to zero.  Bounding g_n over the
mean-intensity interval and F_n over the delta range gives the "refined"
coefficient intervals.  The "naive" intervals only use the fact that every
pulse intensity lies in [mu_lo (1 + delta_minus), mu_hi (1 + delta_plus)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .decoy.bounds import QBounds, estimate_core, finalize
from .decoy.poisson import DEFAULT_CUTOFF, poisson_pn, poisson_tail
from .errors import DomainError, OrderingError, SaturationError
from .interval import Interval
from .statistics import azuma_interval

GRID_POINTS = 2048
DELTA_TOL = 1e-10
# interior mean-intensity nodes used when minimizing F_n over m
_M_NODES = 9


@dataclass(frozen=True)
class FluctuationSpec:
    """Bounded relative fluctuation of the pulse intensities.

    ``zeta`` is the mean squared deviation; when left as ``None`` the
    worst case ``max(delta_minus**2, delta_plus**2)`` is assumed.
    """

    delta_minus: float
    delta_plus: float
    zeta: Optional[float] = None

    def __post_init__(self):
        if not -1.0 < self.delta_minus <= 0.0:
            raise DomainError("delta_minus must lie in (-1, 0]")
        if not 0.0 <= self.delta_plus < 1.0:
            raise DomainError("delta_plus must lie in [0, 1)")
        zmax = max(self.delta_minus**2, self.delta_plus**2)
        if self.zeta is None:
            object.__setattr__(self, "zeta", zmax)
        elif not 0.0 <= self.zeta <= zmax * (1.0 + 1e-12):
            raise DomainError(f"zeta={self.zeta} outside [0, {zmax}]")

    @classmethod
    def symmetric(cls, delta: float, zeta: float | None = None) -> FluctuationSpec:
        return cls(0.0 - abs(delta), abs(delta), zeta)

    @property
    def is_zero(self) -> bool:
        return self.delta_minus == 0.0 and self.delta_plus == 0.0


@dataclass(frozen=True)
class TomographyRecord:
    """Local-detector monitoring of one intensity setting."""

    pulses: int
    clicks: int
    local_efficiency: float
    ln_eps_h: float
    dark_count_rate: float = 0.0

    def __post_init__(self):
        if self.pulses <= 0:
            raise DomainError("pulses must be positive")
        if not 0 <= self.clicks <= self.pulses:
            raise DomainError("clicks must lie in [0, pulses]")
        if not 0.0 < self.local_efficiency <= 1.0:
            raise DomainError("local_efficiency must lie in (0, 1]")
        if self.ln_eps_h > 0.0:
            raise DomainError("ln_eps_h must be <= 0")


def mean_intensity_bounds(rec: TomographyRecord, fluct: FluctuationSpec):
    """Bounds (x_lo, x_hi) on the mean intensity from a tomography record.

    The click-rate interval comes from :func:`azuma_interval`.  The upper
    end inverts the second-order expansion of 1 - e^{-eta x} including the
    fluctuation term (1 + zeta); the lower end keeps the third-order
    remainder, evaluated at x_hi.

    Raises
    ------
    SaturationError
        If 2 h_hi (1 + zeta) >= 1, where the inversion has no real root.
    DomainError
        If dark counts are not negligible (p_d N_x > 0.01 clicks).
    """
    if rec.dark_count_rate * rec.pulses > 0.01 * rec.clicks and rec.dark_count_rate > 0.0:
        raise DomainError("dark counts are not negligible for this tomography record")
    h_lo, h_hi = azuma_interval(rec.clicks, rec.pulses, rec.ln_eps_h)
    return intensity_from_click_rates(h_lo, h_hi, rec.local_efficiency, fluct.zeta)


def intensity_from_click_rates(h_lo: float, h_hi: float, eta: float, zeta: float):
    """Invert a click-rate interval [h_lo, h_hi] into mean-intensity bounds."""
    z1 = 1.0 + zeta
    arg = 1.0 - 2.0 * h_hi * z1
    if arg <= 0.0:
        raise SaturationError(f"click rate {h_hi:.4g} too high for the tomography model")
    x_hi = (1.0 - math.sqrt(arg)) / (eta * z1)
    x_lo = h_lo / eta + h_lo * h_lo / (2.0 * eta) - eta * eta * x_hi**3 / 6.0
    return max(x_lo, 0.0), x_hi


def f_n(delta, n: int, m: float):
    """F_n(delta; m) = e^{-delta m}(1+delta)^n - (n-m) delta."""
    delta = np.asarray(delta, dtype=float)
    return np.exp(-delta * m) * (1.0 + delta) ** n - (n - m) * delta


def extremize_fn(n: int, mu_plus: float, delta_range):
    """Minimum and maximum of F_n(.; mu_plus) over a delta range.

    A 2048-point grid (endpoints included) locates the extrema, which are
    then polished by a bounded scalar search on the neighbouring grid cells.

    Returns
    -------
    (f_min, f_max, argmin, argmax)
    """
    lo, hi = float(delta_range[0]), float(delta_range[1])
    if not -1.0 < lo <= hi < 1.0:
        raise DomainError("delta range must satisfy -1 < lo <= hi < 1")
    if lo == hi:
        v = float(f_n(lo, n, mu_plus))
        return v, v, lo, lo
    grid = np.linspace(lo, hi, GRID_POINTS)
    vals = f_n(grid, n, mu_plus)

    def polish(sign):
        i = int(np.argmin(sign * vals))
        best_x, best_v = float(grid[i]), float(vals[i])
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
        res = minimize_scalar(lambda d: sign * float(f_n(d, n, mu_plus)), bounds=(a, b),
                              method="bounded", options={"xatol": DELTA_TOL})
        if res.success and res.fun < sign * best_v:
            best_x, best_v = float(res.x), sign * float(res.fun)
        return best_v, best_x

    f_min, x_min = polish(1.0)
    f_max, x_max = polish(-1.0)
    return f_min, f_max, x_min, x_max


def _g_range(n: int, m_lo: float, m_hi: float):
    """min and max of g_n(m) = e^{-m} m^n / n! over [m_lo, m_hi] (peak at m = n)."""
    vals = [poisson_pn(m_lo, n), poisson_pn(m_hi, n)]
    if m_lo < n < m_hi:
        vals.append(poisson_pn(float(n), n))
    return min(vals), max(vals)


def _f_range_over_m(n: int, m_lo: float, m_hi: float, drange):
    """Bounds on F_n(delta; m) jointly over delta in drange and m in [m_lo, m_hi].

    F_n is convex in m, so its maximum sits at an endpoint.  The minimum is
    taken over a node grid in m and lowered by a Lipschitz allowance for
    the gaps between nodes.
    """
    f_max = max(extremize_fn(n, m, drange)[1] for m in (m_lo, m_hi))
    if m_hi == m_lo:
        return extremize_fn(n, m_lo, drange)[0], f_max
    nodes = np.linspace(m_lo, m_hi, _M_NODES)
    grid = np.linspace(drange[0], drange[1], GRID_POINTS)
    node_min = f_n(grid[None, :], n, nodes[:, None]).min(axis=1)
    best = int(np.argmin(node_min))
    f_min = min(float(node_min[best]), extremize_fn(n, float(nodes[best]), drange)[0])
    dmax = max(abs(drange[0]), abs(drange[1]))
    lip = dmax * (1.0 + math.exp(dmax * m_hi) * (1.0 + dmax) ** n)
    f_min -= lip * (nodes[1] - nodes[0]) / 2.0
    return f_min, f_max


@dataclass(frozen=True)
class RoleCoeffs:
    """Interval photon-number probabilities of one fluctuating intensity.

    ``values[n]`` bounds the pulse-averaged p_n for n = 0..cutoff;
    ``intensity_range`` bounds every individual pulse intensity.
    """

    values: tuple
    mean_bounds: tuple
    intensity_range: tuple

    @property
    def cutoff(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n: int) -> Interval:
        return self.values[n]

    def tail(self, n0: int) -> Interval:
        """Interval on the averaged mass at n >= n0."""
        lo_r, hi_r = self.intensity_range
        naive = Interval(poisson_tail(lo_r, n0), poisson_tail(hi_r, n0))
        if n0 > self.cutoff + 1:
            return naive
        head = self.values[:n0]
        comp = Interval(1.0 - sum(v.hi for v in head), 1.0 - sum(v.lo for v in head))
        lo = max(naive.lo, comp.lo, 0.0)
        hi = min(naive.hi, comp.hi)
        return Interval(lo, max(lo, hi))

    @property
    def widths(self) -> np.ndarray:
        return np.array([v.width for v in self.values])


def role_intervals(mean_bounds, fluct: FluctuationSpec, cutoff: int = DEFAULT_CUTOFF,
                   mode: str = "refined") -> RoleCoeffs:
    """Coefficient intervals for one intensity whose mean lies in ``mean_bounds``."""
    m_lo, m_hi = float(mean_bounds[0]), float(mean_bounds[1])
    if not 0.0 < m_lo <= m_hi:
        raise DomainError("mean bounds must satisfy 0 < lo <= hi")
    if mode not in ("refined", "naive"):
        raise DomainError(f"unknown mode {mode!r}")
    drange = (fluct.delta_minus, fluct.delta_plus)
    r_lo, r_hi = m_lo * (1.0 + fluct.delta_minus), m_hi * (1.0 + fluct.delta_plus)
    values = []
    for n in range(cutoff + 1):
        if mode == "naive":
            g_lo, g_hi = _g_range(n, r_lo, r_hi)
            values.append(Interval(g_lo, g_hi))
            continue
        g_lo, g_hi = _g_range(n, m_lo, m_hi)
        f_lo, f_hi = _f_range_over_m(n, m_lo, m_hi, drange)
        lo = g_lo * f_lo if f_lo >= 0.0 else g_hi * f_lo
        if n == 0:
            # F_0 >= 1 by convexity of e^{-x}; the bound is exactly e^{-m_hi}
            lo = max(lo, math.exp(-m_hi))
        hi = g_hi * f_hi
        # every pulse contributes within the naive range as well
        nv_lo, nv_hi = _g_range(n, r_lo, r_hi)
        lo, hi = max(lo, nv_lo, 0.0), min(hi, nv_hi)
        values.append(Interval(lo, max(lo, hi)))
    return RoleCoeffs(values=tuple(values), mean_bounds=(m_lo, m_hi), intensity_range=(r_lo, r_hi))


@dataclass(frozen=True)
class CoeffIntervals:
    """Interval coefficients a (mu), b (nu), c (omega) plus the mode flag."""

    a: RoleCoeffs
    b: RoleCoeffs
    c: RoleCoeffs
    mode: str
    fluct: FluctuationSpec

    @property
    def cutoff(self) -> int:
        return self.a.cutoff

    def check_ordering(self):
        """Raise :class:`OrderingError` if adjacent intensity ranges overlap."""
        for hi_name, hi_role, lo_name, lo_role in (("mu", self.a, "nu", self.b),
                                                   ("nu", self.b, "omega", self.c)):
            if lo_role.intensity_range[1] >= hi_role.intensity_range[0]:
                raise OrderingError(
                    f"{lo_name} range {lo_role.intensity_range} overlaps "
                    f"{hi_name} range {hi_role.intensity_range}",
                    bound="ordering",
                )
        if self.c.intensity_range[0] <= 0.0:
            raise OrderingError("omega range reaches zero", bound="ordering")


def coeff_intervals(mean_bounds, fluct: FluctuationSpec, cutoff: int = DEFAULT_CUTOFF,
                    mode: str = "refined") -> CoeffIntervals:
    """Coefficient intervals for the three decoy intensities.

    ``mean_bounds`` holds (lo, hi) mean-intensity bounds for mu, nu and omega,
    either as a sequence of three pairs or a mapping keyed ``"m"``, ``"n"``,
    ``"w"``.
    """
    if isinstance(mean_bounds, dict):
        mean_bounds = [mean_bounds[k] for k in ("m", "n", "w")]
    if len(mean_bounds) != 3:
        raise DomainError("need mean bounds for mu, nu and omega")
    roles = [role_intervals(mb, fluct, cutoff, mode) for mb in mean_bounds]
    return CoeffIntervals(*roles, mode=mode, fluct=fluct)


def interval_q_bounds(gain_intervals, ci: CoeffIntervals) -> QBounds:
    """Decoy bounds with interval gains and interval coefficients.

    ``gain_intervals`` maps each decoy pair to an :class:`Interval` (a
    :class:`~tfqkd.statistics.GainIntervals` works).  Every closed form is
    evaluated in interval arithmetic and the conservative endpoint kept, so
    zero-width inputs reproduce :func:`~tfqkd.decoy.analytic_q_bounds`.

    Raises
    ------
    OrderingError
        If fluctuation makes adjacent intensity ranges overlap.
    """
    ci.check_ordering()
    decoy = getattr(gain_intervals, "decoy", gain_intervals)
    Q = {p: Interval.coerce(v) for p, v in decoy.items()}
    a = [ci.a[n] for n in range(4)]
    b = [ci.b[n] for n in range(4)]
    c = [ci.c[n] for n in range(4)]
    raw = estimate_core(Q, a, b, c, ci.a.tail(3), ci.c.tail(3), fallback=True)
    return finalize(raw)


def simulate_deltas(rng, size: int, fluct: FluctuationSpec) -> np.ndarray:
    """Random relative deviations with zero sum inside [delta_minus, delta_plus].

    Draws uniformly, mean-centres, then rescales each sign separately so the
    extremes touch but never cross the allowed range.
    """
    d = rng.uniform(fluct.delta_minus, fluct.delta_plus, size)
    d -= d.mean()
    pos, neg = d > 0, d < 0
    if not (pos.any() and neg.any()):
        return np.zeros(size)
    s = min(fluct.delta_plus / d[pos].max() if fluct.delta_plus > 0 else 0.0,
            fluct.delta_minus / d[neg].min() if fluct.delta_minus < 0 else 0.0)
    return d * s


def mixture_coeffs(intensities: np.ndarray, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Pulse-averaged photon-number distribution of a sequence of intensities."""
    x = np.asarray(intensities, dtype=float)
    out = np.empty(cutoff + 1)
    log_x = np.log(x)
    for n in range(cutoff + 1):
        out[n] = np.mean(np.exp(-x + n * log_x - math.lgamma(n + 1)))
    return out
