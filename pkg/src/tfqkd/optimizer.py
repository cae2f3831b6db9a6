"""Scenario objective and particle swarm search over the protocol parameters."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from .channel import ChannelParams, GainSet, ProtocolParams, expected_gains
from .decoy import PoissonCoeffs, QBounds, analytic_q_bounds
from .errors import DomainError, EstimationInfeasible, SaturationError
from .fluctuation import (
    FluctuationSpec,
    TomographyRecord,
    coeff_intervals,
    interval_q_bounds,
    mean_intensity_bounds,
)
from .keyrate import KeyRateInputs, collective_terms, iae_upper, resolve_plugin, skr_coherent
from .statistics import EpsilonBudget, GainIntervals, budget_split, gain_intervals

INVALID_SCORE = -1.0

# Local intensity monitor used when a fluctuation spec is given.
TOMOGRAPHY_EFFICIENCY = 0.7
TOMOGRAPHY_LN_EPS = math.log(1e-10)


@dataclass(frozen=True)
class ParamVector:
    """The ten optimized quantities; the vacuum probability is the remainder."""

    mu: float
    nu: float
    omega: float
    p_c: float
    p_mu: float
    p_nu: float
    p_omega: float
    r_sec: float
    r_cor: float
    r_s: float

    def is_valid(self) -> bool:
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            return False
        if not self.mu > self.nu > self.omega > 0.0:
            return False
        probs = (self.p_c, self.p_mu, self.p_nu, self.p_omega)
        if min(probs) < 0.0 or sum(probs) > 1.0:
            return False
        rs = (self.r_sec, self.r_cor, self.r_s)
        return min(rs) > 0.0 and sum(rs) < 1.0

    @property
    def p_vacuum(self) -> float:
        return 1.0 - self.p_c - self.p_mu - self.p_nu - self.p_omega

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @classmethod
    def from_array(cls, x) -> ParamVector:
        return cls(*(float(v) for v in x))

    def protocol(self, N: int) -> ProtocolParams:
        return ProtocolParams(self.mu, self.nu, self.omega, self.p_c, self.p_mu,
                              self.p_nu, self.p_omega, N=N)


PARAM_NAMES = tuple(f.name for f in fields(ParamVector))

#: default search box (mu, nu, omega, p_c, p_mu, p_nu, p_omega, r_sec, r_cor, r_s)
DEFAULT_LOWER = np.array([1e-3, 1e-4, 1e-5, 0.0, 0.0, 0.0, 0.0, 1e-3, 1e-3, 1e-3])
DEFAULT_UPPER = np.array([1.0, 0.5, 0.1, 1.0, 0.5, 0.5, 0.5, 0.33, 0.33, 0.33])

#: a reasonable hand-picked vector, used as a fixed point for sweeps without optimization
REFERENCE_VECTOR = ParamVector(0.1, 0.02, 0.002, 0.5, 0.15, 0.15, 0.1, 0.3, 0.1, 0.3)


@dataclass
class ScenarioResult:
    """Intermediate quantities of one objective evaluation."""

    rate_coh: float
    rate_col: float = 0.0
    budget: Optional[EpsilonBudget] = None
    gains: Optional[GainSet] = None
    intervals: Optional[GainIntervals] = None
    qbounds: Optional[QBounds] = None
    q_code_lower: float = 0.0
    iae: float = 1.0
    terms: dict = field(default_factory=dict)
    status: str = "ok"


def tomography_records(v: ParamVector, N: int, fluct: FluctuationSpec):
    """Expected local-monitor records for the three decoy intensities.

    Each intensity is monitored on its N P_x pulses with the click count
    set to its expected value N P_x (1 - e^{-eta x}).
    """
    recs = []
    for x, p in ((v.mu, v.p_mu), (v.nu, v.p_nu), (v.omega, v.p_omega)):
        pulses = max(int(round(N * p)), 1)
        clicks = int(round(pulses * -math.expm1(-TOMOGRAPHY_EFFICIENCY * x)))
        recs.append(TomographyRecord(pulses, clicks, TOMOGRAPHY_EFFICIENCY, TOMOGRAPHY_LN_EPS))
    return recs


def fluctuating_q_bounds(v: ParamVector, N: int, fluct: FluctuationSpec,
                         intervals: GainIntervals) -> QBounds:
    """q bounds when the intensities fluctuate: tomography, then interval decoy bounds."""
    mean_bounds = [mean_intensity_bounds(r, fluct) for r in tomography_records(v, N, fluct)]
    if any(lo <= 0.0 for lo, _ in mean_bounds):
        raise EstimationInfeasible("tomography cannot resolve a positive mean intensity",
                                   bound="tomography")
    ci = coeff_intervals(mean_bounds, fluct, cutoff=3)
    return interval_q_bounds(intervals, ci)


def evaluate_detailed(v: ParamVector, ch: ChannelParams, N: int, eps_coh: float,
                      fluct: FluctuationSpec | None = None,
                      plugin="conservative") -> ScenarioResult:
    """Run the full pipeline and keep every intermediate value.

    Invalid parameter vectors give ``rate_coh = -1`` and status
    ``"invalid"``; estimation failures give rate 0 and status
    ``"infeasible"``.
    """
    if not v.is_valid():
        return ScenarioResult(rate_coh=INVALID_SCORE, status="invalid")
    plugin = resolve_plugin(plugin)
    budget = budget_split(eps_coh, N, v.r_sec, v.r_cor, v.r_s)
    gains = expected_gains(v.protocol(N), ch)
    intervals = gain_intervals(gains, budget.ln_eps_pe)
    res = ScenarioResult(rate_coh=0.0, budget=budget, gains=gains, intervals=intervals)
    try:
        if fluct is None or fluct.is_zero:
            qb = analytic_q_bounds(gains, PoissonCoeffs.from_intensities(v.mu, v.nu, v.omega))
        else:
            qb = fluctuating_q_bounds(v, N, fluct, intervals)
    except (EstimationInfeasible, SaturationError) as exc:
        res.status = f"infeasible: {exc}"
        return res
    res.qbounds = qb
    res.q_code_lower = intervals.code.lo
    res.iae = iae_upper(qb, res.q_code_lower, plugin)
    inp = KeyRateInputs(
        sifted_fraction=v.p_c**2 * gains.q_code,
        e_code=gains.e_code,
        iae_upper=res.iae,
        budget=budget,
        ec_efficiency=ch.ec_efficiency,
        N=N,
    )
    res.terms = collective_terms(inp)
    res.rate_col = max(res.terms["raw"], 0.0)
    res.rate_coh = skr_coherent(res.rate_col, N)
    return res


def evaluate_scenario(v: ParamVector, ch: ChannelParams, N: int, eps_coh: float,
                      fluct: FluctuationSpec | None = None, plugin="conservative") -> float:
    """Coherent-attack key rate of a parameter vector; -1 for invalid vectors."""
    return evaluate_detailed(v, ch, N, eps_coh, fluct, plugin).rate_coh


# ---------------------------------------------------------------------------
# Particle swarm


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 50
    iterations: int = 200
    inertia: float = 0.729
    cognitive: float = 1.494
    social: float = 1.494
    seed: int = 0
    lower: tuple = tuple(DEFAULT_LOWER)
    upper: tuple = tuple(DEFAULT_UPPER)
    workers: int = 1
    init_attempts: int = 1000

    def __post_init__(self):
        if self.particles < 2:
            raise DomainError("particles must be >= 2")
        if self.iterations < 1:
            raise DomainError("iterations must be >= 1")
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise DomainError("box bounds must have equal length and lower <= upper")


def _reflect(x, v, lo, hi):
    over, under = x > hi, x < lo
    x = np.where(over, 2.0 * hi - x, x)
    x = np.where(under, 2.0 * lo - x, x)
    v = np.where(over | under, -v, v)
    return np.clip(x, lo, hi), v


def pso_optimize(objective: Callable, cfg: PsoConfig, *, decode=ParamVector.from_array,
                 feasible: Callable | None = None):
    """Global-best particle swarm maximization inside a box.

    Parameters
    ----------
    objective : callable
        Maps a decoded position to a score to maximize.
    cfg : PsoConfig
    decode : callable
        Turns a position array into the objective's argument; defaults to
        :meth:`ParamVector.from_array`.
    feasible : callable, optional
        Predicate on the decoded position.  Infeasible positions never
        become personal or global bests.  Defaults to ``is_valid()`` when
        the decoded object has one.

    Returns
    -------
    best : decoded position
    best_value : float
    trace : list of float
        Global best after each iteration (nondecreasing).
    """
    lo, hi = np.asarray(cfg.lower, float), np.asarray(cfg.upper, float)
    dim = lo.size
    width = hi - lo
    rng = np.random.default_rng(cfg.seed)
    if feasible is None:
        def feasible(p):
            check = getattr(p, "is_valid", None)
            return True if check is None else bool(check())

    x = np.empty((cfg.particles, dim))
    for i in range(cfg.particles):
        for _ in range(cfg.init_attempts):
            x[i] = lo + rng.random(dim) * width
            if feasible(decode(x[i])):
                break
    vel = (rng.random((cfg.particles, dim)) * 2.0 - 1.0) * width * 0.1

    pool = ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None

    def score(positions):
        decoded = [decode(p) for p in positions]
        if pool is None:
            vals = [objective(d) for d in decoded]
        else:
            vals = list(pool.map(objective, decoded))
        ok = np.array([feasible(d) for d in decoded])
        return np.where(ok, np.asarray(vals, float), -np.inf)

    try:
        fit = score(x)
        p_best, p_val = x.copy(), fit.copy()
        g_idx = int(np.argmax(p_val))
        g_best, g_val = p_best[g_idx].copy(), float(p_val[g_idx])
        trace = []
        for _ in range(cfg.iterations):
            r1 = rng.random((cfg.particles, dim))
            r2 = rng.random((cfg.particles, dim))
            vel = (cfg.inertia * vel
                   + cfg.cognitive * r1 * (p_best - x)
                   + cfg.social * r2 * (g_best - x))
            vel = np.clip(vel, -width, width)
            x, vel = _reflect(x + vel, vel, lo, hi)
            fit = score(x)
            improved = fit > p_val
            p_best[improved] = x[improved]
            p_val[improved] = fit[improved]
            idx = int(np.argmax(p_val))  # first index wins ties
            if p_val[idx] > g_val:
                g_best, g_val = p_best[idx].copy(), float(p_val[idx])
            trace.append(g_val)
    finally:
        if pool is not None:
            pool.shutdown()
    return decode(g_best), g_val, trace
