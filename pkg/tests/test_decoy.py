import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tfqkd.channel import PAIRS
from tfqkd.decoy import (
    PoissonCoeffs,
    QBounds,
    Q_NAMES,
    YieldTable,
    analytic_q_bounds,
    lp_q_bounds,
    poisson_pn,
    poisson_tail,
    synth_gains_from_yields,
)
from tfqkd.errors import DomainError, EstimationInfeasible
from tfqkd.interval import Interval

from oracles import poisson_exact, synth_gain_bruteforce

TOL = 1e-9


def random_triple(rng):
    mu = rng.uniform(0.05, 1.0)
    nu = mu * rng.uniform(0.02, 0.95)
    omega = nu * rng.uniform(0.02, 0.95)
    return mu, nu, omega


# -- Poisson terms ----------------------------------------------------------

def test_poisson_values():
    assert poisson_pn(0.0, 0) == 1.0
    assert poisson_pn(0.5, 0) == pytest.approx(0.606531, abs=5e-7)
    assert poisson_pn(0.5, 2) == pytest.approx(0.0758163, abs=5e-8)
    assert poisson_pn(30.0, 200) == pytest.approx(poisson_exact(30.0, 200), rel=1e-10)


def test_poisson_tail_values():
    assert poisson_tail(0.7, 0) == 1.0
    assert poisson_tail(0.5, 3) == pytest.approx(1 - math.exp(-0.5) * 1.625, rel=1e-12)
    assert poisson_tail(0.5, 3) == pytest.approx(0.014388, abs=5e-7)
    assert poisson_tail(1e-6, 1) == pytest.approx(-math.expm1(-1e-6), rel=1e-12)


def test_poisson_domain():
    with pytest.raises(DomainError):
        poisson_pn(-0.1, 1)
    with pytest.raises(DomainError):
        poisson_tail(0.1, -1)


@given(st.floats(0.0, 5.0), st.integers(3, 20))
def test_coeffs_sum_with_tail_to_one(x, cutoff):
    co = PoissonCoeffs.from_intensities(max(x, 1e-3) + 0.2, max(x, 1e-3) + 0.1, max(x, 1e-3), cutoff)
    for vec, tail in zip((co.a, co.b, co.c), co.tails):
        assert vec.sum() + tail == pytest.approx(1.0, abs=1e-12)


def test_ratio_monotonicity_grid():
    xs = np.linspace(0.01, 2.0, 12)
    for mu in xs:
        for nu in xs[xs <= mu]:
            r = [poisson_pn(mu, k) / poisson_pn(nu, k) for k in range(15)]
            assert all(b >= a * (1 - 1e-12) for a, b in zip(r, r[1:]))


# -- synthetic gains ---------------------------------------------------------

def test_synth_trivial_tables():
    ints = (0.5, 0.1, 0.01)
    zero = synth_gains_from_yields(YieldTable(np.zeros((11, 11))), ints)
    assert all(v == 0 for v in zero.decoy_gains.values())
    ones = synth_gains_from_yields(YieldTable(np.ones((11, 11))), ints)
    co = PoissonCoeffs.from_intensities(*ints)
    mass = {"m": co.a.sum(), "n": co.b.sum(), "w": co.c.sum(), "o": 1.0}
    for p in PAIRS:
        assert ones[p] == pytest.approx(mass[p[0]] * mass[p[1]], rel=1e-12)
    y = np.zeros((11, 11))
    y[0, 0] = 1.0
    vac = synth_gains_from_yields(YieldTable(y), ints)
    p0 = {"m": math.exp(-0.5), "n": math.exp(-0.1), "w": math.exp(-0.01), "o": 1.0}
    for p in PAIRS:
        assert vac[p] == pytest.approx(p0[p[0]] * p0[p[1]], rel=1e-12)


def test_synth_matches_bruteforce(rng):
    yt = YieldTable.random(rng)
    ints = random_triple(rng)
    gs = synth_gains_from_yields(yt, ints)
    role = {"m": ints[0], "n": ints[1], "w": ints[2], "o": 0.0}
    for p in PAIRS:
        assert gs[p] == pytest.approx(synth_gain_bruteforce(yt.y, role[p[0]], role[p[1]]), rel=1e-12, abs=1e-300)


# -- analytic bounds ----------------------------------------------------------

def test_all_zero_gains():
    ints = (0.5, 0.1, 0.01)
    qb = analytic_q_bounds({p: 0.0 for p in PAIRS}, PoissonCoeffs.from_intensities(*ints))
    for k in ("q00_u", "q10_u", "q01_u", "q11_u", "qsum_l"):
        assert getattr(qb, k) == 0.0
    # the two-photon bound keeps the omega tail mass beyond two photons, so it is
    # small but not zero: a0 a2 * a1 * tail_w(3) / (a2 c1 - a1 c2)
    a = [poisson_exact(ints[0], k) for k in range(3)]
    c = [poisson_exact(ints[2], k) for k in range(3)]
    tail = 1 - sum(c)
    expected = a[0] * a[2] * a[1] * tail / (a[2] * c[1] - a[1] * c[2])
    assert qb.q20_u == pytest.approx(expected, rel=1e-6)
    assert qb.q02_u == qb.q20_u


def test_q00_hand_value():
    gains = {p: 0.0 for p in PAIRS}
    gains["oo"] = 1e-8
    qb = analytic_q_bounds(gains, PoissonCoeffs.from_intensities(0.5, 0.1, 0.01))
    assert qb.q00_u == pytest.approx(math.exp(-1) * 1e-8, rel=1e-12)
    assert qb.q00_u == pytest.approx(3.6788e-9, rel=1e-4)


def test_ordering_violation_names_bound():
    gains = {p: 0.01 for p in PAIRS}
    with pytest.raises(EstimationInfeasible) as info:
        analytic_q_bounds(gains, PoissonCoeffs.from_intensities(0.1, 0.5, 0.01))
    assert info.value.bound is not None


def check_sandwich(yt, ints, qb):
    co = PoissonCoeffs.from_intensities(*ints)
    truth = yt.q_values(co.a)
    bad = [k for k in Q_NAMES if truth[k] > getattr(qb, k + "_u") + TOL]
    if truth["qsum"] < qb.qsum_l - TOL:
        bad.append("qsum")
    return bad


def test_analytic_sandwich(rng):
    for _ in range(300):
        yt = YieldTable.random(rng)
        ints = random_triple(rng)
        qb = analytic_q_bounds(synth_gains_from_yields(yt, ints), PoissonCoeffs.from_intensities(*ints))
        assert not check_sandwich(yt, ints, qb)
        assert qb.qsum_l <= qb.upper_sum
        assert all(0.0 <= v <= 1.0 for v in qb.as_dict().values())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_analytic_sandwich_property(seed):
    rng = np.random.default_rng(seed)
    yt = YieldTable.random(rng)
    ints = random_triple(rng)
    qb = analytic_q_bounds(synth_gains_from_yields(yt, ints), PoissonCoeffs.from_intensities(*ints))
    assert not check_sandwich(yt, ints, qb)


# -- LP reference -----------------------------------------------------------------

def test_lp_vacuum_equality(rng):
    yt = YieldTable.random(rng)
    ints = (0.6, 0.2, 0.02)
    gs = synth_gains_from_yields(yt, ints)
    co = PoissonCoeffs.from_intensities(*ints)
    qb = lp_q_bounds(gs.decoy_gains, co, cutoff=10)
    assert qb.q00_u == pytest.approx(co.a[0] ** 2 * gs["oo"], rel=1e-9, abs=1e-15)


def test_lp_sandwich_and_tighter(rng):
    for _ in range(40):
        yt = YieldTable.random(rng)
        ints = random_triple(rng)
        gs = synth_gains_from_yields(yt, ints)
        co = PoissonCoeffs.from_intensities(*ints)
        lp = lp_q_bounds(gs.decoy_gains, co, cutoff=13)
        an = analytic_q_bounds(gs, co)
        assert not check_sandwich(yt, ints, lp)
        for k in Q_NAMES:
            assert getattr(lp, k + "_u") <= getattr(an, k + "_u") + TOL
        assert lp.qsum_l >= an.qsum_l - TOL


def test_lp_monotone_in_interval_width(rng):
    yt = YieldTable.random(rng)
    ints = (0.5, 0.15, 0.02)
    gs = synth_gains_from_yields(yt, ints)
    co = PoissonCoeffs.from_intensities(*ints)
    prev = None
    for w in (0.0, 1e-4, 1e-3, 1e-2):
        iv = {p: Interval(max(q * (1 - w), 0), min(q * (1 + w), 1)) for p, q in gs.decoy_gains.items()}
        qb = lp_q_bounds(iv, co, cutoff=10)
        if prev is not None:
            for k in Q_NAMES:
                assert getattr(qb, k + "_u") >= getattr(prev, k + "_u") - TOL
            assert qb.qsum_l <= prev.qsum_l + TOL
        prev = qb


def test_lp_infeasible_intervals():
    co = PoissonCoeffs.from_intensities(0.5, 0.1, 0.01)
    gains = {p: Interval.point(0.0) for p in PAIRS}
    gains["mm"] = Interval.point(0.9)
    gains["oo"] = Interval.point(0.0)
    # with every single-sided gain zero, a 0.9 two-sided gain is impossible only if the
    # yields of photons sent by both parties cannot reach it; force inconsistency explicitly
    gains["mo"] = Interval.point(0.5)
    gains["om"] = Interval.point(0.5)
    gains["oo"] = Interval.point(0.9)
    with pytest.raises(EstimationInfeasible) as info:
        lp_q_bounds(gains, co, cutoff=6)
    assert info.value.bound == "lp"
