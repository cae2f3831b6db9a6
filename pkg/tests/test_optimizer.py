import math

import numpy as np
import pytest

from tfqkd.channel import ChannelParams, code_mode_stats, expected_gains
from tfqkd.decoy import PoissonCoeffs, analytic_q_bounds
from tfqkd.fluctuation import FluctuationSpec
from tfqkd.keyrate import KeyRateInputs, collective_terms, skr_coherent
from tfqkd.optimizer import (
    DEFAULT_LOWER,
    DEFAULT_UPPER,
    INVALID_SCORE,
    REFERENCE_VECTOR,
    ParamVector,
    PsoConfig,
    evaluate_detailed,
    evaluate_scenario,
    pso_optimize,
)
from tfqkd.statistics import budget_split, gain_intervals

CH100 = ChannelParams(distance_km=100)
TARGET = np.array([0.4, 0.1, 0.02, 0.4, 0.2, 0.1, 0.1, 0.2, 0.1, 0.2])


def quadratic(v):
    return -float(((v.as_array() - TARGET) ** 2).sum())


def test_param_vector_roundtrip_and_validity():
    v = ParamVector.from_array(TARGET)
    assert np.array_equal(v.as_array(), TARGET)
    assert v.is_valid()
    assert not ParamVector(0.1, 0.2, 0.01, 0.5, 0.1, 0.1, 0.1, 0.2, 0.2, 0.2).is_valid()
    assert not ParamVector(0.5, 0.2, 0.01, 0.5, 0.3, 0.2, 0.1, 0.2, 0.2, 0.2).is_valid()
    assert not ParamVector(0.5, 0.2, 0.01, 0.5, 0.1, 0.1, 0.1, 0.5, 0.3, 0.3).is_valid()


def test_sentinel_and_zero_code_probability():
    bad = ParamVector(0.1, 0.2, 0.01, 0.5, 0.1, 0.1, 0.1, 0.2, 0.2, 0.2)
    assert evaluate_scenario(bad, CH100, 10**12, 1e-10) == INVALID_SCORE
    no_code = ParamVector(0.1, 0.02, 0.002, 0.0, 0.3, 0.3, 0.3, 0.2, 0.2, 0.2)
    assert evaluate_scenario(no_code, CH100, 10**12, 1e-10, plugin="constant:0") == 0.0


def test_paper_point_conservative_and_optimistic():
    assert evaluate_scenario(REFERENCE_VECTOR, CH100, 10**12, 1e-10) == 0.0
    assert evaluate_scenario(REFERENCE_VECTOR, CH100, 10**12, 1e-10, plugin="constant:0") > 0.0


def test_stagewise_reproduction():
    v = REFERENCE_VECTOR
    res = evaluate_detailed(v, CH100, 10**12, 1e-10, plugin="constant:0.05")
    # rebuild every stage independently from the logged intermediates
    budget = budget_split(1e-10, 10**12, v.r_sec, v.r_cor, v.r_s)
    assert budget == res.budget
    gains = expected_gains(v.protocol(10**12), CH100)
    assert gains == res.gains
    assert gains.q_code == code_mode_stats(v.mu, CH100).q_code
    iv = gain_intervals(gains, budget.ln_eps_pe)
    assert iv == res.intervals
    qb = analytic_q_bounds(gains, PoissonCoeffs.from_intensities(v.mu, v.nu, v.omega))
    assert qb == res.qbounds
    inp = KeyRateInputs(v.p_c**2 * gains.q_code, gains.e_code, 0.05, budget, CH100.ec_efficiency, 10**12)
    r_col = max(collective_terms(inp)["raw"], 0.0)
    assert skr_coherent(r_col, 10**12) == pytest.approx(res.rate_coh, abs=1e-12)


def test_fluctuating_pipeline_runs():
    fl = FluctuationSpec.symmetric(0.2)
    r_fl = evaluate_scenario(REFERENCE_VECTOR, CH100, 10**12, 1e-10, fl, plugin="constant:0")
    r_ex = evaluate_scenario(REFERENCE_VECTOR, CH100, 10**12, 1e-10, plugin="constant:0")
    assert 0.0 < r_fl <= r_ex
    # overlapping ranges are an estimation failure, scored as a zero rate
    res = evaluate_detailed(REFERENCE_VECTOR, CH100, 10**12, 1e-10, FluctuationSpec.symmetric(0.8))
    assert res.rate_coh == 0.0 and res.status.startswith("infeasible")


def test_pso_finds_known_optimum():
    best, val, trace = pso_optimize(quadratic, PsoConfig(seed=3))
    assert np.linalg.norm(best.as_array() - TARGET) < 1e-3
    assert best.is_valid()
    assert val == pytest.approx(quadratic(best))


def test_pso_trace_monotone_and_reproducible():
    cfg = PsoConfig(particles=15, iterations=40, seed=7)
    obj = lambda v: math.sin(5 * v.mu) + math.cos(7 * v.p_c) - v.r_s  # noqa: E731
    a = pso_optimize(obj, cfg)
    b = pso_optimize(obj, cfg)
    assert a[2] == b[2] and a[1] == b[1]
    assert all(y >= x for x, y in zip(a[2], a[2][1:]))
    c = pso_optimize(obj, PsoConfig(particles=15, iterations=40, seed=7, workers=4))
    assert c[2] == a[2]


def test_pso_never_returns_invalid_vector():
    # objective rewards violating mu > nu; the swarm must still report a valid vector
    best, _, _ = pso_optimize(lambda v: v.nu - v.mu, PsoConfig(particles=10, iterations=20, seed=1))
    assert best.is_valid()


def test_pso_generic_box():
    cfg = PsoConfig(particles=20, iterations=100, seed=0, lower=(-5.0, -5.0), upper=(5.0, 5.0))
    best, val, _ = pso_optimize(lambda x: -((x[0] - 1) ** 2 + (x[1] + 2) ** 2), cfg,
                                decode=lambda x: np.array(x))
    np.testing.assert_allclose(best, [1, -2], atol=1e-4)


def test_config_validation():
    with pytest.raises(ValueError):
        PsoConfig(particles=1)
    with pytest.raises(ValueError):
        PsoConfig(iterations=0)
    assert len(DEFAULT_LOWER) == len(DEFAULT_UPPER) == 10
