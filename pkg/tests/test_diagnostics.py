import dataclasses

import numpy as np
import pytest

from ratelab import (
    GapSequence,
    LineSearchRule,
    ProblemInstance,
    check_cd_step_decrease,
    check_descent_margin,
    check_distance_recursion,
    check_gap_decay,
    check_iterate_bound,
    check_prox_stationarity,
    cd_stochastic,
    distance_to_solution,
    fit_power_law,
    gd_fixed,
    gd_linesearch,
    make_l1,
    make_quadratic,
    proxgrad_fixed,
    rate_report,
    replay_step_conditions,
    weighted_squared_distance,
)


def quadratic_seq(n):
    k = np.arange(n + 1, dtype=np.float64)
    return GapSequence.from_values(1.0 / (k + 1.0) ** 2, 0.0)


def log_damped_seq(n):
    k = np.arange(n + 1, dtype=np.float64)
    return GapSequence.from_values(1.0 / ((k + 2.0) * np.log(k + 2.0) ** 2), 0.0)


def harmonic_seq(n):
    k = np.arange(n + 1, dtype=np.float64)
    return GapSequence.from_values(1.0 / (k + 1.0), 0.0)


# ------------------------------------------------------------- gap sequences


def test_gap_sequence_basics():
    g = GapSequence.from_values(np.array([4.0, 2.0, 1.0]), 1.0)
    assert np.array_equal(g.delta, [3.0, 1.0, 0.0])
    assert np.array_equal(g.k, [0, 1, 2])
    assert np.array_equal(g.scaled, [0.0, 1.0, 0.0])
    g2 = GapSequence.from_values(np.array([2.0, 1.5]), 0.0, k=np.array([10, 20]))
    assert np.array_equal(g2.k, [10, 20])


def test_gap_sequence_strict_negative_handling():
    # a hair below fstar is rounding and clamps to zero
    g = GapSequence.from_values(np.array([1.0, -1e-12]), 0.0)
    assert g.delta[1] == 0.0
    # far below fstar means the reference value is wrong: refuse
    with pytest.raises(ValueError):
        GapSequence.from_values(np.array([1.0, -1e-3]), 0.0)
    g2 = GapSequence.from_values(np.array([1.0, -1e-3]), 0.0, strict=False)
    assert g2.delta[1] == 0.0


def test_gap_sequence_from_trace():
    p = make_quadratic([2.0])
    tr = gd_fixed(p, 0.25, np.array([1.0]), 4)
    g = GapSequence.from_trace(tr, 0.0)
    assert np.array_equal(g.delta, tr.f)


# ------------------------------------------------- sequence classification


def test_classification_quadratic_decay():
    """1/(k+1)^2: monotone, summable, scaled gap vanishes."""
    rep = check_gap_decay(quadratic_seq(10**6))
    assert (rep.monotone, rep.summable, rep.scaled_gap_vanishes) == (True, True, True)
    assert rep.certified
    assert rep.tail_ratio <= 1e-4
    assert rep.sum_ratio <= 1e-5


def test_classification_log_damped_decay():
    """1/((k+2) log^2(k+2)): summable but barely; k * delta still vanishes."""
    rep = check_gap_decay(log_damped_seq(10**6))
    assert (rep.monotone, rep.summable, rep.scaled_gap_vanishes) == (True, True, True)
    assert abs(rep.sum_ratio - 0.0071) <= 5e-4
    assert abs(rep.tail_ratio - 0.0273) <= 5e-3


def test_classification_harmonic_decay():
    """1/(k+1): monotone but the series diverges and k * delta tends to 1."""
    rep = check_gap_decay(harmonic_seq(10**6))
    assert (rep.monotone, rep.summable, rep.scaled_gap_vanishes) == (True, False, False)
    assert not rep.certified
    assert abs(rep.sum_ratio - 0.16) <= 5e-3
    assert rep.tail_ratio >= 0.9


def test_classification_stable_at_ten_million_terms():
    """The partial-sum proxy keeps separating the three at 10x the length."""
    assert check_gap_decay(quadratic_seq(10**7)).certified
    rep_log = check_gap_decay(log_damped_seq(10**7))
    assert rep_log.certified
    assert rep_log.sum_ratio <= 0.006  # ratio shrinks as N grows
    rep_har = check_gap_decay(harmonic_seq(10**7))
    assert not rep_har.summable
    assert rep_har.sum_ratio >= 0.13  # ln(10) / (ln 1e7 + gamma) = 0.1379


def test_harmonic_partial_sum_against_closed_form():
    """Independent cross-check: H_n = ln n + gamma + 1/(2n) + O(1/n^2)."""
    n = 10**6
    total = float(np.sum(harmonic_seq(n - 1).delta))
    expected = np.log(n) + np.euler_gamma + 1.0 / (2 * n)
    assert abs(total - expected) <= 1e-9


def test_check_gap_decay_needs_enough_entries():
    with pytest.raises(ValueError):
        check_gap_decay(quadratic_seq(50))


def test_nonmonotone_sequence_flagged():
    v = 1.0 / (np.arange(201, dtype=np.float64) + 1.0)
    v[100] = v[99] * 2.0
    rep = check_gap_decay(GapSequence.from_values(v, 0.0))
    assert not rep.monotone
    assert rep.max_increase > 0


# ------------------------------------------------------------ power-law fits


def test_fit_recovers_exact_power_law():
    k = np.arange(1, 10**5 + 1, dtype=np.float64)
    g = GapSequence.from_values(3.0 / k**2, 0.0, k=k)
    fit = fit_power_law(g, (10, 10**5))
    assert abs(fit.exponent - 2.0) <= 1e-10
    assert abs(fit.constant - 3.0) <= 3e-10
    assert fit.k_lo == 10 and fit.k_hi == 10**5
    assert fit.n_samples >= 190


def test_fit_is_scale_equivariant_and_noise_tolerant():
    k = np.arange(1, 20001, dtype=np.float64)
    base = 5.0 / k**1.5
    g = GapSequence.from_values(base, 0.0, k=k)
    fit = fit_power_law(g, (10, 20000))
    scaled = fit_power_law(GapSequence.from_values(100.0 * base, 0.0, k=k), (10, 20000))
    assert abs(scaled.exponent - fit.exponent) <= 1e-12
    assert abs(scaled.constant - 100.0 * fit.constant) <= 1e-7 * scaled.constant
    rng = np.random.Generator(np.random.PCG64(3))
    noisy = base * (1.0 + rng.uniform(-1e-3, 1e-3, base.size))
    nfit = fit_power_law(GapSequence.from_values(noisy, 0.0, k=k), (10, 20000))
    assert abs(nfit.exponent - 1.5) <= 1e-2


def test_fit_window_validation():
    k = np.arange(1, 1001, dtype=np.float64)
    g = GapSequence.from_values(1.0 / k, 0.0, k=k)
    with pytest.raises(ValueError):
        fit_power_law(g, (10, 50))  # span under one decade
    with pytest.raises(ValueError):
        fit_power_law(g, (0, 100))
    with pytest.raises(ValueError):
        fit_power_law(g, (10, 10**6))  # beyond recorded range


def test_fit_drops_zero_gaps_with_warning():
    k = np.arange(1, 10001, dtype=np.float64)
    v = 1.0 / k**2
    v[5000:] = 0.0
    g = GapSequence.from_values(v, 0.0, k=k)
    with pytest.warns(RuntimeWarning):
        fit = fit_power_law(g, (10, 10000))
    assert abs(fit.exponent - 2.0) <= 1e-8
    v[10:] = 0.0
    with pytest.raises(ValueError), pytest.warns(RuntimeWarning):
        fit_power_law(GapSequence.from_values(v, 0.0, k=k), (10, 10000))


def test_rate_report_fields():
    g = quadratic_seq(10**4)
    rep = rate_report(g, fit_window=(10, 10**4))
    assert rep.monotone
    assert rep.gap_first == 1.0
    assert rep.gap_final == g.delta[-1]
    assert rep.gap_reduction == pytest.approx(1e-8, rel=1e-3)  # final / first
    # final scaled gap over its running maximum
    assert rep.tail_ratio == pytest.approx(g.scaled[-1] / np.max(g.scaled), rel=1e-12)
    # the k+1 offset bends the log-log line near k_lo=10, so allow 2%
    assert abs(rep.fit.exponent - 2.0) <= 0.03
    rep2 = rate_report(harmonic_seq(1000))
    assert rep2.fit is None
    assert rep2.tail_ratio == 1.0  # k/(k+1) peaks at the final entry


# ------------------------------------------------------- trace-based checks


QUAD = make_quadratic([4.0, 1.0, 0.25], rotation_seed=3)
X0 = np.random.Generator(np.random.PCG64(4)).standard_normal(3)


def test_replay_step_conditions_on_linesearch_trace():
    rule = LineSearchRule(gamma=0.5, c1=1.0, c2=0.125)
    tr = gd_linesearch(QUAD, rule, X0, 200)
    rep = replay_step_conditions(tr, 0.5)
    assert rep.all_passed and rep.pass_fraction == 1.0
    assert rep.n_checked == 200
    assert rep.worst_excess <= 0.0
    # a sufficient-decrease condition stricter than the one used must fail
    hard = replay_step_conditions(tr, 8.0)
    assert not hard.all_passed


def test_replay_requires_step_records():
    tr = cd_stochastic(QUAD, None, None, 0, X0, 150)
    with pytest.raises(ValueError):
        replay_step_conditions(tr, 0.5)


def test_descent_margin_detects_tampering():
    tr = gd_fixed(QUAD, 0.25, X0, 100)
    assert check_descent_margin(tr, QUAD.smooth.lipschitz).all_passed
    f_bad = tr.f.copy()
    f_bad[50] = f_bad[49] + 1.0
    bad = dataclasses.replace(tr, f=f_bad)
    assert not check_descent_margin(bad, QUAD.smooth.lipschitz).all_passed


def test_cd_step_decrease():
    tr = cd_stochastic(QUAD, None, None, 5, X0, 300)
    rep = check_cd_step_decrease(tr, QUAD.smooth.coord_lipschitz)
    assert rep.all_passed
    assert rep.n_checked == 300


def test_iterate_bound_pass_and_fail():
    tr = gd_fixed(QUAD, 0.25, X0, 256, stride="all")
    xbar = QUAD.solution_projector(X0)
    ok = check_iterate_bound(tr, xbar, 0.0, 0.0)  # Fejer: no budget term needed
    assert ok.ok and ok.max_excess <= 0.0
    assert ok.n_checked == 257
    bad = check_iterate_bound(tr, X0, 0.0, 0.0)  # x0 is not a solution
    assert not bad.ok
    assert bad.max_excess > 0.0


def test_distance_recursion_holds_for_fixed_step():
    tr = gd_fixed(QUAD, 0.25, X0, 128, stride="all")
    xbar = QUAD.solution_projector(X0)
    rep = check_distance_recursion(tr, xbar, 0.25, 0.0)
    assert rep.all_passed
    assert rep.n_checked == 128
    sparse = gd_fixed(QUAD, 0.25, X0, 128, stride=16)
    with pytest.raises(ValueError):
        check_distance_recursion(sparse, xbar, 0.25, 0.0)


def test_distance_to_solution_contracts():
    tr = gd_fixed(QUAD, 0.25, X0, 2000)
    rep = distance_to_solution(tr, QUAD.solution_projector)
    assert rep.tail_ok
    assert rep.final_ratio <= 1e-3
    assert rep.tail_ratio <= 1.0 + 1e-9


def test_weighted_squared_distance_matches_loop():
    rng = np.random.Generator(np.random.PCG64(8))
    for _ in range(20):
        x, xbar = rng.standard_normal(6), rng.standard_normal(6)
        lbar = rng.uniform(0.5, 4.0, 6)
        probs = rng.uniform(0.05, 1.0, 6)
        probs /= probs.sum()
        manual = sum(
            lbar[i] / probs[i] * (x[i] - xbar[i]) ** 2 for i in range(6)
        )
        assert weighted_squared_distance(x, xbar, lbar, probs) == pytest.approx(
            manual, rel=1e-12
        )


def test_prox_stationarity_rejects_non_solutions():
    base = make_quadratic([1.0], offset=np.array([3.0]))
    p = ProblemInstance(smooth=base.smooth, regularizer=make_l1(1.0))
    assert check_prox_stationarity(p, np.array([2.0]), 1.0).ok
    rep = check_prox_stationarity(p, np.array([1.0]), 1.0)
    assert not rep.ok
    assert rep.step_norm > 0.1
    smooth_only = make_quadratic([2.0, 1.0])
    assert check_prox_stationarity(smooth_only, np.zeros(2), 2.0).ok
    assert not check_prox_stationarity(smooth_only, np.ones(2), 2.0).ok


def test_proxgrad_trace_replays_its_decrease():
    base = make_quadratic([2.0, 0.5], offset=np.array([1.0, -1.0]))
    p = ProblemInstance(smooth=base.smooth, regularizer=make_l1(0.2))
    tr = proxgrad_fixed(p, 2.0, np.array([3.0, 3.0]), 100)
    assert replay_step_conditions(tr, 1.0).all_passed
