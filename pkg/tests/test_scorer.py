"""Tests for the mission scoring formula."""

import math

import numpy as np
import pytest

from orchard.scorer import ScoreInputs, ScoreReport, compute_score


def score(c_r, c_t, t_m, d_m, k, **kwargs):
    return compute_score(ScoreInputs(c_r, c_t, t_m, d_m, k, **kwargs))


def test_reference_mission_scores_exactly_100():
    report = score(10, 10, 100.0, 150.0, 0)
    assert report.p_f == pytest.approx(50.0, abs=1e-12)
    assert report.p_t == pytest.approx(25.0, abs=1e-12)
    assert report.p_d == pytest.approx(25.0, abs=1e-12)
    assert report.p_c == 0.0
    assert report.p == pytest.approx(100.0, abs=1e-12)


def test_miscount_and_collisions_cost_points():
    report = score(9, 10, 100.0, 150.0, 2)
    assert report.p_f == pytest.approx(30.0, abs=1e-12)
    assert report.p_t == pytest.approx(25.0, abs=1e-12)
    assert report.p_d == pytest.approx(25.0, abs=1e-12)
    assert report.p_c == pytest.approx(50.0, abs=1e-12)
    assert report.p == pytest.approx(30.0, abs=1e-12)


def test_slow_long_flight_component_values():
    # correct count, leisurely flight: the time and distance terms decay
    report = score(12, 12, 161.5, 153.5, 0)
    assert report.p_f == pytest.approx(50.0, abs=1e-12)
    assert report.p_t == pytest.approx(13.51, abs=0.05)
    assert report.p_d == pytest.approx(23.88, abs=0.05)
    assert report.p == pytest.approx(50.0 + report.p_t + report.p_d,
                                     abs=1e-12)


def test_components_recompute_from_formula():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        c_t = int(rng.integers(0, 40))
        c_r = int(rng.integers(0, 40))
        t_m = float(rng.uniform(1.0, 400.0))
        d_m = float(rng.uniform(0.0, 600.0))
        k = int(rng.integers(0, 5))
        report = score(c_r, c_t, t_m, d_m, k)
        assert report.p_f == pytest.approx(
            50.0 * (1.0 - 4.0 * abs(c_r - c_t) / max(c_t, 1)), abs=1e-9)
        assert report.p_t == pytest.approx(
            25.0 * math.exp(1.0 - t_m / 100.0), abs=1e-9)
        assert report.p_d == pytest.approx(
            25.0 * math.exp(2.0 * (1.0 - d_m / 150.0)), abs=1e-9)
        assert report.p_c == pytest.approx(25.0 * k, abs=1e-9)
        assert report.p == pytest.approx(
            report.p_f + report.p_t + report.p_d - report.p_c, abs=1e-9)


def test_count_term_peaks_at_exact_count_and_is_symmetric():
    base = score(10, 10, 100.0, 150.0, 0).p_f
    for err in range(1, 6):
        low = score(10 - err, 10, 100.0, 150.0, 0).p_f
        high = score(10 + err, 10, 100.0, 150.0, 0).p_f
        assert low == pytest.approx(high, abs=1e-12)
        assert low < base
    # large errors push the term negative; nothing clamps it
    assert score(30, 10, 100.0, 150.0, 0).p_f < 0.0


def test_time_and_distance_terms_decrease():
    times = [score(5, 5, t, 150.0, 0).p_t for t in (50.0, 100.0, 200.0)]
    assert times[0] > times[1] > times[2]
    dists = [score(5, 5, 100.0, d, 0).p_d for d in (75.0, 150.0, 300.0)]
    assert dists[0] > dists[1] > dists[2]
    assert score(5, 5, 100.0, 150.0, 0).p_t == pytest.approx(25.0)
    assert score(5, 5, 100.0, 150.0, 0).p_d == pytest.approx(25.0)


def test_collision_penalty_is_linear():
    for k in range(4):
        a = score(5, 5, 100.0, 150.0, k)
        b = score(5, 5, 100.0, 150.0, k + 1)
        assert b.p_c - a.p_c == pytest.approx(25.0, abs=1e-12)
        assert a.p - b.p == pytest.approx(25.0, abs=1e-12)


def test_zero_true_count_guard():
    assert score(0, 0, 100.0, 150.0, 0).p_f == pytest.approx(50.0)
    assert score(1, 0, 100.0, 150.0, 0).p_f == pytest.approx(-150.0)


def test_custom_reference_constants():
    report = score(5, 5, 200.0, 300.0, 0, t_b=200.0, d_b=300.0)
    assert report.p_t == pytest.approx(25.0, abs=1e-12)
    assert report.p_d == pytest.approx(25.0, abs=1e-12)


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        ScoreInputs(5, -1, 100.0, 150.0, 0)
    with pytest.raises(ValueError):
        ScoreInputs(5, 5, 0.0, 150.0, 0)
    with pytest.raises(ValueError):
        ScoreInputs(5, 5, 100.0, -1.0, 0)
    with pytest.raises(ValueError):
        ScoreInputs(5, 5, 100.0, 150.0, -1)
    with pytest.raises(ValueError):
        ScoreInputs(5, 5, 100.0, 150.0, 0, t_b=0.0)
    with pytest.raises(ValueError):
        ScoreInputs(5, 5, 100.0, 150.0, 0, d_b=-10.0)


def test_report_checks_its_own_consistency():
    with pytest.raises(ValueError):
        ScoreReport(p_f=50.0, p_t=25.0, p_d=25.0, p_c=0.0, p=90.0)
