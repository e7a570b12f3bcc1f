# tests/test_estimators.py
import math

import numpy as np
import pytest

from src.services.estimators import (
    check_levels,
    chung_statistic,
    dyadic_levels,
    estimate_small_ball,
    fit_small_ball_exponent,
    gaussian_tail_check,
    local_modulus_statistic,
    select_pairs,
    standardized_increments,
    tail_sandwich,
    uniform_modulus_statistic,
    uniform_reference_band,
    wilson_interval,
)
from src.services.fields import Exponents
from src.services.regression import fit_slope
from src.services.sampler import path_generator
from tests.conftest import make_ensemble

LINE = Exponents(axis_exponents=(1.0,), gammas=(0.0,), big_q=1.0)


def frechet_ensemble(n_paths: int, scale: float, shape: float):
    """Центр и одна точка; |приращение| имеет P(|X| ≤ u) = exp(−(scale/u)^shape)."""
    u = (np.arange(n_paths) + 0.5) / n_paths
    x = scale * (-np.log(u)) ** (-1.0 / shape)
    x[1::2] *= -1.0
    values = np.column_stack([np.zeros(n_paths), x])
    return make_ensemble(values, [(0.5,), (0.51,)])


def test_check_levels():
    assert check_levels([0.08, 0.04]) == (0.08, 0.04)
    assert dyadic_levels(4, 6) == (1 / 16, 1 / 32, 1 / 64)
    for bad in ([], [0.1], [0.04, 0.08], [0.05, 0.05], [0.0]):
        with pytest.raises(ValueError):
            check_levels(bad)


def test_tail_sandwich_values():
    lower, upper = tail_sandwich(1.0)
    assert lower == pytest.approx(0.24197, abs=1e-5)
    assert upper == pytest.approx(0.48394, abs=1e-5)
    assert lower < math.erfc(1.0 / math.sqrt(2.0)) < upper


def test_gaussian_tail_check_on_normal_samples():
    samples = path_generator(11, 0).standard_normal(40_000)
    report = gaussian_tail_check(samples)
    assert report.sandwich_passed
    assert report.n_samples == 40_000
    assert [level.x for level in report.levels] == [1.0, 2.0, 3.0]


def test_gaussian_tail_check_rejects_heavy_tails():
    samples = path_generator(11, 0).standard_cauchy(20_000)
    assert not gaussian_tail_check(samples).passed


def test_gaussian_tail_check_needs_enough_samples():
    with pytest.raises(ValueError):
        gaussian_tail_check(np.zeros(100))


def test_wilson_interval():
    low, high = wilson_interval(50, 100)
    assert low < 0.5 < high
    assert wilson_interval(0, 100)[0] == pytest.approx(0.0, abs=1e-12)
    assert wilson_interval(100, 100)[1] == pytest.approx(1.0)


def test_small_ball_exponent_recovered_from_synthetic_ensemble():
    r = 0.05
    ensemble = frechet_ensemble(20_000, r, 4.0)
    levels = [(r, r / ratio) for ratio in (1.1, 1.2, 1.3, 1.4, 1.5)]
    curve = estimate_small_ball(ensemble, 0, levels, LINE)
    for entry, ratio in zip(curve.entries, (1.1, 1.2, 1.3, 1.4, 1.5)):
        assert entry.p_hat == pytest.approx(math.exp(-ratio ** 4), abs=2e-3)
        assert entry.ci_low <= entry.p_hat <= entry.ci_high
        assert entry.n_ball_points == 1 and entry.resolution_warning
    assert curve.warnings
    assert fit_small_ball_exponent(curve).slope == pytest.approx(4.0, abs=0.1)


def test_small_ball_preconditions():
    ensemble = frechet_ensemble(2_000, 0.05, 4.0)
    with pytest.raises(ValueError):
        estimate_small_ball(ensemble, 0, [(0.005, 0.001)], LINE)
    with pytest.raises(ValueError):
        estimate_small_ball(ensemble, 0, [(0.05, -0.01)], LINE)
    with pytest.raises(ValueError):
        estimate_small_ball(frechet_ensemble(500, 0.05, 4.0), 0, [(0.05, 0.04)], LINE)


def test_degenerate_small_ball_probabilities_cannot_be_fitted():
    ensemble = frechet_ensemble(2_000, 0.05, 4.0)
    curve = estimate_small_ball(ensemble, 0, [(0.05, u) for u in (1e3, 2e3, 3e3, 4e3)], LINE)
    assert all(e.p_hat == 1.0 for e in curve.entries)
    with pytest.raises(ValueError):
        fit_small_ball_exponent(curve)


def test_chung_statistic_and_sign_flip():
    ensemble = frechet_ensemble(2_000, 0.05, 4.0)
    radii = [0.08, 0.04, 0.02]
    report = chung_statistic(ensemble, 0, radii, LINE)
    assert report.values.shape == (3, 2_000)
    norm = 0.02 * math.log(math.log(50.0)) ** -1.0
    assert report.values[2] == pytest.approx(np.abs(ensemble.values[:, 1]) / norm)
    assert np.array_equal(report.proxy, report.values[1:].min(axis=0))
    assert np.array_equal(chung_statistic(ensemble.negated(), 0, radii, LINE).values, report.values)
    with pytest.raises(ValueError):
        chung_statistic(ensemble, 0, [0.005], LINE)


def test_local_modulus_statistic_reference():
    ensemble = frechet_ensemble(1_000, 0.05, 4.0)
    distances = np.array([0.0, 0.01])
    report = local_modulus_statistic(ensemble, 0, [0.08, 0.04], distances, "d")
    assert report.reference == (math.sqrt(2.0), math.sqrt(2.0))
    assert report.proxy_kind == "limsup"
    delta = local_modulus_statistic(ensemble, 0, [0.08, 0.04], distances, "delta", (0.5, 2.0))
    assert delta.reference == pytest.approx((math.sqrt(2.0) * 0.5, math.sqrt(2.0) * 2.0))
    assert local_modulus_statistic(ensemble, 0, [0.08], distances, "delta").within_reference() is None
    with pytest.raises(ValueError):
        local_modulus_statistic(ensemble, 0, [0.08], np.array([0.01]), "d")


def test_uniform_modulus_matches_brute_force():
    rng_values = path_generator(3, 0).standard_normal((40, 5))
    ensemble = make_ensemble(rng_values, [(float(i),) for i in range(5)])
    rows, cols = select_pairs(5)
    distances = np.linspace(0.005, 0.09, len(rows))
    levels = [0.09, 0.05, 0.02]
    report = uniform_modulus_statistic(ensemble, levels, (rows, cols), distances, "delta", (1.0, 2.0))

    for k, r in enumerate(levels):
        inside = distances <= r
        d = distances[inside]
        stat = np.abs(rng_values[:, rows[inside]] - rng_values[:, cols[inside]]) / (d * np.sqrt(np.log(1.0 / d)))
        assert report.values[k] == pytest.approx(stat.max(axis=1), rel=1e-12)
    assert np.all(np.diff(report.values, axis=0) <= 0.0)
    assert report.within_reference(widen=1e9)

    with pytest.raises(ValueError):
        uniform_modulus_statistic(ensemble, [0.09, 0.001], (rows, cols), distances, "delta")
    with pytest.raises(ValueError):
        uniform_modulus_statistic(ensemble, levels, (rows, cols), distances[:-1], "delta")


def test_select_pairs():
    rows, cols = select_pairs(5)
    assert len(rows) == 10 and np.all(rows < cols)
    sub_rows, sub_cols = select_pairs(5, max_pairs=4, seed=9)
    assert len(sub_rows) == 4
    again = select_pairs(5, max_pairs=4, seed=9)
    assert np.array_equal(sub_rows, again[0]) and np.array_equal(sub_cols, again[1])


def test_uniform_reference_band():
    low, high = uniform_reference_band(4.0, 2.0, 0.5, "delta")
    assert (low, high) == pytest.approx((2.0, math.sqrt(8.0) * 2.0))
    low, high = uniform_reference_band(4.0, 2.0, 0.5, "d")
    assert (low, high) == pytest.approx((1.0, math.sqrt(8.0)))


def test_standardized_increments():
    values = np.column_stack([np.arange(10.0), np.zeros(10)])
    ensemble = make_ensemble(values, [(1.0,), (2.0,)])
    z = standardized_increments(ensemble, 0, 1)
    assert np.std(z, ddof=1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        standardized_increments(make_ensemble(np.ones((10, 2)), [(1.0,), (2.0,)]), 0, 1)


def test_fit_slope():
    fit = fit_slope([0.0, 1.0, 2.0, 3.0], [1.0, 3.0, 5.0, 7.0])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_slope([0.0, 1.0, 2.0], [0.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        fit_slope([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, np.nan, 3.0])
