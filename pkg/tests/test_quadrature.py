# tests/test_quadrature.py
import math

import mpmath as mp
import numpy as np
import pytest
from pydantic import ValidationError

from src.services.fields import Point, SpdeModel
from src.services.quadrature import (
    IntegralResult,
    QuadratureSpec,
    adaptive_cubature,
    band_boxes,
    fingerprint,
    lag_rule,
    riesz_constant,
    shell_function,
    smooth_cutoff,
    spatial_profile,
    tanh_sinh_rule,
    time_domain_inner_product,
    transition_density,
)
from src.services.quadrature.kernels import stable_cosine_transform, time_factor
from src.errors import QuadratureError


def test_tanh_sinh_handles_endpoint_singularity():
    u, _, w = tanh_sinh_rule(4)
    assert float(np.sum(w * u ** -0.5)) == pytest.approx(2.0, rel=1e-7)
    assert float(np.sum(w * 3.0 * u ** 2)) == pytest.approx(1.0, rel=1e-10)


def test_adaptive_cubature_on_product_integrand():
    result = adaptive_cubature(
        lambda x: x[:, 0] * x[:, 1], [[0.0, 0.5, 1.0], [0.0, 1.0]],
        rel_tol=1e-10, abs_tol=1e-14, max_evals=100_000,
    )
    assert result.value == pytest.approx(0.25, rel=1e-10)
    assert not result.exhausted


def test_adaptive_cubature_empty_grid():
    result = adaptive_cubature(lambda x: x[:, 0], [[1.0]], rel_tol=1e-6, abs_tol=1e-12, max_evals=1000)
    assert result.value == 0.0 and result.evals == 0


def test_riesz_constant_planar_coulomb():
    # (2π)^{−2} ∫ e^{ix·ξ} |ξ|^{−1} dξ = 1/(2π|x|)
    assert riesz_constant(1.0, 2) == pytest.approx(1.0 / (2.0 * math.pi), rel=1e-14)


@pytest.mark.parametrize("z", [0.5, 2.0, 10.0])
def test_stable_cosine_transform_cauchy(z):
    assert stable_cosine_transform(1.0, z) == pytest.approx(1.0 / (1.0 + z * z), rel=1e-8)


def test_stable_cosine_transform_against_mpmath():
    mp.mp.dps = 30
    expected = mp.quad(lambda s: mp.cos(s) * mp.exp(-s ** mp.mpf("1.5")), [0, 1, 2, 4, 8, mp.inf])
    assert stable_cosine_transform(1.5, 1.0) == pytest.approx(float(expected), rel=1e-8)


def test_shell_function_cauchy_closed_form():
    phi = shell_function(1.0)
    z = np.array([1e-3, 0.1, 1.0, 7.0, 100.0])
    assert np.allclose(phi(z), 2.0 * z ** 2 / (1.0 + z ** 2), rtol=1e-4, atol=0.0)
    assert phi(np.array([0.0]))[0] == 0.0
    assert np.array_equal(phi(-z), phi(z))


def test_spatial_profile_gaussian_matches_hypergeometric():
    mp.mp.dps = 30
    a, b = mp.mpf("0.25"), mp.mpf("0.5")
    scale = mp.gamma(a) / (2 * mp.pi)
    profile = spatial_profile(2.0, 0.5, 1)
    for y in (0.0, 0.7, 3.0, 20.0):
        expected = scale * mp.hyp1f1(a, b, -mp.mpf(y) ** 2 / 4)
        assert float(profile(np.array([y]))[0]) == pytest.approx(float(expected), rel=1e-5)


def test_spatial_profile_gaussian_against_direct_integral():
    mp.mp.dps = 25
    profile = spatial_profile(2.0, 0.5, 1)
    y = 1.3
    direct = mp.quad(lambda r: mp.cos(r * y) * r ** mp.mpf(-0.5) * mp.exp(-r ** 2), [0, 1, mp.inf]) / mp.pi
    assert float(profile(np.array([y]))[0]) == pytest.approx(float(direct), rel=1e-6)


def test_heat_transition_density(heat_model):
    assert transition_density(heat_model, 1.0, 0.0) == pytest.approx(1.0 / math.sqrt(4.0 * math.pi))
    with pytest.raises(ValueError):
        transition_density(heat_model, 0.0, 0.0)
    with pytest.raises(ValueError):
        transition_density(heat_model, 1.0, [0.0, 0.0])


def test_lag_rule_white_noise_weights_sum_to_overlap():
    # при H = 1/2 сумма весов равна ½(t + t' − |t − t'|) = min(t, t')
    _, weights = lag_rule(0.5, np.array([1.0, 0.4]), np.array([0.7, 2.0]), 4)
    assert weights.sum(axis=1) == pytest.approx([0.7, 0.4], rel=1e-12)


def test_lag_rule_colored_noise_total_mass():
    # ∫∫ a_H|s − r|^{2H−2} = t^{2H} при t = t'
    hurst, t = 0.6, 1.3
    _, weights = lag_rule(hurst, np.array([t]), np.array([t]), 5)
    assert weights.sum() == pytest.approx(t ** (2.0 * hurst), rel=1e-5)


def test_time_factor_white_noise_closed_form():
    lam = np.array([0.0, 0.5, 3.0])
    values = time_factor(0.5, 1.0, 1.0, lam, 4)
    expected = np.where(lam == 0.0, 1.0, -np.expm1(-2.0 * lam) / (2.0 * np.where(lam == 0, 1, lam)))
    assert np.allclose(values, expected, rtol=1e-12)


def test_band_boxes_cover_annulus(heat_model):
    boxes = band_boxes(heat_model, 1.0, 4.0)
    assert len(boxes) == 2
    assert band_boxes(heat_model, 0.0, 2.0)[0].tau_lo == 0.0


def test_smooth_cutoff_is_a_monotone_window():
    s = np.linspace(0.0, 3.0, 301)
    chi = smooth_cutoff(s)
    assert np.all(chi[s <= 1.0] == 1.0)
    assert np.all(chi[s >= 2.0] == 0.0)
    assert np.all(np.diff(chi) <= 0.0)
    assert float(smooth_cutoff(np.array([1.5]))[0]) == pytest.approx(0.5)
    # χ(1 + x) + χ(2 − x) = 1
    x = np.linspace(0.0, 1.0, 11)
    assert np.allclose(smooth_cutoff(1.0 + x) + smooth_cutoff(2.0 - x), 1.0)


def test_quadrature_spec_validation():
    with pytest.raises(ValidationError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValidationError):
        QuadratureSpec(max_evals=10)
    with pytest.raises(ValidationError):
        QuadratureSpec(tail_mode="guess")
    spec = QuadratureSpec().with_overrides(tail_mode="richardson")
    assert spec.tail_mode == "richardson"


def test_fingerprint_is_order_independent_for_dict_keys():
    a = fingerprint({"x": 1, "y": [1.0, 2.0]})
    b = fingerprint({"y": [1.0, 2.0], "x": 1})
    assert a == b
    assert a != fingerprint({"x": 1, "y": [1.0, 2.5]})


def test_integral_results_add():
    total = IntegralResult(1.0, 0.1, 10, "a") + IntegralResult(2.0, 0.2, 5, "", True)
    assert total.value == 3.0 and total.evals == 15
    assert total.error_estimate == pytest.approx(0.3)
    assert total.budget_exhausted and total.truncation_note == "a"
    assert total.scaled(-2.0).error_estimate == pytest.approx(0.6)


def test_time_domain_oracle_unsupported_for_planar_stable():
    model = SpdeModel(alpha=1.5, beta=1.0, hurst=0.5, dim=2)
    with pytest.raises(QuadratureError):
        time_domain_inner_product(model, Point((1.0, 0.0, 0.0)), Point((1.0, 0.1, 0.0)), QuadratureSpec())
