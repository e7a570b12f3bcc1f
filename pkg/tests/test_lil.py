# tests/test_lil.py
import math

import pytest

from src.errors import ModelValidationError
from src.services.fields import SpdeModel
from src.services.lil import (
    DualLilConstants,
    LilConstants,
    LilConvergence,
    lil_constants,
    lil_constants_closed_form,
    lil_constants_dual,
    lil_ratio_convergence,
    lil_ratio_convergence_space,
)
from src.services.quadrature import QuadratureSpec


def test_closed_form_constants_for_heat_model(heat_model):
    constants = lil_constants_closed_form(heat_model)
    assert constants.kappa5 == pytest.approx(1.24047, rel=1e-5)
    assert constants.kappa6 == pytest.approx(1.0314291449588, rel=1e-9)
    assert constants.canonical_kappa5 == pytest.approx(constants.kappa5 / math.sqrt(2.0))
    assert constants.tail_mode == "closed_form"


def test_closed_form_requires_canonical_model():
    scaled = SpdeModel(alpha=2.0, beta=0.5, hurst=0.5, psi_scale=(2.0, 2.0))
    with pytest.raises(ModelValidationError):
        lil_constants_closed_form(scaled)


def test_constants_rejected_for_product_model(product_model):
    with pytest.raises(ValueError):
        lil_constants_closed_form(product_model)


@pytest.mark.parametrize("scales", [[], [0.1, 0.2], [0.1, 0.1], [0.1, -0.01]])
def test_convergence_scales_must_decrease(heat_model, scales):
    with pytest.raises(ValueError):
        lil_ratio_convergence(heat_model, scales, QuadratureSpec())


def test_dual_agreement_and_deviations():
    a = LilConstants(1.0, 0.0, 2.0, 0.0)
    b = LilConstants(1.004, 0.0, 2.0, 0.0, "richardson")
    assert DualLilConstants(a, b).agrees
    assert not DualLilConstants(a, LilConstants(1.02, 0.0, 2.0, 0.0)).agrees

    conv = LilConvergence((0.1, 0.01), (1.1, 1.01), 1.0, "time")
    assert conv.deviations == pytest.approx((0.1, 0.01))
    assert conv.final_deviation == pytest.approx(0.01)


@pytest.mark.slow
def test_spectral_constants_match_closed_form(heat_model):
    spec = QuadratureSpec(rel_tol=1e-6)
    numeric = lil_constants(heat_model, spec)
    exact = lil_constants_closed_form(heat_model)
    assert numeric.kappa5 == pytest.approx(exact.kappa5, rel=5e-3)
    assert numeric.kappa6 == pytest.approx(exact.kappa6, rel=5e-3)


@pytest.mark.slow
def test_both_tail_modes_agree(heat_model):
    dual = lil_constants_dual(heat_model, QuadratureSpec(rel_tol=1e-6))
    assert dual.primary.tail_mode == "envelope"
    assert dual.secondary.tail_mode == "richardson"
    assert dual.agrees


@pytest.mark.slow
def test_increment_ratios_approach_constants(heat_model):
    spec = QuadratureSpec(rel_tol=1e-6)
    time = lil_ratio_convergence(heat_model, [1e-1, 1e-2, 1e-3], spec)
    space = lil_ratio_convergence_space(heat_model, [1e-1, 1e-2, 1e-3], spec)
    assert time.direction == "time" and space.direction == "space"
    assert time.target == pytest.approx(1.24047 / math.sqrt(2.0), rel=1e-5)
    assert time.final_deviation < 0.02
    assert space.final_deviation < 0.02


def test_time_ratio_target_is_canonical_kappa5(heat_model, fast_spec):
    exact = lil_constants_closed_form(heat_model)
    default = lil_ratio_convergence(heat_model, [0.1], fast_spec)
    assert default.target == pytest.approx(exact.kappa5 / math.sqrt(2.0))
    # d² ≈ (κ₅²/2)·s^{2θ₁}: отношение к κ₅ без √2 заведомо далеко от 1
    assert default.ratios[0] / exact.kappa5 < 0.85
    explicit = lil_ratio_convergence(heat_model, [0.1], fast_spec, target=exact.kappa5)
    assert explicit.target == exact.kappa5
    assert explicit.ratios == default.ratios
