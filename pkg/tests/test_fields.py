# tests/test_fields.py
import math

import pytest
from pydantic import ValidationError

from src.errors import ModelValidationError
from src.services.fields import (
    Point,
    ProductModel,
    Rectangle,
    SpdeModel,
    check_point,
    check_rectangle,
    delta_metric,
    derive_exponents,
    noise_constants,
    validate_model,
)


def test_heat_exponents_are_exact(heat_model):
    exps = derive_exponents(heat_model)
    assert exps.theta1 == pytest.approx(0.375, abs=1e-15)
    assert exps.theta2 == pytest.approx(0.75, abs=1e-15)
    assert exps.big_q == pytest.approx(4.0, abs=1e-14)
    assert exps.axis_exponents == (exps.theta1, exps.theta2)
    assert exps.gamma1 == pytest.approx(5.0 / 3.0)
    assert exps.gamma2 == pytest.approx(1.0 / 3.0)


def test_planar_model_repeats_space_exponent():
    model = SpdeModel(alpha=2.0, beta=1.0, hurst=0.5, dim=2)
    exps = derive_exponents(model)
    assert exps.axis_exponents == pytest.approx((0.25, 0.5, 0.5))
    assert exps.big_q == pytest.approx(8.0)


def test_product_exponents(product_model):
    exps = derive_exponents(product_model)
    assert exps.axis_exponents == (0.5, 0.5)
    assert exps.gammas == (1.0, 1.0)
    assert exps.big_q == pytest.approx(4.0)
    assert exps.theta1 is None and exps.gamma1 is None


def test_nonpositive_theta1_is_reported_not_thrown():
    model = SpdeModel(alpha=0.5, beta=0.2, hurst=0.5, dim=1)
    report = validate_model(model)
    assert not report.passed
    names = {c.name for c in report.failures()}
    assert {"existence", "theta1_positive"} <= names
    assert report.exponents is None
    with pytest.raises(ModelValidationError, match="θ₁ > 0"):
        derive_exponents(model)


def test_theta2_above_one_is_rejected():
    model = SpdeModel(alpha=2.0, beta=0.9, hurst=0.75, dim=1)
    report = validate_model(model)
    assert [c.name for c in report.failures()] == ["theta2_below_one"]
    with pytest.raises(ModelValidationError, match="θ₂ < 1"):
        derive_exponents(model)


def test_valid_model_report_carries_exponents(heat_model):
    report = validate_model(heat_model)
    assert report.passed
    assert report.exponents.big_q == pytest.approx(4.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha": 2.0, "beta": 1.0, "hurst": 0.5, "dim": 1},
        {"alpha": 2.5, "beta": 0.5, "hurst": 0.5, "dim": 1},
        {"alpha": 2.0, "beta": 0.5, "hurst": 1.0, "dim": 1},
        {"alpha": 2.0, "beta": 0.5, "hurst": 0.5, "dim": 3},
        {"alpha": 2.0, "beta": 0.5, "hurst": 0.5, "psi_scale": (2.0, 1.0)},
    ],
)
def test_out_of_range_parameters_fail_schema(kwargs):
    with pytest.raises(ValidationError):
        SpdeModel(**kwargs)


def test_product_alphas_must_lie_in_unit_interval():
    with pytest.raises(ValidationError):
        ProductModel(alphas=(0.5, 1.0))
    with pytest.raises(ValidationError):
        ProductModel(alphas=(0.5, 0.5, 0.5, 0.5))


def test_delta_metric_sums_axis_powers(heat_model):
    exps = derive_exponents(heat_model)
    value = delta_metric(Point((1.0, 0.0)), Point((1.0625, 0.25)), exps)
    # 2^{−4·0.375} + 2^{−2·0.75} = 2·2^{−1.5}
    assert value == pytest.approx(math.sqrt(0.5), rel=1e-14)
    assert delta_metric((1.0, 0.3), (1.0, 0.3), exps) == 0.0


def test_delta_metric_dimension_mismatch(heat_model):
    exps = derive_exponents(heat_model)
    with pytest.raises(ValueError, match="размерностей"):
        delta_metric((1.0, 0.0, 0.0), (1.0, 0.0, 0.0), exps)


def test_point_checks(heat_model, product_model):
    check_point(heat_model, Point((0.5, -1.0)))
    with pytest.raises(ValueError, match="t = 0.0"):
        check_point(heat_model, Point((0.0, 0.0)))
    with pytest.raises(ValueError, match="координат"):
        check_point(heat_model, Point((1.0,)))
    with pytest.raises(ValueError, match="ось"):
        check_rectangle(product_model, Rectangle(Point((-0.5, 0.5)), Point((0.5, 1.5))))


def test_rectangle_requires_ordered_corners():
    with pytest.raises(ValueError):
        Rectangle(Point((1.0, 1.0)), Point((0.5, 2.0)))
    rect = Rectangle(Point((0.0, 0.0)), Point((2.0, 4.0)))
    assert rect.center.coords == (1.0, 2.0)
    assert rect.contains(Point((1.0, 4.0)))


def test_noise_constants_white_in_time():
    consts = noise_constants(0.5, 1)
    assert consts.a_h == 0.0
    assert consts.b_h == pytest.approx(1.0 / (2.0 * math.pi))
    assert consts.c_hd == pytest.approx(1.0 / (2.0 * math.pi) ** 2)


def test_noise_constants_continuous_at_half():
    assert noise_constants(0.5 + 1e-9, 2).b_h == pytest.approx(noise_constants(0.5, 2).b_h, rel=1e-6)
    with pytest.raises(ValueError):
        noise_constants(1.0, 1)
