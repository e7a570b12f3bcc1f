# src/services/covariance/pairs.py
from __future__ import annotations

import numpy as np

from . import product, spde
from src.services.fields import FieldModel, Point, ProductModel, SpdeModel, check_point
from src.services.quadrature import IntegralResult, QuadratureSpec


def pair_covariance_result(model: FieldModel, p: Point, q: Point, spec: QuadratureSpec) -> IntegralResult:
    """E[v(p)v(q)] вместе с оценкой ошибки квадратуры."""
    if isinstance(model, SpdeModel):
        return spde.pair_covariance_result(model, p, q, spec)
    check_point(model, p)
    check_point(model, q)
    values, errors = product.laplace_integral(model, p.as_array()[None, :], q.as_array()[None, :])
    return IntegralResult(float(values[0]), float(errors[0]), product.PANEL_ORDER + product.CHECK_ORDER,
                          "closed series tail in log ω")


def pair_covariance(model: FieldModel, p: Point, q: Point, spec: QuadratureSpec) -> float:
    """E[v(p)v(q)] для любого семейства."""
    if isinstance(model, SpdeModel):
        return spde.pair_covariance(model, p, q, spec)
    return product.pair_covariance(model, p, q, spec)


def increment_variance(model: FieldModel, p: Point, q: Point, spec: QuadratureSpec) -> IntegralResult:
    """d²(p, q) = ‖v(p) − v(q)‖², одним интегралом."""
    if isinstance(model, SpdeModel):
        return spde.increment_variance(model, p, q, spec)
    return product.increment_variance(model, p, q, spec)


def canonical_distance(model: FieldModel, p: Point, q: Point, spec: QuadratureSpec) -> float:
    return float(np.sqrt(increment_variance(model, p, q, spec).value))


def covariance_block(
    model: FieldModel,
    coords_a: np.ndarray,
    coords_b: np.ndarray,
    spec: QuadratureSpec,
) -> tuple[np.ndarray, np.ndarray]:
    """Ковариации и оценки их ошибок для пачки пар (строки coords_a и coords_b)."""
    if isinstance(model, ProductModel):
        return product.laplace_integral(model, coords_a, coords_b)
    values, errors, _ = spde.refined_lag_covariance(model, coords_a, coords_b, spec)
    return values, errors
