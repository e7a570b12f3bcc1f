# src/services/covariance/bands.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from . import product, spde
from src.services.fields import FieldModel, Point, SpdeModel
from src.services.quadrature import IntegralResult, QuadratureSpec, band_boxes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Band:
    """
    Полоса частот [lo, hi) в параметризации max(|τ|^{θ₁}, |ξ|^{θ₂}) (SPDE)
    или max_j |ξ_j|^{α_j} (произведение). hi = inf — неограниченная полоса.
    """
    lo: float
    hi: float = math.inf

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo < self.hi):
            raise ValueError(f"нужно 0 <= lo < hi, получено [{self.lo}, {self.hi})")

    @property
    def is_full(self) -> bool:
        return self.lo == 0.0 and math.isinf(self.hi)

    @property
    def is_bounded(self) -> bool:
        return not math.isinf(self.hi)


def partition(breaks: Sequence[float]) -> list[Band]:
    """Разбиение [0, ∞) точками breaks: [0, b₁), [b₁, b₂), …, [b_n, ∞)."""
    edges = [0.0] + sorted(float(b) for b in breaks) + [math.inf]
    return [Band(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]


def _bounded(model: FieldModel, lo: float, hi: float, p: Point, q: Point, spec: QuadratureSpec,
             increment: bool) -> IntegralResult:
    if isinstance(model, SpdeModel):
        boxes = band_boxes(model, lo, hi)
        if increment:
            return spde.spectral_increment_variance(model, p, q, spec, boxes=boxes)
        return spde.spectral_covariance(model, p, q, spec, boxes=boxes)
    return product.band_integral(model, p, q, lo, hi, spec, increment=increment)


def _full(model: FieldModel, p: Point, q: Point, spec: QuadratureSpec, increment: bool) -> IntegralResult:
    if isinstance(model, SpdeModel):
        if increment:
            return spde.spectral_increment_variance(model, p, q, spec)
        return spde.spectral_covariance(model, p, q, spec)
    if increment:
        return product.increment_variance(model, p, q, spec)
    values, errors = product.laplace_integral(model, p.as_array()[None, :], q.as_array()[None, :])
    return IntegralResult(float(values[0]), float(errors[0]), product.PANEL_ORDER + product.CHECK_ORDER)


def band_integral(model: FieldModel, band: Band, p: Point, q: Point, spec: QuadratureSpec,
                  increment: bool = False) -> IntegralResult:
    """
    Полосовая часть ковариации (или d²). Для hi = ∞ берётся
    полный интеграл минус ограниченная полоса [0, lo).
    """
    if band.is_bounded:
        return _bounded(model, band.lo, band.hi, p, q, spec, increment)
    total = _full(model, p, q, spec, increment)
    if band.lo == 0.0:
        return total
    head = _bounded(model, 0.0, band.lo, p, q, spec, increment)
    return IntegralResult(
        value=total.value - head.value,
        error_estimate=total.error_estimate + head.error_estimate,
        evals=total.evals + head.evals,
        truncation_note=total.truncation_note,
        budget_exhausted=total.budget_exhausted or head.budget_exhausted,
    )


def band_pair_covariance(model: FieldModel, band: Band, p: Point, q: Point, spec: QuadratureSpec) -> float:
    result = band_integral(model, band, p, q, spec)
    logger.debug(f"Полоса [{band.lo}, {band.hi}): Cov = {result.value:.8g} ± {result.error_estimate:.2e}")
    return result.value


def band_increment_variance(model: FieldModel, band: Band, p: Point, q: Point, spec: QuadratureSpec) -> float:
    return band_integral(model, band, p, q, spec, increment=True).value
