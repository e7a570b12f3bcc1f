# src/services/covariance/scans.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bands import Band, band_increment_variance
from .gram import conditional_variance, gram
from .pairs import increment_variance
from src.constants import MIN_SLOPE_POINTS
from src.services.fields import FieldModel, Point, SpdeModel, delta_metric, derive_exponents
from src.services.quadrature import QuadratureSpec
from src.services.regression import SlopeFit, fit_slope

logger = logging.getLogger(__name__)

PointPair = tuple[Point, Point]
LOW_BAND_SLACK = 0.3


@dataclass(frozen=True)
class LowBandFit:
    pair: PointPair
    kind: str          # "time" | "space"
    variances: tuple[float, ...]
    fit: SlopeFit
    bound: float
    passed: bool


@dataclass(frozen=True)
class LowBandScanReport:
    a_values: tuple[float, ...]
    fits: tuple[LowBandFit, ...]
    slack: float

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.fits)


@dataclass(frozen=True)
class MetricScanReport:
    """Эмпирические (c₃, c₁): экстремумы d/Δ по набору пар."""
    ratio_min: float
    ratio_max: float
    ratios: tuple[float, ...]
    deltas: tuple[float, ...]
    distances: tuple[float, ...]

    @property
    def spread(self) -> float:
        return self.ratio_max / self.ratio_min if self.ratio_min > 0.0 else math.inf


@dataclass(frozen=True)
class LndConfiguration:
    target: Point
    conditioning: tuple[Point, ...]


@dataclass(frozen=True)
class LndScanReport:
    """
    ratios:             Var(v(x)|…)/min_i Δ²(x, xⁱ)
    ratios_with_origin: то же, но в минимуме участвует и начало координат
    """
    ratios: tuple[float, ...]
    ratios_with_origin: tuple[float, ...]
    conditional_variances: tuple[float, ...]

    @property
    def c2(self) -> float:
        return min(self.ratios)

    @property
    def c2_with_origin(self) -> float:
        return min(self.ratios_with_origin)


def low_band_increment_scan(
    model: SpdeModel,
    a_values: Sequence[float],
    time_pairs: Sequence[PointPair],
    space_pairs: Sequence[PointPair],
    spec: QuadratureSpec,
    slack: float = LOW_BAND_SLACK,
) -> LowBandScanReport:
    """
    Рост дисперсии приращения в низкой полосе [0, a): наклон log V по log a
    не должен превышать 2γ₁ (пары по времени) и 2γ₂ (пары по пространству).
    """
    if not isinstance(model, SpdeModel):
        raise ValueError("скан низких полос определён для SPDE-моделей")
    a_values = tuple(sorted(float(a) for a in a_values))
    if len(a_values) < MIN_SLOPE_POINTS:
        raise ValueError(f"нужно не меньше {MIN_SLOPE_POINTS} значений a, получено {len(a_values)}")
    if a_values[0] <= 0.0:
        raise ValueError("значения a должны быть > 0")
    exps = derive_exponents(model)
    log_a = np.log(a_values)

    fits = []
    for kind, pairs, bound in (("time", time_pairs, 2.0 * exps.gamma1), ("space", space_pairs, 2.0 * exps.gamma2)):
        for p, q in pairs:
            variances = tuple(band_increment_variance(model, Band(0.0, a), p, q, spec) for a in a_values)
            if min(variances) <= 0.0:
                raise ValueError(f"неположительная полосовая дисперсия для пары {p.coords}, {q.coords}")
            fit = fit_slope(log_a, np.log(variances))
            passed = fit.slope <= bound + slack
            logger.info(f"Низкая полоса ({kind}) {p.coords}→{q.coords}: наклон {fit.slope:.3f}, граница {bound:.3f}")
            fits.append(LowBandFit((p, q), kind, variances, fit, bound, passed))
    return LowBandScanReport(a_values=a_values, fits=tuple(fits), slack=slack)


def metric_equivalence_scan(model: FieldModel, pairs: Sequence[PointPair], spec: QuadratureSpec) -> MetricScanReport:
    if not pairs:
        raise ValueError("пустой набор пар")
    exps = derive_exponents(model)
    ratios, deltas, distances = [], [], []
    for p, q in pairs:
        delta = delta_metric(p, q, exps)
        if delta == 0.0:
            raise ValueError(f"пара с Δ = 0: {p.coords}")
        distance = math.sqrt(increment_variance(model, p, q, spec).value)
        ratios.append(distance / delta)
        deltas.append(delta)
        distances.append(distance)
    report = MetricScanReport(
        ratio_min=min(ratios),
        ratio_max=max(ratios),
        ratios=tuple(ratios),
        deltas=tuple(deltas),
        distances=tuple(distances),
    )
    logger.info(f"Скан метрик по {len(pairs)} парам: c₃ ≈ {report.ratio_min:.4g}, c₁ ≈ {report.ratio_max:.4g}")
    return report


def strong_lnd_scan(
    model: FieldModel,
    configurations: Sequence[LndConfiguration],
    spec: QuadratureSpec,
    threads: int = 1,
) -> LndScanReport:
    """Var(v(x)|v(x¹), …, v(xⁿ)) / min Δ² для каждой конфигурации, два варианта минимума."""
    exps = derive_exponents(model)
    ratios, ratios_origin, cond_vars = [], [], []
    for config in configurations:
        if not config.conditioning:
            raise ValueError("пустое множество условий")
        points = (config.target,) + tuple(config.conditioning)
        g = gram(model, points, spec, threads=threads)
        value = conditional_variance(g, 0, range(1, len(points)))
        nearest = min(delta_metric(config.target, c, exps) for c in config.conditioning)
        if nearest == 0.0:
            raise ValueError(f"точка условия совпадает с целью {config.target.coords}")
        origin = delta_metric(config.target, (0.0,) * config.target.dim, exps)
        ratios.append(value / nearest ** 2)
        ratios_origin.append(value / min(nearest, origin) ** 2)
        cond_vars.append(value)
    report = LndScanReport(tuple(ratios), tuple(ratios_origin), tuple(cond_vars))
    logger.info(f"Сильный LND: c₂ ≈ {report.c2:.4g} (с началом координат {report.c2_with_origin:.4g})")
    return report
