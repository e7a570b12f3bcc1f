# src/services/lil.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import j0

from src.errors import ModelValidationError
from src.services.covariance import increment_variance
from src.services.fields import Point, SpdeModel, derive_exponents, noise_constants
from src.services.quadrature import (
    IntegralResult,
    QuadratureSpec,
    SpectralIntegrand,
    sphere_area,
    weighted_spectral_integral,
)

logger = logging.getLogger(__name__)

DUAL_AGREEMENT = 0.005


@dataclass(frozen=True)
class LilConstants:
    """
    κ₅, κ₆ с оценками ошибки. Предел отношений d/s^{θ₁}, d/|y|^{θ₂}
    в канонической метрике равен κ/√2 (canonical_*).
    """
    kappa5: float
    kappa5_error: float
    kappa6: float
    kappa6_error: float
    tail_mode: str = "envelope"

    @property
    def canonical_kappa5(self) -> float:
        return self.kappa5 / math.sqrt(2.0)

    @property
    def canonical_kappa6(self) -> float:
        return self.kappa6 / math.sqrt(2.0)


@dataclass(frozen=True)
class DualLilConstants:
    primary: LilConstants
    secondary: LilConstants

    @property
    def kappa5_disagreement(self) -> float:
        return abs(self.primary.kappa5 - self.secondary.kappa5) / self.primary.kappa5

    @property
    def kappa6_disagreement(self) -> float:
        return abs(self.primary.kappa6 - self.secondary.kappa6) / self.primary.kappa6

    @property
    def agrees(self) -> bool:
        return max(self.kappa5_disagreement, self.kappa6_disagreement) <= DUAL_AGREEMENT


@dataclass(frozen=True)
class LilConvergence:
    scales: tuple[float, ...]
    ratios: tuple[float, ...]
    target: float
    direction: str  # "time" | "space"

    @property
    def deviations(self) -> tuple[float, ...]:
        return tuple(abs(r - self.target) / self.target for r in self.ratios)

    @property
    def final_deviation(self) -> float:
        return self.deviations[-1]


def _require_canonical(model: SpdeModel) -> None:
    if not isinstance(model, SpdeModel):
        raise ValueError("константы κ₅, κ₆ определены только для SPDE-моделей")
    if not model.is_canonical:
        raise ModelValidationError("константы κ₅, κ₆ требуют Ψ(ξ) = |ξ|^α и h(ξ) = |ξ|^{−β} без множителей")


def _denominator(model: SpdeModel, tau: np.ndarray, xi: np.ndarray) -> np.ndarray:
    r = np.linalg.norm(np.atleast_2d(xi), axis=1)
    return tau ** 2 + r ** (2.0 * model.alpha)


def time_integrand(model: SpdeModel) -> SpectralIntegrand:
    """|e^{−iτ} − 1|²/(τ² + |ξ|^{2α}); среднее числителя по τ равно 2."""

    def values(tau: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return ((2.0 - 2.0 * np.cos(tau)) / _denominator(model, tau, xi)).astype(complex)

    return SpectralIntegrand(
        values=values,
        tail_amplitude=lambda r: np.full_like(np.asarray(r, dtype=float), 2.0),
        tail_limit=2.0,
        tau_period=2.0 * math.pi,
        name="kappa5",
    )


def space_integrand(model: SpdeModel) -> SpectralIntegrand:
    """|e^{−iξ₁} − 1|²/(τ² + |ξ|^{2α}); среднее по сфере |ξ| = r: 2 − 2cos r (d=1), 2 − 2J₀(r) (d=2)."""

    def values(tau: np.ndarray, xi: np.ndarray) -> np.ndarray:
        xi = np.atleast_2d(xi)
        return ((2.0 - 2.0 * np.cos(xi[:, 0])) / _denominator(model, tau, xi)).astype(complex)

    def amplitude(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return 2.0 - 2.0 * (np.cos(r) if model.dim == 1 else j0(r))

    return SpectralIntegrand(
        values=values,
        tail_amplitude=amplitude,
        tail_limit=2.0,
        xi_period=2.0 * math.pi,
        name="kappa6",
    )


def _kappa(result: IntegralResult) -> tuple[float, float]:
    """κ = √(2·I), ошибка по линеаризации."""
    square = 2.0 * result.value
    if not square > 0.0:
        raise ValueError(f"неположительное значение κ² = {square:.3e}")
    kappa = math.sqrt(square)
    return kappa, 2.0 * result.error_estimate / (2.0 * kappa)


def lil_integral_time(model: SpdeModel, spec: QuadratureSpec) -> IntegralResult:
    _require_canonical(model)
    return weighted_spectral_integral(time_integrand(model), model, spec)


def lil_integral_space(model: SpdeModel, spec: QuadratureSpec) -> IntegralResult:
    _require_canonical(model)
    return weighted_spectral_integral(space_integrand(model), model, spec)


def lil_constant_time(model: SpdeModel, spec: QuadratureSpec) -> float:
    kappa, _ = _kappa(lil_integral_time(model, spec))
    return kappa


def lil_constant_space(model: SpdeModel, spec: QuadratureSpec) -> float:
    kappa, _ = _kappa(lil_integral_space(model, spec))
    return kappa


def lil_constants(model: SpdeModel, spec: QuadratureSpec) -> LilConstants:
    k5, e5 = _kappa(lil_integral_time(model, spec))
    k6, e6 = _kappa(lil_integral_space(model, spec))
    logger.info(f"κ₅ = {k5:.6g} ± {e5:.1e}, κ₆ = {k6:.6g} ± {e6:.1e} ({spec.tail_mode})")
    return LilConstants(k5, e5, k6, e6, spec.tail_mode)


def lil_constants_dual(model: SpdeModel, spec: QuadratureSpec) -> DualLilConstants:
    """Две независимые конфигурации хвоста: аналитическая огибающая и экстраполяция Ричардсона."""
    primary = lil_constants(model, spec.with_overrides(tail_mode="envelope"))
    secondary = lil_constants(model, spec.with_overrides(tail_mode="richardson"))
    dual = DualLilConstants(primary, secondary)
    if not dual.agrees:
        logger.warning(
            f"Конфигурации квадратур расходятся: κ₅ на {dual.kappa5_disagreement:.2%}, "
            f"κ₆ на {dual.kappa6_disagreement:.2%}"
        )
    return dual


def _one_minus_cos_moment(nu: float) -> float:
    """∫_0^∞ (1 − cos u) u^{−1−ν} du = π/(2Γ(1+ν) sin(πν/2)), 0 < ν < 2."""
    return math.pi / (2.0 * math.gamma(1.0 + nu) * math.sin(0.5 * math.pi * nu))


def lil_constants_closed_form(model: SpdeModel) -> LilConstants:
    """
    Аналитические κ₅, κ₆: интеграл по |ξ| (для κ₅) или по τ (для κ₆) берётся
    в бета-функциях, остаётся момент ∫(1 − cos u)u^{−1−ν}du.
    """
    _require_canonical(model)
    exps = derive_exponents(model)
    c = noise_constants(model.hurst, model.dim).c_hd
    alpha, dim, hurst = model.alpha, model.dim, model.hurst

    m = (dim - model.beta) / alpha
    radial = sphere_area(dim) * math.pi / (2.0 * alpha * math.sin(0.5 * math.pi * m))
    kappa5_sq = 2.0 * c * radial * 4.0 * _one_minus_cos_moment(2.0 * exps.theta1)

    nu = 2.0 * exps.theta2
    if dim == 1:
        projection = 2.0
    else:
        projection = 2.0 * math.sqrt(math.pi) * math.gamma(0.5 * (nu + 1.0)) / math.gamma(0.5 * nu + 1.0)
    kappa6_sq = 2.0 * c * (math.pi / math.sin(math.pi * hurst)) * 2.0 * projection * _one_minus_cos_moment(nu)

    return LilConstants(math.sqrt(kappa5_sq), 0.0, math.sqrt(kappa6_sq), 0.0, tail_mode="closed_form")


def _check_scales(scales: Sequence[float]) -> tuple[float, ...]:
    scales = tuple(float(s) for s in scales)
    if not scales or any(s <= 0.0 for s in scales):
        raise ValueError("масштабы должны быть положительными")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError(f"масштабы должны строго убывать: {scales}")
    return scales


def lil_ratio_convergence(
    model: SpdeModel,
    s_values: Sequence[float],
    spec: QuadratureSpec,
    t0: float = 1.0,
    x0: Optional[Sequence[float]] = None,
    target: Optional[float] = None,
) -> LilConvergence:
    """
    d((t₀+s, x₀), (t₀, x₀)) / s^{θ₁}; по умолчанию предел равен κ₅/√2, а не κ₅.

    κ₅² = 2·∫|e^{−iτ} − 1|²·вес определено с множителем 2, а дисперсия
    приращения при той же нормировке ведёт себя как d² ≈ (κ₅²/2)·s^{2θ₁}.
    Поэтому d/s^{θ₁} сходится к κ₅/√2 (LilConstants.canonical_kappa5).
    Для сравнения с самим κ₅ передайте target явно.
    """
    _require_canonical(model)
    scales = _check_scales(s_values)
    exps = derive_exponents(model)
    x0 = tuple(x0) if x0 is not None else (0.0,) * model.dim
    base = Point((t0,) + x0)
    ratios = []
    for s in scales:
        shifted = Point((t0 + s,) + x0)
        distance = math.sqrt(increment_variance(model, shifted, base, spec).value)
        ratios.append(distance / s ** exps.theta1)
    if target is None:
        target = lil_constants_closed_form(model).canonical_kappa5
    return LilConvergence(scales, tuple(ratios), float(target), "time")


def lil_ratio_convergence_space(
    model: SpdeModel,
    y_values: Sequence[float],
    spec: QuadratureSpec,
    t0: float = 1.0,
    x0: Optional[Sequence[float]] = None,
    target: Optional[float] = None,
) -> LilConvergence:
    """d((t₀, x₀ + y e₁), (t₀, x₀)) / |y|^{θ₂}; предел равен κ₆/√2."""
    _require_canonical(model)
    scales = _check_scales(y_values)
    exps = derive_exponents(model)
    x0 = tuple(x0) if x0 is not None else (0.0,) * model.dim
    base = Point((t0,) + x0)
    ratios = []
    for y in scales:
        moved = Point((t0, x0[0] + y) + x0[1:])
        distance = math.sqrt(increment_variance(model, moved, base, spec).value)
        ratios.append(distance / y ** exps.theta2)
    if target is None:
        target = lil_constants_closed_form(model).canonical_kappa6
    return LilConvergence(scales, tuple(ratios), float(target), "space")
