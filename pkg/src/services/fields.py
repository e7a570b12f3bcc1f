# src/services/fields.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import gamma

from src.errors import ModelValidationError

logger = logging.getLogger(__name__)


class SpdeModel(BaseModel):
    """
    Стохастическое уравнение теплопроводности с дробным лапласианом и шумом,
    дробным по времени (индекс Хёрста H) и риссовским по пространству.

    alpha:          показатель устойчивости, Ψ(ξ) = c_Ψ|ξ|^α
    beta:           спектральный показатель шума, h(ξ) = c_h|ξ|^{−β}
    hurst:          H ∈ [1/2, 1)
    dim:            пространственная размерность d (1 или 2)
    psi_scale:      (c_Ψ, C_Ψ); в конкретной модели используется нижняя граница
    density_scale:  (c_h, C_h); аналогично
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["spde"] = "spde"
    alpha: float = Field(gt=0.0, le=2.0)
    beta: float = Field(gt=0.0)
    hurst: float = Field(ge=0.5, lt=1.0)
    dim: Literal[1, 2] = 1
    psi_scale: tuple[float, float] = (1.0, 1.0)
    density_scale: tuple[float, float] = (1.0, 1.0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "SpdeModel":
        if not self.beta < self.dim:
            raise ValueError(f"beta={self.beta} должно быть < dim={self.dim}")
        for name, (lo, hi) in (("psi_scale", self.psi_scale), ("density_scale", self.density_scale)):
            if not (0.0 < lo <= hi):
                raise ValueError(f"{name}: нужно 0 < lo <= hi, получено ({lo}, {hi})")
        return self

    @property
    def n_coords(self) -> int:
        return 1 + self.dim

    @property
    def psi_coefficient(self) -> float:
        return float(self.psi_scale[0])

    @property
    def density_coefficient(self) -> float:
        return float(self.density_scale[0])

    @property
    def is_canonical(self) -> bool:
        """Ψ = |ξ|^α и h = |ξ|^{−β} без множителей (гипотеза теорем о константах LIL)."""
        return self.psi_scale == (1.0, 1.0) and self.density_scale == (1.0, 1.0)


class ProductModel(BaseModel):
    """
    Поле v(x) = ∫ ∏_j (e^{i x_j ξ_j} − 1) W(dξ) со спектральной плотностью
    f(ξ) = C₁ (Σ_j |ξ_j|^{α_j})^{−(Q+2)}.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["product"] = "product"
    alphas: tuple[float, ...] = Field(min_length=1, max_length=3)
    density_bounds: tuple[float, float] = (1.0, 1.0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "ProductModel":
        for j, a in enumerate(self.alphas):
            if not (0.0 < a < 1.0):
                raise ValueError(f"alphas[{j}]={a} должно лежать в (0, 1)")
        lo, hi = self.density_bounds
        if not (0.0 < lo <= hi):
            raise ValueError(f"density_bounds: нужно 0 < C1 <= C2, получено ({lo}, {hi})")
        return self

    @property
    def k(self) -> int:
        return len(self.alphas)

    @property
    def n_coords(self) -> int:
        return self.k

    @property
    def density_coefficient(self) -> float:
        return float(self.density_bounds[0])


FieldModel = Union[SpdeModel, ProductModel]


@dataclass(frozen=True)
class Exponents:
    """
    Показатели анизотропии.

    Для произведения θ₁/θ₂ не определены (None), используются axis_exponents = (α_1, …, α_k).
    """
    axis_exponents: tuple[float, ...]
    gammas: tuple[float, ...]
    big_q: float
    theta1: Optional[float] = None
    theta2: Optional[float] = None

    @property
    def gamma1(self) -> Optional[float]:
        return None if self.theta1 is None else 1.0 / self.theta1 - 1.0

    @property
    def gamma2(self) -> Optional[float]:
        return None if self.theta2 is None else 1.0 / self.theta2 - 1.0


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]
    label: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class Rectangle:
    lower: Point
    upper: Point

    def __post_init__(self) -> None:
        if self.lower.dim != self.upper.dim:
            raise ValueError("lower и upper должны иметь одинаковую размерность")
        if any(lo >= hi for lo, hi in zip(self.lower.coords, self.upper.coords)):
            raise ValueError(f"нужно lower < upper покоординатно: {self.lower.coords} vs {self.upper.coords}")

    def contains(self, p: Point) -> bool:
        return all(lo <= c <= hi for lo, c, hi in zip(self.lower.coords, p.coords, self.upper.coords))

    @property
    def center(self) -> Point:
        return Point(tuple(0.5 * (lo + hi) for lo, hi in zip(self.lower.coords, self.upper.coords)))


@dataclass(frozen=True)
class NoiseConstants:
    a_h: float
    b_h: float
    c_hd: float


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    family: str
    checks: tuple[AssumptionCheck, ...] = field(default_factory=tuple)
    exponents: Optional[Exponents] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[AssumptionCheck]:
        return [c for c in self.checks if not c.passed]


def _spde_thetas(model: SpdeModel) -> tuple[float, float]:
    theta1 = model.hurst - (model.dim - model.beta) / (2.0 * model.alpha)
    return theta1, model.alpha * theta1


def derive_exponents(model: FieldModel) -> Exponents:
    if isinstance(model, ProductModel):
        alphas = tuple(float(a) for a in model.alphas)
        return Exponents(
            axis_exponents=alphas,
            gammas=tuple(1.0 / a - 1.0 for a in alphas),
            big_q=sum(1.0 / a for a in alphas),
        )

    theta1, theta2 = _spde_thetas(model)
    if not theta1 > 0.0:
        raise ModelValidationError(
            f"нарушено θ₁ > 0: θ₁ = H − (d−β)/(2α) = {theta1:.6g} "
            f"(эквивалентно β > d − 2αH = {model.dim - 2 * model.alpha * model.hurst:.6g})"
        )
    if not theta2 < 1.0:
        raise ModelValidationError(
            f"нарушено θ₂ < 1: θ₂ = αθ₁ = {theta2:.6g} "
            f"(эквивалентно β < d − 2αH + 2 = {model.dim - 2 * model.alpha * model.hurst + 2:.6g})"
        )
    return Exponents(
        axis_exponents=(theta1,) + (theta2,) * model.dim,
        gammas=(1.0 / theta1 - 1.0, 1.0 / theta2 - 1.0),
        big_q=1.0 / theta1 + model.dim / theta2,
        theta1=theta1,
        theta2=theta2,
    )


def validate_model(model: FieldModel) -> ValidationReport:
    checks: list[AssumptionCheck] = []

    if isinstance(model, ProductModel):
        ok_alphas = all(0.0 < a < 1.0 for a in model.alphas)
        checks.append(AssumptionCheck("alpha_range", ok_alphas, f"0 < α_j < 1: {model.alphas}"))
        checks.append(AssumptionCheck("dimension", 1 <= model.k <= 3, f"k = {model.k} ∈ {{1,2,3}}"))
        q = sum(1.0 / a for a in model.alphas) if ok_alphas else math.inf
        checks.append(AssumptionCheck("q_exceeds_k", math.isfinite(q) and q > model.k, f"Q = {q:.6g} > k = {model.k}"))
    else:
        checks.append(AssumptionCheck("alpha_range", 0.0 < model.alpha <= 2.0, f"0 < α = {model.alpha} ≤ 2"))
        checks.append(AssumptionCheck("beta_range", 0.0 < model.beta < model.dim, f"0 < β = {model.beta} < d = {model.dim}"))
        checks.append(AssumptionCheck("hurst_range", 0.5 <= model.hurst < 1.0, f"1/2 ≤ H = {model.hurst} < 1"))
        theta1, theta2 = _spde_thetas(model)
        bound = model.dim - 2.0 * model.alpha * model.hurst
        checks.append(AssumptionCheck("existence", model.beta > bound, f"β = {model.beta} > d − 2αH = {bound:.6g}"))
        checks.append(AssumptionCheck("theta1_positive", theta1 > 0.0, f"θ₁ = {theta1:.6g} > 0"))
        checks.append(AssumptionCheck("theta2_below_one", theta2 < 1.0, f"θ₂ = {theta2:.6g} < 1"))

    exps: Optional[Exponents] = None
    if all(c.passed for c in checks):
        exps = derive_exponents(model)
    else:
        failed = ", ".join(c.name for c in checks if not c.passed)
        logger.info(f"Модель {model.family} не прошла проверки: {failed}")

    return ValidationReport(family=model.family, checks=tuple(checks), exponents=exps)


def check_point(model: FieldModel, p: Point) -> None:
    if p.dim != model.n_coords:
        raise ValueError(f"точка {p.coords} имеет {p.dim} координат, модель ожидает {model.n_coords}")
    if isinstance(model, SpdeModel) and not p.coords[0] > 0.0:
        raise ValueError(f"время должно быть > 0, получено t = {p.coords[0]}")


def check_rectangle(model: FieldModel, rect: Rectangle) -> None:
    check_point(model, rect.lower)
    check_point(model, rect.upper)
    if isinstance(model, ProductModel):
        # прямоугольник не должен касаться координатных гиперплоскостей
        for lo, hi in zip(rect.lower.coords, rect.upper.coords):
            if lo <= 0.0 <= hi:
                raise ValueError(f"прямоугольник [{lo}, {hi}] пересекает координатную ось")


def delta_metric(p: Point | Sequence[float], q: Point | Sequence[float], exps: Exponents) -> float:
    pc = p.coords if isinstance(p, Point) else tuple(p)
    qc = q.coords if isinstance(q, Point) else tuple(q)
    if len(pc) != len(qc) or len(pc) != len(exps.axis_exponents):
        raise ValueError(
            f"несовпадение размерностей: {len(pc)}, {len(qc)}, показателей {len(exps.axis_exponents)}"
        )
    return float(sum(abs(a - b) ** e for a, b, e in zip(pc, qc, exps.axis_exponents)))


def delta_to_center(coords: np.ndarray, center: np.ndarray, exps: Exponents) -> np.ndarray:
    """Векторный Δ от каждой строки coords (n, dim) до center (dim,)."""
    diff = np.abs(np.asarray(coords, dtype=float) - np.asarray(center, dtype=float))
    return np.sum(diff ** np.asarray(exps.axis_exponents), axis=1)


def delta_pairs(coords_a: np.ndarray, coords_b: np.ndarray, exps: Exponents) -> np.ndarray:
    diff = np.abs(np.asarray(coords_a, dtype=float) - np.asarray(coords_b, dtype=float))
    return np.sum(diff ** np.asarray(exps.axis_exponents), axis=-1)


def noise_constants(hurst: float, dim: int) -> NoiseConstants:
    if not (0.5 <= hurst < 1.0):
        raise ValueError(f"H = {hurst} вне [1/2, 1)")
    if dim < 1:
        raise ValueError(f"d = {dim} должно быть положительным")

    a_h = hurst * (2.0 * hurst - 1.0)
    if hurst == 0.5:
        b_h = 1.0 / (2.0 * math.pi)
    else:
        # a_H Γ(H − 1/2) = 2H Γ(H + 1/2): без деления 0/0 вблизи H = 1/2
        b_h = 2.0 * hurst * gamma(hurst + 0.5) / (
            2.0 ** (2.0 * (1.0 - hurst)) * math.sqrt(math.pi) * gamma(1.0 - hurst)
        )
    return NoiseConstants(a_h=a_h, b_h=float(b_h), c_hd=float(b_h) * (2.0 * math.pi) ** (-dim))


def model_payload(model: FieldModel) -> dict:
    """Каноническое представление модели для отпечатков."""
    return model.model_dump(mode="json")
