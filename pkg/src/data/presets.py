# src/data/presets.py

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

from src.services.fields import FieldModel, Point, ProductModel, Rectangle, SpdeModel


@dataclass(frozen=True)
class ModelPreset:
    """
    Эталонная модель для конфигов и тестов.

    code:         код пресета (поле model.preset в конфиге)
    title:        короткое название
    description:  что это за поле
    model:        параметры модели
    lower/upper  — углы прямоугольника по умолчанию
    """
    code: str
    title: str
    description: str
    model: FieldModel
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @property
    def domain(self) -> Rectangle:
        return Rectangle(Point(self.lower), Point(self.upper))


MODEL_PRESETS: List[ModelPreset] = [
    ModelPreset(
        code="she_heat_white",
        title="Теплопроводность, белый по времени шум",
        description="α=2, β=0.5, H=1/2, d=1: θ₁=0.375, θ₂=0.75, Q=4.",
        model=SpdeModel(alpha=2.0, beta=0.5, hurst=0.5, dim=1),
        lower=(0.5, -0.5),
        upper=(1.5, 0.5),
    ),
    ModelPreset(
        code="she_heat_h06",
        title="Теплопроводность, дробный по времени шум",
        description="α=2, β=0.5, H=0.6, d=1: θ₁=0.475, θ₂=0.95.",
        model=SpdeModel(alpha=2.0, beta=0.5, hurst=0.6, dim=1),
        lower=(0.5, -0.5),
        upper=(1.5, 0.5),
    ),
    ModelPreset(
        code="she_stable_a1",
        title="Дробный лапласиан α=1",
        description="α=1, β=0.2, H=3/4, d=1.",
        model=SpdeModel(alpha=1.0, beta=0.2, hurst=0.75, dim=1),
        lower=(0.5, -0.5),
        upper=(1.5, 0.5),
    ),
    ModelPreset(
        code="she_heat_2d",
        title="Теплопроводность на плоскости",
        description="α=2, β=1, H=1/2, d=2: θ₁=0.25, θ₂=0.5, Q=8.",
        model=SpdeModel(alpha=2.0, beta=1.0, hurst=0.5, dim=2),
        lower=(0.5, -0.5, -0.5),
        upper=(1.5, 0.5, 0.5),
    ),
    ModelPreset(
        code="product_half_half",
        title="Произведение, α=(1/2, 1/2)",
        description="Двумерное поле произведения, область вдали от осей.",
        model=ProductModel(alphas=(0.5, 0.5)),
        lower=(0.5, 0.5),
        upper=(1.5, 1.5),
    ),
    ModelPreset(
        code="product_k3",
        title="Произведение, k=3",
        description="α=(0.3, 0.5, 0.7).",
        model=ProductModel(alphas=(0.3, 0.5, 0.7)),
        lower=(0.5, 0.5, 0.5),
        upper=(1.5, 1.5, 1.5),
    ),
]


def get_preset_by_code(code: str) -> Optional[ModelPreset]:
    for preset in MODEL_PRESETS:
        if preset.code == code:
            return preset
    return None
