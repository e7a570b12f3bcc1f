# src/errors.py
from __future__ import annotations

# Коды выхода CLI
EXIT_OK = 0
EXIT_VERDICT_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_VALIDATION_ERROR = 3
EXIT_NUMERICAL_ERROR = 4


class GrfError(RuntimeError):
    """Базовая ошибка пакета. exit_code используется CLI."""

    exit_code: int = EXIT_NUMERICAL_ERROR


class ConfigError(GrfError):
    exit_code = EXIT_CONFIG_ERROR


class ModelValidationError(GrfError, ValueError):
    """Параметры модели нарушают стандартные предположения (θ₁ > 0, θ₂ < 1, диапазоны)."""

    exit_code = EXIT_VALIDATION_ERROR


class NumericalError(GrfError):
    exit_code = EXIT_NUMERICAL_ERROR


class QuadratureError(NumericalError):
    pass
