# src/services/quadrature/spec.py
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from src.constants import (
    DEFAULT_ABS_TOL,
    DEFAULT_MAX_EVALS,
    DEFAULT_REL_TOL,
    DEFAULT_TAIL_CUTOFF,
    MIN_MAX_EVALS,
    TANH_SINH_LEVEL,
    TIME_FACTOR_LEVEL,
)


class QuadratureSpec(BaseModel):
    """
    Настройки квадратур.

    tail_cutoff:           R: спектральная область обрезается по max(|τ|^{θ₁}, |ξ|^{θ₂}) ≤ R
    tail_mode:             "envelope" (аналитический хвост) или "richardson" (экстраполяция по R и 2R)
    singularity_transform: политика замены переменных; поддерживается степенная замена
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    rel_tol: float = Field(default=DEFAULT_REL_TOL, gt=0.0)
    abs_tol: float = Field(default=DEFAULT_ABS_TOL, gt=0.0)
    max_evals: int = Field(default=DEFAULT_MAX_EVALS, ge=MIN_MAX_EVALS)
    tail_cutoff: float = Field(default=DEFAULT_TAIL_CUTOFF, gt=1.0)
    tail_mode: Literal["envelope", "richardson"] = "envelope"
    singularity_transform: Literal["power"] = "power"
    lag_level: int = Field(default=TANH_SINH_LEVEL, ge=2, le=8)
    time_factor_level: int = Field(default=TIME_FACTOR_LEVEL, ge=2, le=8)

    def fingerprint_payload(self) -> dict:
        return self.model_dump(mode="json")

    def with_overrides(self, **changes) -> "QuadratureSpec":
        return self.model_copy(update=changes)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evals: int
    truncation_note: str = ""
    budget_exhausted: bool = False

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        notes = "; ".join(n for n in (self.truncation_note, other.truncation_note) if n)
        return IntegralResult(
            value=self.value + other.value,
            error_estimate=self.error_estimate + other.error_estimate,
            evals=self.evals + other.evals,
            truncation_note=notes,
            budget_exhausted=self.budget_exhausted or other.budget_exhausted,
        )

    def scaled(self, factor: float) -> "IntegralResult":
        return IntegralResult(
            value=self.value * factor,
            error_estimate=self.error_estimate * abs(factor),
            evals=self.evals,
            truncation_note=self.truncation_note,
            budget_exhausted=self.budget_exhausted,
        )


def fingerprint(*payloads: object) -> str:
    """sha256 от канонического JSON."""
    blob = json.dumps(payloads, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
