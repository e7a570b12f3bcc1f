# src/handlers/validate.py
from __future__ import annotations

import logging

from src.errors import ModelValidationError
from src.handlers.context import RunContext
from src.schemas import AcceptanceCriterion
from src.services.fields import SpdeModel, noise_constants, validate_model

logger = logging.getLogger(__name__)


def run(ctx: RunContext) -> None:
    """Проверка предположений модели и вывод показателей."""
    with ctx.stage("validate"):
        report = validate_model(ctx.model)

    result = {
        "family": report.family,
        "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in report.checks],
    }
    if report.exponents is not None:
        exps = report.exponents
        result["exponents"] = {
            "axis_exponents": list(exps.axis_exponents),
            "gammas": list(exps.gammas),
            "Q": exps.big_q,
            "theta1": exps.theta1,
            "theta2": exps.theta2,
        }
        ctx.measure("Q", exps.big_q)
        if exps.theta1 is not None:
            ctx.measure("theta1", exps.theta1)
            ctx.measure("theta2", exps.theta2)
    if isinstance(ctx.model, SpdeModel):
        nc = noise_constants(ctx.model.hurst, ctx.model.dim)
        result["noise_constants"] = {"a_H": nc.a_h, "b_H": nc.b_h, "c_Hd": nc.c_hd}
    ctx.report.results["validate"] = result

    failed = ", ".join(f"{c.name} ({c.detail})" for c in report.failures())
    ctx.verdict(
        AcceptanceCriterion.exponent_arithmetic,
        "model_assumptions",
        report.passed,
        detail=failed,
    )
    if not report.passed:
        raise ModelValidationError(f"модель не удовлетворяет предположениям: {failed}")
