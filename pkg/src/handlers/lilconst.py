# src/handlers/lilconst.py
from __future__ import annotations

import logging

from src.handlers.context import RunContext
from src.schemas import AcceptanceCriterion
from src.services.exporters import write_json, write_rows_csv
from src.services.fields import SpdeModel
from src.services.lil import (
    lil_constants,
    lil_constants_closed_form,
    lil_constants_dual,
    lil_ratio_convergence,
    lil_ratio_convergence_space,
)

logger = logging.getLogger(__name__)


def _payload(c) -> dict:
    return {
        "kappa5": c.kappa5,
        "kappa5_error": c.kappa5_error,
        "kappa6": c.kappa6,
        "kappa6_error": c.kappa6_error,
        "canonical_kappa5": c.canonical_kappa5,
        "canonical_kappa6": c.canonical_kappa6,
        "tail_mode": c.tail_mode,
    }


def run(ctx: RunContext) -> None:
    if not isinstance(ctx.model, SpdeModel):
        logger.info("κ₅, κ₆ определены только для SPDE-моделей, этап пропущен")
        ctx.report.results["lilconst"] = "пропущено: модель произведения"
        return

    block = ctx.config.estimators.lil
    checks = ctx.config.checks
    with ctx.stage("lilconst"):
        closed = lil_constants_closed_form(ctx.model)
        if block.dual:
            dual = lil_constants_dual(ctx.model, ctx.spec)
            constants = dual.primary
        else:
            dual = None
            constants = lil_constants(ctx.model, ctx.spec)
        time_conv = lil_ratio_convergence(ctx.model, block.time_scales, ctx.spec)
        space_conv = lil_ratio_convergence_space(ctx.model, block.space_scales, ctx.spec)

    payload = {
        "quadrature": _payload(constants),
        "closed_form": _payload(closed),
        "convergence": {
            "time": {"scales": list(time_conv.scales), "ratios": list(time_conv.ratios), "target": time_conv.target},
            "space": {"scales": list(space_conv.scales), "ratios": list(space_conv.ratios), "target": space_conv.target},
        },
    }
    if dual is not None:
        payload["secondary"] = _payload(dual.secondary)
        payload["disagreement"] = {"kappa5": dual.kappa5_disagreement, "kappa6": dual.kappa6_disagreement}
    write_json(ctx.artifact("lilconst.json"), payload)
    write_rows_csv(
        ctx.artifact("lil_convergence.csv"),
        ["direction", "scale", "ratio", "target", "deviation"],
        [[conv.direction, s, r, conv.target, dev]
         for conv in (time_conv, space_conv)
         for s, r, dev in zip(conv.scales, conv.ratios, conv.deviations)],
    )

    ctx.report.results["lilconst"] = payload
    ctx.measure("kappa5", constants.kappa5)
    ctx.measure("kappa6", constants.kappa6)

    criterion = AcceptanceCriterion.lil_constants
    if dual is not None:
        worst = max(dual.kappa5_disagreement, dual.kappa6_disagreement)
        ctx.verdict(criterion, "dual_quadrature_agreement", worst <= checks.lil_dual_tolerance,
                    measured=worst, threshold=f"≤ {checks.lil_dual_tolerance}")
    for conv in (time_conv, space_conv):
        ctx.verdict(criterion, f"lil_ratio_{conv.direction}", conv.final_deviation <= checks.lil_ratio_tolerance,
                    measured=conv.final_deviation, threshold=f"≤ {checks.lil_ratio_tolerance} на масштабе {conv.scales[-1]}")
