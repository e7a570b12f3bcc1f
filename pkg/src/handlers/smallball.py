# src/handlers/smallball.py
from __future__ import annotations

import logging

from src.handlers.context import RunContext
from src.schemas import AcceptanceCriterion
from src.services.estimators import estimate_small_ball, fit_small_ball_exponent
from src.services.exporters import write_small_ball_csv

logger = logging.getLogger(__name__)


def run(ctx: RunContext) -> None:
    block = ctx.config.estimators.small_ball
    exps = ctx.exps
    points = ctx.ball_points(max(block.radii), block.per_axis)
    levels = [(r, r / ratio) for r in block.radii for ratio in block.ratios]

    with ctx.stage("smallball"):
        ensemble = ctx.ensemble(points)
        curve = estimate_small_ball(ensemble, 0, levels, exps)
    write_small_ball_csv(curve, ctx.artifact("smallball.csv"))

    result = {"n_ball_grid": len(points), "levels": len(levels), "warnings": curve.warnings}
    low, high = ctx.config.checks.small_ball_q_band
    try:
        fit = fit_small_ball_exponent(curve)
    except ValueError as e:
        result["fit"] = str(e)
        ctx.report.results["smallball"] = result
        ctx.verdict(AcceptanceCriterion.small_ball_exponent, "small_ball_exponent", False, detail=str(e))
        return

    result["fit"] = {"Q_hat": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
                     "standard_error": fit.standard_error, "n_points": fit.n_points}
    ctx.report.results["smallball"] = result
    ctx.measure("Q_hat", fit.slope)
    ctx.verdict(
        AcceptanceCriterion.small_ball_exponent, "small_ball_exponent",
        low * exps.big_q <= fit.slope <= high * exps.big_q,
        measured=fit.slope, threshold=f"[{low}·Q, {high}·Q], Q = {exps.big_q:.6g}",
    )
