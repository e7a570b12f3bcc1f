# src/handlers/chung.py
from __future__ import annotations

import logging
import math

import numpy as np

from src.handlers.context import RunContext
from src.schemas import AcceptanceCriterion
from src.services.estimators import chung_statistic
from src.services.exporters import write_modulus_csv

logger = logging.getLogger(__name__)


def run(ctx: RunContext) -> None:
    radii = ctx.config.estimators.chung_radii
    exps = ctx.exps
    points = ctx.ball_points(radii[0], ctx.config.estimators.small_ball.per_axis)

    with ctx.stage("chung"):
        ensemble = ctx.ensemble(points)
        report = chung_statistic(ensemble, 0, radii, exps)
        flipped = chung_statistic(ensemble.negated(), 0, radii, exps)
    write_modulus_csv(report, ctx.artifact("modulus_chung.csv"))

    median = report.proxy_median
    ctx.measure("chung_proxy_median", median)
    ctx.report.results["chung"] = {
        "levels": list(report.levels),
        "proxy_kind": report.proxy_kind,
        "proxy_median": median,
    }
    ctx.verdict(AcceptanceCriterion.modulus_statistics, "chung_proxy_positive",
                math.isfinite(median) and median > 0.0, measured=median, threshold="0 < медиана < ∞")
    ctx.verdict(AcceptanceCriterion.modulus_statistics, "chung_sign_flip",
                bool(np.array_equal(report.values, flipped.values)), threshold="точное совпадение")
