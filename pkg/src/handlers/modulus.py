# src/handlers/modulus.py
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from src.handlers.context import RunContext
from src.schemas import AcceptanceCriterion
from src.services.estimators import (
    ModulusReport,
    local_modulus_statistic,
    select_pairs,
    uniform_modulus_statistic,
    uniform_reference_band,
)
from src.services.exporters import write_modulus_csv
from src.services.fields import delta_pairs, delta_to_center

logger = logging.getLogger(__name__)


def _canonical(matrix: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    d2 = matrix[rows, rows] + matrix[cols, cols] - 2.0 * matrix[rows, cols]
    return np.sqrt(np.maximum(d2, 0.0))


def _monotone(report: ModulusReport) -> bool:
    """Супремум по вложенным множествам не растёт при уменьшении уровня."""
    return bool(np.all(np.diff(report.values, axis=0) <= 0.0))


def _summary(report: ModulusReport) -> dict:
    return {
        "levels": list(report.levels),
        "metric": report.metric,
        "proxy_kind": report.proxy_kind,
        "proxy_median": report.proxy_median,
        "reference": None if report.reference is None else list(report.reference),
    }


def run(ctx: RunContext) -> None:
    block = ctx.config.estimators.modulus
    checks = ctx.config.checks
    exps = ctx.exps
    points = ctx.ball_points(block.levels[0], ctx.config.estimators.small_ball.per_axis)
    constants = ctx.report.measured_constants

    with ctx.stage("modulus"):
        g = ctx.gram(points)
        ensemble = ctx.ensemble(points)
        coords = g.coords()
        n = len(points)

        if block.metric == "delta":
            center_dist = delta_to_center(coords, coords[0], exps)
        else:
            center_dist = _canonical(g.matrix, np.zeros(n, dtype=int), np.arange(n))
        ratios: Optional[tuple[float, float]] = None
        if "c1" in constants and "c3" in constants:
            ratios = (constants["c3"], constants["c1"])
        local = local_modulus_statistic(ensemble, 0, block.levels, center_dist, block.metric, ratios)
        local_flipped = local_modulus_statistic(ensemble.negated(), 0, block.levels, center_dist, block.metric, ratios)

        pairs = select_pairs(n, block.max_pairs, seed=ctx.config.sampler.master_seed)
        if block.metric == "delta":
            pair_dist = delta_pairs(coords[pairs[0]], coords[pairs[1]], exps)
        else:
            pair_dist = _canonical(g.matrix, *pairs)
        reference = None
        if "c1" in constants and "c2" in constants:
            reference = uniform_reference_band(exps.big_q, constants["c1"], constants["c2"], block.metric)
        uniform = uniform_modulus_statistic(ensemble, block.levels, pairs, pair_dist, block.metric, reference)
        uniform_flipped = uniform_modulus_statistic(
            ensemble.negated(), block.levels, pairs, pair_dist, block.metric, reference
        )

    write_modulus_csv(local, ctx.artifact("modulus_local.csv"))
    write_modulus_csv(uniform, ctx.artifact("modulus_uniform.csv"))
    ctx.measure("local_proxy_median", local.proxy_median)
    ctx.measure("uniform_proxy_median", uniform.proxy_median)
    ctx.report.results["modulus"] = {"local": _summary(local), "uniform": _summary(uniform), "pairs": len(pair_dist)}

    criterion = AcceptanceCriterion.modulus_statistics
    inside = local.within_reference(checks.local_reference_factor)
    if inside is not None:
        ctx.verdict(criterion, "local_modulus_band", inside, measured=local.proxy_median,
                    threshold=f"{local.reference} с множителем {checks.local_reference_factor}")
    inside = uniform.within_reference(checks.uniform_reference_widen)
    if inside is not None:
        ctx.verdict(criterion, "uniform_modulus_band", inside, measured=uniform.proxy_median,
                    threshold=f"{uniform.reference} с множителем {checks.uniform_reference_widen}")
    ctx.verdict(criterion, "sup_monotonicity", _monotone(local) and _monotone(uniform), threshold="точно")
    ctx.verdict(
        criterion, "modulus_sign_flip",
        bool(np.array_equal(local.values, local_flipped.values) and np.array_equal(uniform.values, uniform_flipped.values)),
        threshold="точное совпадение",
    )
