# src/handlers/sample.py
from __future__ import annotations

import logging

import numpy as np

from src.constants import MIN_TAIL_SAMPLES
from src.handlers.context import RunContext
from src.schemas import AcceptanceCriterion
from src.services.exporters import write_ensemble_binary, write_ensemble_csv
from src.services.estimators import gaussian_tail_check, standardized_increments
from src.services.sampler import empirical_cov, marginal_normality, relative_frobenius_error

logger = logging.getLogger(__name__)


def run(ctx: RunContext) -> None:
    points = ctx.grid_points()
    with ctx.stage("sample"):
        g = ctx.gram(points)
        ensemble = ctx.ensemble(points)

    sampler = ctx.config.sampler
    if sampler.write_csv:
        write_ensemble_csv(ensemble, ctx.artifact("ensemble.csv"))
    if sampler.write_binary:
        write_ensemble_binary(ensemble, ctx.artifact("ensemble.bin"))

    result = {
        "n_paths": ensemble.n_paths,
        "n_points": ensemble.n_points,
        "master_seed": ensemble.master_seed,
        "jitter_applied": ensemble.jitter_applied,
    }
    checks = ctx.config.checks

    if ensemble.n_paths >= 2:
        error = relative_frobenius_error(empirical_cov(ensemble), g.matrix)
        result["frobenius_error"] = error
        ctx.verdict(AcceptanceCriterion.sampler_fidelity, "empirical_covariance",
                    error <= checks.frobenius_tolerance, measured=error,
                    threshold=f"≤ {checks.frobenius_tolerance}")

    marginal = marginal_normality(ensemble, g)
    result["ks_min_p"] = min(marginal.p_values)
    result["ks_flagged"] = list(marginal.flagged)
    ctx.verdict(AcceptanceCriterion.sampler_fidelity, "marginal_normality", marginal.passed,
                measured=min(marginal.p_values), threshold="p ≥ 1e−3 в каждой точке",
                detail=f"провалены точки {list(marginal.failed)}" if marginal.failed else "")

    if ensemble.n_paths >= MIN_TAIL_SAMPLES and ensemble.n_points >= 2:
        # самая удалённая от первой точки по дисперсии приращения
        variances = np.diag(g.matrix) + g.matrix[0, 0] - 2.0 * g.matrix[0]
        j = int(np.argmax(variances))
        tail = gaussian_tail_check(standardized_increments(ensemble, 0, j))
        result["gaussian_tail"] = {
            "pair": [0, j],
            "levels": [{"x": t.x, "frequency": t.frequency, "lower": t.lower, "upper": t.upper} for t in tail.levels],
            "ks_p_value": tail.ks_p_value,
        }
        ctx.verdict(AcceptanceCriterion.sampler_fidelity, "increment_tail_sandwich", tail.sandwich_passed,
                    measured=tail.ks_p_value, threshold="границы хвоста при x ∈ {1, 2, 3}")
    else:
        result["gaussian_tail"] = f"пропущено: нужно ≥ {MIN_TAIL_SAMPLES} путей"

    ctx.report.results["sample"] = result
