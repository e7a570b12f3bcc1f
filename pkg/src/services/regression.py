# src/services/regression.py
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import linregress

from src.constants import MIN_SLOPE_POINTS


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    standard_error: float
    n_points: int


def fit_slope(x, y, min_points: int = MIN_SLOPE_POINTS) -> SlopeFit:
    """МНК-прямая y = slope·x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError(f"x и y разной длины: {len(x)} и {len(y)}")
    if len(x) < min_points:
        raise ValueError(f"для подгонки нужно не меньше {min_points} точек, получено {len(x)}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("в данных для подгонки есть NaN/inf")
    fit = linregress(x, y)
    r_squared = float(fit.rvalue) ** 2 if np.isfinite(fit.rvalue) else 1.0
    return SlopeFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=min(max(r_squared, 0.0), 1.0),
        standard_error=float(fit.stderr),
        n_points=len(x),
    )
