# src/services/covariance/product.py
from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.services.fields import Point, ProductModel, check_point, derive_exponents
from src.services.quadrature import (
    IntegralResult,
    QuadratureSpec,
    adaptive_cubature,
    geometric_breaks,
    shell_function,
    shell_series_coefficient,
)

logger = logging.getLogger(__name__)

# Ширина панели по s = log ω и порядки правил (основное и контрольное)
PANEL_WIDTH = 0.25
PANEL_ORDER = 12
CHECK_ORDER = 6
# Ниже минимального масштаба интегранд ~ e^{2s}: 25 единиц по s дают e^{−50}
LOWER_SPAN = 25.0
# Аргумент Φ, ниже которого работает ряд Φ(z) ≈ m₂z²
SERIES_ARGUMENT = 1e-3

# Слагаемые подынтегрального выражения: (коэффициент, какие аргументы брать)
COVARIANCE_TERMS = ((1.0, "ab"),)
INCREMENT_TERMS = ((1.0, "aa"), (1.0, "bb"), (-2.0, "ab"))


@lru_cache(maxsize=4)
def _panel_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    return leggauss(order)


def _axis_factor(alpha: float, a: np.ndarray, b: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Φ(|a|ω^{−1/α}) + Φ(|b|ω^{−1/α}) − Φ(|a−b|ω^{−1/α}); a, b — (P, 1), ω — (N,)."""
    phi = shell_function(float(alpha))
    scale = omega[None, :] ** (-1.0 / alpha)
    return phi(np.abs(a) * scale) + phi(np.abs(b) * scale) - phi(np.abs(a - b) * scale)


def _pick(code: str, xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    table = {"a": xs, "b": ys}
    return table[code[0]], table[code[1]]


def _laplace_integrand(model: ProductModel, xs: np.ndarray, ys: np.ndarray, s: np.ndarray, terms) -> np.ndarray:
    omega = np.exp(s)
    total = np.zeros((len(xs), len(s)))
    for coef, code in terms:
        a, b = _pick(code, xs, ys)
        prod = np.ones_like(total)
        for j, alpha in enumerate(model.alphas):
            prod = prod * _axis_factor(alpha, a[:, j:j + 1], b[:, j:j + 1], omega)
        total += coef * prod
    return total * np.exp(2.0 * s)[None, :]


def _series_tail(model: ProductModel, xs: np.ndarray, ys: np.ndarray, s_hi: float, terms) -> np.ndarray:
    """∫_{s_hi}^∞ по ряду Φ(z) ≈ m₂z²: множитель оси равен 2m₂ab·ω^{−2/α}."""
    big_q = derive_exponents(model).big_q
    total = np.zeros(len(xs))
    for coef, code in terms:
        a, b = _pick(code, xs, ys)
        prod = np.ones(len(xs))
        for j, alpha in enumerate(model.alphas):
            prod = prod * 2.0 * shell_series_coefficient(alpha) * a[:, j] * b[:, j]
        total += coef * prod
    return total * math.exp((2.0 - 2.0 * big_q) * s_hi) / (2.0 * big_q - 2.0)


def _log_range(model: ProductModel, xs: np.ndarray, ys: np.ndarray) -> tuple[float, float] | None:
    lows, highs = [], []
    for j, alpha in enumerate(model.alphas):
        scales = np.concatenate([np.abs(xs[:, j]), np.abs(ys[:, j]), np.abs(xs[:, j] - ys[:, j])])
        scales = scales[scales > 0.0]
        if len(scales) == 0:
            continue
        lows.append(alpha * math.log(float(scales.min())))
        highs.append(alpha * math.log(float(scales.max()) / SERIES_ARGUMENT))
    if not lows:
        return None
    return min(lows) - LOWER_SPAN, max(highs)


def laplace_integral(
    model: ProductModel,
    coords_a: np.ndarray,
    coords_b: np.ndarray,
    terms=COVARIANCE_TERMS,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Ковариация (или d² при terms=INCREMENT_TERMS) для пачки пар через тождество

        S^{−(Q+2)} = Γ(Q+2)^{−1} ∫ ω^{Q+1} e^{−ωS} dω,

    после которого ξ-интеграл распадается в произведение функций Φ_α по осям:
        Cov = C₁/Γ(Q+2) ∫ ω ∏_j [Φ_j(|x_j|ω^{−1/α_j}) + Φ_j(|y_j|…) − Φ_j(|x_j−y_j|…)] dω.
    Возвращает (значения, оценки ошибки).
    """
    xs = np.atleast_2d(np.asarray(coords_a, dtype=float))
    ys = np.atleast_2d(np.asarray(coords_b, dtype=float))
    bounds = _log_range(model, xs, ys)
    if bounds is None:
        zeros = np.zeros(len(xs))
        return zeros, zeros
    s_lo, s_hi = bounds
    n_panels = max(1, int(math.ceil((s_hi - s_lo) / PANEL_WIDTH)))
    edges = np.linspace(s_lo, s_hi, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])

    def panels(order: int) -> np.ndarray:
        x, w = _panel_rule(order)
        s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return _laplace_integrand(model, xs, ys, s, terms) @ weights

    fine = panels(PANEL_ORDER)
    coarse = panels(CHECK_ORDER)
    tail = _series_tail(model, xs, ys, s_hi, terms)

    big_q = derive_exponents(model).big_q
    prefactor = model.density_coefficient / math.gamma(big_q + 2.0)
    return prefactor * (fine + tail), prefactor * np.abs(fine - coarse)


def pair_covariance(model: ProductModel, p: Point, q: Point, spec: QuadratureSpec) -> float:
    check_point(model, p)
    check_point(model, q)
    values, _ = laplace_integral(model, p.as_array()[None, :], q.as_array()[None, :])
    return float(values[0])


def increment_variance(model: ProductModel, p: Point, q: Point, spec: QuadratureSpec) -> IntegralResult:
    """d² одним ω-интегралом от ∏g_pp + ∏g_qq − 2∏g_pq."""
    check_point(model, p)
    check_point(model, q)
    if p.coords == q.coords:
        return IntegralResult(0.0, 0.0, 0)
    values, errors = laplace_integral(model, p.as_array()[None, :], q.as_array()[None, :], INCREMENT_TERMS)
    value = max(float(values[0]), 0.0)
    return IntegralResult(value, float(errors[0]), PANEL_ORDER + CHECK_ORDER, "closed series tail in log ω")


def fbm_variance(model: ProductModel, p: Point) -> float:
    """При k = 1 поле есть дробное броуновское движение: Var = 2πC₁|x|^{2α}/(Γ(1+2α) sin πα)."""
    if model.k != 1:
        raise ValueError("формула дробного броуновского движения — только при k = 1")
    alpha = model.alphas[0]
    x = abs(p.coords[0])
    return 2.0 * math.pi * model.density_coefficient * x ** (2.0 * alpha) / (
        math.gamma(1.0 + 2.0 * alpha) * math.sin(math.pi * alpha)
    )


# ---------- Полосы max_j |ξ_j|^{α_j} ∈ [lo, hi) ----------

def band_cells(model: ProductModel, lo: float, hi: float) -> list[tuple[tuple[float, float], ...]]:
    """Непересекающиеся прямоугольники в координатах z_j = |ξ_j|^{α_j}."""
    k = model.k
    if lo <= 0.0:
        return [tuple((0.0, hi) for _ in range(k))]
    cells = []
    for j in range(k):
        cell = []
        for i in range(k):
            if i < j:
                cell.append((0.0, lo))
            elif i == j:
                cell.append((lo, hi))
            else:
                cell.append((0.0, hi))
        cells.append(tuple(cell))
    return cells


def band_integral(
    model: ProductModel,
    p: Point,
    q: Point,
    lo: float,
    hi: float,
    spec: QuadratureSpec,
    increment: bool = False,
) -> IntegralResult:
    """
    Вклад полосы в Cov(v(p), v(q)) (или в d² при increment=True), hi < ∞.

    Сумма по 2^k знаковым ортантам свёрнута: ∏_j 2Re[(e^{ip_jξ}−1)(e^{−iq_jξ}−1)].
    """
    check_point(model, p)
    check_point(model, q)
    alphas = np.asarray(model.alphas, dtype=float)
    big_q = derive_exponents(model).big_q
    x = p.as_array()
    y = q.as_array()

    def one_minus_cos(u: np.ndarray) -> np.ndarray:
        return 2.0 * np.sin(0.5 * u) ** 2

    def axis_real(a: np.ndarray, b: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return 2.0 * (one_minus_cos(a * xi) + one_minus_cos(b * xi) - one_minus_cos((a - b) * xi))

    def f(z: np.ndarray) -> np.ndarray:
        z = np.maximum(z, 0.0)
        xi = z ** (1.0 / alphas)
        with np.errstate(divide="ignore", invalid="ignore"):
            jac = np.prod(z ** (1.0 / alphas - 1.0) / alphas, axis=1)
            density = model.density_coefficient * np.sum(z, axis=1) ** (-(big_q + 2.0))
        if increment:
            factor = (np.prod(axis_real(x, x, xi), axis=1) + np.prod(axis_real(y, y, xi), axis=1)
                      - 2.0 * np.prod(axis_real(x, y, xi), axis=1))
        else:
            factor = np.prod(axis_real(x, y, xi), axis=1)
        out = factor * jac * density
        return np.where(np.isfinite(out), out, 0.0)

    parts = []
    for cell in band_cells(model, lo, hi):
        breaks = []
        for j, (z_lo, z_hi) in enumerate(cell):
            alpha = alphas[j]
            reach = max(abs(x[j]), abs(y[j]), abs(x[j] - y[j]))
            xi_breaks = geometric_breaks(
                z_lo ** (1.0 / alpha), z_hi ** (1.0 / alpha),
                first=max(z_hi ** (1.0 / alpha), 1.0) * 2.0 ** -20,
                period=2.0 * math.pi / reach if reach > 0.0 else None,
            )
            breaks.append(xi_breaks ** alpha)
        parts.append(adaptive_cubature(
            f, breaks, rel_tol=spec.rel_tol, abs_tol=spec.abs_tol, max_evals=spec.max_evals,
        ))

    return IntegralResult(
        value=math.fsum(r.value for r in parts),
        error_estimate=math.fsum(r.error for r in parts),
        evals=sum(r.evals for r in parts),
        truncation_note=f"band [{lo:.4g}, {hi:.4g}) in z_j = |ξ_j|^α_j",
        budget_exhausted=any(r.exhausted for r in parts),
    )
