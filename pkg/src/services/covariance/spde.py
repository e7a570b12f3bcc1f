# src/services/covariance/spde.py
from __future__ import annotations

import logging
import math

import numpy as np

from src.errors import NumericalError
from src.services.fields import Point, SpdeModel, check_point, derive_exponents, noise_constants
from src.services.quadrature import (
    IntegralResult,
    QuadratureSpec,
    SpectralBox,
    SpectralIntegrand,
    adaptive_cubature,
    angular_average,
    geometric_breaks,
    heat_semigroup_riesz,
    lag_rule,
    sphere_area,
    time_factor,
    weighted_spectral_integral,
)

logger = logging.getLogger(__name__)

# λ·τ_min, начиная с которого T_pq экспоненциально мал, а T_pp стационарен
TIME_DECAY_LEVEL = 40.0
# Радиус (в единицах 1/|Δx|), после которого осциллирующий член cos/J₀ отбрасывается
OSCILLATION_SPAN = 400.0
# Предельный уровень tanh–sinh при уточнении лаговой формы
MAX_LAG_LEVEL = 8


def _split(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return points[:, 0], points[:, 1:]


# ---------- Лаговая форма (векторно по парам) ----------

def _lag_sum(model: SpdeModel, coords_a: np.ndarray, coords_b: np.ndarray, level: int) -> tuple[np.ndarray, int]:
    t_a, x_a = _split(coords_a)
    t_b, x_b = _split(coords_b)
    if np.any(t_a <= 0.0) or np.any(t_b <= 0.0):
        raise ValueError("время всех точек должно быть > 0")
    dx = np.linalg.norm(x_a - x_b, axis=1)
    # масштаб, на котором F(σ, |Δx|) переходит от риссовской асимптотики к гладкому профилю
    extra = dx ** model.alpha / model.psi_coefficient
    nodes, weights = lag_rule(model.hurst, t_a, t_b, level, extra=extra)
    with np.errstate(over="ignore", invalid="ignore"):
        kernel = heat_semigroup_riesz(model, nodes, dx[:, None])
    kernel = np.where(weights > 0.0, kernel, 0.0)
    return model.density_coefficient * np.sum(weights * kernel, axis=1), int(nodes.size)


def lag_covariance(model: SpdeModel, coords_a: np.ndarray, coords_b: np.ndarray, level: int) -> np.ndarray:
    """
    Cov(u(p_i), u(q_i)) для пачки пар: c_h Σ_m w(σ_m) F(c_Ψσ_m, |Δx_i|) на одном уровне tanh–sinh.

    coords_a, coords_b — массивы (P, 1 + d).
    """
    values, _ = _lag_sum(model, coords_a, coords_b, level)
    return values


def refined_lag_covariance(
    model: SpdeModel,
    coords_a: np.ndarray,
    coords_b: np.ndarray,
    spec: QuadratureSpec,
) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Лаговая форма с уточнением: уровень растёт от spec.lag_level до MAX_LAG_LEVEL,
    пока два соседних уровня не совпадут в пределах max(rel_tol·|C|, abs_tol).
    Уточняются только ещё не сошедшиеся пары.

    Возвращает (значения, оценки ошибки = последняя разность уровней, число узлов).
    """
    coords_a = np.atleast_2d(np.asarray(coords_a, dtype=float))
    coords_b = np.atleast_2d(np.asarray(coords_b, dtype=float))
    # на предельном уровне сравниваем с предыдущим
    start = min(spec.lag_level, MAX_LAG_LEVEL - 1)
    values, evals = _lag_sum(model, coords_a, coords_b, start)
    errors = np.full(values.shape, np.inf)
    active = np.arange(len(values))
    for level in range(start + 1, MAX_LAG_LEVEL + 1):
        refined, n = _lag_sum(model, coords_a[active], coords_b[active], level)
        evals += n
        diff = np.abs(refined - values[active])
        values[active] = refined
        errors[active] = diff
        done = diff <= np.maximum(spec.rel_tol * np.abs(refined), spec.abs_tol)
        active = active[~done]
        if active.size == 0:
            break
    if active.size:
        logger.warning(
            f"Лаговая форма: {active.size} пар не сошлись к уровню {MAX_LAG_LEVEL}, "
            f"наибольшая разность {float(np.max(errors[active])):.2e}"
        )
    return values, errors, evals


def pair_covariance_result(model: SpdeModel, p: Point, q: Point, spec: QuadratureSpec) -> IntegralResult:
    check_point(model, p)
    check_point(model, q)
    values, errors, evals = refined_lag_covariance(model, p.as_array()[None, :], q.as_array()[None, :], spec)
    error = float(errors[0])
    converged = error <= max(spec.rel_tol * abs(float(values[0])), spec.abs_tol)
    return IntegralResult(float(values[0]), error, evals, "tanh-sinh level refinement", budget_exhausted=not converged)


def pair_covariance(model: SpdeModel, p: Point, q: Point, spec: QuadratureSpec) -> float:
    return pair_covariance_result(model, p, q, spec).value


# ---------- Радиальная форма для d² ----------

def _stationary_tail(model: SpdeModel, radius: float) -> float:
    """∫_R^∞ r^{d−1−β} (T_pp + T_qq)(c_Ψ r^α) dr по асимптотике T ~ HΓ(2H)λ^{−2H}."""
    exps = derive_exponents(model)
    hurst = model.hurst
    c = model.psi_coefficient
    return 2.0 * hurst * math.gamma(2.0 * hurst) * c ** (-2.0 * hurst) * radius ** (-2.0 * exps.theta2) / (2.0 * exps.theta2)


def _cross_tail(model: SpdeModel, dt: float, radius: float) -> float:
    """Вклад −2T_pq за R при Δx = 0 и H > 1/2: T_pq ~ a_H|Δt|^{2H−2}λ^{−2}."""
    if model.hurst == 0.5:
        return 0.0
    a_h = noise_constants(model.hurst, model.dim).a_h
    c = model.psi_coefficient
    power = 2.0 * model.alpha - model.dim + model.beta
    return 2.0 * a_h * dt ** (2.0 * model.hurst - 2.0) * c ** (-2.0) * radius ** (-power) / power


def increment_variance(model: SpdeModel, p: Point, q: Point, spec: QuadratureSpec) -> IntegralResult:
    """
    d²(p, q) = ‖u(p) − u(q)‖² одним радиальным интегралом

        c_h (2π)^{−d} |S^{d−1}| ∫ r^{d−1−β} [T_pp + T_qq − 2A_d(r|Δx|) T_pq](c_Ψ r^α) dr,

    где интеграл по τ уже взят точно (T — временной множитель), A₁ = cos, A₂ = J₀.
    Независимый путь по сравнению с лаговой формой pair_covariance.
    """
    check_point(model, p)
    check_point(model, q)
    t, tp = p.coords[0], q.coords[0]
    dx = float(np.linalg.norm(p.as_array()[1:] - q.as_array()[1:]))
    dt = abs(t - tp)
    if dt == 0.0 and dx == 0.0:
        return IntegralResult(0.0, 0.0, 0)

    hurst, alpha, dim = model.hurst, model.alpha, model.dim
    c = model.psi_coefficient
    q_exp = dim - model.beta
    level = spec.time_factor_level

    tau_min = min([t, tp] + ([dt] if dt > 0.0 else []))
    r_big = (TIME_DECAY_LEVEL / (c * tau_min)) ** (1.0 / alpha)
    r_osc = OSCILLATION_SPAN / dx if dx > 0.0 else math.inf

    def bracket(r: np.ndarray, with_cross: bool) -> np.ndarray:
        lam = c * r ** alpha
        out = time_factor(hurst, t, t, lam, level) + time_factor(hurst, tp, tp, lam, level)
        if with_cross:
            out = out - 2.0 * angular_average(dim, r * dx) * time_factor(hurst, t, tp, lam, level)
        return out

    def in_w(with_cross: bool):
        def f(x: np.ndarray) -> np.ndarray:
            r = (q_exp * np.maximum(x[:, 0], 0.0)) ** (1.0 / q_exp)
            return bracket(r, with_cross)
        return f

    period = 2.0 * math.pi / dx if dx > 0.0 else None
    r_full = r_osc if dx > 0.0 else r_big
    breaks = geometric_breaks(0.0, r_full, first=r_full * 2.0 ** -30, period=period)
    main = adaptive_cubature(
        in_w(True), [breaks ** q_exp / q_exp],
        rel_tol=spec.rel_tol, abs_tol=spec.abs_tol, max_evals=spec.max_evals,
    )
    value, error, evals, exhausted = main.value, main.error, main.evals, main.exhausted

    r_tail = r_full
    if dx > 0.0 and r_osc < r_big:
        # дальше r_osc осциллирующий член усредняется в ноль
        mid_breaks = geometric_breaks(r_osc, r_big, first=r_osc)
        mid = adaptive_cubature(
            in_w(False), [mid_breaks ** q_exp / q_exp],
            rel_tol=spec.rel_tol, abs_tol=spec.abs_tol, max_evals=spec.max_evals,
        )
        value += mid.value
        error += mid.error
        evals += mid.evals
        exhausted = exhausted or mid.exhausted
        r_tail = r_big

    tail = _stationary_tail(model, r_tail)
    if dx == 0.0:
        tail -= _cross_tail(model, dt, r_tail)
    value += tail

    scale = model.density_coefficient * (2.0 * math.pi) ** (-dim) * sphere_area(dim)
    result = IntegralResult(
        value=value,
        error_estimate=error,
        evals=evals,
        truncation_note=f"analytic radial tail beyond r={r_tail:.4g}",
        budget_exhausted=exhausted,
    ).scaled(scale)

    floor = -max(10.0 * result.error_estimate, spec.abs_tol)
    if result.value < floor:
        raise NumericalError(
            f"отрицательная дисперсия приращения d² = {result.value:.3e} для {p.coords}, {q.coords}"
        )
    if result.value < 0.0:
        result = IntegralResult(0.0, result.error_estimate, result.evals, result.truncation_note, result.budget_exhausted)
    logger.debug(f"d²({p.coords}, {q.coords}) = {result.value:.8g} ± {result.error_estimate:.2e}")
    return result


# ---------- Спектральные интегранды ----------

def green_transform(model: SpdeModel, p: Point, tau: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """
    𝓕G_p(τ, ξ) = e^{−iξ·x}(e^{−iτt} − e^{−tΨ(ξ)})/(Ψ(ξ) − iτ), векторно по узлам.
    """
    t = p.coords[0]
    x = np.asarray(p.coords[1:], dtype=float)
    tau = np.asarray(tau, dtype=float)
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    psi = model.psi_coefficient * np.linalg.norm(xi, axis=1) ** model.alpha
    z = psi - 1j * tau
    tz = t * z
    at_origin = z == 0.0
    safe = np.where(at_origin, 1.0, z)
    near = np.abs(tz) < 0.5
    with np.errstate(over="ignore", invalid="ignore"):
        # малые |tz|: (e^{−iτt} − e^{−tΨ}) = e^{−tΨ}(e^{tz} − 1)
        small = np.exp(-t * psi) * np.expm1(np.where(near, tz, 0.0)) / safe
        large = (np.exp(-1j * tau * t) - np.exp(-t * psi)) / safe
    value = np.where(near, small, large)
    value = np.where(at_origin, t, value)
    return np.exp(-1j * (xi @ x)) * value


def _amplitude(model: SpdeModel, p: Point, q: Point):
    """Среднее по τ и сфере |ξ| = r числителя 𝓕G_p·conj(𝓕G_q)·(τ² + Ψ²)."""
    t, tp = p.coords[0], q.coords[0]
    dx = float(np.linalg.norm(p.as_array()[1:] - q.as_array()[1:]))
    same_time = 1.0 if t == tp else 0.0

    def amp(r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        lam = model.psi_coefficient * r ** model.alpha
        return angular_average(model.dim, r * dx) * (same_time + np.exp(-(t + tp) * lam))

    limit = same_time if dx == 0.0 else 0.0
    return amp, limit


def _periods(p: Point, q: Point) -> tuple[float, float | None]:
    dx = float(np.linalg.norm(p.as_array()[1:] - q.as_array()[1:]))
    tau_period = 2.0 * math.pi / max(p.coords[0], q.coords[0])
    return tau_period, (2.0 * math.pi / dx if dx > 0.0 else None)


def covariance_integrand(model: SpdeModel, p: Point, q: Point) -> SpectralIntegrand:
    check_point(model, p)
    check_point(model, q)
    amp, limit = _amplitude(model, p, q)
    tau_period, xi_period = _periods(p, q)

    def values(tau: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return green_transform(model, p, tau, xi) * np.conj(green_transform(model, q, tau, xi))

    return SpectralIntegrand(
        values=values,
        tail_amplitude=amp,
        tail_limit=limit,
        tau_period=tau_period,
        xi_period=xi_period,
        name=f"cov{p.coords}{q.coords}",
    )


def increment_integrand(model: SpdeModel, p: Point, q: Point) -> SpectralIntegrand:
    """|𝓕G_p − 𝓕G_q|²: интегранд d² и полосовых дисперсий приращений."""
    check_point(model, p)
    check_point(model, q)
    amp_pp, _ = _amplitude(model, p, p)
    amp_qq, _ = _amplitude(model, q, q)
    amp_pq, limit_pq = _amplitude(model, p, q)
    tau_period, xi_period = _periods(p, q)

    def values(tau: np.ndarray, xi: np.ndarray) -> np.ndarray:
        diff = green_transform(model, p, tau, xi) - green_transform(model, q, tau, xi)
        return (diff * np.conj(diff)).astype(complex)

    def amp(r: np.ndarray) -> np.ndarray:
        return amp_pp(r) + amp_qq(r) - 2.0 * amp_pq(r)

    return SpectralIntegrand(
        values=values,
        tail_amplitude=amp,
        tail_limit=2.0 - 2.0 * limit_pq,
        tau_period=tau_period,
        xi_period=xi_period,
        name=f"inc{p.coords}{q.coords}",
    )


def spectral_covariance(
    model: SpdeModel,
    p: Point,
    q: Point,
    spec: QuadratureSpec,
    boxes: list[SpectralBox] | None = None,
) -> IntegralResult:
    """E[u(p)u(q)] (или его полосовая часть) прямым спектральным интегралом."""
    return weighted_spectral_integral(covariance_integrand(model, p, q), model, spec, boxes=boxes)


def spectral_increment_variance(
    model: SpdeModel,
    p: Point,
    q: Point,
    spec: QuadratureSpec,
    boxes: list[SpectralBox] | None = None,
) -> IntegralResult:
    if p.coords == q.coords:
        return IntegralResult(0.0, 0.0, 0)
    return weighted_spectral_integral(increment_integrand(model, p, q), model, spec, boxes=boxes)
