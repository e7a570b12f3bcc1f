# src/services/quadrature/kernels.py
from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import hyp1f1, j0

from src.constants import STABLE_TABLE_NODES
from src.services.fields import SpdeModel, noise_constants
from src.services.quadrature.rules import map_tanh_sinh

logger = logging.getLogger(__name__)

# Порог, после которого ₁F₁(a; b; −z) заменяется асимптотическим рядом
HYP1F1_ASYMPTOTIC_Z = 50.0
STABLE_Z_MIN = 1e-4
STABLE_Z_MAX = 1e4


def sphere_area(dim: int) -> float:
    """|S^{d−1}|; для d = 1 это две точки ±1."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def riesz_constant(beta: float, dim: int) -> float:
    """C в f(x) = C|x|^{β−d}, где f̂(ξ) = |ξ|^{−β}."""
    return math.gamma((dim - beta) / 2.0) / (math.pi ** (dim / 2.0) * 2.0 ** beta * math.gamma(beta / 2.0))


def _angular(dim: int, x: np.ndarray) -> np.ndarray:
    """Среднее e^{−iξ·z} по сфере радиуса 1 при |z| = x."""
    return np.cos(x) if dim == 1 else j0(x)


# ---------- Симметричное α-устойчивое ядро ----------

def stable_cosine_transform(alpha: float, z: float) -> float:
    """I(z) = ∫_0^∞ cos(zξ) e^{−ξ^α} dξ."""
    if z == 0.0:
        return math.gamma(1.0 + 1.0 / alpha)
    if alpha == 2.0:
        return 0.5 * math.sqrt(math.pi) * math.exp(-z * z / 4.0)
    value, _ = quad(lambda s: math.exp(-s ** alpha), 0.0, np.inf, weight="cos", wvar=abs(z),
                    epsabs=1e-13, limlst=200)
    return value


@lru_cache(maxsize=32)
def _cosine_transform_table(alpha: float) -> tuple[np.ndarray, np.ndarray]:
    z = np.logspace(math.log10(STABLE_Z_MIN), math.log10(STABLE_Z_MAX), STABLE_TABLE_NODES)
    values = np.array([stable_cosine_transform(alpha, float(zz)) for zz in z])
    logger.debug(f"Таблица косинус-преобразования e^(-x^{alpha}) построена: {len(z)} узлов")
    return z, values


@lru_cache(maxsize=32)
def stable_density_profile(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """
    p₁(z) — плотность в момент 1 для d = 1 (Ψ = |ξ|^α), векторно по z.
    Табличная версия для оракула; точечная — transition_density.
    """
    if alpha == 2.0:
        return lambda z: np.exp(-np.asarray(z, dtype=float) ** 2 / 4.0) / math.sqrt(4.0 * math.pi)

    z_nodes, values = _cosine_transform_table(alpha)
    spline = CubicSpline(np.log(z_nodes), np.log(values))
    at_zero = math.gamma(1.0 + 1.0 / alpha)
    curvature = math.gamma(3.0 / alpha) / (2.0 * alpha)
    tail = math.gamma(1.0 + alpha) * math.sin(math.pi * alpha / 2.0)

    def profile(z: np.ndarray) -> np.ndarray:
        z = np.abs(np.asarray(z, dtype=float))
        out = np.empty_like(z)
        small = z < STABLE_Z_MIN
        large = z > STABLE_Z_MAX
        mid = ~(small | large)
        out[small] = at_zero - curvature * z[small] ** 2
        out[mid] = np.exp(spline(np.log(z[mid])))
        out[large] = tail * z[large] ** (-1.0 - alpha)
        return out / math.pi

    return profile


@lru_cache(maxsize=32)
def shell_function(alpha: float) -> Callable[[np.ndarray], np.ndarray]:
    """
    Φ(z) = 2∫_0^∞ (1 − cos zξ) e^{−ξ^α} dξ, чётная, Φ(0) = 0 точно.

    ∫_ℝ (1 − cos cξ) e^{−ω|ξ|^α} dξ = ω^{−1/α} Φ(c ω^{−1/α}).
    """
    g1 = math.gamma(1.0 + 1.0 / alpha)
    m2 = math.gamma(3.0 / alpha) / alpha
    m4 = math.gamma(5.0 / alpha) / (12.0 * alpha)
    # ниже z_series четвёртый член ряда меньше 1e−4 от главного
    z_series = min(1e-2, math.sqrt(1e-4 * m2 / m4))
    xi_scale = 30.0 ** (1.0 / alpha)
    tail = 2.0 * math.gamma(1.0 + alpha) * math.sin(math.pi * alpha / 2.0)

    def node(z: float) -> float:
        if z * xi_scale < 20.0:
            value, _ = quad(lambda s: 4.0 * math.sin(0.5 * z * s) ** 2 * math.exp(-s ** alpha),
                            0.0, np.inf, limit=500, epsabs=0.0, epsrel=1e-12)
            return value
        return 2.0 * (g1 - stable_cosine_transform(alpha, z))

    z_nodes = np.logspace(math.log10(z_series), math.log10(STABLE_Z_MAX), STABLE_TABLE_NODES)
    values = np.array([node(float(z)) for z in z_nodes])
    spline = CubicSpline(np.log(z_nodes), np.log(values))
    logger.debug(f"Таблица Φ для α={alpha} построена ({len(z_nodes)} узлов)")

    def phi(z: np.ndarray) -> np.ndarray:
        z = np.abs(np.asarray(z, dtype=float))
        out = np.zeros_like(z)
        small = (z > 0.0) & (z < z_series)
        large = z > STABLE_Z_MAX
        mid = (z >= z_series) & ~large
        zs = z[small] ** 2
        out[small] = zs * m2 - zs * zs * m4
        out[mid] = np.exp(spline(np.log(z[mid])))
        out[large] = 2.0 * g1 - tail * z[large] ** (-1.0 - alpha)
        return out

    return phi


def shell_series_coefficient(alpha: float) -> float:
    """Φ(z) ≈ coef·z² при z → 0."""
    return math.gamma(3.0 / alpha) / alpha


# ---------- Пространственный профиль F₁ ----------

def _hyp1f1_negative(a: float, b: float, z: np.ndarray) -> np.ndarray:
    """₁F₁(a; b; −z) при z ≥ 0 с асимптотикой для больших z."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z <= HYP1F1_ASYMPTOTIC_Z
    out[small] = hyp1f1(a, b, -z[small])
    zl = z[~small]
    c = a - b + 1.0
    series = 1.0 + a * c / zl + a * (a + 1.0) * c * (c + 1.0) / (2.0 * zl ** 2)
    out[~small] = math.gamma(b) / math.gamma(b - a) * zl ** (-a) * series
    return out


def _profile_node(alpha: float, beta: float, dim: int, y: float) -> float:
    """(2π)^{−d} ∫ e^{−iξy} |ξ|^{−β} e^{−|ξ|^α} dξ в радиальной форме."""
    if dim == 1:
        cut = min(1.0, math.pi / y)
        head, _ = quad(lambda r: math.exp(-r ** alpha) * math.cos(r * y), 0.0, cut,
                       weight="alg", wvar=(-beta, 0.0))
        tail, _ = quad(lambda r: r ** (-beta) * math.exp(-r ** alpha), cut, np.inf,
                       weight="cos", wvar=y, epsabs=1e-13, limlst=200)
        return (head + tail) / math.pi

    cut = min(1.0, math.pi / y)
    r_max = 50.0 ** (1.0 / alpha)
    head, _ = quad(lambda r: math.exp(-r ** alpha) * float(j0(r * y)), 0.0, cut,
                   weight="alg", wvar=(1.0 - beta, 0.0))
    body, _ = quad(lambda r: r ** (1.0 - beta) * math.exp(-r ** alpha) * float(j0(r * y)), cut, r_max,
                   limit=5000, epsabs=1e-15)
    return (head + body) / (2.0 * math.pi)


@lru_cache(maxsize=32)
def spatial_profile(alpha: float, beta: float, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """
    F₁(y) = (2π)^{−d} ∫ e^{−iξ·z} |ξ|^{−β} e^{−|ξ|^α} dξ при |z| = y, векторно.

    F(σ, z) = σ^{−(d−β)/α} F₁(|z| σ^{−1/α}).
    """
    area = sphere_area(dim)
    at_zero = (2.0 * math.pi) ** (-dim) * area * math.gamma((dim - beta) / alpha) / alpha
    riesz = riesz_constant(beta, dim)

    if alpha == 2.0:
        a, b = (dim - beta) / 2.0, dim / 2.0
        scale = (2.0 * math.pi) ** (-dim) * math.pi ** (dim / 2.0) * math.gamma(a) / math.gamma(b)
        return lambda y: scale * _hyp1f1_negative(a, b, np.asarray(y, dtype=float) ** 2 / 4.0)

    second = (2.0 * math.pi) ** (-dim) * area / dim * math.gamma((dim + 2.0 - beta) / alpha) / alpha
    y_min = 1e-3
    y_max = 1e4 if dim == 1 else 2e2
    y_nodes = np.logspace(math.log10(y_min), math.log10(y_max), STABLE_TABLE_NODES // 2)
    values = np.array([_profile_node(alpha, beta, dim, float(y)) for y in y_nodes])
    if np.any(values <= 0.0):
        bad = y_nodes[values <= 0.0]
        logger.warning(f"Профиль F₁ неположителен в {len(bad)} узлах (первый y={bad[0]:.3g}); узлы отброшены")
        y_nodes, values = y_nodes[values > 0.0], values[values > 0.0]
    spline = CubicSpline(np.log(y_nodes), np.log(values))
    logger.info(f"Таблица профиля F₁(α={alpha}, β={beta}, d={dim}) построена")

    def profile(y: np.ndarray) -> np.ndarray:
        y = np.abs(np.asarray(y, dtype=float))
        out = np.empty_like(y)
        small = y < y_min
        large = y > y_max
        mid = ~(small | large)
        out[small] = at_zero - 0.5 * second * y[small] ** 2
        out[mid] = np.exp(spline(np.log(y[mid])))
        out[large] = riesz * y[large] ** (beta - dim)
        return out

    return profile


def heat_semigroup_riesz(model: SpdeModel, sigma: np.ndarray, z: np.ndarray) -> np.ndarray:
    """F(c_Ψσ, z): свёртка плотности перехода с ядром Рисса, без множителя c_h."""
    s = model.psi_coefficient * np.maximum(np.asarray(sigma, dtype=float), 1e-300)
    profile = spatial_profile(float(model.alpha), float(model.beta), int(model.dim))
    m = (model.dim - model.beta) / model.alpha
    return s ** (-m) * profile(np.asarray(z, dtype=float) * s ** (-1.0 / model.alpha))


# ---------- Плотность перехода ----------

def transition_density(model: SpdeModel, t: float, x: float | Sequence[float]) -> float:
    if not t > 0.0:
        raise ValueError(f"t должно быть > 0, получено {t}")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if len(xs) != model.dim:
        raise ValueError(f"x имеет {len(xs)} координат, нужно {model.dim}")
    r = float(np.linalg.norm(xs))
    s = model.psi_coefficient * t
    d = model.dim
    alpha = float(model.alpha)

    if alpha == 2.0:
        return float((4.0 * math.pi * s) ** (-d / 2.0) * math.exp(-r * r / (4.0 * s)))

    scale = s ** (-1.0 / alpha)
    if d == 1:
        value = stable_cosine_transform(alpha, r * scale) * scale / math.pi
    else:
        y = r * scale
        value, _ = quad(lambda q: q * math.exp(-q ** alpha) * float(j0(q * y)), 0.0, np.inf, limit=1000)
        value *= scale ** 2 / (2.0 * math.pi)
    return max(float(value), 0.0)


# ---------- Временное ядро ----------

def lag_rule(
    hurst: float,
    t: np.ndarray,
    tp: np.ndarray,
    level: int,
    extra: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Узлы σ и веса w(σ) (формы (P, M)) такие, что для любой F

        ∫_0^t∫_0^{t'} ρ_H(s − r) F((t−s) + (t'−r)) ds dr = Σ_m w_m F(σ_m),

    где ρ_H = a_H|·|^{2H−2} при H > 1/2 и δ при H = 1/2.
    extra — дополнительная точка разбиения на пару (масштаб перехода F).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    tp = np.atleast_1d(np.asarray(tp, dtype=float))
    dt = t - tp
    if extra is None:
        extra = np.abs(dt)
    extra = np.clip(np.atleast_1d(np.asarray(extra, dtype=float)), 0.0, t + tp)

    if hurst == 0.5:
        lo = np.abs(dt)
        mid = np.maximum(extra, lo)
        n1, w1 = map_tanh_sinh(lo, mid, level)
        n2, w2 = map_tanh_sinh(mid, t + tp, level)
        return np.concatenate([n1, n2], axis=1), 0.5 * np.concatenate([w1, w2], axis=1)

    a_h = noise_constants(hurst, 1).a_h
    p = 2.0 * hurst - 1.0
    bps = np.sort(np.stack([np.zeros_like(t), np.abs(dt), t, tp, t + tp, extra], axis=1), axis=1)
    all_nodes, all_weights = [], []
    for seg in range(bps.shape[1] - 1):
        nodes, weights = map_tanh_sinh(bps[:, seg], bps[:, seg + 1], level)
        lower = np.maximum(-nodes, nodes - 2.0 * tp[:, None])
        upper = np.minimum(nodes, 2.0 * t[:, None] - nodes)

        def antiderivative(delta: np.ndarray) -> np.ndarray:
            gap = dt[:, None] - delta
            return -np.sign(gap) * np.abs(gap) ** p / p

        kernel = np.clip(antiderivative(upper) - antiderivative(lower), 0.0, None)
        kernel = np.where(upper > lower, kernel, 0.0)
        all_nodes.append(nodes)
        all_weights.append(0.5 * a_h * kernel * weights)
    return np.concatenate(all_nodes, axis=1), np.concatenate(all_weights, axis=1)


def time_factor(hurst: float, t: float, tp: float, lam: np.ndarray, level: int) -> np.ndarray:
    """
    T(λ) = ∫_0^t∫_0^{t'} ρ_H(s−r) e^{−λ(t−s)} e^{−λ(t'−r)} ds dr, векторно по λ ≥ 0.
    """
    lam = np.asarray(lam, dtype=float)
    if hurst == 0.5:
        lo = abs(t - tp)
        span = t + tp - lo
        small = lam * span < 1e-12
        safe = np.where(small, 1.0, lam)
        value = np.exp(-lam * lo) * (-np.expm1(-lam * span)) / (2.0 * safe)
        return np.where(small, 0.5 * span, value)

    nodes, weights = lag_rule(hurst, np.array([t]), np.array([tp]), level)
    return np.exp(-np.outer(lam, nodes[0])) @ weights[0]


def stationary_time_factor(hurst: float, lam: np.ndarray) -> np.ndarray:
    """Предел T_pp(λ) при λt → ∞: HΓ(2H)λ^{−2H}."""
    return hurst * math.gamma(2.0 * hurst) * np.asarray(lam, dtype=float) ** (-2.0 * hurst)


def angular_average(dim: int, x: np.ndarray) -> np.ndarray:
    return _angular(dim, np.asarray(x, dtype=float))
