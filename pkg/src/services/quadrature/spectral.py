# src/services/quadrature/spectral.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import betainc

from src.errors import QuadratureError
from src.services.fields import SpdeModel, derive_exponents, noise_constants
from src.services.quadrature.kernels import sphere_area
from src.services.quadrature.rules import CubatureResult, adaptive_cubature, geometric_breaks
from src.services.quadrature.spec import IntegralResult, QuadratureSpec

logger = logging.getLogger(__name__)

# Хвост P1 считается численно до TAIL_SPAN·R_ξ, дальше — по среднему значению амплитуды
TAIL_SPAN = 64.0
# Допустимая мнимая часть после симметризации по знакам (τ, ξ)
IMAG_RESIDUAL_TOL = 1e-8
ANGLE_PANELS = 4
# Узлы Гаусса на склоне окна [T, 2T] в хвосте P2
WINDOW_NODES = 48
# Сколько раз обрезка R удваивается, пока оценки не сойдутся
MAX_CUTOFF_DOUBLINGS = 2


@dataclass(frozen=True)
class SpectralIntegrand:
    """
    Интегранд g(τ, ξ) спектрального интеграла c_{H,d}∬ g |τ|^{1−2H} h(ξ) dτ dξ.

    values:         (τ (n,), ξ (n, d)) → комплексные (n,)
    tail_amplitude: r → среднее по τ и по сфере |ξ| = r числителя g·(τ² + Ψ²)
    tail_limit:     предел tail_amplitude при r → ∞
    tau_period, xi_period: масштабы осцилляций (для начального разбиения)
    """
    values: Callable[[np.ndarray, np.ndarray], np.ndarray]
    tail_amplitude: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tail_limit: float = 0.0
    tau_period: Optional[float] = None
    xi_period: Optional[float] = None
    name: str = "integrand"

    @classmethod
    def zero(cls) -> "SpectralIntegrand":
        return cls(
            values=lambda tau, xi: np.zeros(len(tau), dtype=complex),
            tail_amplitude=lambda r: np.zeros_like(r),
            name="zero",
        )


@dataclass(frozen=True)
class SpectralBox:
    """Прямоугольник в координатах (|τ|, |ξ|)."""
    tau_lo: float
    tau_hi: float
    r_lo: float
    r_hi: float


def band_boxes(model: SpdeModel, lo: float, hi: float) -> list[SpectralBox]:
    """
    Непересекающиеся прямоугольники, покрывающие max(|τ|^{θ₁}, |ξ|^{θ₂}) ∈ [lo, hi), hi < ∞.
    """
    exps = derive_exponents(model)
    t_hi, r_hi = hi ** (1.0 / exps.theta1), hi ** (1.0 / exps.theta2)
    if lo <= 0.0:
        return [SpectralBox(0.0, t_hi, 0.0, r_hi)]
    t_lo, r_lo = lo ** (1.0 / exps.theta1), lo ** (1.0 / exps.theta2)
    return [
        SpectralBox(0.0, t_hi, r_lo, r_hi),
        SpectralBox(t_lo, t_hi, 0.0, r_lo),
    ]


class _SymmetrizedIntegrand:
    """Перевод g в координаты (u, w[, φ]) с суммированием по знакам τ и ξ."""

    def __init__(self, integrand: SpectralIntegrand, model: SpdeModel):
        self.integrand = integrand
        self.dim = model.dim
        self.p = 2.0 - 2.0 * model.hurst
        self.q = model.dim - model.beta
        self.max_imag = 0.0
        self.max_real = 0.0

    def tau_of(self, u: np.ndarray) -> np.ndarray:
        return (self.p * np.maximum(u, 0.0)) ** (1.0 / self.p)

    def u_of(self, tau: np.ndarray) -> np.ndarray:
        return np.asarray(tau, dtype=float) ** self.p / self.p

    def r_of(self, w: np.ndarray) -> np.ndarray:
        return (self.q * np.maximum(w, 0.0)) ** (1.0 / self.q)

    def w_of(self, r: np.ndarray) -> np.ndarray:
        return np.asarray(r, dtype=float) ** self.q / self.q

    def __call__(self, x: np.ndarray) -> np.ndarray:
        tau = self.tau_of(x[:, 0])
        r = self.r_of(x[:, 1])
        if self.dim == 1:
            xi = r[:, None]
        else:
            phi = x[:, 2]
            xi = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)

        g = self.integrand.values
        total = g(tau, xi) + g(-tau, -xi) + g(-tau, xi) + g(tau, -xi)
        total = np.asarray(total, dtype=complex)
        if np.any(np.isnan(total)):
            raise QuadratureError(f"{self.integrand.name}: NaN в интегранде")
        self.max_imag = max(self.max_imag, float(np.max(np.abs(total.imag), initial=0.0)))
        self.max_real = max(self.max_real, float(np.max(np.abs(total.real), initial=0.0)))
        return total.real


class _WindowedIntegrand:
    """sym, умноженный на окно χ(|τ|/T)."""

    def __init__(self, sym: _SymmetrizedIntegrand, tau_cut: float):
        self.sym = sym
        self.tau_cut = tau_cut

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.sym(x) * smooth_cutoff(self.sym.tau_of(x[:, 0]) / self.tau_cut)


def _integrate_box(
    sym: _SymmetrizedIntegrand,
    box: SpectralBox,
    spec: QuadratureSpec,
    window: Optional[float] = None,
) -> CubatureResult:
    if box.tau_hi <= box.tau_lo or box.r_hi <= box.r_lo:
        return CubatureResult(0.0, 0.0, 0, 0, False)

    tau_breaks = geometric_breaks(
        box.tau_lo, box.tau_hi,
        first=max(box.tau_hi - box.tau_lo, 1.0) * 2.0 ** -24,
        period=sym.integrand.tau_period,
    )
    r_breaks = geometric_breaks(
        box.r_lo, box.r_hi,
        first=max(box.r_hi - box.r_lo, 1.0) * 2.0 ** -24,
        period=sym.integrand.xi_period,
    )
    f: Callable[[np.ndarray], np.ndarray] = sym
    if window is not None:
        tau_breaks = np.union1d(tau_breaks, [window])
        f = _WindowedIntegrand(sym, window)

    breakpoints = [sym.u_of(tau_breaks), sym.w_of(r_breaks)]
    if sym.dim == 2:
        breakpoints.append(np.linspace(0.0, math.pi, ANGLE_PANELS + 1))

    return adaptive_cubature(
        f,
        breakpoints,
        rel_tol=spec.rel_tol,
        abs_tol=spec.abs_tol,
        max_evals=spec.max_evals,
    )


def _boxes_integral(
    sym: _SymmetrizedIntegrand,
    boxes: Sequence[SpectralBox],
    spec: QuadratureSpec,
    window: Optional[float] = None,
) -> IntegralResult:
    parts = [_integrate_box(sym, b, spec, window) for b in boxes]
    return IntegralResult(
        value=math.fsum(p.value for p in parts),
        error_estimate=math.fsum(p.error for p in parts),
        evals=sum(p.evals for p in parts),
        budget_exhausted=any(p.exhausted for p in parts),
    )


def _tau_tail_fraction(hurst: float, z: np.ndarray) -> np.ndarray:
    """q(z) = 2∫_z^∞ u^{1−2H}/(1+u²) du = B(1−H, H)·I_{1/(1+z²)}(H, 1−H)."""
    beta_full = math.pi / math.sin(math.pi * hurst)
    return beta_full * betainc(hurst, 1.0 - hurst, 1.0 / (1.0 + np.asarray(z, dtype=float) ** 2))


def smooth_cutoff(s: np.ndarray) -> np.ndarray:
    """
    Гладкое окно χ(s): 1 при s ≤ 1, 0 при s ≥ 2, все производные непрерывны.

    Обрезка по τ окном χ(|τ|/T) вместо индикатора [0, T] подавляет вклад
    осциллирующих членов числителя за T быстрее любой степени (ωT)^{−k}.
    """
    x = np.clip(2.0 - np.asarray(s, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0.0, np.exp(-1.0 / np.maximum(x, 1e-300)), 0.0)
        b = np.where(x < 1.0, np.exp(-1.0 / np.maximum(1.0 - x, 1e-300)), 0.0)
    return a / (a + b)


def _window_ramp(hurst: float, tau_cut: float, lm: np.ndarray) -> np.ndarray:
    """∫_T^{2T} (1 − χ(τ/T))·2τ^{1−2H}/(τ² + λ²) dτ по Гауссу–Лежандру (гладкий интегранд)."""
    nodes, weights = np.polynomial.legendre.leggauss(WINDOW_NODES)
    s = 1.5 + 0.5 * nodes
    tau = tau_cut * s
    ramp = (1.0 - smooth_cutoff(s)) * 2.0 * tau ** (1.0 - 2.0 * hurst) * (0.5 * tau_cut * weights)
    return (ramp[None, :] / (tau[None, :] ** 2 + lm[:, None] ** 2)).sum(axis=1)


def _envelope_tail(
    integrand: SpectralIntegrand,
    model: SpdeModel,
    spec: QuadratureSpec,
    tau_cut: float,
    r_cut: float,
) -> IntegralResult:
    """
    Дополнение окна χ(|τ|/T)·1{|ξ| < R_ξ}: числитель заменяется средним по τ,
    множитель (1 − χ)|τ|^{1−2H}/(τ² + Ψ²) интегрируется по τ: на [T, 2T] узлами
    Гаусса, за 2T и при |ξ| > R_ξ — через неполную бета-функцию.
    """
    exps = derive_exponents(model)
    hurst = model.hurst
    c_psi = model.psi_coefficient
    beta_full = math.pi / math.sin(math.pi * hurst)
    amp = integrand.tail_amplitude
    q_exp = model.dim - model.beta
    tau_far = 2.0 * tau_cut

    def lam(r: np.ndarray) -> np.ndarray:
        return c_psi * np.asarray(r, dtype=float) ** model.alpha

    # P2: |ξ| < R_ξ, |τ| > T (в координате w = r^{d−β}/(d−β))
    def p2(x: np.ndarray) -> np.ndarray:
        r = (q_exp * np.maximum(x[:, 0], 0.0)) ** (1.0 / q_exp)
        lm = np.maximum(lam(r), 1e-300)
        z = tau_far / lm
        far = z > 1e8
        beyond = np.where(
            far,
            tau_far ** (-2.0 * hurst) / hurst,
            lm ** (-2.0 * hurst) * _tau_tail_fraction(hurst, np.where(far, 1.0, z)),
        )
        return amp(r) * (beyond + _window_ramp(hurst, tau_cut, lm))

    r_breaks = geometric_breaks(0.0, r_cut, first=r_cut * 2.0 ** -30, period=integrand.xi_period)
    part2 = adaptive_cubature(
        p2, [r_breaks ** q_exp / q_exp], rel_tol=spec.rel_tol, abs_tol=spec.abs_tol * 1e-3,
        max_evals=spec.max_evals,
    )

    # P1: |ξ| > R_ξ, все τ
    def p1(x: np.ndarray) -> np.ndarray:
        r = x[:, 0]
        return amp(r) * beta_full * c_psi ** (-2.0 * hurst) * r ** (-1.0 - 2.0 * exps.theta2)

    r_far = TAIL_SPAN * r_cut
    part1 = adaptive_cubature(
        p1, [geometric_breaks(r_cut, r_far, first=r_cut, period=integrand.xi_period)],
        rel_tol=spec.rel_tol, abs_tol=spec.abs_tol * 1e-3, max_evals=spec.max_evals,
    )
    far_tail = integrand.tail_limit * beta_full * c_psi ** (-2.0 * hurst) * r_far ** (-2.0 * exps.theta2) / (2.0 * exps.theta2)

    scale = sphere_area(model.dim)
    return IntegralResult(
        value=scale * (part1.value + part2.value + far_tail),
        error_estimate=scale * (part1.error + part2.error),
        evals=part1.evals + part2.evals,
        budget_exhausted=part1.exhausted or part2.exhausted,
    )


def _windowed_estimate(
    sym: _SymmetrizedIntegrand,
    model: SpdeModel,
    spec: QuadratureSpec,
    cutoff: float,
) -> IntegralResult:
    """Окно χ(|τ|/T) на [0, 2T]×[0, R_ξ] численно плюс огибающая вне окна."""
    exps = derive_exponents(model)
    tau_cut = cutoff ** (1.0 / exps.theta1)
    r_cut = cutoff ** (1.0 / exps.theta2)
    inner = _boxes_integral(sym, [SpectralBox(0.0, 2.0 * tau_cut, 0.0, r_cut)], spec, window=tau_cut)
    return inner + _envelope_tail(sym.integrand, model, spec, tau_cut, r_cut)


def _envelope_integral(sym: _SymmetrizedIntegrand, model: SpdeModel, spec: QuadratureSpec) -> IntegralResult:
    """
    Оценки при R и 2R, …: пока две соседние не совпадут в пределах
    max(rel_tol·|I|, abs_tol). Разность последних двух входит в оценку ошибки.
    """
    cutoff = spec.tail_cutoff
    previous = _windowed_estimate(sym, model, spec, cutoff)
    evals, exhausted = previous.evals, previous.budget_exhausted
    for _ in range(MAX_CUTOFF_DOUBLINGS):
        cutoff *= 2.0
        current = _windowed_estimate(sym, model, spec, cutoff)
        evals += current.evals
        exhausted = exhausted or current.budget_exhausted
        drift = abs(current.value - previous.value)
        previous = current
        if drift <= max(spec.rel_tol * abs(current.value), spec.abs_tol):
            break
    else:
        logger.warning(
            f"{sym.integrand.name}: оценки при R={cutoff / 2:.4g} и R={cutoff:.4g} расходятся на {drift:.3e}"
        )
    exps = derive_exponents(model)
    return IntegralResult(
        value=current.value,
        error_estimate=current.error_estimate + drift,
        evals=evals,
        truncation_note=(
            f"smooth window T={cutoff ** (1.0 / exps.theta1):.4g}, envelope beyond R_xi={cutoff ** (1.0 / exps.theta2):.4g}, "
            f"cutoff drift {drift:.2e}"
        ),
        budget_exhausted=exhausted,
    )


def weighted_spectral_integral(
    integrand: SpectralIntegrand,
    model: SpdeModel,
    spec: QuadratureSpec,
    boxes: Optional[Sequence[SpectralBox]] = None,
) -> IntegralResult:
    """
    c_{H,d}·c_h ∬ Re g(τ, ξ) |τ|^{1−2H} |ξ|^{−β} dτ dξ.

    boxes=None — всё пространство (окно по tail_cutoff и модель хвоста с удвоением
    обрезки), иначе — сумма по переданным прямоугольникам без хвоста.
    Замены u = |τ|^{2−2H}/(2−2H), w = |ξ|^{d−β}/(d−β) поглощают вес.
    """
    consts = noise_constants(model.hurst, model.dim)
    prefactor = consts.c_hd * model.density_coefficient
    sym = _SymmetrizedIntegrand(integrand, model)

    mode = spec.tail_mode
    if mode == "envelope" and integrand.tail_amplitude is None:
        logger.info(f"{integrand.name}: нет амплитуды хвоста, переключаюсь на экстраполяцию Ричардсона")
        mode = "richardson"

    if boxes is not None:
        result = _boxes_integral(sym, boxes, spec)
    elif mode == "envelope":
        result = _envelope_integral(sym, model, spec)
    else:
        cutoff = spec.tail_cutoff
        inner = _boxes_integral(sym, band_boxes(model, 0.0, cutoff), spec)
        ring = _boxes_integral(sym, band_boxes(model, cutoff, 2.0 * cutoff), spec)
        correction = ring.value / 3.0
        result = IntegralResult(
            value=inner.value + ring.value + correction,
            # поправка целиком: её точность зависит от степенного закона хвоста
            error_estimate=inner.error_estimate + ring.error_estimate + abs(correction),
            evals=inner.evals + ring.evals,
            truncation_note=f"richardson extrapolation from R={cutoff:.4g} and R={2 * cutoff:.4g}",
            budget_exhausted=inner.budget_exhausted or ring.budget_exhausted,
        )

    if sym.max_imag > IMAG_RESIDUAL_TOL * max(sym.max_real, 1.0):
        raise QuadratureError(
            f"{integrand.name}: мнимый остаток {sym.max_imag:.3e} после симметризации"
        )
    if result.budget_exhausted:
        logger.warning(f"{integrand.name}: бюджет вычислений исчерпан, ошибка {result.error_estimate:.3e}")
    return result.scaled(prefactor)
