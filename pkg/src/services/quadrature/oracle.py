# src/services/quadrature/oracle.py
from __future__ import annotations

import logging
import math

import numpy as np
from scipy.integrate import quad
from scipy.special import i0e

from src.errors import QuadratureError
from src.services.fields import Point, SpdeModel, check_point
from src.services.quadrature.kernels import lag_rule, riesz_constant, stable_density_profile
from src.services.quadrature.spec import QuadratureSpec

logger = logging.getLogger(__name__)

QUAD_LIMIT = 400


def _density_1d(model: SpdeModel, s: float):
    """p_s на прямой с учётом c_Ψ (s уже умножено на c_Ψ)."""
    if model.alpha == 2.0:
        norm = 1.0 / math.sqrt(4.0 * math.pi * s)
        return lambda x: norm * math.exp(-x * x / (4.0 * s))
    profile = stable_density_profile(float(model.alpha))
    scale = s ** (-1.0 / model.alpha)
    return lambda x: scale * float(profile(np.array([x * scale]))[0])


def _riesz_convolution_1d(model: SpdeModel, s: float, z: float, tol: float) -> float:
    """∫ p_s(z − w) C|w|^{β−1} dw, разбиение в 0 (алгебраический вес) и у пика w = |z|."""
    beta = model.beta
    const = riesz_constant(beta, 1)
    dens = _density_1d(model, s)
    z = abs(z)
    width = 2.0 * math.sqrt(s) if model.alpha == 2.0 else s ** (1.0 / model.alpha)
    reach = z + (20.0 if model.alpha == 2.0 else 50.0) * width

    def g(w: float) -> float:
        return dens(z - w) + dens(z + w)

    head_end = 0.5 * z if z > 0.0 else reach
    total, _ = quad(g, 0.0, head_end, weight="alg", wvar=(beta - 1.0, 0.0), epsrel=tol, limit=QUAD_LIMIT)
    if z > 0.0:
        body, _ = quad(lambda w: g(w) * w ** (beta - 1.0), head_end, reach, points=[z],
                       epsrel=tol, limit=QUAD_LIMIT)
        total += body
    far, _ = quad(lambda w: g(w) * w ** (beta - 1.0), reach, np.inf, epsrel=tol, limit=QUAD_LIMIT)
    return const * (total + far)


def _riesz_convolution_2d(model: SpdeModel, s: float, z: float, tol: float) -> float:
    """
    Гауссов случай в полярных координатах: среднее p_s по окружности радиуса ρ
    равно (4πs)^{−1} e^{−(|z|−ρ)²/(4s)} i0e(|z|ρ/(2s)).
    """
    if model.alpha != 2.0:
        raise QuadratureError("временной оракул для d = 2 поддерживается только при α = 2")
    beta = model.beta
    const = riesz_constant(beta, 2)
    z = abs(z)

    def ring(rho: float) -> float:
        return 2.0 * math.pi / (4.0 * math.pi * s) * math.exp(-(z - rho) ** 2 / (4.0 * s)) * float(i0e(z * rho / (2.0 * s)))

    reach = z + 40.0 * math.sqrt(s)
    head_end = 0.5 * z if z > 0.0 else reach
    total, _ = quad(ring, 0.0, head_end, weight="alg", wvar=(beta - 1.0, 0.0), epsrel=tol, limit=QUAD_LIMIT)
    if z > 0.0:
        body, _ = quad(lambda r: ring(r) * r ** (beta - 1.0), head_end, reach, points=[z],
                       epsrel=tol, limit=QUAD_LIMIT)
        total += body
    return const * total


def time_domain_inner_product(model: SpdeModel, p: Point, q: Point, spec: QuadratureSpec) -> float:
    """
    ⟨G_p, G_q⟩ через плотности перехода: интеграл по запаздыванию σ от
    w_H(σ)·∫ p_σ(Δx − w) C|w|^{β−d} dw, без спектрального представления.
    """
    check_point(model, p)
    check_point(model, q)
    t, tp = p.coords[0], q.coords[0]
    dx = float(np.linalg.norm(np.asarray(p.coords[1:]) - np.asarray(q.coords[1:])))
    tol = max(spec.rel_tol, 1e-10)

    convolve = _riesz_convolution_1d if model.dim == 1 else _riesz_convolution_2d
    nodes, weights = lag_rule(model.hurst, np.array([t]), np.array([tp]), spec.lag_level)

    terms = []
    for sigma, weight in zip(nodes[0], weights[0]):
        if weight == 0.0 or sigma <= 0.0:
            continue
        terms.append(weight * convolve(model, model.psi_coefficient * float(sigma), dx, tol))
    value = model.density_coefficient * math.fsum(terms)
    logger.debug(f"Оракул ⟨G_p, G_q⟩ для {p.coords}, {q.coords}: {value:.8g} ({len(terms)} узлов σ)")
    return value
