# src/services/quadrature/__init__.py
from .kernels import (
    angular_average,
    heat_semigroup_riesz,
    lag_rule,
    riesz_constant,
    shell_function,
    shell_series_coefficient,
    sphere_area,
    spatial_profile,
    stable_density_profile,
    stationary_time_factor,
    time_factor,
    transition_density,
)
from .oracle import time_domain_inner_product
from .rules import CubatureResult, adaptive_cubature, geometric_breaks, map_tanh_sinh, tanh_sinh_rule
from .spec import IntegralResult, QuadratureSpec, fingerprint
from .spectral import SpectralBox, SpectralIntegrand, band_boxes, smooth_cutoff, weighted_spectral_integral

__all__ = [
    # настройки и результаты
    "QuadratureSpec",
    "IntegralResult",
    "fingerprint",
    # правила
    "CubatureResult",
    "adaptive_cubature",
    "geometric_breaks",
    "map_tanh_sinh",
    "tanh_sinh_rule",
    # ядра
    "angular_average",
    "heat_semigroup_riesz",
    "lag_rule",
    "riesz_constant",
    "shell_function",
    "shell_series_coefficient",
    "sphere_area",
    "spatial_profile",
    "stable_density_profile",
    "stationary_time_factor",
    "time_factor",
    "transition_density",
    # спектральный интеграл
    "SpectralBox",
    "SpectralIntegrand",
    "band_boxes",
    "smooth_cutoff",
    "weighted_spectral_integral",
    # оракул
    "time_domain_inner_product",
]
