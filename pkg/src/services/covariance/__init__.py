# src/services/covariance/__init__.py
from .bands import Band, band_increment_variance, band_integral, band_pair_covariance, partition
from .gram import Gram, check_psd, conditional_variance, gram, gram_fingerprint
from .pairs import canonical_distance, covariance_block, increment_variance, pair_covariance, pair_covariance_result
from .scans import (
    LndConfiguration,
    LndScanReport,
    LowBandFit,
    LowBandScanReport,
    MetricScanReport,
    low_band_increment_scan,
    metric_equivalence_scan,
    strong_lnd_scan,
)

__all__ = [
    # пары
    "pair_covariance",
    "pair_covariance_result",
    "increment_variance",
    "canonical_distance",
    "covariance_block",
    # матрицы Грама
    "Gram",
    "gram",
    "gram_fingerprint",
    "check_psd",
    "conditional_variance",
    # полосы
    "Band",
    "partition",
    "band_integral",
    "band_pair_covariance",
    "band_increment_variance",
    # сканы
    "LowBandFit",
    "LowBandScanReport",
    "MetricScanReport",
    "LndConfiguration",
    "LndScanReport",
    "low_band_increment_scan",
    "metric_equivalence_scan",
    "strong_lnd_scan",
]
