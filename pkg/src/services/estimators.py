# src/services/estimators.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np
from numpy.random import Generator, Philox
from scipy.stats import binomtest, kstest

from src.constants import (
    BALL_RESOLUTION_WARNING,
    KS_FLAG_LEVEL,
    MAX_LEVEL_RADIUS,
    MAX_UNIFORM_PAIRS,
    MIN_SLOPE_POINTS,
    MIN_SMALL_BALL_PATHS,
    MIN_TAIL_SAMPLES,
    TAIL_CHECK_LEVELS,
    WILSON_CONFIDENCE,
)
from src.services.fields import Exponents, delta_to_center
from src.services.regression import SlopeFit, fit_slope
from src.services.sampler import Ensemble

logger = logging.getLogger(__name__)

Metric = Literal["d", "delta"]
# Сколько значений за раз держим в памяти при проходе по парам
UNIFORM_CHUNK_VALUES = 20_000_000


# ---------- Уровни ----------

def check_levels(levels: Sequence[float]) -> tuple[float, ...]:
    """Радиусы строго убывают и лежат в (0, MAX_LEVEL_RADIUS): тогда log log(1/r) > 0."""
    levels = tuple(float(r) for r in levels)
    if not levels:
        raise ValueError("пустой список уровней")
    for r in levels:
        if not (0.0 < r < MAX_LEVEL_RADIUS):
            raise ValueError(f"уровень r = {r} вне (0, {MAX_LEVEL_RADIUS})")
    if any(b >= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"уровни должны строго убывать: {levels}")
    return levels


def dyadic_levels(first: int, last: int) -> tuple[float, ...]:
    """r = 2^{−n}, n = first..last."""
    return check_levels([2.0 ** -n for n in range(first, last + 1)])


def _finest_half(n_levels: int) -> slice:
    return slice(n_levels // 2, n_levels)


# ---------- Малые шары ----------

@dataclass(frozen=True)
class SmallBallEntry:
    r: float
    u: float
    p_hat: float
    n_paths: int
    ci_low: float
    ci_high: float
    n_ball_points: int
    resolution_warning: bool = False


@dataclass(frozen=True)
class SmallBallCurve:
    entries: tuple[SmallBallEntry, ...]

    @property
    def warnings(self) -> list[str]:
        return [
            f"r={e.r:.4g}: в шаре {e.n_ball_points} точек (< {BALL_RESOLUTION_WARNING})"
            for e in self.entries if e.resolution_warning
        ]


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=WILSON_CONFIDENCE, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_small_ball(
    ensemble: Ensemble,
    center: int,
    levels: Sequence[tuple[float, float]],
    exps: Exponents,
) -> SmallBallCurve:
    """
    p̂(r, u) = доля путей, у которых max_{x ∈ B_Δ(x₀, r)} |v(x) − v(x₀)| ≤ u.
    """
    if ensemble.n_paths < MIN_SMALL_BALL_PATHS:
        raise ValueError(f"нужно не меньше {MIN_SMALL_BALL_PATHS} путей, получено {ensemble.n_paths}")
    coords = np.array([p.coords for p in ensemble.points], dtype=float)
    dist = delta_to_center(coords, coords[center], exps)
    increments = np.abs(ensemble.values - ensemble.values[:, center:center + 1])

    entries = []
    for r, u in levels:
        if r <= 0.0 or u < 0.0:
            raise ValueError(f"нужно r > 0 и u >= 0, получено ({r}, {u})")
        if u >= r:
            logger.warning(f"Уровень (r={r}, u={u}) нарушает u < r")
        inside = (dist <= r) & (np.arange(len(dist)) != center)
        count = int(inside.sum())
        if count == 0:
            raise ValueError(f"шар B_Δ радиуса {r} не содержит точек сетки кроме центра")
        sup = increments[:, inside].max(axis=1)
        hits = int(np.count_nonzero(sup <= u))
        low, high = wilson_interval(hits, ensemble.n_paths)
        warn = count < BALL_RESOLUTION_WARNING
        if warn:
            logger.warning(f"Малый шар r={r:.4g}: только {count} точек сетки")
        entries.append(SmallBallEntry(
            r=float(r), u=float(u), p_hat=hits / ensemble.n_paths, n_paths=ensemble.n_paths,
            ci_low=low, ci_high=high, n_ball_points=count, resolution_warning=warn,
        ))
    return SmallBallCurve(tuple(entries))


def fit_small_ball_exponent(curve: SmallBallCurve) -> SlopeFit:
    """Наклон log(−log p̂) по log(r/u) — эмпирическое Q̂."""
    usable = [e for e in curve.entries if 0.0 < e.p_hat < 1.0 and e.u > 0.0]
    if len(usable) < MIN_SLOPE_POINTS:
        raise ValueError(
            f"вырожденные вероятности: только {len(usable)} уровней с 0 < p̂ < 1 (нужно {MIN_SLOPE_POINTS})"
        )
    x = [math.log(e.r / e.u) for e in usable]
    y = [math.log(-math.log(e.p_hat)) for e in usable]
    return fit_slope(x, y)


# ---------- Статистики модуля непрерывности ----------

@dataclass(frozen=True)
class LevelRecord:
    scale: float
    median: float
    q05: float
    q95: float
    minimum: float
    maximum: float


@dataclass(frozen=True)
class ModulusReport:
    """
    values:      (n_levels, n_paths): статистика пути на уровне
    proxy:       по пути min (liminf) или max (limsup) по более мелкой половине уровней
    reference:   теоретическая полоса (low, high), если известна
    """
    statistic: str
    metric: str
    levels: tuple[float, ...]
    records: tuple[LevelRecord, ...]
    values: np.ndarray = field(repr=False)
    proxy_kind: str
    proxy: np.ndarray = field(repr=False)
    reference: Optional[tuple[float, float]] = None

    @property
    def proxy_median(self) -> float:
        return float(np.median(self.proxy))

    def within_reference(self, widen: float = 1.0) -> Optional[bool]:
        """Медиана прокси внутри полосы [low/widen, high·widen]."""
        if self.reference is None:
            return None
        low, high = self.reference
        return low / widen <= self.proxy_median <= high * widen


def _records(levels: Sequence[float], values: np.ndarray) -> tuple[LevelRecord, ...]:
    out = []
    for r, row in zip(levels, values):
        q05, med, q95 = np.quantile(row, [0.05, 0.5, 0.95])
        out.append(LevelRecord(float(r), float(med), float(q05), float(q95), float(row.min()), float(row.max())))
    return tuple(out)


def _report(statistic: str, metric: str, levels, values: np.ndarray, kind: str, reference=None) -> ModulusReport:
    finest = values[_finest_half(len(levels))]
    proxy = finest.min(axis=0) if kind == "liminf" else finest.max(axis=0)
    return ModulusReport(
        statistic=statistic,
        metric=metric,
        levels=tuple(levels),
        records=_records(levels, values),
        values=values,
        proxy_kind=kind,
        proxy=proxy,
        reference=reference,
    )


def chung_statistic(ensemble: Ensemble, center: int, radii: Sequence[float], exps: Exponents) -> ModulusReport:
    """
    sup_{B_Δ(x₀, r)} |v − v(x₀)| / (r (log log(1/r))^{−1/Q}) по путям и радиусам;
    прокси liminf — минимум по мелкой половине радиусов.
    """
    radii = check_levels(radii)
    coords = np.array([p.coords for p in ensemble.points], dtype=float)
    dist = delta_to_center(coords, coords[center], exps)
    increments = np.abs(ensemble.values - ensemble.values[:, center:center + 1])
    others = np.arange(len(dist)) != center

    values = np.empty((len(radii), ensemble.n_paths))
    for k, r in enumerate(radii):
        inside = (dist <= r) & others
        if not inside.any():
            raise ValueError(f"радиус {r} меньше разрешения сетки")
        norm = r * math.log(math.log(1.0 / r)) ** (-1.0 / exps.big_q)
        values[k] = increments[:, inside].max(axis=1) / norm
    return _report("chung", "delta", radii, values, "liminf")


def local_modulus_statistic(
    ensemble: Ensemble,
    center: int,
    levels: Sequence[float],
    distances: np.ndarray,
    metric: Metric,
    metric_ratios: Optional[tuple[float, float]] = None,
) -> ModulusReport:
    """
    sup_{0 < dist ≤ r} |v − v(x₀)| / (dist √(log log(1/dist))).

    distances: расстояния точек до центра в выбранной метрике.
    Для d эталон √2; для Δ — [√2·c₃, √2·c₁] по результатам скана метрик.
    """
    levels = check_levels(levels)
    distances = np.asarray(distances, dtype=float)
    if len(distances) != ensemble.n_points:
        raise ValueError(f"{len(distances)} расстояний на {ensemble.n_points} точек")
    increments = np.abs(ensemble.values - ensemble.values[:, center:center + 1])

    values = np.empty((len(levels), ensemble.n_paths))
    for k, r in enumerate(levels):
        inside = (distances > 0.0) & (distances <= r)
        if not inside.any():
            raise ValueError(f"на уровне {r} нет точек")
        dist = distances[inside]
        norm = dist * np.sqrt(np.log(np.log(1.0 / dist)))
        values[k] = (increments[:, inside] / norm).max(axis=1)

    if metric == "d":
        reference = (math.sqrt(2.0), math.sqrt(2.0))
    elif metric_ratios is not None:
        reference = (math.sqrt(2.0) * metric_ratios[0], math.sqrt(2.0) * metric_ratios[1])
    else:
        reference = None
    return _report("local", metric, levels, values, "limsup", reference)


def uniform_reference_band(big_q: float, c1: float, c2: float, metric: Metric) -> tuple[float, float]:
    """Полоса для равномерного модуля: Δ — [√(2Qc₂), √(2Q)c₁], d — [√(2Qc₂)/c₁, √(2Q)]."""
    if metric == "delta":
        return math.sqrt(2.0 * big_q * c2), math.sqrt(2.0 * big_q) * c1
    return math.sqrt(2.0 * big_q * c2) / c1, math.sqrt(2.0 * big_q)


def select_pairs(n_points: int, max_pairs: int = MAX_UNIFORM_PAIRS, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Все пары i < j или равномерная выборка из них, если пар больше max_pairs."""
    rows, cols = np.triu_indices(n_points, k=1)
    if len(rows) <= max_pairs:
        return rows, cols
    rng = Generator(Philox(key=seed))
    keep = np.sort(rng.choice(len(rows), size=max_pairs, replace=False))
    logger.info(f"Пар {len(rows)} больше {max_pairs}: взята равномерная выборка")
    return rows[keep], cols[keep]


def uniform_modulus_statistic(
    ensemble: Ensemble,
    levels: Sequence[float],
    pairs: tuple[np.ndarray, np.ndarray],
    pair_distances: np.ndarray,
    metric: Metric,
    reference: Optional[tuple[float, float]] = None,
) -> ModulusReport:
    """
    sup_{0 < dist ≤ r} |v(x) − v(y)| / (dist √(log(1/dist))) по парам.

    Пары сортируются по расстоянию; для каждого уровня берётся бегущий максимум
    по префиксу отсортированного массива.
    """
    levels = check_levels(levels)
    rows, cols = pairs
    dist = np.asarray(pair_distances, dtype=float)
    if not (len(rows) == len(cols) == len(dist)):
        raise ValueError("несогласованные массивы пар и расстояний")

    usable = (dist > 0.0) & (dist <= levels[0])
    order = np.argsort(dist[usable], kind="stable")
    rows, cols, dist = rows[usable][order], cols[usable][order], dist[usable][order]
    cuts = np.searchsorted(dist, levels, side="right")
    if np.any(cuts == 0):
        bad = levels[int(np.argmax(cuts == 0))]
        raise ValueError(f"на уровне {bad} нет пар")
    norm = dist * np.sqrt(np.log(1.0 / dist))

    values = np.empty((len(levels), ensemble.n_paths))
    step = max(1, UNIFORM_CHUNK_VALUES // max(len(dist), 1))
    for start in range(0, ensemble.n_paths, step):
        block = ensemble.values[start:start + step]
        stat = np.abs(block[:, rows] - block[:, cols]) / norm
        running = np.maximum.accumulate(stat, axis=1)
        values[:, start:start + step] = running[:, cuts - 1].T
    return _report("uniform", metric, levels, values, "limsup", reference)


# ---------- Гауссов хвост ----------

@dataclass(frozen=True)
class TailLevel:
    x: float
    frequency: float
    lower: float
    upper: float

    @property
    def passed(self) -> bool:
        return self.lower <= self.frequency <= self.upper


@dataclass(frozen=True)
class GaussianTailReport:
    levels: tuple[TailLevel, ...]
    ks_statistic: float
    ks_p_value: float
    n_samples: int

    @property
    def sandwich_passed(self) -> bool:
        return all(level.passed for level in self.levels)

    @property
    def passed(self) -> bool:
        return self.sandwich_passed and self.ks_p_value >= KS_FLAG_LEVEL


def tail_sandwich(x: float) -> tuple[float, float]:
    """Двусторонние границы для P(|Z| > x): удвоенные e^{−x²/2}/(2√(2π)x) и e^{−x²/2}/√(2π)."""
    density = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return 2.0 * density / (2.0 * x), 2.0 * density


def gaussian_tail_check(samples: np.ndarray, levels: Sequence[float] = TAIL_CHECK_LEVELS) -> GaussianTailReport:
    samples = np.asarray(samples, dtype=float).ravel()
    if len(samples) < MIN_TAIL_SAMPLES:
        raise ValueError(f"нужно не меньше {MIN_TAIL_SAMPLES} выборочных значений, получено {len(samples)}")
    checks = []
    for x in levels:
        lower, upper = tail_sandwich(x)
        checks.append(TailLevel(float(x), float(np.mean(np.abs(samples) > x)), lower, upper))
    ks = kstest(samples, "norm")
    report = GaussianTailReport(tuple(checks), float(ks.statistic), float(ks.pvalue), len(samples))
    if not report.passed:
        logger.warning(f"Проверка гауссова хвоста не пройдена: KS p = {report.ks_p_value:.3g}")
    return report


def standardized_increments(ensemble: Ensemble, i: int, j: int) -> np.ndarray:
    """(v_i − v_j)/sd по ансамблю — стандартизованные приращения для проверки хвоста."""
    diff = ensemble.values[:, i] - ensemble.values[:, j]
    sd = float(np.std(diff, ddof=1))
    if sd == 0.0:
        raise ValueError(f"нулевая дисперсия приращения между точками {i} и {j}")
    return diff / sd
