# src/services/sampler.py
from __future__ import annotations

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy.linalg import LinAlgError, cholesky
from scipy.stats import kstest
from tqdm import tqdm

from src.constants import (
    JITTER_FACTOR,
    JITTER_MAX,
    JITTER_START,
    KS_FAIL_LEVEL,
    KS_FLAG_LEVEL,
    PATH_CHUNK_SIZE,
    RECONSTRUCTION_TOLERANCE,
)
from src.errors import NumericalError
from src.services.covariance import Gram
from src.services.fields import Point

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64 - 1


@dataclass(frozen=True)
class CholeskyFactor:
    """L·Lᵀ = Gram + jitter·I."""
    lower: np.ndarray
    jitter_applied: float
    source_fingerprint: str
    points: tuple[Point, ...]

    @property
    def size(self) -> int:
        return self.lower.shape[0]

    def reconstruction_error(self, g: Gram) -> float:
        target = g.matrix + self.jitter_applied * np.eye(g.size)
        norm = np.linalg.norm(target)
        if norm == 0.0:
            return float(np.linalg.norm(self.lower @ self.lower.T))
        return float(np.linalg.norm(self.lower @ self.lower.T - target) / norm)


@dataclass(frozen=True)
class Ensemble:
    """values[i, j] — значение i-й реализации в j-й точке."""
    values: np.ndarray
    points: tuple[Point, ...]
    master_seed: int
    model_fingerprint: str
    jitter_applied: float = 0.0

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_points(self) -> int:
        return self.values.shape[1]

    def labels(self) -> list[str]:
        return [p.label or f"p{i}" for i, p in enumerate(self.points)]

    def negated(self) -> "Ensemble":
        return Ensemble(-self.values, self.points, self.master_seed, self.model_fingerprint, self.jitter_applied)

    def subset(self, columns) -> "Ensemble":
        cols = list(columns)
        return Ensemble(
            self.values[:, cols], tuple(self.points[c] for c in cols),
            self.master_seed, self.model_fingerprint, self.jitter_applied,
        )


@dataclass(frozen=True)
class MarginalCheck:
    p_values: tuple[float, ...]
    failed: tuple[int, ...]
    flagged: tuple[int, ...]

    @property
    def passed(self) -> bool:
        return not self.failed


def cholesky_factor(g: Gram) -> CholeskyFactor:
    """
    Нижний множитель Холецкого; при неудаче — с добавкой jitter·I,
    jitter от JITTER_START·trace/n с ростом ×JITTER_FACTOR до JITTER_MAX·trace/n.
    """
    n = g.size
    matrix = np.array(g.matrix, dtype=float)
    trace = float(np.trace(matrix))
    if trace <= 0.0:
        return CholeskyFactor(np.zeros((n, n)), 0.0, g.model_fingerprint, g.points)

    jitter = 0.0
    scale = trace / n
    next_jitter = JITTER_START * scale
    while True:
        try:
            lower = cholesky(matrix + jitter * np.eye(n), lower=True, check_finite=True)
            break
        except LinAlgError:
            if next_jitter > JITTER_MAX * scale * (1.0 + 1e-9):
                raise NumericalError(
                    f"разложение Холецкого не удалось даже с jitter = {jitter:.3e} (trace/n = {scale:.3e})"
                )
            jitter = next_jitter
            next_jitter *= JITTER_FACTOR

    factor = CholeskyFactor(lower, jitter, g.model_fingerprint, g.points)
    error = factor.reconstruction_error(g)
    if error > RECONSTRUCTION_TOLERANCE:
        raise NumericalError(f"ошибка восстановления L·Lᵀ {error:.3e} выше допуска {RECONSTRUCTION_TOLERANCE:.0e}")
    if jitter > 0.0:
        logger.warning(f"Холецкий с jitter = {jitter:.3e} ({n} точек)")
    else:
        logger.info(f"Холецкий {n}×{n} без jitter")
    return factor


def path_generator(master_seed: int, index: int) -> Generator:
    """Поток пути index: Philox с ключом master_seed и счётчиком, сдвинутым на index в третьем слове."""
    return Generator(Philox(key=master_seed, counter=[0, 0, index, 0]))


def _chunk_normals(master_seed: int, start: int, stop: int, n: int) -> np.ndarray:
    z = np.empty((stop - start, n))
    for row, index in enumerate(range(start, stop)):
        z[row] = path_generator(master_seed, index).standard_normal(n)
    return z


def sample_ensemble(factor: CholeskyFactor, n_paths: int, master_seed: int, threads: int = 1) -> Ensemble:
    """
    Путь i равен L·z_i, z_i берётся из собственного потока (master_seed, i):
    результат не зависит от числа потоков и порядка вычисления.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths должно быть >= 1, получено {n_paths}")
    if not (0 <= master_seed <= MAX_SEED):
        raise ValueError(f"master_seed должен быть 64-битным беззнаковым, получено {master_seed}")

    n = factor.size
    lower_t = factor.lower.T
    starts = list(range(0, n_paths, PATH_CHUNK_SIZE))

    def work(start: int) -> np.ndarray:
        stop = min(start + PATH_CHUNK_SIZE, n_paths)
        return _chunk_normals(master_seed, start, stop, n) @ lower_t

    values = np.empty((n_paths, n))
    show = len(starts) > 1 and sys.stderr.isatty()
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for start, block in tqdm(zip(starts, pool.map(work, starts)), total=len(starts),
                                 desc="paths", disable=not show):
            values[start:start + len(block)] = block

    logger.info(f"Ансамбль {n_paths}×{n} сгенерирован (seed={master_seed})")
    return Ensemble(values, factor.points, master_seed, factor.source_fingerprint, factor.jitter_applied)


def empirical_cov(e: Ensemble) -> np.ndarray:
    """Несмещённая выборочная ковариация (ddof = 1)."""
    if e.n_paths < 2:
        raise ValueError("для выборочной ковариации нужно не меньше двух путей")
    return np.atleast_2d(np.cov(e.values, rowvar=False, ddof=1))


def relative_frobenius_error(estimate: np.ndarray, reference: np.ndarray) -> float:
    return float(np.linalg.norm(estimate - reference) / np.linalg.norm(reference))


def marginal_normality(e: Ensemble, g: Gram) -> MarginalCheck:
    """KS по каждой точке против N(0, Var): пометка при p < 1%, провал при p < 0.1%."""
    p_values, failed, flagged = [], [], []
    for j in range(e.n_points):
        sd = float(np.sqrt(max(g.matrix[j, j], 0.0)))
        if sd == 0.0:
            p_values.append(1.0)
            continue
        p = float(kstest(e.values[:, j] / sd, "norm").pvalue)
        p_values.append(p)
        if p < KS_FAIL_LEVEL:
            failed.append(j)
        elif p < KS_FLAG_LEVEL:
            flagged.append(j)
            logger.warning(f"KS: точка {j} помечена, p = {p:.2e}")
    return MarginalCheck(tuple(p_values), tuple(failed), tuple(flagged))
