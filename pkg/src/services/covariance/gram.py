# src/services/covariance/gram.py
from __future__ import annotations

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from tqdm import tqdm

from .pairs import covariance_block
from src.constants import GRAM_CHUNK_PAIRS, MAX_GRAM_POINTS, PINV_RCOND, PSD_TOLERANCE
from src.errors import NumericalError
from src.services.fields import FieldModel, Point, check_point, model_payload
from src.services.quadrature import QuadratureSpec, fingerprint

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Gram:
    """
    Ковариационная матрица на помеченном наборе точек.

    matrix:            симметричная PSD матрица (n, n)
    points:            точки в порядке строк
    model_fingerprint: sha256(модель + настройки квадратур + координаты)
    error_estimate:    наибольшая оценка ошибки элемента (None — неизвестна)
    """
    matrix: np.ndarray
    points: tuple[Point, ...]
    model_fingerprint: str
    error_estimate: Optional[float] = None

    def __post_init__(self) -> None:
        self.matrix.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.points)

    def labels(self) -> list[str]:
        return [p.label or f"p{i}" for i, p in enumerate(self.points)]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def coords(self) -> np.ndarray:
        return np.array([p.coords for p in self.points], dtype=float)

    def to_csv(self, path) -> None:
        from src.services.exporters import write_gram_csv

        write_gram_csv(self, path)


def gram_fingerprint(model: FieldModel, points: Sequence[Point], spec: QuadratureSpec) -> str:
    return fingerprint(model_payload(model), spec.fingerprint_payload(), [list(p.coords) for p in points])


def check_psd(matrix: np.ndarray) -> float:
    """Минимальное собственное число; ошибка, если оно ниже −PSD_TOLERANCE·trace."""
    eigenvalues = np.linalg.eigvalsh(matrix)
    worst = float(eigenvalues[0])
    trace = float(np.trace(matrix))
    if worst < -PSD_TOLERANCE * max(trace, 0.0):
        raise NumericalError(
            f"матрица Грама не PSD: λ_min = {worst:.3e} при trace = {trace:.3e} "
            f"(допуск {PSD_TOLERANCE:.0e}·trace)"
        )
    return worst


def gram(
    model: FieldModel,
    points: Sequence[Point],
    spec: QuadratureSpec,
    threads: int = 1,
) -> Gram:
    """
    Матрица Грама: считаются только элементы верхнего треугольника,
    пачками по GRAM_CHUNK_PAIRS пар, пачки параллельно по потокам.
    """
    points = tuple(points)
    n = len(points)
    if n == 0:
        raise ValueError("пустой набор точек")
    if n > MAX_GRAM_POINTS:
        raise ValueError(f"{n} точек больше допустимых {MAX_GRAM_POINTS}")
    for p in points:
        check_point(model, p)

    coords = np.array([p.coords for p in points], dtype=float)
    rows, cols = np.triu_indices(n)
    chunks = [slice(start, min(start + GRAM_CHUNK_PAIRS, len(rows))) for start in range(0, len(rows), GRAM_CHUNK_PAIRS)]

    def work(chunk: slice) -> tuple[np.ndarray, np.ndarray]:
        return covariance_block(model, coords[rows[chunk]], coords[cols[chunk]], spec)

    values = np.empty(len(rows))
    errors = np.empty(len(rows))
    show = len(chunks) > 1 and sys.stderr.isatty()
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for chunk, (block, block_errors) in tqdm(zip(chunks, pool.map(work, chunks)), total=len(chunks),
                                                 desc="gram", disable=not show):
            values[chunk] = block
            errors[chunk] = block_errors

    matrix = np.zeros((n, n))
    matrix[rows, cols] = values
    matrix[cols, rows] = values

    if np.any(np.diag(matrix) < -PSD_TOLERANCE * max(float(np.trace(matrix)), 1e-300)):
        raise NumericalError("отрицательная дисперсия на диагонали матрицы Грама")
    worst = check_psd(matrix)
    error = float(np.max(errors))
    result = Gram(matrix=matrix, points=points, model_fingerprint=gram_fingerprint(model, points, spec),
                  error_estimate=error)
    logger.info(f"Матрица Грама {n}×{n} собрана, λ_min = {worst:.3e}, ошибка элементов ≤ {error:.1e}")
    return result


def conditional_variance(g: Gram, target: int, conditioning: Sequence[int]) -> float:
    """
    Var(v(x_target) | v(x_i), i ∈ conditioning) как дополнение Шура
    g[t,t] − g[t,S] g[S,S]⁺ g[S,t] с псевдообратной (отсечка PINV_RCOND·λ_max).
    """
    cond = list(conditioning)
    if target in cond:
        raise ValueError(f"индекс {target} не может быть одновременно целью и условием")
    matrix = g.matrix
    base = float(matrix[target, target])
    if not cond:
        return max(base, 0.0)
    block = matrix[np.ix_(cond, cond)]
    cross = matrix[target, cond]
    inverse = np.linalg.pinv(block, rcond=PINV_RCOND, hermitian=True)
    return max(base - float(cross @ inverse @ cross), 0.0)
