# src/handlers/context.py
from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np
from sqlalchemy.exc import SQLAlchemyError

from src.db import cached_gram_error, get_cached_gram, init_db, store_gram
from src.schemas import AcceptanceCriterion, RunConfig, RunReport, StageTiming, Verdict
from src.services.covariance import Gram, check_psd, gram, gram_fingerprint
from src.services.fields import (
    Exponents,
    FieldModel,
    Point,
    Rectangle,
    check_point,
    derive_exponents,
)
from src.services.grids import delta_ball_grid, rectangle_grid
from src.services.quadrature import QuadratureSpec
from src.services.sampler import Ensemble, cholesky_factor, sample_ensemble

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """
    Состояние одного запуска: конфиг, отчёт, каталог вывода и общий
    кэш матриц Грама и ансамблей (в памяти и в БД по отпечатку).
    """
    config: RunConfig
    report: RunReport
    out_dir: Path
    threads: int = 1
    use_cache: bool = True
    _grams: dict[str, Gram] = field(default_factory=dict, repr=False)
    _ensembles: dict[tuple, Ensemble] = field(default_factory=dict, repr=False)
    _cache_ready: bool = field(default=False, repr=False)

    # ---------- Конфиг ----------

    @property
    def model(self) -> FieldModel:
        return self.config.model

    @property
    def spec(self) -> QuadratureSpec:
        return self.config.quadrature

    @property
    def domain(self) -> Rectangle:
        return Rectangle(Point(tuple(self.config.domain.lower)), Point(tuple(self.config.domain.upper)))

    @property
    def exps(self) -> Exponents:
        return derive_exponents(self.model)

    @property
    def center(self) -> Point:
        grid = self.config.grid
        if grid.center is not None:
            return Point(tuple(grid.center), "center")
        return Point(self.domain.center.coords, "center")

    def artifact(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return self.out_dir / name

    # ---------- Отчёт ----------

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        logger.info(f"Этап {name}: старт")
        try:
            yield
        finally:
            seconds = time.perf_counter() - started
            stages = self.report.metadata.setdefault("stages", [])
            stages.append(StageTiming(stage=name, seconds=seconds).model_dump())
            logger.info(f"Этап {name}: {seconds:.2f} с")

    def verdict(
        self,
        criterion: AcceptanceCriterion,
        name: str,
        passed: bool,
        measured: Optional[float] = None,
        threshold: Optional[str] = None,
        detail: str = "",
    ) -> Verdict:
        v = Verdict(
            criterion=criterion,
            name=name,
            passed=bool(passed),
            measured=None if measured is None else float(measured),
            threshold=threshold,
            detail=detail,
        )
        self.report.verdicts.append(v)
        if v.passed:
            logger.info(f"Вердикт {name}: OK")
        else:
            logger.warning(f"Вердикт {name}: ПРОВАЛ ({detail or measured})")
        return v

    def measure(self, name: str, value: float) -> None:
        self.report.measured_constants[name] = float(value)

    # ---------- Точки ----------

    def grid_points(self) -> list[Point]:
        grid = self.config.grid
        if grid.kind == "ball":
            return self.ball_points(grid.radius, grid.per_axis)
        return rectangle_grid(self.model, self.domain, grid.counts)

    def ball_points(self, radius: float, per_axis: int) -> list[Point]:
        center = self.center
        check_point(self.model, center)
        return delta_ball_grid(self.model, center, radius, per_axis)

    # ---------- Грам и ансамбли ----------

    def _ensure_cache(self) -> bool:
        if not self.use_cache:
            return False
        if not self._cache_ready:
            try:
                init_db()
            except SQLAlchemyError as e:
                logger.warning(f"Кэш матриц Грама недоступен, работаем без него: {e}")
                self.use_cache = False
                return False
            self._cache_ready = True
        return True

    def gram(self, points: Sequence[Point]) -> Gram:
        fp = gram_fingerprint(self.model, points, self.spec)
        if fp in self._grams:
            return self._grams[fp]

        matrix: Optional[np.ndarray] = None
        error: Optional[float] = None
        if self._ensure_cache():
            try:
                matrix = get_cached_gram(fp)
                error = cached_gram_error(fp) if matrix is not None else None
            except SQLAlchemyError as e:
                logger.warning(f"Чтение кэша не удалось: {e}")

        if matrix is not None and matrix.shape == (len(points), len(points)):
            check_psd(matrix)
            g = Gram(np.array(matrix, dtype=float), tuple(points), fp, error_estimate=error)
            logger.info(f"Матрица Грама {len(points)}×{len(points)} взята из кэша")
        else:
            g = gram(self.model, points, self.spec, threads=self.threads)
            if self._ensure_cache():
                try:
                    store_gram(fp, g.matrix, self.model.family, g.min_eigenvalue(), g.error_estimate)
                except SQLAlchemyError as e:
                    logger.warning(f"Запись в кэш не удалась: {e}")

        self._grams[fp] = g
        return g

    def ensemble(self, points: Sequence[Point]) -> Ensemble:
        g = self.gram(points)
        sampler = self.config.sampler
        key = (g.model_fingerprint, sampler.n_paths, sampler.master_seed)
        if key not in self._ensembles:
            factor = cholesky_factor(g)
            self._ensembles[key] = sample_ensemble(factor, sampler.n_paths, sampler.master_seed, self.threads)
        return self._ensembles[key]
