# src/db/repositories/grams.py
from __future__ import annotations

import io
import logging
from datetime import datetime, timedelta, timezone
from typing import Optional

import numpy as np
from sqlalchemy import delete, select

from src.db import session as db_session
from src.db.models import GramCacheEntry

logger = logging.getLogger(__name__)


def _to_npy(matrix: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    np.save(buffer, np.asarray(matrix, dtype=float), allow_pickle=False)
    return buffer.getvalue()


def _from_npy(blob: bytes) -> np.ndarray:
    return np.load(io.BytesIO(blob), allow_pickle=False)


def get_cached_gram(fingerprint: str) -> Optional[np.ndarray]:
    """Матрица по отпечатку или None; попадание увеличивает счётчик hits."""
    with db_session.sync_session() as s:
        entry = s.execute(
            select(GramCacheEntry).where(GramCacheEntry.fingerprint == fingerprint)
        ).scalar_one_or_none()
        if entry is None:
            return None
        entry.hits += 1
        entry.last_used_at = datetime.now(timezone.utc)
        matrix = _from_npy(entry.matrix_npy)
        s.commit()
    logger.debug(f"Кэш Грама: попадание {fingerprint[:12]}")
    return matrix


def cached_gram_error(fingerprint: str) -> Optional[float]:
    """Оценка ошибки элементов сохранённой матрицы; счётчик hits не меняется."""
    with db_session.sync_session() as s:
        return s.execute(
            select(GramCacheEntry.error_estimate).where(GramCacheEntry.fingerprint == fingerprint)
        ).scalar_one_or_none()


def store_gram(
    fingerprint: str,
    matrix: np.ndarray,
    family: str,
    min_eigenvalue: Optional[float] = None,
    error_estimate: Optional[float] = None,
) -> GramCacheEntry:
    """Записывает матрицу; существующая запись с тем же отпечатком перезаписывается."""
    with db_session.sync_session() as s:
        entry = s.execute(
            select(GramCacheEntry).where(GramCacheEntry.fingerprint == fingerprint)
        ).scalar_one_or_none()
        if entry is None:
            entry = GramCacheEntry(fingerprint=fingerprint, hits=0)
            s.add(entry)
        entry.family = family
        entry.n_points = int(matrix.shape[0])
        entry.matrix_npy = _to_npy(matrix)
        entry.min_eigenvalue = min_eigenvalue
        entry.error_estimate = error_estimate
        s.commit()
        s.refresh(entry)
    logger.debug(f"Кэш Грама: сохранено {fingerprint[:12]} ({matrix.shape[0]} точек)")
    return entry


def _older_than_clause(older_than_days: Optional[float]):
    if older_than_days is None:
        return None
    cutoff = datetime.now(timezone.utc) - timedelta(days=older_than_days)
    return GramCacheEntry.last_used_at < cutoff


def list_cache_entries(older_than_days: Optional[float] = None) -> list[GramCacheEntry]:
    query = select(GramCacheEntry).order_by(GramCacheEntry.last_used_at)
    clause = _older_than_clause(older_than_days)
    if clause is not None:
        query = query.where(clause)
    with db_session.sync_session() as s:
        return list(s.execute(query).scalars().all())


def delete_cache_entries(older_than_days: Optional[float] = None) -> int:
    """Удаляет записи, не использовавшиеся дольше older_than_days (None — все). Возвращает число удалённых."""
    query = delete(GramCacheEntry)
    clause = _older_than_clause(older_than_days)
    if clause is not None:
        query = query.where(clause)
    with db_session.sync_session() as s:
        result = s.execute(query)
        s.commit()
    removed = int(result.rowcount or 0)
    logger.info(f"Кэш Грама: удалено {removed} записей")
    return removed
