# src/db/models.py
from __future__ import annotations

from datetime import datetime
from typing import Optional

from sqlalchemy import (
    DateTime,
    Enum,
    Float,
    Integer,
    LargeBinary,
    String,
    Text,
    func,
)
from sqlalchemy.orm import Mapped, mapped_column

from .base import Base
from .enums import RunStatus


class GramCacheEntry(Base):
    """
    Кэшированная матрица Грама. Ключ — отпечаток (модель + квадратуры + координаты),
    матрица хранится байтами формата .npy.
    """

    __tablename__ = "gram_cache"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    fingerprint: Mapped[str] = mapped_column(String(64), unique=True, index=True)
    family: Mapped[str] = mapped_column(String(16))
    n_points: Mapped[int] = mapped_column(Integer)
    matrix_npy: Mapped[bytes] = mapped_column(LargeBinary)
    min_eigenvalue: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    error_estimate: Mapped[Optional[float]] = mapped_column(Float, nullable=True)
    hits: Mapped[int] = mapped_column(Integer, default=0)

    created_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True),
        server_default=func.now(),
    )
    last_used_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True),
        server_default=func.now(),
        onupdate=func.now(),
    )


class RunLog(Base):
    """Журнал запусков CLI."""

    __tablename__ = "run_logs"

    id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    subcommand: Mapped[str] = mapped_column(String(32), index=True)
    status: Mapped[RunStatus] = mapped_column(Enum(RunStatus))
    exit_code: Mapped[int] = mapped_column(Integer)
    config_hash: Mapped[Optional[str]] = mapped_column(String(64), nullable=True)
    wall_seconds: Mapped[float] = mapped_column(Float, default=0.0)
    error_message: Mapped[Optional[str]] = mapped_column(Text, nullable=True)

    created_at: Mapped[datetime] = mapped_column(
        DateTime(timezone=True),
        server_default=func.now(),
    )
