# src/db/migrations.py
from __future__ import annotations

import logging

from . import session
from .base import Base

# таблицы регистрируются в метаданных при импорте моделей
from . import models  # noqa: F401

logger = logging.getLogger(__name__)


def init_db() -> None:
    Base.metadata.create_all(session.current_engine())
    logger.debug("Таблицы кэша созданы/проверены")
