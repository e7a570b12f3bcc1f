# src/db/session.py
from __future__ import annotations

import logging
from pathlib import Path

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine, make_url
from sqlalchemy.orm import Session, sessionmaker

from src.config import settings

logger = logging.getLogger(__name__)


def _make_engine(url: str) -> Engine:
    parsed = make_url(url)
    if parsed.get_backend_name() == "sqlite" and parsed.database not in (None, "", ":memory:"):
        # каталог под файл кэша создаём сами, sqlite этого не делает
        Path(parsed.database).parent.mkdir(parents=True, exist_ok=True)
    return create_engine(url, echo=False, pool_pre_ping=True)


engine = _make_engine(settings.CACHE_DATABASE_URL)

sync_session = sessionmaker(
    bind=engine,
    expire_on_commit=False,
    class_=Session,
)


def rebind(url: str) -> Engine:
    """Переключает движок и фабрику сессий на другую базу (тесты, --cache-url)."""
    global engine
    engine.dispose()
    engine = _make_engine(url)
    sync_session.configure(bind=engine)
    logger.debug(f"Кэш переключён на {make_url(url).render_as_string(hide_password=True)}")
    return engine


def current_engine() -> Engine:
    return engine
