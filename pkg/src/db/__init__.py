from __future__ import annotations

from .session import engine, sync_session, rebind, current_engine
from .base import Base
from .enums import RunStatus
from .models import GramCacheEntry, RunLog
from .migrations import init_db

from .repositories.grams import (
    get_cached_gram,
    cached_gram_error,
    store_gram,
    list_cache_entries,
    delete_cache_entries,
)

from .repositories.runs import (
    log_run,
    get_recent_runs,
)

__all__ = [
    # engine/session/base
    "engine",
    "sync_session",
    "rebind",
    "current_engine",
    "Base",
    # enums
    "RunStatus",
    # models
    "GramCacheEntry",
    "RunLog",
    # migrations
    "init_db",
    # gram cache
    "get_cached_gram",
    "cached_gram_error",
    "store_gram",
    "list_cache_entries",
    "delete_cache_entries",
    # runs
    "log_run",
    "get_recent_runs",
]
