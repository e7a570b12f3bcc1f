# tests/test_db.py
from datetime import datetime, timedelta, timezone

import numpy as np
from sqlalchemy import update

from src.db import (
    GramCacheEntry,
    RunStatus,
    delete_cache_entries,
    cached_gram_error,
    get_cached_gram,
    get_recent_runs,
    list_cache_entries,
    log_run,
    store_gram,
)
from src.db import session as db_session


def _age_all_entries(days: float) -> None:
    with db_session.sync_session() as s:
        s.execute(update(GramCacheEntry).values(last_used_at=datetime.now(timezone.utc) - timedelta(days=days)))
        s.commit()


def test_gram_cache_round_trip_counts_hits(cache_db):
    matrix = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert get_cached_gram("missing") is None

    entry = store_gram("abc", matrix, "spde", min_eigenvalue=0.79)
    assert entry.n_points == 2 and entry.hits == 0

    cached = get_cached_gram("abc")
    assert np.array_equal(cached, matrix)
    get_cached_gram("abc")
    assert list_cache_entries()[0].hits == 2


def test_gram_cache_keeps_element_error(cache_db):
    assert cached_gram_error("missing") is None
    store_gram("abc", np.eye(2), "spde", min_eigenvalue=1.0, error_estimate=3e-9)
    assert cached_gram_error("abc") == 3e-9
    assert list_cache_entries()[0].hits == 0
    store_gram("plain", np.eye(2), "product")
    assert cached_gram_error("plain") is None


def test_store_gram_overwrites_same_fingerprint(cache_db):
    store_gram("abc", np.eye(2), "spde")
    store_gram("abc", 3.0 * np.eye(3), "product")
    entries = list_cache_entries()
    assert len(entries) == 1
    assert entries[0].family == "product" and entries[0].n_points == 3
    assert np.array_equal(get_cached_gram("abc"), 3.0 * np.eye(3))


def test_prune_by_age(cache_db):
    store_gram("old", np.eye(1), "spde")
    _age_all_entries(10)
    store_gram("fresh", np.eye(1), "spde")

    assert [e.fingerprint for e in list_cache_entries(older_than_days=5)] == ["old"]
    assert delete_cache_entries(older_than_days=5) == 1
    assert [e.fingerprint for e in list_cache_entries()] == ["fresh"]
    assert delete_cache_entries() == 1
    assert list_cache_entries() == []


def test_run_log(cache_db):
    log_run("cov", RunStatus.success, 0, 1.5, config_hash="h1")
    log_run("validate", RunStatus.validation_error, 3, 0.1, error_message="θ₁ <= 0")
    log_run("cov", RunStatus.verdict_failed, 1, 2.0)

    recent = get_recent_runs()
    assert [r.exit_code for r in recent] == [1, 3, 0]
    cov_runs = get_recent_runs(subcommand="cov")
    assert len(cov_runs) == 2
    assert cov_runs[-1].status is RunStatus.success
    assert get_recent_runs(limit=1)[0].subcommand == "cov"
