# src/db/repositories/runs.py
from __future__ import annotations

from typing import Optional

from sqlalchemy import select

from src.db import session as db_session
from src.db.enums import RunStatus
from src.db.models import RunLog


def log_run(
    subcommand: str,
    status: RunStatus,
    exit_code: int,
    wall_seconds: float,
    config_hash: Optional[str] = None,
    error_message: Optional[str] = None,
) -> RunLog:
    with db_session.sync_session() as s:
        log = RunLog(
            subcommand=subcommand,
            status=status,
            exit_code=exit_code,
            wall_seconds=wall_seconds,
            config_hash=config_hash,
            error_message=error_message,
        )
        s.add(log)
        s.commit()
        s.refresh(log)
        return log


def get_recent_runs(limit: int = 20, subcommand: Optional[str] = None) -> list[RunLog]:
    query = select(RunLog).order_by(RunLog.id.desc()).limit(limit)
    if subcommand is not None:
        query = query.where(RunLog.subcommand == subcommand)
    with db_session.sync_session() as s:
        return list(s.execute(query).scalars().all())
