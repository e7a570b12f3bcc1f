# src/main.py
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError
from sqlalchemy.exc import SQLAlchemyError

from src.config import settings
from src.constants import SCHEMA_VERSION, SOFTWARE_VERSION
from src.db import RunStatus, init_db, log_run
from src.errors import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_VERDICT_FAILED,
    ConfigError,
    GrfError,
    ModelValidationError,
)
from src.handlers import HANDLERS, RunContext
from src.schemas import RunConfig, RunReport
from src.services.exporters import write_json
from src.services.quadrature import fingerprint

logger = logging.getLogger(__name__)

STATUS_BY_CODE = {
    0: RunStatus.success,
    1: RunStatus.verdict_failed,
    2: RunStatus.config_error,
    3: RunStatus.validation_error,
    4: RunStatus.numerical_error,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.main",
        description="Anisotropic Gaussian random fields: covariance, sampling and path statistics.",
    )
    parser.add_argument("subcommand", choices=sorted(HANDLERS), help="Pipeline stage to run.")
    parser.add_argument("--config", required=True, help="Path to the JSON run configuration.")
    parser.add_argument("--out", default=None, help="Output directory (overrides output_dir).")
    parser.add_argument("--seed", type=int, default=None, help="Master seed, unsigned 64-bit (overrides sampler.master_seed).")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (default: DEFAULT_THREADS).")
    parser.add_argument("--no-cache", action="store_true", help="Do not read or write the Gram cache.")
    return parser


def _format_validation(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
        lines.append(f"{loc}: {item.get('msg')}")
    return "; ".join(lines)


def load_config(path: str | Path, seed: Optional[int] = None, out: Optional[str] = None) -> RunConfig:
    """Читает JSON-конфиг и применяет переопределения из командной строки."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"не удалось прочитать конфиг {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: строка {e.lineno}, столбец {e.colno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: ожидается JSON-объект")

    if seed is not None:
        data.setdefault("sampler", {})["master_seed"] = seed
    if out is not None:
        data["output_dir"] = out
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{path}: {_format_validation(e)}") from e


def config_fingerprint(config: RunConfig) -> str:
    """Хеш конфигурации без каталога вывода: один и тот же расчёт в разных --out совпадает."""
    return fingerprint(config.model_dump(mode="json", exclude={"output_dir"}))


def new_report(subcommand: str, config: RunConfig) -> RunReport:
    payload = config.model_dump(mode="json")
    return RunReport(
        software_version=SOFTWARE_VERSION,
        subcommand=subcommand,
        config=payload,
        config_hash=config_fingerprint(config),
        metadata={"started_at": datetime.now(timezone.utc).isoformat(), "schema_version": SCHEMA_VERSION},
    )


def execute(
    subcommand: str,
    config: RunConfig,
    threads: int = 1,
    use_cache: bool = True,
) -> tuple[int, RunReport]:
    """Выполняет подкоманду и пишет report.json; ошибки модели и численные ошибки пробрасываются."""
    out_dir = Path(config.output_dir or settings.OUTPUT_DIR)
    report = new_report(subcommand, config)
    ctx = RunContext(config=config, report=report, out_dir=out_dir, threads=threads, use_cache=use_cache)
    try:
        HANDLERS[subcommand](ctx)
    finally:
        write_json(ctx.artifact("report.json"), report.model_dump(mode="json"))
    code = EXIT_OK if report.passed else EXIT_VERDICT_FAILED
    return code, report


def _log_run(subcommand: str, code: int, seconds: float, config_hash: Optional[str], message: Optional[str]) -> None:
    if not settings.CACHE_ENABLED:
        return
    try:
        init_db()
        log_run(subcommand, STATUS_BY_CODE.get(code, RunStatus.numerical_error), code, seconds, config_hash, message)
    except SQLAlchemyError as e:
        logger.warning(f"Журнал запусков недоступен: {e}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    config_hash: Optional[str] = None
    message: Optional[str] = None

    try:
        config = load_config(args.config, seed=args.seed, out=args.out)
        config_hash = config_fingerprint(config)
        threads = args.threads if args.threads is not None else settings.DEFAULT_THREADS
        if threads < 1:
            raise ConfigError(f"--threads должно быть >= 1, получено {threads}")
        code, report = execute(
            args.subcommand,
            config,
            threads=threads,
            use_cache=settings.CACHE_ENABLED and not args.no_cache,
        )
        failed = [v.name for v in report.verdicts if not v.passed]
        if failed:
            message = "провалены: " + ", ".join(failed)
            logger.warning(f"Не пройдены вердикты: {', '.join(failed)}")
        else:
            logger.info(f"Все вердикты пройдены ({len(report.verdicts)})")
    except (ConfigError, ModelValidationError) as e:
        logger.error(str(e))
        code, message = e.exit_code, str(e)
    except GrfError as e:
        logger.error(f"Численная ошибка: {e}")
        code, message = e.exit_code, str(e)
    except ValueError as e:
        # нарушенные предусловия (уровни мельче сетки, пустой шар) — несогласованный конфиг
        logger.error(f"Несогласованный конфиг: {e}")
        code, message = EXIT_CONFIG_ERROR, str(e)

    _log_run(args.subcommand, code, time.perf_counter() - started, config_hash, message)
    return code


def main() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
