# src/services/exporters.py
from __future__ import annotations

import csv
import json
import logging
import struct
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from src.constants import ENSEMBLE_MAGIC
from src.services.fields import Point

logger = logging.getLogger(__name__)


def _fmt(value: Any) -> str:
    """Детерминированное представление числа: 17 значащих цифр."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _prepare(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_rows_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = _prepare(path)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"строка из {len(row)} значений, а в заголовке {len(header)}")
            writer.writerow([_fmt(v) for v in row])
            count += 1
    logger.debug(f"CSV {path.name}: {count} строк")
    return path


def write_gram_csv(g, path: str | Path) -> Path:
    """Матрица Грама: первая колонка — метка строки, заголовок — метки точек."""
    labels = g.labels()
    rows = ([label, *g.matrix[i]] for i, label in enumerate(labels))
    return write_rows_csv(path, ["label", *labels], rows)


def write_points_csv(points: Sequence[Point], path: str | Path) -> Path:
    dim = points[0].dim if points else 0
    header = ["label", *(f"x{j}" for j in range(dim))]
    rows = ([p.label or f"p{i}", *p.coords] for i, p in enumerate(points))
    return write_rows_csv(path, header, rows)


def write_ensemble_csv(ensemble, path: str | Path) -> Path:
    """Одна строка на путь, колонки — метки точек."""
    rows = ([i, *row] for i, row in enumerate(ensemble.values))
    return write_rows_csv(path, ["path", *ensemble.labels()], rows)


def _ensemble_header(ensemble) -> dict:
    return {
        "n_paths": ensemble.n_paths,
        "n_points": ensemble.n_points,
        "master_seed": ensemble.master_seed,
        "model_fingerprint": ensemble.model_fingerprint,
        "jitter_applied": ensemble.jitter_applied,
        "points": [{"label": p.label, "coords": list(p.coords)} for p in ensemble.points],
    }


def write_ensemble_binary(ensemble, path: str | Path) -> Path:
    """
    Формат: ENSEMBLE_MAGIC, длина заголовка (uint32 LE), JSON-заголовок,
    затем значения float64 little-endian по строкам (путь за путём).
    """
    path = _prepare(path)
    header = json.dumps(_ensemble_header(ensemble), sort_keys=True).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(ENSEMBLE_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(ensemble.values, dtype="<f8").tobytes())
    logger.info(f"Ансамбль записан в {path} ({ensemble.n_paths}×{ensemble.n_points})")
    return path


def read_ensemble_binary(path: str | Path):
    from src.services.sampler import Ensemble

    data = Path(path).read_bytes()
    if not data.startswith(ENSEMBLE_MAGIC):
        raise ValueError(f"{path}: не файл ансамбля (неверная сигнатура)")
    offset = len(ENSEMBLE_MAGIC)
    (size,) = struct.unpack_from("<I", data, offset)
    offset += 4
    header = json.loads(data[offset:offset + size].decode("utf-8"))
    offset += size
    values = np.frombuffer(data, dtype="<f8", offset=offset)
    expected = header["n_paths"] * header["n_points"]
    if values.size != expected:
        raise ValueError(f"{path}: ожидалось {expected} значений, найдено {values.size}")
    points = tuple(Point(tuple(p["coords"]), p["label"]) for p in header["points"])
    return Ensemble(
        values=values.reshape(header["n_paths"], header["n_points"]).astype(float),
        points=points,
        master_seed=header["master_seed"],
        model_fingerprint=header["model_fingerprint"],
        jitter_applied=header["jitter_applied"],
    )


def to_jsonable(obj: Any) -> Any:
    """Датаклассы, pydantic-модели, numpy-массивы и кортежи → чистый JSON."""
    if hasattr(obj, "model_dump"):
        return to_jsonable(obj.model_dump(mode="json"))
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        # JSON не знает inf/nan
        if value != value or value in (float("inf"), float("-inf")):
            return str(value)
        return value
    return obj


def write_json(path: str | Path, payload: Any) -> Path:
    path = _prepare(path)
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_modulus_csv(report, path: str | Path) -> Path:
    header = ["scale", "median", "q05", "q95", "min", "max"]
    rows = ([r.scale, r.median, r.q05, r.q95, r.minimum, r.maximum] for r in report.records)
    return write_rows_csv(path, header, rows)


def write_small_ball_csv(curve, path: str | Path) -> Path:
    header = ["r", "u", "p_hat", "ci_low", "ci_high", "n_paths", "n_ball_points", "resolution_warning"]
    rows = (
        [e.r, e.u, e.p_hat, e.ci_low, e.ci_high, e.n_paths, e.n_ball_points, e.resolution_warning]
        for e in curve.entries
    )
    return write_rows_csv(path, header, rows)
