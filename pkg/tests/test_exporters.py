# tests/test_exporters.py
import json
import math
from dataclasses import dataclass

import numpy as np
import pytest

from src.constants import ENSEMBLE_MAGIC
from src.services.covariance import Gram
from src.services.exporters import (
    read_ensemble_binary,
    to_jsonable,
    write_ensemble_binary,
    write_ensemble_csv,
    write_json,
    write_points_csv,
    write_rows_csv,
)
from src.services.fields import Point
from tests.conftest import make_ensemble


def test_rows_csv_uses_full_precision(tmp_path):
    path = write_rows_csv(tmp_path / "out" / "rows.csv", ["a", "b", "c"], [[0.1, 3, True]])
    assert path.read_text(encoding="utf-8").splitlines() == ["a,b,c", "0.10000000000000001,3,true"]
    with pytest.raises(ValueError):
        write_rows_csv(tmp_path / "bad.csv", ["a"], [[1, 2]])


def test_gram_csv_has_labels(tmp_path):
    g = Gram(np.array([[1.0, 0.5], [0.5, 2.0]]), (Point((1.0, 0.0), "a"), Point((1.0, 0.1))), "fp")
    g.to_csv(tmp_path / "gram.csv")
    lines = (tmp_path / "gram.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "label,a,p1"
    assert lines[2] == "p1,0.5,2"


def test_points_and_ensemble_csv(tmp_path):
    ensemble = make_ensemble(np.array([[1.0, -1.0], [0.25, 0.5]]), [(1.0, 0.0), (1.5, 0.2)])
    write_points_csv(list(ensemble.points), tmp_path / "points.csv")
    write_ensemble_csv(ensemble, tmp_path / "ensemble.csv")
    assert (tmp_path / "points.csv").read_text(encoding="utf-8").splitlines()[1] == "p0,1,0"
    assert (tmp_path / "ensemble.csv").read_text(encoding="utf-8").splitlines() == [
        "path,p0,p1", "0,1,-1", "1,0.25,0.5",
    ]


def test_ensemble_binary_layout(tmp_path):
    values = np.arange(6.0).reshape(3, 2) / 7.0
    ensemble = make_ensemble(values, [(1.0, 0.0), (1.5, 0.2)], seed=2 ** 64 - 1)
    path = write_ensemble_binary(ensemble, tmp_path / "ensemble.bin")

    data = path.read_bytes()
    assert data.startswith(ENSEMBLE_MAGIC)
    assert np.array_equal(np.frombuffer(data[-48:], dtype="<f8"), values.ravel())

    loaded = read_ensemble_binary(path)
    assert np.array_equal(loaded.values, values)
    assert loaded.master_seed == 2 ** 64 - 1
    assert loaded.points == ensemble.points


def test_ensemble_binary_rejects_corrupt_files(tmp_path):
    ensemble = make_ensemble(np.zeros((2, 2)), [(1.0, 0.0), (1.5, 0.2)])
    path = write_ensemble_binary(ensemble, tmp_path / "ensemble.bin")
    (tmp_path / "truncated.bin").write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_ensemble_binary(tmp_path / "truncated.bin")
    (tmp_path / "foreign.bin").write_bytes(b"NOTMAGIC" + path.read_bytes()[8:])
    with pytest.raises(ValueError):
        read_ensemble_binary(tmp_path / "foreign.bin")


@dataclass(frozen=True)
class _Record:
    name: str
    values: tuple[float, ...]


def test_to_jsonable():
    payload = {
        1: np.array([1.0, math.inf]),
        "record": _Record("x", (np.float64(0.5), math.nan)),
        "flag": np.bool_(True),
        "count": np.int64(3),
    }
    assert to_jsonable(payload) == {
        "1": [1.0, "inf"],
        "record": {"name": "x", "values": [0.5, "nan"]},
        "flag": True,
        "count": 3,
    }


def test_write_json_is_deterministic(tmp_path):
    a = write_json(tmp_path / "a.json", {"b": 1, "a": [0.1, -math.inf]})
    b = write_json(tmp_path / "b.json", {"a": [0.1, -math.inf], "b": 1})
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text(encoding="utf-8")) == {"a": [0.1, "-inf"], "b": 1}
