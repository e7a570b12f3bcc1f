# tests/test_cli.py
import json

import pytest

from src.config import settings
from src.db import get_recent_runs, list_cache_entries
from src.errors import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_VALIDATION_ERROR,
    EXIT_VERDICT_FAILED,
)
from src.main import config_fingerprint, load_config, run


@pytest.fixture
def no_cache(monkeypatch):
    monkeypatch.setattr(settings, "CACHE_ENABLED", False)


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def read_report(out_dir):
    return json.loads((out_dir / "report.json").read_text(encoding="utf-8"))


def test_validate_reports_exponents(tmp_path, no_cache):
    config = write_config(tmp_path, {"model": {"preset": "she_heat_white"}})
    out = tmp_path / "out"
    assert run(["validate", "--config", config, "--out", str(out)]) == EXIT_OK

    report = read_report(out)
    assert report["subcommand"] == "validate"
    assert report["measured_constants"]["theta1"] == pytest.approx(0.375)
    assert report["measured_constants"]["Q"] == pytest.approx(4.0)
    assert report["results"]["validate"]["exponents"]["theta2"] == pytest.approx(0.75)
    assert all(v["passed"] for v in report["verdicts"])


def test_malformed_json_is_a_config_error(tmp_path, no_cache):
    path = tmp_path / "broken.json"
    path.write_text('{"model": {"preset": "she_heat_white"', encoding="utf-8")
    assert run(["validate", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG_ERROR


@pytest.mark.parametrize(
    "payload",
    [
        {"model": {"preset": "no_such_model"}},
        {"model": {"preset": "she_heat_white"}, "unexpected": 1},
        {"model": {"preset": "she_heat_white"}, "estimators": {"chung_radii": [0.2, 0.1]}},
        {"model": {"preset": "she_heat_white"}, "estimators": {"chung_radii": [0.02, 0.04]}},
        {"model": {"preset": "she_heat_white"}, "grid": {"counts": [3]}},
        {"model": {"family": "spde", "alpha": 2.0, "beta": 1.5, "hurst": 0.5}, "domain": {"lower": [0.5, 0.0], "upper": [1.5, 1.0]}},
    ],
)
def test_invalid_configs_exit_with_config_error(tmp_path, no_cache, payload):
    config = write_config(tmp_path, payload)
    assert run(["validate", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_CONFIG_ERROR


def test_missing_config_file(tmp_path, no_cache):
    assert run(["validate", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG_ERROR


def test_bad_overrides(tmp_path, no_cache):
    config = write_config(tmp_path, {"model": {"preset": "she_heat_white"}})
    out = str(tmp_path / "out")
    assert run(["validate", "--config", config, "--out", out, "--seed", "-1"]) == EXIT_CONFIG_ERROR
    assert run(["validate", "--config", config, "--out", out, "--threads", "0"]) == EXIT_CONFIG_ERROR


def test_model_outside_assumptions_exits_with_validation_error(tmp_path, no_cache):
    # θ₁ = 1/2 − 0.9 < 0
    payload = {
        "model": {"family": "spde", "alpha": 0.5, "beta": 0.1, "hurst": 0.5, "dim": 1},
        "domain": {"lower": [0.5, -0.5], "upper": [1.5, 0.5]},
    }
    out = tmp_path / "out"
    assert run(["validate", "--config", write_config(tmp_path, payload), "--out", str(out)]) == EXIT_VALIDATION_ERROR
    report = read_report(out)
    assert not report["verdicts"][0]["passed"]
    assert "theta1_positive" in report["verdicts"][0]["detail"]


def test_seed_override_reaches_config(tmp_path):
    config = write_config(tmp_path, {"model": {"preset": "product_half_half"}, "sampler": {"master_seed": 1}})
    assert load_config(config, seed=2 ** 64 - 1).sampler.master_seed == 2 ** 64 - 1
    assert load_config(config).grid.counts == [5, 5]


def test_cov_is_reproducible_and_uses_cache(tmp_path, cache_db):
    payload = {"model": {"preset": "product_half_half"}, "grid": {"counts": [3, 3]}}
    config = write_config(tmp_path, payload)
    first, second = tmp_path / "first", tmp_path / "second"

    assert run(["cov", "--config", config, "--out", str(first)]) == EXIT_OK
    assert len(list_cache_entries()) == 1
    assert run(["cov", "--config", config, "--out", str(second)]) == EXIT_OK
    assert list_cache_entries()[0].hits == 1

    assert (first / "gram.csv").read_bytes() == (second / "gram.csv").read_bytes()
    a, b = read_report(first), read_report(second)
    assert a["results"] == b["results"]
    assert a["config_hash"] == b["config_hash"]
    names = {v["name"] for v in a["verdicts"]}
    assert {"gram_psd", "zero_on_axes", "sign_flip_symmetry"} <= names

    runs = get_recent_runs(subcommand="cov")
    assert [r.exit_code for r in runs] == [EXIT_OK, EXIT_OK]


def test_config_fingerprint_ignores_output_dir(tmp_path):
    config = write_config(tmp_path, {"model": {"preset": "she_heat_white"}})
    a = load_config(config, out=str(tmp_path / "a"))
    b = load_config(config, out=str(tmp_path / "b"))
    assert a.output_dir != b.output_dir
    assert config_fingerprint(a) == config_fingerprint(b)
    assert config_fingerprint(load_config(config, seed=5)) != config_fingerprint(load_config(config, seed=6))


def test_sample_does_not_depend_on_threads(tmp_path, no_cache):
    payload = {
        "model": {"preset": "product_half_half"},
        "grid": {"counts": [2, 2]},
        "sampler": {"n_paths": 1500, "master_seed": 99, "write_binary": True},
        "checks": {"frobenius_tolerance": 1.0},
    }
    config = write_config(tmp_path, payload)
    one, four = tmp_path / "one", tmp_path / "four"
    assert run(["sample", "--config", config, "--out", str(one), "--threads", "1"]) in (EXIT_OK, EXIT_VERDICT_FAILED)
    assert run(["sample", "--config", config, "--out", str(four), "--threads", "4"]) in (EXIT_OK, EXIT_VERDICT_FAILED)

    assert (one / "ensemble.csv").read_bytes() == (four / "ensemble.csv").read_bytes()
    assert (one / "ensemble.bin").read_bytes() == (four / "ensemble.bin").read_bytes()
    assert len((one / "ensemble.csv").read_text(encoding="utf-8").splitlines()) == 1501
    assert read_report(one)["results"]["sample"]["master_seed"] == 99


def test_lilconst_is_skipped_for_product_models(tmp_path, no_cache):
    config = write_config(tmp_path, {"model": {"preset": "product_half_half"}})
    out = tmp_path / "out"
    assert run(["lilconst", "--config", config, "--out", str(out)]) == EXIT_OK
    report = read_report(out)
    assert isinstance(report["results"]["lilconst"], str)
    assert report["verdicts"] == []


@pytest.mark.slow
def test_cov_band_checks_on_product_model(tmp_path, no_cache):
    payload = {
        "model": {"preset": "product_half_half"},
        "grid": {"counts": [2, 2]},
        "checks": {"tail_band_b_values": [1, 2, 4], "low_band_a_values": [2, 4, 8, 16]},
    }
    out = tmp_path / "out"
    assert run(["cov", "--config", write_config(tmp_path, payload), "--out", str(out)]) in (EXIT_OK, EXIT_VERDICT_FAILED)
    report = read_report(out)
    assert isinstance(report["results"]["low_band"], str)
    tail = report["results"]["tail_band"]
    assert tail["b"] == [1.0, 2.0, 4.0]
    assert all(v > -1e-9 for v in tail["variance_times_b2"])
    assert "tail_band_decay" in {v["name"] for v in report["verdicts"]}
    assert (out / "tail_band.csv").exists()
