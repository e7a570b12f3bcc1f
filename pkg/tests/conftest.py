# tests/conftest.py
from __future__ import annotations

import numpy as np
import pytest

from src.config import settings
from src.db import init_db, rebind
from src.services.fields import Point, ProductModel, SpdeModel
from src.services.quadrature import QuadratureSpec
from src.services.sampler import Ensemble


@pytest.fixture
def heat_model() -> SpdeModel:
    """α=2, β=1/2, H=1/2, d=1: θ₁=0.375, θ₂=0.75, Q=4."""
    return SpdeModel(alpha=2.0, beta=0.5, hurst=0.5, dim=1)


@pytest.fixture
def colored_model() -> SpdeModel:
    return SpdeModel(alpha=2.0, beta=0.5, hurst=0.6, dim=1)


@pytest.fixture
def product_model() -> ProductModel:
    return ProductModel(alphas=(0.5, 0.5))


@pytest.fixture
def fast_spec() -> QuadratureSpec:
    return QuadratureSpec(rel_tol=1e-5)


@pytest.fixture
def cache_db(tmp_path, monkeypatch):
    """Отдельная SQLite-база кэша на тест."""
    url = f"sqlite:///{tmp_path / 'cache.db'}"
    monkeypatch.setattr(settings, "CACHE_DATABASE_URL", url)
    monkeypatch.setattr(settings, "CACHE_ENABLED", True)
    rebind(url)
    init_db()
    yield url
    rebind(f"sqlite:///{tmp_path / 'detached.db'}")


def make_ensemble(values: np.ndarray, coords: list[tuple[float, ...]], seed: int = 0) -> Ensemble:
    points = tuple(Point(c, f"p{i}") for i, c in enumerate(coords))
    return Ensemble(np.asarray(values, dtype=float), points, seed, "test")
