# tests/test_sampler.py
import numpy as np
import pytest

from src.errors import NumericalError
from src.services.covariance import Gram
from src.services.fields import Point
from src.services.sampler import (
    MAX_SEED,
    cholesky_factor,
    empirical_cov,
    marginal_normality,
    path_generator,
    relative_frobenius_error,
    sample_ensemble,
)
from tests.conftest import make_ensemble


def toy_gram(matrix) -> Gram:
    matrix = np.array(matrix, dtype=float)
    points = tuple(Point((1.0 + i, 0.0), f"p{i}") for i in range(len(matrix)))
    return Gram(matrix, points, "toy")


@pytest.fixture
def gram_3x3() -> Gram:
    return toy_gram([[1.0, 0.5, 0.2], [0.5, 2.0, 0.3], [0.2, 0.3, 1.5]])


def test_cholesky_without_jitter(gram_3x3):
    factor = cholesky_factor(gram_3x3)
    assert factor.jitter_applied == 0.0
    assert np.allclose(factor.lower @ factor.lower.T, gram_3x3.matrix, rtol=1e-14, atol=0.0)
    assert factor.reconstruction_error(gram_3x3) < 1e-14
    assert np.all(np.triu(factor.lower, 1) == 0.0)


def test_cholesky_singular_matrix_gets_minimal_jitter():
    g = toy_gram([[1.0, 1.0], [1.0, 1.0]])
    factor = cholesky_factor(g)
    assert 0.0 < factor.jitter_applied <= 1e-6


def test_cholesky_zero_matrix_gives_zero_factor():
    factor = cholesky_factor(toy_gram(np.zeros((2, 2))))
    assert factor.jitter_applied == 0.0
    assert not factor.lower.any()


def test_cholesky_indefinite_matrix_fails():
    with pytest.raises(NumericalError):
        cholesky_factor(toy_gram([[1.0, 0.0], [0.0, -0.5]]))


def test_paths_do_not_depend_on_thread_count(gram_3x3):
    factor = cholesky_factor(gram_3x3)
    single = sample_ensemble(factor, 2500, master_seed=42, threads=1)
    pooled = sample_ensemble(factor, 2500, master_seed=42, threads=4)
    assert np.array_equal(single.values, pooled.values)
    assert single.labels() == ["p0", "p1", "p2"]


def test_path_prefix_is_stable(gram_3x3):
    factor = cholesky_factor(gram_3x3)
    short = sample_ensemble(factor, 100, master_seed=7)
    long = sample_ensemble(factor, 3000, master_seed=7)
    assert np.allclose(short.values, long.values[:100], rtol=1e-14, atol=1e-15)


def test_paths_use_independent_streams():
    a = path_generator(5, 0).standard_normal(4)
    b = path_generator(5, 1).standard_normal(4)
    c = path_generator(6, 0).standard_normal(4)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.array_equal(a, path_generator(5, 0).standard_normal(4))


def test_empirical_covariance_converges(gram_3x3):
    ensemble = sample_ensemble(cholesky_factor(gram_3x3), 50_000, master_seed=2024, threads=2)
    error = relative_frobenius_error(empirical_cov(ensemble), gram_3x3.matrix)
    assert error < 0.03


@pytest.mark.parametrize("seed", [-1, MAX_SEED + 1])
def test_sample_rejects_bad_seed(gram_3x3, seed):
    with pytest.raises(ValueError):
        sample_ensemble(cholesky_factor(gram_3x3), 10, master_seed=seed)


def test_sample_accepts_largest_seed(gram_3x3):
    ensemble = sample_ensemble(cholesky_factor(gram_3x3), 3, master_seed=MAX_SEED)
    assert ensemble.values.shape == (3, 3)


def test_sample_rejects_empty_ensemble(gram_3x3):
    with pytest.raises(ValueError):
        sample_ensemble(cholesky_factor(gram_3x3), 0, master_seed=0)


def test_empirical_cov_needs_two_paths():
    with pytest.raises(ValueError):
        empirical_cov(make_ensemble(np.ones((1, 2)), [(1.0, 0.0), (1.0, 0.1)]))


def test_marginal_normality_detects_wrong_scale():
    g = toy_gram([[4.0, 0.0], [0.0, 1.0]])
    ensemble = sample_ensemble(cholesky_factor(toy_gram(np.eye(2))), 4000, master_seed=3)
    check = marginal_normality(ensemble, g)
    assert 0 in check.failed
    assert not check.passed


def test_marginal_normality_skips_degenerate_points():
    g = toy_gram([[0.0, 0.0], [0.0, 1.0]])
    values = np.column_stack([np.zeros(500), path_generator(1, 0).standard_normal(500)])
    check = marginal_normality(make_ensemble(values, [(1.0, 0.0), (2.0, 0.0)]), g)
    assert check.p_values[0] == 1.0


def test_ensemble_negated_and_subset():
    ensemble = make_ensemble(np.arange(6.0).reshape(2, 3), [(1.0, 0.0), (1.0, 0.1), (1.0, 0.2)])
    assert np.array_equal(ensemble.negated().values, -ensemble.values)
    sub = ensemble.subset([2, 0])
    assert sub.n_points == 2 and sub.n_paths == 2
    assert sub.points[0].coords == (1.0, 0.2)
