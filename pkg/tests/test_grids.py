# tests/test_grids.py
import pytest

from src.services.fields import Point, Rectangle, delta_metric, derive_exponents
from src.services.grids import (
    LATTICE_SIZE,
    axis_pairs,
    delta_ball_grid,
    dyadic_pair_family,
    lnd_lattice,
    rectangle_grid,
    scaled_separations,
)

HEAT_RECT = Rectangle(Point((0.5, -0.5)), Point((1.5, 0.5)))


def test_rectangle_grid(heat_model):
    points = rectangle_grid(heat_model, HEAT_RECT, [3, 2])
    assert len(points) == 6
    assert points[0].coords == (0.5, -0.5) and points[0].label == "g0"
    assert points[-1].coords == (1.5, 0.5)
    single = rectangle_grid(heat_model, HEAT_RECT, [1, 1])
    assert single[0].coords == (1.0, 0.0)


def test_rectangle_grid_rejects_bad_input(heat_model, product_model):
    with pytest.raises(ValueError):
        rectangle_grid(heat_model, HEAT_RECT, [3])
    with pytest.raises(ValueError):
        rectangle_grid(heat_model, HEAT_RECT, [3, 0])
    with pytest.raises(ValueError):
        rectangle_grid(product_model, Rectangle(Point((-0.5, 0.5)), Point((0.5, 1.5))), [2, 2])


def test_delta_ball_grid(heat_model):
    center = Point((1.0, 0.0))
    exps = derive_exponents(heat_model)
    points = delta_ball_grid(heat_model, center, 0.05, 8)
    assert points[0].coords == center.coords and points[0].label == "center"
    assert len(points) > 1
    assert all(0.0 < delta_metric(p, center, exps) <= 0.05 for p in points[1:])
    with pytest.raises(ValueError):
        delta_ball_grid(heat_model, center, 0.0, 8)
    with pytest.raises(ValueError):
        delta_ball_grid(heat_model, center, 0.05, 1)


def test_delta_ball_grid_stays_in_positive_time(heat_model):
    points = delta_ball_grid(heat_model, Point((0.001, 0.0)), 0.09, 10)
    assert all(p.coords[0] > 0.0 for p in points)


def test_axis_pairs():
    pairs = axis_pairs(Point((1.0, 0.0)), 1, [0.1, 0.2])
    assert [p.coords for p, _ in pairs] == [(1.0, 0.1), (1.0, 0.2)]
    assert all(q.coords == (1.0, 0.0) for _, q in pairs)


def test_dyadic_pair_family(heat_model):
    exps = derive_exponents(heat_model)
    family = dyadic_pair_family(heat_model, HEAT_RECT, [3, 5], 6, seed=4)
    assert sorted(family) == [3, 5]
    for n, pairs in family.items():
        assert len(pairs) == 6
        for p, q in pairs:
            assert delta_metric(p, q, exps) == pytest.approx(2.0 ** -n, rel=1e-9)
            assert HEAT_RECT.contains(p) and HEAT_RECT.contains(q)
    again = dyadic_pair_family(heat_model, HEAT_RECT, [3, 5], 6, seed=4)
    assert [p.coords for p, _ in again[5]] == [p.coords for p, _ in family[5]]


@pytest.mark.parametrize("seed", range(20))
def test_dyadic_pair_family_exact_delta_for_any_seed(heat_model, seed):
    exps = derive_exponents(heat_model)
    family = dyadic_pair_family(heat_model, HEAT_RECT, [3, 4, 5], 10, seed=seed)
    for n, pairs in family.items():
        for p, q in pairs:
            assert delta_metric(p, q, exps) == pytest.approx(2.0 ** -n, rel=1e-9)
            # каждая ось несёт заметную долю Δ
            assert min(abs(a - b) for a, b in zip(p.coords, q.coords)) > 0.0


def test_dyadic_pair_family_level_too_coarse(heat_model):
    with pytest.raises(ValueError):
        dyadic_pair_family(heat_model, HEAT_RECT, [-4], 2)


def test_lnd_lattice(heat_model, product_model):
    target = Point((1.0, 0.0))
    lattice = lnd_lattice(heat_model, target, 0.05)
    assert len(lattice) == LATTICE_SIZE
    assert all(p.coords != target.coords for p in lattice)
    assert len(lnd_lattice(product_model, Point((1.0, 1.0)), 0.05)) == LATTICE_SIZE
    with pytest.raises(ValueError):
        lnd_lattice(heat_model, Point((0.01, 0.0)), 0.5)


def test_scaled_separations():
    assert scaled_separations(1, 3, 0.5) == pytest.approx([0.25, 0.0625, 0.015625])
