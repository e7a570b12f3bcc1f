# src/services/grids.py
from __future__ import annotations

import itertools
import logging
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox

from src.services.fields import (
    FieldModel,
    Point,
    Rectangle,
    SpdeModel,
    check_rectangle,
    delta_to_center,
    derive_exponents,
)

logger = logging.getLogger(__name__)

PointPair = tuple[Point, Point]

LATTICE_SIZE = 16
DIRECTIONS_PER_RING = 8
# нижняя граница доли Δ на ось: без неё шаг по оси теряется в округлении base + step
MIN_AXIS_WEIGHT = 0.1


def _label(prefix: str, index: int) -> str:
    return f"{prefix}{index}"


def rectangle_grid(model: FieldModel, rect: Rectangle, counts: Sequence[int]) -> list[Point]:
    """Равномерная тензорная сетка в прямоугольнике, counts — число узлов по осям."""
    check_rectangle(model, rect)
    if len(counts) != rect.lower.dim:
        raise ValueError(f"counts задаёт {len(counts)} осей, нужно {rect.lower.dim}")
    if any(c < 1 for c in counts):
        raise ValueError("на каждой оси нужен хотя бы один узел")
    axes = [
        np.linspace(lo, hi, c) if c > 1 else np.array([0.5 * (lo + hi)])
        for lo, hi, c in zip(rect.lower.coords, rect.upper.coords, counts)
    ]
    return [Point(tuple(float(v) for v in combo), _label("g", i))
            for i, combo in enumerate(itertools.product(*axes))]


def delta_ball_grid(model: FieldModel, center: Point, radius: float, per_axis: int) -> list[Point]:
    """
    Точки тензорной сетки в Δ-шаре B_Δ(center, radius); центр — первая точка.
    По оси j сетка покрывает |h_j| ≤ radius^{1/e_j}.
    """
    if radius <= 0.0:
        raise ValueError("радиус шара должен быть > 0")
    if per_axis < 2:
        raise ValueError("per_axis должно быть >= 2")
    exps = derive_exponents(model)
    half = per_axis // 2
    axes = []
    for c, e in zip(center.coords, exps.axis_exponents):
        reach = radius ** (1.0 / e)
        offsets = np.linspace(-reach, reach, 2 * half + 1)
        axes.append(c + offsets)
    grid = np.array(list(itertools.product(*axes)), dtype=float)
    dist = delta_to_center(grid, np.asarray(center.coords), exps)
    keep = dist <= radius
    if isinstance(model, SpdeModel):
        keep &= grid[:, 0] > 0.0
    grid = grid[keep]
    dist = dist[keep]
    non_center = dist > 0.0
    points = [Point(center.coords, "center")]
    points += [Point(tuple(row), _label("b", i)) for i, row in enumerate(grid[non_center])]
    logger.info(f"Δ-шар радиуса {radius}: {len(points)} точек")
    return points


def axis_pairs(base: Point, axis: int, separations: Sequence[float]) -> list[PointPair]:
    """Пары (base + h·e_axis, base) для каждого h."""
    pairs = []
    for h in separations:
        moved = list(base.coords)
        moved[axis] += h
        pairs.append((Point(tuple(moved)), base))
    return pairs


def dyadic_pair_family(
    model: FieldModel,
    rect: Rectangle,
    levels: Sequence[int],
    per_level: int,
    seed: int = 0,
) -> dict[int, list[PointPair]]:
    """
    Случайные пары внутри прямоугольника с Δ ≈ 2^{−n}: смещение по оси j
    равно ±(w_j 2^{−n})^{1/e_j}, веса w_j случайны, не меньше MIN_AXIS_WEIGHT
    (или половины равной доли при многих осях) и в сумме дают 1.
    """
    check_rectangle(model, rect)
    exps = derive_exponents(model)
    rng = Generator(Philox(key=seed))
    lower = np.asarray(rect.lower.coords)
    upper = np.asarray(rect.upper.coords)
    powers = np.asarray(exps.axis_exponents)
    floor = min(MIN_AXIS_WEIGHT, 0.5 / len(powers))
    family: dict[int, list[PointPair]] = {}
    for n in levels:
        target = 2.0 ** -n
        pairs = []
        while len(pairs) < per_level:
            weights = floor + (1.0 - floor * len(powers)) * rng.dirichlet(np.ones(len(powers)))
            step = (weights * target) ** (1.0 / powers) * rng.choice([-1.0, 1.0], size=len(powers))
            span = np.abs(step)
            if np.any(upper - lower <= span):
                raise ValueError(f"уровень 2^-{n} не помещается в прямоугольник")
            base = lower + span + rng.random(len(powers)) * (upper - lower - 2.0 * span)
            pairs.append((Point(tuple(base + step)), Point(tuple(base))))
        family[n] = pairs
    return family


def lnd_lattice(model: FieldModel, target: Point, scale: float) -> list[Point]:
    """
    LATTICE_SIZE точек вокруг цели: направления из {−1, 0, 1}^n (сначала осевые),
    кольца Δ-радиуса scale·2^{−m}, m = 0, 1, …
    """
    exps = derive_exponents(model)
    n = target.dim
    directions = [d for d in itertools.product((-1, 0, 1), repeat=n) if any(d)]
    directions.sort(key=lambda d: (sum(1 for v in d if v), d))
    directions = directions[:DIRECTIONS_PER_RING]

    points: list[Point] = []
    ring = 0
    while len(points) < LATTICE_SIZE:
        rho = scale * 2.0 ** -ring
        for d in directions:
            active = [j for j, v in enumerate(d) if v]
            # Δ-радиус делится поровну между активными осями
            share = rho / len(active)
            coords = list(target.coords)
            for j in active:
                coords[j] += d[j] * share ** (1.0 / exps.axis_exponents[j])
            points.append(Point(tuple(coords), _label("l", len(points))))
            if len(points) == LATTICE_SIZE:
                break
        ring += 1
    if isinstance(model, SpdeModel) and any(p.coords[0] <= 0.0 for p in points):
        raise ValueError(f"решётка вокруг {target.coords} выходит в t <= 0")
    return points


def scaled_separations(first: int, last: int, exponent: float) -> list[float]:
    """Смещения h с Δ = h^{exponent} = 2^{−n}, n = first..last."""
    return [(2.0 ** -n) ** (1.0 / exponent) for n in range(first, last + 1)]


