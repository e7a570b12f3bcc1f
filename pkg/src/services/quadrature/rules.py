# src/services/quadrature/rules.py
from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import expit

from src.errors import QuadratureError

logger = logging.getLogger(__name__)

# Порядки тензорного правила Гаусса–Лежандра и вложенной оценки ошибки
HIGH_ORDER = 7
LOW_ORDER = 4
# Сколько точек отдаём интегранду за один вызов
MAX_BATCH_POINTS = 400_000


@dataclass(frozen=True)
class CubatureResult:
    value: float
    error: float
    evals: int
    regions: int
    exhausted: bool


@lru_cache(maxsize=16)
def tanh_sinh_rule(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Правило tanh–sinh на [0, 1] с шагом h = 2^{−level}.

    Возвращает (u, 1 − u, веса). Дополнение 1 − u считается отдельно,
    чтобы узлы у правого конца не схлопывались в 1.0.
    """
    h = 2.0 ** (-level)
    n = int(math.ceil(3.2 / h))
    k = np.arange(-n, n + 1, dtype=float) * h
    v = 0.5 * math.pi * np.sinh(k)
    u = expit(2.0 * v)
    one_minus_u = expit(-2.0 * v)
    w = 0.5 * h * 0.5 * math.pi * np.cosh(k) / np.cosh(v) ** 2
    keep = (w > 1e-300) & (u > 0.0) & (one_minus_u > 0.0)
    return u[keep], one_minus_u[keep], w[keep]


def map_tanh_sinh(a: np.ndarray, b: np.ndarray, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Узлы и веса tanh–sinh на отрезках [a_i, b_i] (векторно по i): формы (P, M)."""
    u, one_minus_u, w = tanh_sinh_rule(level)
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[:, None]
    length = b - a
    nodes = np.where(u <= 0.5, a + length * u, b - length * one_minus_u)
    return nodes, length * w


@lru_cache(maxsize=8)
def _tensor_rules(dim: int) -> tuple[np.ndarray, np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """
    Узлы на [−1, 1]^dim: полное правило порядка HIGH_ORDER и dim вариантов,
    где по одной оси порядок понижен до LOW_ORDER.
    """
    xh, wh = leggauss(HIGH_ORDER)
    xl, wl = leggauss(LOW_ORDER)

    def tensor(axes_nodes, axes_weights):
        grids = np.meshgrid(*axes_nodes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*axes_weights, indexing="ij")
        wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
        return pts, wts

    high = tensor([xh] * dim, [wh] * dim)
    lows = []
    for axis in range(dim):
        nodes = [xh] * dim
        weights = [wh] * dim
        nodes[axis] = xl
        weights[axis] = wl
        lows.append(tensor(nodes, weights))
    return high[0], high[1], lows


def _evaluate_regions(
    f: Callable[[np.ndarray], np.ndarray],
    lows: np.ndarray,
    highs: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Значения, оценки ошибки и ось худшей ошибки для пачки прямоугольников."""
    dim = lows.shape[1]
    pts_h, w_h, low_rules = _tensor_rules(dim)
    all_pts = np.concatenate([pts_h] + [p for p, _ in low_rules], axis=0)
    sizes = [len(pts_h)] + [len(p) for p, _ in low_rules]
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    center = 0.5 * (lows + highs)
    half = 0.5 * (highs - lows)
    jac = np.prod(half, axis=1)

    n_reg = len(lows)
    per_region = len(all_pts)
    values = np.empty((n_reg, per_region))
    step = max(1, MAX_BATCH_POINTS // per_region)
    for start in range(0, n_reg, step):
        stop = min(n_reg, start + step)
        x = center[start:stop, None, :] + half[start:stop, None, :] * all_pts[None, :, :]
        fx = np.asarray(f(x.reshape(-1, dim)), dtype=float).reshape(stop - start, per_region)
        if not np.all(np.isfinite(fx)):
            raise QuadratureError("интегранд вернул NaN/inf")
        values[start:stop] = fx

    q_high = jac * (values[:, offsets[0]:offsets[1]] @ w_h)
    axis_err = np.empty((n_reg, dim))
    for axis, (_, w_low) in enumerate(low_rules):
        q_low = jac * (values[:, offsets[axis + 1]:offsets[axis + 2]] @ w_low)
        axis_err[:, axis] = np.abs(q_high - q_low)
    return q_high, axis_err.sum(axis=1), np.argmax(axis_err, axis=1), n_reg * per_region


def adaptive_cubature(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[Sequence[float]],
    *,
    rel_tol: float,
    abs_tol: float,
    max_evals: int,
) -> CubatureResult:
    """
    Адаптивная тензорная кубатура на объединении прямоугольников сетки breakpoints.

    f получает массив (n, dim) и возвращает (n,) вещественных значений.
    Регионы с наибольшей ошибкой делятся пополам по оси худшей оценки;
    порядок деления детерминирован (ошибка, затем номер региона).
    """
    axes = [np.unique(np.asarray(b, dtype=float)) for b in breakpoints]
    if any(len(a) < 2 for a in axes):
        return CubatureResult(0.0, 0.0, 0, 0, False)

    cells = list(itertools.product(*[range(len(a) - 1) for a in axes]))
    lows = np.array([[axes[d][c[d]] for d in range(len(axes))] for c in cells])
    highs = np.array([[axes[d][c[d] + 1] for d in range(len(axes))] for c in cells])

    vals, errs, split_axis, evals = _evaluate_regions(f, lows, highs)

    counter = itertools.count()
    store: dict[int, tuple[np.ndarray, np.ndarray, float, float, int]] = {}
    heap: list[tuple[float, int]] = []
    for i in range(len(lows)):
        rid = next(counter)
        store[rid] = (lows[i], highs[i], float(vals[i]), float(errs[i]), int(split_axis[i]))
        heapq.heappush(heap, (-float(errs[i]), rid))

    total_err = math.fsum(e for _, _, _, e, _ in store.values())
    exhausted = False
    while True:
        total = math.fsum(v for _, _, v, _, _ in store.values())
        if total_err <= max(abs_tol, rel_tol * abs(total)):
            break
        if evals >= max_evals:
            exhausted = True
            break

        # делим пачкой: все регионы с ошибкой выше среднего, но не больше 256
        n_split = min(len(heap), 256, max(1, len(heap) // 8))
        picked = [heapq.heappop(heap)[1] for _ in range(n_split)]
        new_lows, new_highs = [], []
        for rid in picked:
            lo, hi, _, _, ax = store.pop(rid)
            mid = 0.5 * (lo[ax] + hi[ax])
            hi_left = hi.copy()
            hi_left[ax] = mid
            lo_right = lo.copy()
            lo_right[ax] = mid
            new_lows += [lo, lo_right]
            new_highs += [hi_left, hi]

        nl = np.array(new_lows)
        nh = np.array(new_highs)
        v2, e2, a2, used = _evaluate_regions(f, nl, nh)
        evals += used
        for i in range(len(nl)):
            rid = next(counter)
            store[rid] = (nl[i], nh[i], float(v2[i]), float(e2[i]), int(a2[i]))
            heapq.heappush(heap, (-float(e2[i]), rid))
        total_err = math.fsum(e for _, _, _, e, _ in store.values())

    total = math.fsum(v for _, _, v, _, _ in store.values())
    if exhausted:
        logger.warning(
            f"Бюджет кубатуры исчерпан: {evals} вычислений, оценка ошибки {total_err:.3e} "
            f"при значении {total:.6e}"
        )
    return CubatureResult(total, total_err, evals, len(store), exhausted)


def geometric_breaks(lo: float, hi: float, *, first: Optional[float] = None, period: Optional[float] = None,
                     max_breaks: int = 4000) -> np.ndarray:
    """
    Точки разбиения [lo, hi]: геометрическая прогрессия от first (сгущение к lo)
    плюс равномерный шаг period для осциллирующих интегрантов.
    """
    if hi <= lo:
        return np.array([lo, hi])
    pts = [lo, hi]
    start = first if first is not None else max(abs(hi), 1.0) * 2.0 ** -20
    x = lo + start
    while x < hi:
        pts.append(x)
        x = lo + 2.0 * (x - lo)
    if period is not None and period > 0.0:
        n = int(min(max_breaks, math.floor((hi - lo) / period)))
        if n > 0:
            pts.extend(np.linspace(lo, lo + n * period, n + 1)[1:].tolist())
    return np.unique(np.clip(np.asarray(pts, dtype=float), lo, hi))
