import math
from typing import Callable

import numpy as np

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


def golden_section_max(
    f: Callable[[float], float],
    a: float,
    b: float,
    rel_tol: float = 1e-9,
    max_iter: int = 200,
) -> tuple[float, float]:
    """
    Golden-section search for the maximum of a unimodal function on [a, b].

    The bracket is shrunk until its width falls below rel_tol times the
    magnitude of the current estimate (or max_iter is reached), then a single
    Newton step on finite differences is tried and kept only if it improves f.

    Returns (x_best, f(x_best)).
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(max_iter):
        if h <= rel_tol * max(abs(c), abs(d), 1e-300):
            break
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    x, fx = (c, yc) if yc > yd else (d, yd)
    return newton_polish(f, x, fx, a, b)


def newton_polish(
    f: Callable[[float], float], x: float, fx: float, lo: float, hi: float
) -> tuple[float, float]:
    """One Newton step on central differences, accepted only inside [lo, hi] and if it improves f."""
    step = max(abs(x), 1e-12) * 1e-5
    if x - step <= lo or x + step >= hi:
        return x, fx
    f_minus = f(x - step)
    f_plus = f(x + step)
    first = (f_plus - f_minus) / (2 * step)
    second = (f_plus - 2 * fx + f_minus) / step**2
    if second >= 0 or not np.isfinite(second):
        return x, fx
    candidate = x - first / second
    if not lo < candidate < hi:
        return x, fx
    f_candidate = f(candidate)
    if f_candidate > fx:
        return candidate, f_candidate
    return x, fx


def golden_section_max_vec(
    f: Callable[[np.ndarray], np.ndarray],
    a: np.ndarray,
    b: np.ndarray,
    n_iter: int = 120,
) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise golden-section search: maximizes f independently for every entry of the brackets."""
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    c = a + INV_PHI_SQUARE * (b - a)
    d = a + INV_PHI * (b - a)
    yc = f(c)
    yd = f(d)
    for _ in range(n_iter):
        left = yc > yd
        # keep [a, d] where the left interior point wins, [c, b] otherwise
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        h = b - a
        new_c = np.where(left, a + INV_PHI_SQUARE * h, d)
        new_d = np.where(left, c, a + INV_PHI * h)
        c, d = new_c, new_d
        fresh = f(np.where(left, c, d))
        yc, yd = np.where(left, fresh, yd), np.where(left, yc, fresh)
    x = np.where(yc > yd, c, d)
    return x, np.maximum(yc, yd)


def project_simplex(v: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = total}."""
    v = np.asarray(v, dtype=float)
    if v.size == 1:
        return np.array([total], dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - total
    index = np.arange(1, v.size + 1)
    rho = np.nonzero(u - cumulative / index > 0)[0][-1]
    theta = cumulative[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project_capped_simplex(v: np.ndarray, cap: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) <= cap}."""
    clipped = np.maximum(np.asarray(v, dtype=float), 0.0)
    if clipped.sum() <= cap:
        return clipped
    return project_simplex(v, cap)


def simplex_grid(parts: int, resolution: int) -> np.ndarray:
    """All points of the simplex {x >= 0, sum(x) = 1} with coordinates on a 1/resolution lattice."""
    if parts == 1:
        return np.ones((1, 1))
    points = []

    def fill(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            points.append(prefix + [remaining])
            return
        for k in range(remaining + 1):
            fill(prefix + [k], remaining - k, slots - 1)

    fill([], resolution, parts)
    return np.array(points, dtype=float) / resolution
