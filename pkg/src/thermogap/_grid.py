"""Uniform circle grids and Hoelder seminorms over grid pairs."""
from __future__ import annotations

from typing import Sequence

import numpy as np


def grid_points(n: int) -> np.ndarray:
    return np.arange(n) / n


def pair_lags(n: int, delta: float) -> np.ndarray:
    """Lags ``k <= n/2`` whose circle distance ``k/n`` is below ``delta``.

    When ``delta`` exceeds 1/2 every pair is included.
    """
    k = np.arange(1, n // 2 + 1)
    if delta > 0.5:
        return k
    return k[k / n < delta]


def _straddles(x_start, d, breaks):
    """Mask of forward arcs ``(x_start, x_start + d]`` containing a break."""
    out = np.zeros(x_start.shape, dtype=bool)
    for b in breaks:
        s = np.mod(b - x_start, 1.0)
        out |= (s > 0.0) & (s <= d + 1e-15)
    return out


def hoelder_seminorm(values: np.ndarray, alpha: float, delta: float,
                     breaks: Sequence[float] = ()) -> float:
    """Max of ``|g(x) - g(y)| / d(x, y)^alpha`` over grid pairs with ``d < delta``.

    Pairs whose short arc crosses one of ``breaks`` are skipped.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    x = grid_points(n)
    best = 0.0
    for k in pair_lags(n, delta):
        d = k / n
        diff = np.abs(np.roll(v, -k) - v)
        if breaks:
            diff = np.where(_straddles(x, d, breaks), 0.0, diff)
        best = max(best, float(diff.max()) / d ** alpha)
    return best
