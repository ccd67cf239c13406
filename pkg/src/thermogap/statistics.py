"""Correlation decay, Green-Kubo variance and Monte Carlo CLT checks.

Correlations are computed from the spectral solution by repeated matrix
application,

    C(n) = sum_i phi_i (lambda^{-n} M^n (psi h))_i nu_i - (sum phi mu)(sum psi mu),

so no trajectories are simulated except in :func:`clt_empirical`.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dynamics import CircleMap
from .errors import AllBelowFloor, NegativeVariance, ZeroVariance
from .operator import GridFunction, SpectralSolution

__all__ = [
    "CorrelationSeries",
    "CltResult",
    "GreenKubo",
    "fit_geometric",
    "correlation",
    "fit_decay_rate",
    "green_kubo",
    "clt_variance",
    "discrete_koopman",
    "sample_mu",
    "clt_empirical",
    "birkhoff_sum",
]

NOISE_FLOOR = 1e-13
MIN_POINTS = 5


def _on_grid(obs, n: int) -> np.ndarray:
    if isinstance(obs, GridFunction):
        if obs.N != n:
            raise ValueError(f"observable lives on a grid of {obs.N}, solution on {n}")
        return obs.values
    if callable(obs):
        return np.asarray(obs(np.arange(n) / n), dtype=float) * np.ones(n)
    v = np.asarray(obs, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"expected {n} grid values, got shape {v.shape}")
    return v


def fit_geometric(n, values):
    """Least squares fit of ``log|values| = log K + n log tau``.

    Returns
    -------
    tau, K, r2 : float
    """
    n = np.asarray(n, dtype=float)
    y = np.log(np.abs(np.asarray(values, dtype=float)))
    slope, intercept, r, _, _ = stats.linregress(n, y)
    return float(math.exp(slope)), float(math.exp(intercept)), float(r * r)


@dataclass(frozen=True)
class CorrelationSeries:
    values: np.ndarray
    tau_fit: float | None = None
    K_fit: float | None = None
    r2: float | None = None
    labels: tuple[str, str] = ("phi", "psi")

    @property
    def n_max(self) -> int:
        return self.values.size - 1

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "values": self.values.tolist(),
                "tau_fit": self.tau_fit, "K_fit": self.K_fit, "r2": self.r2}


def correlation(solution: SpectralSolution, phi, psi, n_max: int,
                labels: tuple[str, str] = ("phi", "psi")) -> CorrelationSeries:
    """Correlations ``C(0..n_max)`` under the equilibrium state."""
    n = solution.N
    a, b = _on_grid(phi, n), _on_grid(psi, n)
    mean = float(a @ solution.mu) * float(b @ solution.mu)
    weight = a * solution.nu
    v = b * solution.h.values
    M = solution.matrix.matrix
    out = np.empty(n_max + 1)
    for j in range(n_max + 1):
        out[j] = float(weight @ v) - mean
        v = (M @ v) / solution.lam
    series = CorrelationSeries(out, labels=labels)
    try:
        return fit_decay_rate(series)
    except AllBelowFloor:
        return series


def fit_decay_rate(series: CorrelationSeries, floor: float = NOISE_FLOOR,
                   n_min: int = 1) -> CorrelationSeries:
    """Fit ``|C(n)| ~ K tau^n`` on entries ``n >= n_min`` above ``floor``."""
    n = np.arange(series.values.size)
    mask = (np.abs(series.values) > floor) & (n >= n_min)
    if mask.sum() < MIN_POINTS:
        raise AllBelowFloor(
            f"only {int(mask.sum())} correlations above {floor:g}; need {MIN_POINTS}"
        )
    tau, K, r2 = fit_geometric(n[mask], series.values[mask])
    return CorrelationSeries(series.values, tau, K, r2, series.labels)


@dataclass(frozen=True)
class GreenKubo:
    sigma2: float
    J: int
    truncation_error: float
    correlations: CorrelationSeries


def green_kubo(solution: SpectralSolution, phi, J: int = 50, tol: float = 1e-10) -> GreenKubo:
    """``sigma^2 = C(0) + 2 sum_{j=1}^J C(j)`` for the centred observable."""
    if J < 1:
        raise ValueError("J must be at least 1")
    a = _on_grid(phi, solution.N)
    v = a - float(a @ solution.mu)
    series = correlation(solution, v, v, J)
    s2 = float(series.values[0] + 2.0 * series.values[1:].sum())
    err = 0.0
    if series.tau_fit is not None and series.tau_fit < 1.0:
        err = 2.0 * series.K_fit * series.tau_fit ** (J + 1) / (1.0 - series.tau_fit)
    if s2 < -tol * max(1.0, abs(series.values[0])):
        raise NegativeVariance(f"variance estimate {s2:.3e} is negative")
    return GreenKubo(s2, J, err, series)


def clt_variance(solution: SpectralSolution, phi, J: int = 50) -> float:
    return green_kubo(solution, phi, J).sigma2


def discrete_koopman(solution: SpectralSolution, g) -> np.ndarray:
    """Adjoint of ``M / lambda`` with respect to ``nu``: the grid analogue of ``g o f``.

    ``(K g)_j = sum_i nu_i M_ij g_i / (lambda nu_j)``, so that
    ``sum (K g) w nu = sum g (M w / lambda) nu`` for every ``w``.
    """
    g = _on_grid(g, solution.N)
    nu = solution.nu
    return (solution.matrix.matrix.T @ (nu * g)) / (solution.lam * nu)


# ----------------------------------------------------------------- sampling

def sample_mu(solution: SpectralSolution, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from the discrete ``mu`` with uniform jitter in each cell."""
    n = solution.N
    cdf = np.cumsum(solution.mu)
    cdf /= cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, rng.random(size), side="right"), n - 1)
    x = (idx + rng.random(size) - 0.5) / n
    return np.mod(x, 1.0)


@dataclass(frozen=True)
class CltResult:
    sigma2: float
    J: int
    ks: float
    ks_pvalue: float
    samples: int
    n: int
    seed: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _birkhoff_chunk(fmap, phi, mean, n, size, seed_seq, solution, dither):
    rng = np.random.default_rng(seed_seq)
    x = sample_mu(solution, size, rng)
    total = np.zeros(size)
    for _ in range(n):
        total += phi(x) - mean
        x = fmap(x)
        if dither > 0:
            # floating point doubling discards one bit per step; fresh low
            # bits keep orbits from collapsing onto 0
            x = np.mod(x + dither * (rng.random(size) - 0.5), 1.0)
    return total


def clt_empirical(fmap: CircleMap, solution: SpectralSolution, phi, n: int, samples: int,
                  seed: int, J: int = 50, sigma2: float | None = None, tol: float = 1e-8,
                  dither: float = 2.0 ** -52, chunk: int = 10000, threads: int = 1) -> CltResult:
    """Kolmogorov-Smirnov distance of ``S_n v / sqrt(n)`` to ``Normal(0, sigma^2)``.

    Floating point orbits (with or without dither) become typical for the
    absolutely continuous invariant measure after a few dozen steps, so the
    comparison is only meaningful when ``mu`` is that measure, i.e. for
    potentials cohomologous to ``-log|Df|`` up to a constant.  For other
    potentials the equilibrium state is singular and the distance stays large.

    Parameters
    ----------
    phi : callable
        Observable evaluated exactly along orbits.
    n, samples : int
        Orbit length and number of initial points drawn from ``mu``.
    seed : int
        Root seed; each chunk of ``chunk`` samples gets its own spawned stream,
        so the result does not depend on ``threads``.
    dither : float
        Amplitude of the uniform perturbation added after each step.
    """
    if sigma2 is None:
        sigma2 = clt_variance(solution, phi, J)
    if sigma2 <= tol:
        raise ZeroVariance(f"variance {sigma2:.3e} is not positive")
    mean = float(_on_grid(phi, solution.N) @ solution.mu)
    sizes = [min(chunk, samples - s) for s in range(0, samples, chunk)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(fmap, phi, mean, n, sz, sq, solution, dither) for sz, sq in zip(sizes, seqs)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda a: _birkhoff_chunk(*a), args))
    else:
        parts = [_birkhoff_chunk(*a) for a in args]
    z = np.concatenate(parts) / math.sqrt(n)
    res = stats.kstest(z, "norm", args=(0.0, math.sqrt(sigma2)))
    return CltResult(float(sigma2), J, float(res.statistic), float(res.pvalue), samples, n, seed)


def birkhoff_sum(fmap: CircleMap, phi, x: float, n: int) -> float:
    """``sum_{j<n} phi(f^j x)`` along the exact floating point orbit."""
    total = 0.0
    y = np.array(float(x))
    for _ in range(n):
        total += float(phi(y))
        y = fmap(y)
    return total
