"""Perturbation experiments: deterministic sweeps, preimage pairing, the
operator discontinuity in the Lipschitz norm, and random perturbations
through the integrated transfer operator.
"""
from __future__ import annotations

from functools import lru_cache
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from ._grid import grid_points
from .dynamics import (
    CircleMap,
    PotentialSpec,
    circle_distance,
    make_doubling,
    make_potential_constant,
    make_shifted_doubling,
)
from .errors import ThermogapError, TooFar
from .operator import SpectralSolution, TransferMatrix, apply_operator, build_matrix, solve_spectrum

__all__ = [
    "PerturbationMeasure",
    "SweepTable",
    "PairingResult",
    "DEFAULT_DICTIONARY",
    "map_distance",
    "pairing_radius",
    "pressure_density_sweep",
    "paired_preimages",
    "count_preimages_in_A",
    "tent_observable",
    "lip_discontinuity_demo",
    "integrated_operator",
    "integrated_spectrum",
    "random_stability_sweep",
]

Family = Callable[[float], tuple[CircleMap, PotentialSpec]]


def _dictionary():
    out = []
    for k in range(1, 5):
        out.append((f"cos{k}", lambda x, k=k: np.cos(2.0 * np.pi * k * x)))
        out.append((f"sin{k}", lambda x, k=k: np.sin(2.0 * np.pi * k * x)))
    return tuple(out)


DEFAULT_DICTIONARY = _dictionary()


# ------------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepTable:
    """One row per parameter value.

    ``h_dist`` is ``||h_t - h_0||_0``; ``cr_proxy`` is the largest sup
    difference of first and second finite differences of ``h_t`` and
    ``h_0``; ``weak_star[i, j]`` is the integral of dictionary function
    ``j`` against ``nu`` at row ``i``.
    """

    ts: np.ndarray
    lam: np.ndarray
    pressure: np.ndarray
    h_dist: np.ndarray
    cr_proxy: np.ndarray
    weak_star: np.ndarray
    failed: tuple[bool, ...]
    errors: tuple[str, ...]
    reference_lam: float
    dictionary: tuple[str, ...] = tuple(name for name, _ in DEFAULT_DICTIONARY)

    def rows(self) -> list[dict]:
        out = []
        for i, t in enumerate(self.ts):
            row = {"t": float(t), "lambda": float(self.lam[i]), "pressure": float(self.pressure[i]),
                   "h_dist": float(self.h_dist[i]), "cr_proxy": float(self.cr_proxy[i]),
                   "failed": self.failed[i]}
            row.update({name: float(self.weak_star[i, j]) for j, name in enumerate(self.dictionary)})
            out.append(row)
        return out


def _finite_differences(h: np.ndarray):
    n = h.size
    d1 = (np.roll(h, -1) - h) * n
    d2 = (np.roll(h, -1) - 2.0 * h + np.roll(h, 1)) * n * n
    return d1, d2


def _sweep_row(family, t, n, tol, dict_vals):
    fmap, pot = family(t)
    sol = solve_spectrum(build_matrix(fmap, pot, n), tol=tol)
    return sol, dict_vals @ sol.nu


def pressure_density_sweep(family: Family, ts: Sequence[float], n: int = 1024,
                           tol: float = 1e-12, t_ref: float = 0.0, threads: int = 1,
                           dictionary=DEFAULT_DICTIONARY) -> SweepTable:
    """Pressure, density and conformal-measure integrals along ``t -> family(t)``.

    The reference row is ``family(t_ref)``, solved by the same code path, so a
    row at ``t = t_ref`` reproduces it exactly.  A row whose solve raises is
    marked failed and filled with NaN.
    """
    x = grid_points(n)
    dict_vals = np.array([f(x) for _, f in dictionary])
    ref, _ = _sweep_row(family, t_ref, n, tol, dict_vals)
    h0 = ref.h.values
    d0 = _finite_differences(h0)

    def work(t):
        try:
            return _sweep_row(family, t, n, tol, dict_vals), ""
        except (ThermogapError, ValueError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, ts))
    else:
        results = [work(t) for t in ts]

    k = len(ts)
    lam, h_dist, cr = np.full(k, np.nan), np.full(k, np.nan), np.full(k, np.nan)
    weak = np.full((k, len(dictionary)), np.nan)
    failed, errors = [], []
    for i, (res, err) in enumerate(results):
        failed.append(res is None)
        errors.append(err)
        if res is None:
            continue
        sol, w = res
        lam[i] = sol.lam
        h = sol.h.values
        h_dist[i] = float(np.max(np.abs(h - h0)))
        d = _finite_differences(h)
        cr[i] = max(float(np.max(np.abs(a - b))) for a, b in zip(d, d0))
        weak[i] = w
    return SweepTable(np.asarray(ts, dtype=float), lam, np.log(lam), h_dist, cr, weak,
                      tuple(failed), tuple(errors), ref.lam,
                      tuple(name for name, _ in dictionary))


# ---------------------------------------------------------- preimage pairing

@lru_cache(maxsize=256)
def map_distance(f: CircleMap, g: CircleMap, n: int = 2 ** 14) -> float:
    """``sup_x d(f(x), g(x))`` on a grid, refined around the largest values."""
    x = grid_points(n)
    d = circle_distance(f(x), g(x))
    best = float(d.max())
    for i in np.argsort(d)[-5:]:
        res = minimize_scalar(lambda s: -float(circle_distance(f(np.array(s)), g(np.array(s)))),
                              bounds=((i - 1) / n, (i + 1) / n), method="bounded",
                              options={"xatol": 1e-14})
        best = max(best, -float(res.fun))
    return best


@lru_cache(maxsize=256)
def _sup_inverse_derivative(fmap: CircleMap, n: int = 2 ** 14) -> float:
    y = (np.arange(n) + 0.5) / n
    return float(max(np.max(1.0 / np.abs(fmap.derivative(y))),
                     np.max(1.0 / np.abs(fmap.derivative(grid_points(n))))))


def pairing_radius(maps: Sequence[CircleMap], n: int = 2 ** 14) -> float:
    """Half the smallest gap between consecutive preimages of any point.

    Consecutive preimages bound an arc mapped once around the circle, so
    they are at least ``1 / sup|Df|`` apart.
    """
    return 0.5 / max(_sup_derivative(m, n) for m in maps)


@lru_cache(maxsize=256)
def _sup_derivative(fmap: CircleMap, n: int) -> float:
    return float(np.max(np.abs(fmap.derivative(grid_points(n)))))


def _match(pf: np.ndarray, pg: np.ndarray):
    """Cyclic shift of ``pg`` rows minimising the largest distance to ``pf``.

    ``pf`` and ``pg`` have shape ``(deg, m)``; preimages listed by branch are
    in circular order, so the correct pairing is a rotation.
    """
    deg = pf.shape[0]
    best = None
    for s in range(deg):
        rolled = np.roll(pg, -s, axis=0)
        worst = circle_distance(pf, rolled).max(axis=0)
        if best is None:
            best, shift = worst, np.zeros(pf.shape[1], dtype=int)
        else:
            better = worst < best
            best = np.where(better, worst, best)
            shift = np.where(better, s, shift)
    idx = (np.arange(deg)[:, None] + shift[None, :]) % deg
    return np.take_along_axis(pg, idx, axis=0)


@dataclass(frozen=True)
class PairingResult:
    x_preimages: np.ndarray
    y_preimages: np.ndarray
    distances: tuple[np.ndarray, ...]
    bounds: np.ndarray
    L: float
    map_distances: np.ndarray
    radius: float

    @property
    def holds(self) -> bool:
        return all(bool(np.all(d <= b * (1 + 1e-12) + 1e-15))
                   for d, b in zip(self.distances, self.bounds))

    @property
    def worst_slack(self) -> float:
        return min(float(np.min(b - d)) for d, b in zip(self.distances, self.bounds))


def paired_preimages(f_seq, g_seq, x: float, y: float, n: int) -> PairingResult:
    """Pair the ``deg^n`` preimages of ``x`` under ``f_1, ..., f_n`` with those of ``y``.

    Level ``j`` applies the inverse branches of ``f_j`` and ``g_j`` to the
    pairs of level ``j - 1`` and matches them by continuation.  The distance
    of every pair at level ``j`` is compared with
    ``L^j d(x, y) + sum_{i <= j} L^{j - i + 1} ||f_i - g_i||``.

    Raises
    ------
    TooFar
        If some pair at some level is not closer than the pairing radius.
    """
    if isinstance(f_seq, CircleMap):
        f_seq = [f_seq] * n
    if isinstance(g_seq, CircleMap):
        g_seq = [g_seq] * n
    f_seq, g_seq = list(f_seq)[:n], list(g_seq)[:n]
    if len(f_seq) < n or len(g_seq) < n:
        raise ValueError("need n maps in each sequence")
    if n > 8:
        raise ValueError("pairing depth is limited to 8")
    all_maps = f_seq + g_seq
    L = max(_sup_inverse_derivative(m) for m in all_maps)
    radius = pairing_radius(all_maps)
    norms = np.array([map_distance(f, g) for f, g in zip(f_seq, g_seq)])
    d0 = float(circle_distance(x, y))
    if d0 >= radius:
        raise TooFar(f"d(x, y) = {d0:.4g} is not below the pairing radius {radius:.4g}")
    xs, ys = np.array([float(x)]), np.array([float(y)])
    dists, bounds = [], []
    bound = d0
    for j in range(n):
        pf = f_seq[j].preimages(xs)
        pg = g_seq[j].preimages(ys)
        pg = _match(pf, pg)
        xs, ys = pf.ravel(), pg.ravel()
        d = circle_distance(xs, ys)
        bound = L * bound + L * norms[j]
        if np.any(d >= radius):
            raise TooFar(f"level {j + 1}: paired distance {d.max():.4g} reaches the radius {radius:.4g}")
        dists.append(d)
        bounds.append(bound)
    return PairingResult(xs, ys, tuple(dists), np.array(bounds), L, norms, radius)


def count_preimages_in_A(fmap: CircleMap, x: float, y: float, delta: float, q: int | None = None) -> int:
    """Number of paired first preimages of ``x`` and ``y`` lying both in ``A``.

    Raises ValueError when the count exceeds ``q`` (if given).
    """
    if circle_distance(x, y) >= delta:
        raise ValueError("points must be closer than delta")
    pf = fmap.preimages(np.array([float(x)]))
    pg = _match(pf, fmap.preimages(np.array([float(y)])))
    both = fmap.in_contraction_region(pf[:, 0]) & fmap.in_contraction_region(pg[:, 0])
    count = int(np.sum(both))
    if q is not None and count > q:
        raise ValueError(f"{count} pairs in A exceed q = {q}")
    return count


# --------------------------------------------------------- discontinuity

def tent_observable(x):
    """``|x|`` for ``|x| <= 1/8``, 0 for ``|x| >= 1/5``, linear in between.

    ``x`` is read in ``[-1/2, 1/2)``.
    """
    xt = np.mod(np.asarray(x, dtype=float) + 0.5, 1.0) - 0.5
    a = np.abs(xt)
    return np.where(a <= 0.125, a, np.where(a >= 0.2, 0.0, 0.125 * (0.2 - a) / 0.075))


def _grid_lip(v: np.ndarray) -> float:
    n = v.size
    return float(np.max(np.abs(np.roll(v, -1) - v)) * n)


def lip_discontinuity_demo(n_list: Sequence[int], grid: int = 8192, limit: bool = False) -> list[dict]:
    """Lipschitz and sup norms of ``(L_n - L) phi`` for the tent observable.

    ``L_n`` and ``L`` are the transfer operators (zero potential) of the
    shifted doubling maps and of doubling.  The observable is evaluated at
    the exact preimages.  With ``limit`` the shifted map is replaced by
    doubling itself, which gives the zero row.
    """
    zero = make_potential_constant(0.0)
    base = make_doubling()
    ref = apply_operator(base, zero, tent_observable, grid).values
    rows = []
    for n in n_list:
        fn = base if limit else make_shifted_doubling(n)
        diff = apply_operator(fn, zero, tent_observable, grid).values - ref
        rows.append({"n": int(n), "lip": _grid_lip(diff), "sup": float(np.max(np.abs(diff)))})
    return rows


# ------------------------------------------------------ random perturbations

@dataclass(frozen=True)
class PerturbationMeasure:
    """Finitely supported measure on (map, potential) pairs."""

    atoms: tuple[tuple[CircleMap, PotentialSpec, float], ...]
    epsilon: float = 0.0
    center_id: str = ""

    def __post_init__(self):
        w = np.array([a[2] for a in self.atoms], dtype=float)
        if w.size == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")

    @classmethod
    def point_mass(cls, fmap: CircleMap, potential: PotentialSpec) -> "PerturbationMeasure":
        return cls(((fmap, potential, 1.0),), 0.0, fmap.name)

    @classmethod
    def uniform(cls, pairs, epsilon: float, center_id: str = "") -> "PerturbationMeasure":
        w = 1.0 / len(pairs)
        return cls(tuple((f, p, w) for f, p in pairs), epsilon, center_id)


def integrated_operator(theta: PerturbationMeasure, n: int) -> TransferMatrix:
    """``M_eps = sum_k w_k M_k`` over the atoms of ``theta``."""
    total = None
    for fmap, pot, w in theta.atoms:
        mk = build_matrix(fmap, pot, n).matrix
        total = w * mk if total is None else total + w * mk
    first = theta.atoms[0]
    return TransferMatrix(sp.csr_matrix(total), n, f"integrated:{first[0].name}",
                          first[1].name, first[0].deg)


def integrated_spectrum(theta: PerturbationMeasure, n: int, **kwargs) -> SpectralSolution:
    return solve_spectrum(integrated_operator(theta, n), **kwargs)


def random_stability_sweep(center: float, epsilons: Sequence[float], family: Callable,
                           support_size: int = 5, seed: int = 0, n: int = 1024,
                           tol: float = 1e-12) -> list[dict]:
    """Spectral data of uniform random perturbations of a parametric family.

    ``family(p)`` returns a (map, potential) pair.  The support at radius
    ``eps`` is ``{family(center + eps u_k)}`` with offsets ``u_k`` uniform in
    ``[-1, 1]`` drawn once from ``seed``, so all radii share the same
    directions.
    """
    rng = np.random.default_rng(seed)
    offsets = rng.uniform(-1.0, 1.0, support_size)
    f0, p0 = family(center)
    sol0 = solve_spectrum(build_matrix(f0, p0, n), tol=tol)
    rows = []
    for eps in epsilons:
        if eps == 0:
            theta = PerturbationMeasure.point_mass(f0, p0)
            atom_lams = [sol0.lam]
        else:
            pairs = [family(center + eps * u) for u in offsets]
            theta = PerturbationMeasure.uniform(pairs, eps, f0.name)
            atom_lams = [solve_spectrum(build_matrix(f, p, n), tol=tol).lam for f, p in pairs]
        sol = integrated_spectrum(theta, n, tol=tol)
        rows.append({
            "epsilon": float(eps),
            "lambda": sol.lam,
            "lambda_dist": abs(sol.lam - sol0.lam),
            "atom_lambda_dist": float(max(abs(l - sol0.lam) for l in atom_lams)),
            "h_dist": float(np.max(np.abs(sol.h.values - sol0.h.values))),
            "tau_sub": sol.tau_sub,
            "tau_sub_center": sol0.tau_sub,
        })
    return rows
