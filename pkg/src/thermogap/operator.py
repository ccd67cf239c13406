"""Collocation discretisation of the transfer operator and its leading spectral data.

The operator ``(L g)(x) = sum_{f(y) = x} e^{phi(y)} g(y)`` is sampled at the
grid ``x_i = i/N``; values of ``g`` at the preimages are obtained by
periodic piecewise-linear interpolation, which keeps the matrix
nonnegative with at most ``2 deg`` nonzeros per row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from ._grid import grid_points
from .dynamics import DIAMETER, CircleMap, PotentialSpec
from .errors import ArcTooLarge, NoConvergence

__all__ = [
    "GridFunction",
    "TransferMatrix",
    "SpectralSolution",
    "ConvergenceReport",
    "interpolate",
    "apply_operator",
    "build_matrix",
    "solve_spectrum",
    "solve",
    "pressure",
    "jacobian_check",
    "pushforward_convergence",
    "normalized_iterates",
    "convergence_report",
]


def _interp_weights(y: np.ndarray, n: int):
    s = np.asarray(y, dtype=float) * n
    j = np.floor(s)
    frac = s - j
    j0 = np.mod(j.astype(np.int64), n)
    j1 = np.mod(j0 + 1, n)
    return j0, j1, 1.0 - frac, frac


def interpolate(values: np.ndarray, y) -> np.ndarray:
    """Periodic piecewise-linear interpolation of grid values at ``y``."""
    values = np.asarray(values, dtype=float)
    j0, j1, w0, w1 = _interp_weights(np.mod(y, 1.0), values.size)
    return w0 * values[j0] + w1 * values[j1]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values at ``x_i = i/N`` with periodic piecewise-linear interpolation."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a grid function needs at least two values")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def points(self) -> np.ndarray:
        return grid_points(self.N)

    @classmethod
    def from_function(cls, func: Callable, n: int) -> "GridFunction":
        return cls(np.asarray(func(grid_points(n)), dtype=float) * np.ones(n))

    def __call__(self, y):
        return interpolate(self.values, y)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Sparse collocation matrix of the transfer operator.

    Row ``i`` holds the weights ``e^{phi(y)}`` of the preimages ``y`` of
    ``x_i`` spread onto the two grid neighbours of each ``y``.
    """

    matrix: sp.csr_matrix
    N: int
    map_id: str = ""
    potential_id: str = ""
    deg: int = 0

    def __matmul__(self, v):
        return self.matrix @ v

    @property
    def T(self):
        return self.matrix.T.tocsr()

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def _preimage_weights(fmap: CircleMap, potential: PotentialSpec, n: int):
    x = grid_points(n)
    pre = fmap.preimages(x)
    w = np.empty_like(pre)
    for k in range(fmap.deg):
        w[k] = np.exp(potential.on_branch(pre[k], k))
    return pre, w


def build_matrix(fmap: CircleMap, potential: PotentialSpec, n: int) -> TransferMatrix:
    if n < 2 * fmap.deg:
        raise ValueError(f"grid size {n} is below 2 deg = {2 * fmap.deg}")
    pre, w = _preimage_weights(fmap, potential, n)
    rows = np.tile(np.arange(n), 2 * fmap.deg)
    cols, vals = [], []
    for k in range(fmap.deg):
        j0, j1, w0, w1 = _interp_weights(pre[k], n)
        cols += [j0, j1]
        vals += [w[k] * w0, w[k] * w1]
    mat = sp.coo_matrix((np.concatenate(vals), (rows, np.concatenate(cols))), shape=(n, n)).tocsr()
    mat.eliminate_zeros()
    return TransferMatrix(mat, n, fmap.name, potential.name, fmap.deg)


def apply_operator(fmap: CircleMap, potential: PotentialSpec, g, n: int | None = None) -> GridFunction:
    """One application of the transfer operator.

    ``g`` may be a :class:`GridFunction`, interpolated at the preimages, or
    a callable evaluated exactly there, in which case ``n`` fixes the
    output grid.
    """
    if isinstance(g, GridFunction):
        n = g.N
        evaluate = g
    else:
        if n is None:
            raise ValueError("grid size required when g is a callable")
        evaluate = g
    pre, w = _preimage_weights(fmap, potential, n)
    out = np.zeros(n)
    for k in range(fmap.deg):
        out += w[k] * np.asarray(evaluate(pre[k]), dtype=float)
    return GridFunction(out)


# ------------------------------------------------------------------ spectrum

@dataclass(frozen=True, eq=False)
class SpectralSolution:
    """Leading eigendata of a transfer matrix.

    ``h`` is normalised by ``sum h_i nu_i = 1`` and ``mu_i = h_i nu_i``.
    """

    lam: float
    h: GridFunction
    nu: np.ndarray
    mu: np.ndarray
    tau_sub: float
    residual: float
    iterations: int
    matrix: TransferMatrix
    warnings: tuple[str, ...] = ()

    @property
    def N(self) -> int:
        return self.h.N

    @property
    def pressure(self) -> float:
        return math.log(self.lam)

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "pressure": self.pressure, "tau_sub": self.tau_sub,
                "residual": self.residual, "iterations": self.iterations, "N": self.N,
                "warnings": list(self.warnings)}


def _power(mat, v, tol, max_iter, normalise):
    for it in range(1, max_iter + 1):
        w = mat @ v
        w = normalise(w)
        change = float(np.max(np.abs(w - v)))
        v = w
        if change <= tol:
            return v, it
    raise NoConvergence(f"power iteration stalled at change {change:.3e} after {max_iter} steps")


def _subdominant(mat, lam, h, nu, seed, max_iter=2000, window=50, rtol=1e-4):
    """Growth rate of the deflated iteration ``g -> P g - (nu . P g) h``."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(h.size)
    g -= (nu @ g) * h
    norm = np.max(np.abs(g))
    if norm == 0.0:
        return 0.0
    g /= norm
    logs = []
    prev = None
    for it in range(max_iter):
        g = (mat @ g) / lam
        g -= (nu @ g) * h
        norm = float(np.max(np.abs(g)))
        if norm == 0.0 or not np.isfinite(norm):
            return 0.0
        logs.append(math.log(norm))
        g /= norm
        if len(logs) >= 2 * window and len(logs) % window == 0:
            est = math.exp(np.mean(logs[-window:]))
            if prev is not None and abs(est - prev) <= rtol * max(est, 1e-300):
                return est
            prev = est
    return math.exp(np.mean(logs[-window:]))


def solve_spectrum(matrix: TransferMatrix, tol: float = 1e-12, max_iter: int = 100000,
                   seed: int = 20240607, warnings: Sequence[str] = ()) -> SpectralSolution:
    """Leading eigenvalue, eigenvector and left eigenvector by power iteration.

    Parameters
    ----------
    matrix : TransferMatrix
    tol : float
        Stop when the sup-norm change of the normalised iterate is at most ``tol``.
    max_iter : int
    seed : int
        Seed of the random start vector used for the subdominant estimate.
    warnings : sequence of str
        Flags carried into the solution, e.g. a failed hypothesis.
    """
    M = matrix.matrix
    MT = M.T.tocsr()
    n = matrix.N
    h, it_h = _power(M, np.ones(n), tol, max_iter, lambda w: w / np.max(w))
    nu, it_nu = _power(MT, np.full(n, 1.0 / n), tol, max_iter, lambda w: w / np.sum(w))
    Mh = M @ h
    lam = float(nu @ Mh) / float(nu @ h)
    h = h / float(nu @ h)
    mu = h * nu
    mu = mu / mu.sum()
    residual = float(np.max(np.abs(M @ h / lam - h)))
    tau = _subdominant(M, lam, h, nu, seed)
    flags = tuple(warnings)
    if np.min(h) <= 0.0:
        flags += ("density not strictly positive",)
    return SpectralSolution(lam, GridFunction(h), nu, mu, tau, residual,
                            max(it_h, it_nu), matrix, flags)


def solve(fmap: CircleMap, potential: PotentialSpec, n: int = 1024, **kwargs) -> SpectralSolution:
    """Build the matrix and solve in one call."""
    return solve_spectrum(build_matrix(fmap, potential, n), **kwargs)


def normalized_iterates(solution: SpectralSolution, g: np.ndarray, n_max: int) -> np.ndarray:
    """Rows ``lambda^{-j} M^j g`` for ``j = 0..n_max``."""
    out = np.empty((n_max + 1, solution.N))
    v = np.asarray(g, dtype=float).copy()
    M = solution.matrix.matrix
    for j in range(n_max + 1):
        out[j] = v
        v = (M @ v) / solution.lam
    return out


def pressure(fmap: CircleMap, potential: PotentialSpec, n: int = 1024, n_max: int = 30, **kwargs):
    """``log lambda`` and the sequence ``(1/n) log ||L^n 1||_0``.

    Returns
    -------
    p : float
    diagnostic : ndarray
        Entry ``j - 1`` is ``(1/j) log ||M^j 1||_0`` for ``j = 1..n_max``.
    """
    sol = solve_spectrum(build_matrix(fmap, potential, n), **kwargs)
    M = sol.matrix.matrix
    v = np.ones(n)
    logscale = 0.0
    diag = np.empty(n_max)
    for j in range(1, n_max + 1):
        v = M @ v
        s = float(np.max(np.abs(v)))
        logscale += math.log(s)
        v /= s
        diag[j - 1] = logscale / j
    return sol.pressure, diag


def jacobian_check(fmap: CircleMap, potential: PotentialSpec, solution: SpectralSolution,
                   arcs: Sequence[tuple[float, float]]) -> float:
    """Worst relative error of ``nu(f(A)) = sum_{x_i in A} lambda e^{-phi(x_i)} nu_i``.

    Arcs are half-open ``[s, e)`` with ``0 <= s < e <= 1`` inside one branch
    domain.
    """
    x = grid_points(solution.N)
    phi = potential(x)
    worst = 0.0
    inner = fmap.branch_endpoints[1:-1]
    for s, e in arcs:
        if not 0.0 <= s < e <= 1.0 or any(s < a < e for a in inner):
            raise ArcTooLarge(f"arc [{s}, {e}) leaves a branch domain")
        k = int(fmap.branch_of(np.array(s)))
        start = float(fmap(np.array(s)))
        length = float(fmap.lift(np.array(np.nextafter(e, s)), k) - fmap.lift(np.array(s), k))
        if length >= 1.0:
            raise ArcTooLarge(f"arc [{s}, {e}) is not mapped injectively")
        in_a = (x >= s) & (x < e)
        rhs = float(np.sum(solution.lam * np.exp(-phi[in_a]) * solution.nu[in_a]))
        in_image = np.mod(x - start, 1.0) < length
        lhs = float(np.sum(solution.nu[in_image]))
        worst = max(worst, abs(lhs - rhs) / rhs)
    return worst


def pushforward_convergence(solution: SpectralSolution, test, n_max: int) -> np.ndarray:
    """``|int test d(f^j_* nu) - int test dmu|`` for ``j = 0..n_max``."""
    t = test.values if isinstance(test, GridFunction) else np.asarray(test, dtype=float)
    target = float(t @ solution.mu)
    it = normalized_iterates(solution, np.ones(solution.N), n_max)
    return np.abs(it @ (t * solution.nu) - target)


# ------------------------------------------------------------- convergence

@dataclass(frozen=True)
class ConvergenceReport:
    """Sup-norm convergence of normalised iterates of 1 towards ``h``."""

    Delta: float
    tau: float
    R1: float
    theta_plus: np.ndarray
    errors: np.ndarray
    bounds: np.ndarray
    tau_fit: float
    floor: float
    holds: bool

    def to_dict(self) -> dict:
        return {"Delta": self.Delta, "tau": self.tau, "R1": self.R1,
                "tau_fit": self.tau_fit, "floor": self.floor, "holds": self.holds,
                "theta_plus": self.theta_plus.tolist(), "errors": self.errors.tolist(),
                "bounds": self.bounds.tolist()}


def convergence_report(solution: SpectralSolution, kappa: float, lambda_hat: float,
                       m: int, alpha: float, n_max: int = 60, floor: float = 1e-12) -> ConvergenceReport:
    """Compare ``||lambda^{-n} L^n 1 - h||_0`` with ``3 R1 Delta tau^n``.

    The comparison stops at the first ``n`` where the error reaches
    ``floor``; later entries are reported but not judged.
    """
    from .cones import diameter_bound, theta_plus
    from .statistics import fit_geometric

    delta_cone = diameter_bound(kappa, lambda_hat, m, alpha)
    tau = 1.0 - math.exp(-delta_cone)
    R1 = 1.0 + m * kappa * DIAMETER ** alpha
    it = normalized_iterates(solution, np.ones(solution.N), n_max)
    h = solution.h.values
    errors = np.max(np.abs(it - h), axis=1)
    tplus = np.array([theta_plus(row, h) for row in it])
    n = np.arange(n_max + 1)
    bounds = 3.0 * R1 * delta_cone * tau ** n
    judged = errors >= floor
    judged[0] = True
    stop = np.argmin(judged) if not judged.all() else judged.size
    holds = bool(np.all(errors[:stop] <= bounds[:stop]))
    mask = (errors > floor) & (n >= 1)
    tau_fit = fit_geometric(n[mask], errors[mask])[0] if mask.sum() >= 3 else 0.0
    return ConvergenceReport(delta_cone, tau, R1, tplus, errors, bounds, tau_fit, floor, holds)
