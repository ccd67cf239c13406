"""Cones of regular positive functions and their projective metrics.

The Hoelder cone with parameters ``(kappa, delta, alpha)`` contains the
positive ``g`` with ``|g(x) - g(y)| <= kappa d(x, y)^alpha inf g`` whenever
``d(x, y) < delta``.  The smooth cone of order ``r`` bounds
``||D^s g||_0 / inf g`` by ``kappa / c_s`` for ``s = 1..r``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from ._grid import grid_points, hoelder_seminorm, pair_lags
from .dynamics import DIAMETER, CircleMap, PotentialSpec
from .errors import InvalidContraction, MissingDerivative, NonPositiveInput, NotInCone
from .operator import GridFunction, apply_operator, build_matrix

__all__ = [
    "ConeParams",
    "ThetaResult",
    "ConeMembership",
    "TrigMember",
    "InvarianceResult",
    "ContractionResult",
    "theta_plus",
    "theta_kappa",
    "theta_kappa_sampled",
    "cone_membership",
    "cone_membership_Cr",
    "inverse_derivative_sups",
    "c_constants",
    "c_constants_direct",
    "diameter_bound",
    "random_cone_members",
    "operator_derivatives",
    "verify_invariance",
    "contraction_check",
]


def _values(g) -> np.ndarray:
    return g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)


@dataclass(frozen=True)
class ConeParams:
    kappa: float
    delta: float = 0.5
    alpha: float = 1.0
    r: int = 0
    c_consts: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kappa <= 0 or self.delta <= 0 or not 0 < self.alpha <= 1:
            raise ValueError("need kappa > 0, delta > 0 and alpha in (0, 1]")
        if self.r >= 1:
            if len(self.c_consts) != self.r:
                raise ValueError(f"smooth cone of order {self.r} needs {self.r} constants")
            if self.c_consts[-1] != 1.0 or min(self.c_consts) <= 0:
                raise ValueError("constants must be positive with c_r = 1")


# ----------------------------------------------------------------- metrics

def theta_plus(g1, g2) -> float:
    """``log(max(g1/g2) / min(g1/g2))`` over grid points."""
    a, b = _values(g1), _values(g2)
    if np.any(a <= 0) or np.any(b <= 0):
        raise NonPositiveInput("projective distance needs strictly positive functions")
    ratio = a / b
    return float(math.log(ratio.max() / ratio.min()))


@dataclass(frozen=True)
class ConeMembership:
    member: bool
    ratio: float


def cone_membership(g, params: ConeParams) -> ConeMembership:
    """Ratio ``|g|_{alpha,delta} / inf g`` over grid pairs, and membership."""
    v = _values(g)
    semi = hoelder_seminorm(v, params.alpha, params.delta)
    inf = float(v.min())
    if inf <= 0:
        return ConeMembership(False, math.inf)
    ratio = semi / inf
    return ConeMembership(bool(ratio <= params.kappa), ratio)


@dataclass(frozen=True)
class ThetaResult:
    theta: float
    A: float
    B: float
    theta_plus: float


def _pair_table(v: np.ndarray, params: ConeParams):
    """Differences over all grid pairs, scaled by ``1/(kappa d^alpha)``."""
    n = v.size
    lags = pair_lags(n, params.delta)
    scale = 1.0 / (params.kappa * (lags / n) ** params.alpha)
    rolled = np.stack([np.roll(v, -k) for k in lags])
    return (rolled - v) * scale[:, None]


def _sup_feasible(lo, hi, feasible, iters=200):
    # feasible(lo) holds and the feasible set is an interval starting at lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def theta_kappa(g1, g2, params: ConeParams) -> ThetaResult:
    """Projective cone distance ``log(B/A)`` between two strict cone members.

    ``A`` is the largest ``t`` with ``g2 - t g1`` in the closed cone and ``B``
    the smallest ``s`` with ``s g1 - g2`` in it.  Membership of a difference
    over the full grid reduces to
    ``min_z w(z) >= max_{x,y} |w(x) - w(y)| / (kappa d^alpha)``, which is
    concave in the scalar, so both are found by bisection and the result is
    the infimum of the defining quotient over every grid triple.
    """
    phi, psi = _values(g1), _values(g2)
    for v in (phi, psi):
        if np.any(v <= 0):
            raise NotInCone("cone members must be strictly positive")
        if cone_membership(v, params).ratio >= params.kappa:
            raise NotInCone("both functions must be strict cone members")
    dphi, dpsi = _pair_table(phi, params), _pair_table(psi, params)

    def in_cone(w_min, dw):
        return w_min >= np.max(np.abs(dw), initial=0.0)

    ratio = psi / phi
    r_min, r_max = float(ratio.min()), float(ratio.max())
    A = _sup_feasible(0.0, r_min, lambda t: in_cone(np.min(psi - t * phi), dpsi - t * dphi))
    # B: smallest s with s*phi - psi in the cone, searched on 1/s
    hi = r_max
    while not in_cone(np.min(hi * phi - psi), hi * dphi - dpsi):
        hi *= 2.0
    inv_b = _sup_feasible(1.0 / hi, 1.0 / r_max,
                          lambda u: in_cone(np.min(phi - u * psi), dphi - u * dpsi))
    B = 1.0 / inv_b
    return ThetaResult(float(math.log(B / A)), float(A), float(B), math.log(r_max / r_min))


def theta_kappa_sampled(g1, g2, params: ConeParams, n_triples: int = 200000, seed: int = 0) -> ThetaResult:
    """Quotient minimised and maximised over random grid triples.

    Slow reference for :func:`theta_kappa`; its ``A`` is an upper bound and
    its ``B`` a lower bound of the exact values.
    """
    phi, psi = _values(g1), _values(g2)
    n = phi.size
    rng = np.random.default_rng(seed)
    lags = pair_lags(n, params.delta)
    i = rng.integers(0, n, n_triples)
    k = lags[rng.integers(0, lags.size, n_triples)]
    sign = rng.choice([-1, 1], n_triples)
    j = (i + sign * k) % n
    z = rng.integers(0, n, n_triples)
    d = params.kappa * (k / n) ** params.alpha
    num = d * psi[z] - (psi[i] - psi[j])
    den = d * phi[z] - (phi[i] - phi[j])
    if np.any(den <= 0):
        raise NotInCone("a sampled denominator is not positive")
    q = num / den
    A, B = float(q.min()), float(q.max())
    r = psi / phi
    return ThetaResult(math.log(B / A), A, B, math.log(r.max() / r.min()))


def diameter_bound(kappa: float, lambda_hat: float, m: int, alpha: float,
                   diam: float = DIAMETER) -> float:
    """``2 log[(1 + m lambda_hat kappa diam^alpha)(1 + lambda_hat)/(1 - lambda_hat)]``."""
    if not 0.0 < lambda_hat < 1.0:
        raise InvalidContraction(f"lambda_hat must lie in (0, 1), got {lambda_hat}")
    return 2.0 * math.log((1.0 + m * lambda_hat * kappa * diam ** alpha)
                          * (1.0 + lambda_hat) / (1.0 - lambda_hat))


# ------------------------------------------------------------ smooth cones

def cone_membership_Cr(derivs: Sequence[np.ndarray], params: ConeParams):
    """Per-order ratios ``||D^s g||_0 / inf g`` against ``kappa / c_s``.

    Parameters
    ----------
    derivs : sequence of arrays
        ``derivs[0]`` holds ``g`` and ``derivs[s]`` holds ``D^s g`` on a grid.

    Returns
    -------
    member : bool
    ratios : ndarray
    margins : ndarray
        ``kappa / c_s - ratio_s``.
    """
    if params.r < 1:
        raise ValueError("smooth cone needs r >= 1")
    if len(derivs) < params.r + 1:
        raise MissingDerivative(f"need derivatives up to order {params.r}")
    g = np.asarray(derivs[0], dtype=float)
    inf = float(g.min())
    if inf <= 0:
        return False, np.full(params.r, np.inf), np.full(params.r, -np.inf)
    ratios = np.array([np.max(np.abs(derivs[s])) / inf for s in range(1, params.r + 1)])
    margins = params.kappa / np.asarray(params.c_consts) - ratios
    return bool(np.all(margins >= 0)), ratios, margins


def inverse_derivative_sups(fmap: CircleMap, r_max: int, n: int = 8192) -> dict[int, float]:
    """``max_x |D^s f^{-1}(x)|`` over all inverse branches for ``s = 1..r_max``.

    Uses ``D f^{-1} = 1/Df``, ``D^2 f^{-1} = -D^2 f / (Df)^3`` and
    ``D^3 f^{-1} = (3 (D^2 f)^2 - Df D^3 f) / (Df)^5`` at the preimage.
    """
    if r_max > 3 or r_max > fmap.max_derivative_order:
        raise MissingDerivative(f"inverse derivatives available up to order "
                                f"{min(3, fmap.max_derivative_order)}")
    y = (np.arange(n) + 0.5) / n
    d1 = fmap.derivative(y, 1)
    out = {1: float(np.max(np.abs(1.0 / d1)))}
    if r_max >= 2:
        d2 = fmap.derivative(y, 2)
        out[2] = float(np.max(np.abs(d2 / d1 ** 3)))
    if r_max >= 3:
        d3 = fmap.derivative(y, 3)
        out[3] = float(np.max(np.abs((3.0 * d2 ** 2 - d1 * d3) / d1 ** 5)))
    return out


def _leading_constant(r, xi, eps_phi, inv_sups):
    base = inv_sups[r]
    return math.factorial(r) / (1.0 - xi[r]) * math.exp(eps_phi) * max(base ** j for j in range(1, r))


def c_constants(r: int, xi: Mapping[int, float], eps_phi: float,
                inv_sups: Mapping[int, float]) -> dict[int, tuple[float, ...]]:
    """Constants ``c^(k)_s`` for ``k = 1..r`` by the recursion in ``s``.

    ``c^(k)_k = 1``, ``c^(k)_{k-1} = k! e^eps / (1 - Xi_k) max_j sup|D^k f^{-1}|^j``
    and ``c^(k)_{k-t} = c^(k)_{k-t+1} c^(k-1)_{k-t}`` for ``t >= 2``.

    Returns
    -------
    dict
        ``out[k][s - 1] = c^(k)_s``.
    """
    out: dict[int, tuple[float, ...]] = {1: (1.0,)}
    for k in range(2, r + 1):
        c = [0.0] * (k + 1)
        c[k] = 1.0
        c[k - 1] = _leading_constant(k, xi, eps_phi, inv_sups)
        for t in range(2, k):
            c[k - t] = c[k - t + 1] * out[k - 1][k - t - 1]
        out[k] = tuple(c[1:])
    return out


def c_constants_direct(r: int, xi: Mapping[int, float], eps_phi: float,
                       inv_sups: Mapping[int, float]) -> dict[int, tuple[float, ...]]:
    """Same constants from the unrolled product
    ``c^(k)_s = c^(k)_{k-1} prod_{u = k-2, ..., s} c^(k-1)_u``."""
    out: dict[int, tuple[float, ...]] = {1: (1.0,)}
    for k in range(2, r + 1):
        lead = _leading_constant(k, xi, eps_phi, inv_sups)
        row = []
        for s in range(1, k + 1):
            if s == k:
                row.append(1.0)
            elif s == k - 1:
                row.append(lead)
            else:
                val = lead
                for u in range(k - 2, s - 1, -1):
                    val = val * out[k - 1][u - 1]
                row.append(val)
        out[k] = tuple(row)
    return out


# --------------------------------------------------------- random members

@dataclass(frozen=True)
class TrigMember:
    """``g = 1 + scale * sum_k a_k cos(2 pi k x + theta_k)`` with analytic derivatives."""

    amplitudes: tuple[float, ...]
    phases: tuple[float, ...]
    scale: float

    def derivative(self, x, s: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x) + (1.0 if s == 0 else 0.0)
        for k, (a, th) in enumerate(zip(self.amplitudes, self.phases), start=1):
            w = 2.0 * np.pi * k
            out = out + self.scale * a * w ** s * np.cos(w * x + th + s * np.pi / 2.0)
        return out

    def __call__(self, x):
        return self.derivative(x, 0)


def _trig_poly(rng, modes=5):
    amps = rng.standard_normal(modes) / np.arange(1, modes + 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, modes)
    return tuple(amps), tuple(phases)


def random_cone_members(params: ConeParams, n: int, seed: int, grid: int = 512,
                        ratio_range: tuple[float, float] = (0.1, 0.8)) -> list[TrigMember]:
    """Seeded trigonometric cone members with ratio a uniform fraction of ``kappa``.

    The fraction is drawn from ``ratio_range`` so that every member keeps a
    membership margin of at least ``1 - ratio_range[1]``.
    """
    rng = np.random.default_rng(seed)
    x = grid_points(grid)
    out = []
    for _ in range(n):
        amps, phases = _trig_poly(rng)
        p = TrigMember(amps, phases, 1.0)
        base = p(x) - 1.0
        low = max(0.0, -float(base.min()))
        frac = rng.uniform(*ratio_range)
        if params.r == 0:
            S = hoelder_seminorm(base, params.alpha, params.delta)
            target = frac * params.kappa
            scale = target / (S + target * low)
        else:
            xm = x + 0.5 / grid
            weighted = max(float(np.max(np.abs(p.derivative(xm, s)))) * params.c_consts[s - 1]
                           / params.kappa for s in range(1, params.r + 1))
            scale = frac / (weighted + frac * low)
        out.append(TrigMember(amps, phases, float(scale)))
    return out


# --------------------------------------------------------------- invariance

def operator_derivatives(fmap: CircleMap, potential: PotentialSpec, g: TrigMember,
                         x: np.ndarray, r: int) -> list[np.ndarray]:
    """``L g`` and its derivatives up to order ``r <= 2`` by the chain rule.

    With ``w = e^phi g`` and ``y`` a preimage,
    ``D(Lg) = sum w'(y) y'`` and ``D^2(Lg) = sum w''(y) y'^2 + w'(y) y''``
    where ``y' = 1/Df(y)`` and ``y'' = -D^2 f(y) / Df(y)^3``.
    """
    if r > 2:
        raise MissingDerivative("chain-rule derivatives implemented up to order 2")
    pre = fmap.preimages(x)
    out = [np.zeros_like(x) for _ in range(r + 1)]
    for k in range(fmap.deg):
        y = pre[k]
        e = np.exp(potential.on_branch(y, k))
        g0 = g.derivative(y, 0)
        out[0] += e * g0
        if r >= 1:
            d1 = fmap.derivative(y, 1, branch=k)
            p1 = potential.derivative(y, 1)
            g1 = g.derivative(y, 1)
            w1 = e * (p1 * g0 + g1)
            out[1] += w1 / d1
        if r >= 2:
            d2 = fmap.derivative(y, 2, branch=k)
            p2 = potential.derivative(y, 2)
            g2 = g.derivative(y, 2)
            w2 = e * ((p2 + p1 ** 2) * g0 + 2.0 * p1 * g1 + g2)
            out[2] += w2 / d1 ** 2 - w1 * d2 / d1 ** 3
    return out


@dataclass(frozen=True)
class InvarianceResult:
    lambda_hat: float
    input_ratios: np.ndarray
    output_ratios: np.ndarray
    passed: bool

    def to_dict(self) -> dict:
        return {"lambda_hat": self.lambda_hat, "passed": self.passed,
                "max_input_ratio": float(np.max(self.input_ratios)),
                "max_output_ratio": float(np.max(self.output_ratios))}


def verify_invariance(fmap: CircleMap, potential: PotentialSpec, params: ConeParams,
                      n_samples: int = 50, seed: int = 0, grid: int = 512) -> InvarianceResult:
    """Estimate ``lambda_hat`` as the largest output ratio over ``kappa``.

    Inputs are random cone members; outputs ``L g`` are evaluated exactly at
    the grid (no interpolation).  For smooth cones each order is weighted by
    its constant, so the reported ratio is ``max_s c_s ||D^s Lg|| / inf Lg``.
    """
    x = grid_points(grid)
    members = random_cone_members(params, n_samples, seed, grid)
    ins, outs = [], []
    for g in members:
        if params.r == 0:
            ins.append(cone_membership(g(x), params).ratio)
            lg = apply_operator(fmap, potential, g, grid)
            outs.append(cone_membership(lg, params).ratio)
        else:
            xm = x + 0.5 / grid
            gd = [g.derivative(xm, s) for s in range(params.r + 1)]
            ld = operator_derivatives(fmap, potential, g, xm, params.r)
            c = np.asarray(params.c_consts)
            _, rin, _ = cone_membership_Cr(gd, params)
            _, rout, _ = cone_membership_Cr(ld, params)
            ins.append(float(np.max(rin * c)))
            outs.append(float(np.max(rout * c)))
    ins, outs = np.array(ins), np.array(outs)
    lam_hat = float(outs.max()) / params.kappa
    return InvarianceResult(lam_hat, ins, outs, bool(lam_hat < 1.0))


# -------------------------------------------------------------- contraction

@dataclass(frozen=True)
class ContractionResult:
    """Projective distances along the iteration of pairs of cone members.

    Arrays have one row per pair and one column per iterate ``0..n_iter``.
    """

    theta_kappa: np.ndarray
    theta_plus: np.ndarray
    factors: np.ndarray
    Delta: float
    bound: float
    theta_plus_bounds: np.ndarray
    tau_fit: float
    contraction_holds: bool
    theta_plus_holds: bool

    @property
    def max_factor(self) -> float:
        f = self.factors[np.isfinite(self.factors)]
        return float(f.max()) if f.size else 0.0

    def to_dict(self) -> dict:
        return {"Delta": self.Delta, "bound": self.bound, "max_factor": self.max_factor,
                "tau_fit": self.tau_fit, "contraction_holds": self.contraction_holds,
                "theta_plus_holds": self.theta_plus_holds}


def contraction_check(fmap: CircleMap, potential: PotentialSpec, params: ConeParams,
                      pairs: Sequence[tuple[Callable, Callable]], n_iter: int,
                      lambda_hat: float, m: int, grid: int = 256, tolerance: float = 0.02,
                      floor: float = 1e-10) -> ContractionResult:
    """Iterate pairs with the transfer matrix and measure projective contraction.

    A step counts towards the contraction factor only while the distance
    before it exceeds ``floor``.  The per-step factor is compared with
    ``1 - e^{-Delta}`` plus ``tolerance``, and ``Theta_+`` of the ``n``-th
    iterates with ``Delta tau^n`` where ``tau = 1 - e^{-Delta}``.
    """
    x = grid_points(grid)
    M = build_matrix(fmap, potential, grid).matrix
    Delta = diameter_bound(params.kappa, lambda_hat, m, params.alpha)
    tau = 1.0 - math.exp(-Delta)
    P = len(pairs)
    tk = np.zeros((P, n_iter + 1))
    tp = np.zeros((P, n_iter + 1))
    for p, (g1, g2) in enumerate(pairs):
        v1 = np.asarray(g1(x) if callable(g1) else g1, dtype=float)
        v2 = np.asarray(g2(x) if callable(g2) else g2, dtype=float)
        for n in range(n_iter + 1):
            res = theta_kappa(v1, v2, params)
            tk[p, n], tp[p, n] = res.theta, res.theta_plus
            v1 = M @ v1
            v1 /= v1.max()
            v2 = M @ v2
            v2 /= v2.max()
    with np.errstate(divide="ignore", invalid="ignore"):
        factors = np.where(tk[:, :-1] > floor, tk[:, 1:] / tk[:, :-1], np.nan)
    n = np.arange(n_iter + 1)
    tp_bounds = Delta * tau ** n
    f = factors[np.isfinite(factors)]
    contraction_ok = bool(np.all(f <= tau + tolerance)) if f.size else True
    tplus_ok = bool(np.all(tp[:, 1:] <= tp_bounds[1:] + 1e-12))
    from .statistics import fit_geometric
    worst = tp.max(axis=0)
    mask = (worst > floor) & (n >= 1)
    tau_fit = fit_geometric(n[mask], worst[mask])[0] if mask.sum() >= 3 else 0.0
    return ContractionResult(tk, tp, factors, Delta, tau, tp_bounds, tau_fit,
                             contraction_ok, tplus_ok)
