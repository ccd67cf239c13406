"""Numerical verification of the standing inequalities on a map and a potential.

Every check returns a :class:`ConditionRecord` with ``margin = rhs - lhs``;
a condition passes exactly when its margin is positive.  Grid estimates
are repeated on a grid twice as fine and a record is flagged when its
margin is smaller than the change between the two.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ._grid import grid_points, hoelder_seminorm
from .dynamics import DIAMETER, CircleMap, CoverSpec, PotentialSpec, make_cover
from .errors import Infeasible, MissingDerivative

__all__ = [
    "ConditionRecord",
    "HypothesisReport",
    "check_H1",
    "check_H2",
    "backward_contraction",
    "compute_epsilon_phi",
    "compute_epsilon_prime",
    "check_P",
    "check_P_prime",
    "check_expansion_relation",
    "compute_Xi_r",
    "count_itineraries",
    "c_gamma_estimate",
    "global_holder_factor",
    "extend_holder_constant",
    "check_hypotheses",
]

DEFAULT_GRID = 4096


@dataclass(frozen=True)
class ConditionRecord:
    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    flagged: bool = False
    refinement_error: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _record(name, lhs, rhs, err=0.0, **detail) -> ConditionRecord:
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    return ConditionRecord(
        name=name, lhs=lhs, rhs=rhs, margin=margin, passed=bool(margin > 0),
        flagged=bool(abs(margin) <= err), refinement_error=float(err), detail=detail,
    )


# ------------------------------------------------------------------- maps

def _h1_on_grid(fmap: CircleMap, n: int):
    x = grid_points(n)
    inv = 1.0 / np.abs(fmap.derivative(x))
    in_a = fmap.in_contraction_region(x)
    L = max(1.0, float(inv[in_a].max())) if np.any(in_a) else 1.0
    outside = float(inv[~in_a].max()) if np.any(~in_a) else 0.0
    return outside, L


def check_H1(fmap: CircleMap, sigma: float | None = None, n: int = DEFAULT_GRID) -> ConditionRecord:
    """Expansion by ``sigma`` off ``A`` and the inverse Lipschitz bound on ``A``.

    The record compares ``max 1/|Df|`` over grid points outside ``A`` with
    ``1/sigma``; ``detail['L']`` holds the sup of ``1/|Df|`` over grid points
    in ``A`` (1 when there are none).
    """
    sigma = fmap.sigma if sigma is None else float(sigma)
    outside, L = _h1_on_grid(fmap, n)
    outside2, L2 = _h1_on_grid(fmap, 2 * n)
    return _record("H1", outside, 1.0 / sigma, abs(outside2 - outside),
                   L=L, L_refined=L2, sigma=sigma)


def check_H2(fmap: CircleMap, cover: CoverSpec | None = None) -> ConditionRecord:
    cover = make_cover(fmap) if cover is None else cover
    return _record("H2", cover.q, fmap.deg, q=cover.q, arcs=len(cover.arcs))


def backward_contraction(deg: int, q: int, L: float, sigma: float, alpha: float) -> float:
    """Average backward contraction ``Q`` of ``alpha``-Hoelder differences."""
    return ((deg - q) * sigma ** (-alpha)
            + q * L ** alpha * (1.0 + (L - 1.0) ** alpha)) / deg


def compute_epsilon_phi(deg: int, q: int, L: float, sigma: float, alpha: float,
                        m: int, diam: float = DIAMETER, tol: float = 1e-10) -> float:
    """Largest ``eps`` with ``e^eps Q + eps 2 m L^alpha diam^alpha < 1``.

    Found by bisection; the returned value is the lower end of the final
    bracket, so the inequality holds strictly.
    """
    if q >= deg:
        raise Infeasible(f"q={q} is not below deg={deg}")
    Q = backward_contraction(deg, q, L, sigma, alpha)
    if Q >= 1.0:
        raise Infeasible(f"backward contraction Q={Q:.6f} is not below 1")
    slope = 2.0 * m * L ** alpha * diam ** alpha

    def g(eps):
        return math.exp(eps) * Q + eps * slope - 1.0

    lo, hi = 0.0, 1.0
    while g(hi) < 0.0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    if q >= 1:
        lo = min(lo, math.nextafter(math.log(deg) - math.log(q), 0.0))
    return lo


def compute_epsilon_prime(eps_phi: float, Q: float) -> float:
    """Admissible size of potential derivatives, just inside ``(1 + e') e^eps Q < 1``."""
    sup = 1.0 / (math.exp(eps_phi) * Q) - 1.0
    return sup * (1.0 - 1e-9)


def compute_Xi_r(deg: int, q: int, L: float, sigma: float, eps_phi: float, r: int) -> float:
    xi = math.exp(eps_phi) * (q * L ** r + (deg - q) / sigma) / deg
    if xi >= 1.0:
        raise Infeasible(f"Xi_{r} = {xi:.6f} is not below 1")
    return xi


# -------------------------------------------------------------- potentials

def _potential_bounds(potential: PotentialSpec, values):
    sup = potential.sup if potential.sup is not None else float(values.max())
    inf = potential.inf if potential.inf is not None else float(values.min())
    return sup, inf


def _p_terms(potential, delta, m, alpha, n):
    x = grid_points(n)
    vals = potential(x)
    sup, inf = _potential_bounds(potential, vals)
    local = hoelder_seminorm(np.exp(vals), alpha, delta, potential.breaks)
    factor = 1 if delta >= 0.5 else m
    return sup - inf, factor * local, inf


def check_P(potential: PotentialSpec, eps_phi: float, n: int = DEFAULT_GRID,
            delta: float = 0.5, m: int | None = None, alpha: float | None = None) -> ConditionRecord:
    """Small oscillation and small Hoelder seminorm of ``e^phi``.

    The two inequalities ``sup - inf < eps`` and ``|e^phi|_alpha < eps e^inf``
    are combined into one record by normalising each by its right-hand
    side; ``lhs`` is the larger ratio and ``rhs`` is 1.
    """
    if eps_phi <= 0.0:
        raise ValueError("eps_phi must be positive")
    m = global_holder_factor(delta) if m is None else m
    alpha = potential.hoelder_exponent if alpha is None else alpha
    osc, semi, inf = _p_terms(potential, delta, m, alpha, n)
    osc2, semi2, inf2 = _p_terms(potential, delta, m, alpha, 2 * n)
    bound = eps_phi * math.exp(inf)
    lhs = max(osc / eps_phi, semi / bound)
    lhs2 = max(osc2 / eps_phi, semi2 / (eps_phi * math.exp(inf2)))
    err = abs(lhs2 - lhs)
    return _record("P", lhs, 1.0, err, oscillation=osc, seminorm=semi,
                   seminorm_bound=bound, epsilon_phi=eps_phi, alpha=alpha,
                   delta=delta, m=m)


def check_P_prime(potential: PotentialSpec, eps_phi: float, eps_prime: float,
                  r: int = 1, n: int = DEFAULT_GRID) -> ConditionRecord:
    """Small oscillation and small derivatives up to order ``r``.

    With ``r = 0`` only the oscillation is constrained.

    Derivative sups are taken at cell midpoints so that one-sided
    singularities at grid points do not produce infinities.
    """
    if potential.order < r:
        raise MissingDerivative(
            f"potential {potential.name} has derivatives up to {potential.order}, need {r}"
        )

    def terms(nn):
        x = grid_points(nn)
        vals = potential(x)
        sup, inf = _potential_bounds(potential, vals)
        mid = x + 0.5 / nn
        dmax = max((float(np.max(np.abs(potential.derivative(mid, s)))) for s in range(1, r + 1)),
                   default=0.0)
        return sup - inf, dmax

    osc, dmax = terms(n)
    osc2, dmax2 = terms(2 * n)
    if eps_phi <= 0.0 or eps_prime <= 0.0:
        raise ValueError("eps_phi and eps_prime must be positive")
    lhs = max(osc / eps_phi, dmax / eps_prime)
    lhs2 = max(osc2 / eps_phi, dmax2 / eps_prime)
    return _record("P'", lhs, 1.0, abs(lhs2 - lhs), oscillation=osc,
                   derivative_sup=dmax, epsilon_phi=eps_phi, epsilon_prime=eps_prime, r=r)


def check_expansion_relation(sigma: float, L: float, gamma: float, c: float):
    """``sigma^-(1-gamma) L^gamma < e^{-2c}``.

    Returns
    -------
    record : ConditionRecord
    c_max : float
        Supremum of admissible ``c`` for these constants (nonpositive when
        none exists).
    """
    lhs = sigma ** (-(1.0 - gamma)) * L ** gamma
    c_max = -0.5 * math.log(lhs)
    return _record("eq-relation-expansion", lhs, math.exp(-2.0 * c), c=c, c_max=c_max), c_max


# ------------------------------------------------------------- combinatorics

def count_itineraries(gamma: float, n: int, q: int, p: int) -> int:
    """Number of words of length ``n`` over ``p`` symbols with more than ``gamma n``
    letters among the first ``q``, weighted exactly."""
    if not 0 <= q <= p or n < 0:
        raise ValueError(f"need 0 <= q <= p and n >= 0, got q={q}, p={p}, n={n}")
    return sum(math.comb(n, k) * q ** k * (p - q) ** (n - k)
               for k in range(n + 1) if k > gamma * n)


def c_gamma_estimate(gamma: float, q: int, p: int, n_max: int) -> float:
    """``log(count) / n_max``; exact integer arithmetic keeps it overflow free."""
    count = count_itineraries(gamma, n_max, q, p)
    return math.log(count) / n_max if count > 0 else -math.inf


def global_holder_factor(delta: float) -> int:
    """Factor ``m = s + 2`` with ``s = ceil(3 / (2 delta))``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return int(math.ceil(3.0 / (2.0 * delta))) + 2


def extend_holder_constant(C: float, delta: float, r: float, alpha: float) -> float:
    return C * (1.0 + r ** alpha)


# ------------------------------------------------------------------ report

@dataclass(frozen=True)
class HypothesisReport:
    deg: int
    q: int
    L: float
    sigma: float
    gamma: float
    c: float
    c_max: float
    epsilon_phi: float
    epsilon_prime: float
    Xi_r: float
    m: int
    r: int
    alpha: float
    delta: float
    Q: float
    records: tuple[ConditionRecord, ...]

    @property
    def passed(self) -> bool:
        return all(rec.passed for rec in self.records)

    def record(self, name: str) -> ConditionRecord:
        for rec in self.records:
            if rec.name == name:
                return rec
        raise KeyError(name)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "deg", "q", "L", "sigma", "gamma", "c", "c_max", "epsilon_phi",
            "epsilon_prime", "Xi_r", "m", "r", "alpha", "delta", "Q")}
        d["passed"] = self.passed
        d["records"] = [rec.to_dict() for rec in self.records]
        return d

    def table(self) -> str:
        lines = [f"{'condition':<24}{'lhs':>14}{'rhs':>14}{'margin':>14}  result"]
        for rec in self.records:
            tag = "pass" if rec.passed else "FAIL"
            if rec.flagged:
                tag += " (within grid error)"
            lines.append(f"{rec.name:<24}{rec.lhs:>14.6g}{rec.rhs:>14.6g}{rec.margin:>14.6g}  {tag}")
        return "\n".join(lines)


def check_hypotheses(fmap: CircleMap, potential: PotentialSpec, *, alpha: float | None = None,
                     delta: float = 0.5, gamma: float = 0.9, c: float | None = None,
                     r: int = 1, n: int = DEFAULT_GRID, cover: CoverSpec | None = None,
                     sigma: float | None = None) -> HypothesisReport:
    """Evaluate every standing condition for ``(fmap, potential)``.

    Parameters
    ----------
    alpha : float, optional
        Hoelder exponent; defaults to the potential's.
    delta : float
        Radius of local Hoelder control; fixes ``m``.
    gamma, c : float
        Hyperbolic-time constants; ``c`` defaults to half its admissible sup.
    r : int
        Derivative order for the smooth condition.
    """
    sigma = fmap.sigma if sigma is None else float(sigma)
    alpha = potential.hoelder_exponent if alpha is None else float(alpha)
    h1 = check_H1(fmap, sigma, n)
    L = h1.detail["L"]
    cover = make_cover(fmap) if cover is None else cover
    h2 = check_H2(fmap, cover)
    q, deg = cover.q, fmap.deg
    m = global_holder_factor(delta)
    Q = backward_contraction(deg, q, L, sigma, alpha)

    lhs_exp = sigma ** (-(1.0 - gamma)) * L ** gamma
    c_max = -0.5 * math.log(lhs_exp)
    if c is None:
        c = 0.5 * c_max if c_max > 0 else 1e-6
    expansion, _ = check_expansion_relation(sigma, L, gamma, c)

    try:
        eps = compute_epsilon_phi(deg, q, L, sigma, alpha, m)
    except Infeasible:
        eps = 0.0
    eps_prime = compute_epsilon_prime(eps, Q) if eps > 0 else 0.0
    slope = 2.0 * m * L ** alpha * DIAMETER ** alpha
    relation = _record("eq-relation-potential", math.exp(eps) * Q, 1.0, Q=Q)
    vep = _record("eq-vep", math.exp(eps) * Q + eps * slope, 1.0, epsilon_phi=eps)
    vepp = _record("eq-vepp", (1.0 + eps_prime) * math.exp(eps) * Q, 1.0, epsilon_prime=eps_prime)
    if eps > 0:
        p_rec = check_P(potential, eps, n, delta, m, alpha)
        try:
            pp_rec = check_P_prime(potential, eps, eps_prime, r, n)
        except MissingDerivative as exc:
            pp_rec = _record("P'", 1.0, 0.0, reason=str(exc))
    else:
        reason = "no admissible epsilon_phi"
        p_rec = _record("P", 1.0, 0.0, reason=reason)
        pp_rec = _record("P'", 1.0, 0.0, reason=reason)
    xi = math.exp(eps) * (q * L ** r + (deg - q) / sigma) / deg
    records = (h1, h2, p_rec, pp_rec, expansion, relation, vep, vepp)
    return HypothesisReport(
        deg=deg, q=q, L=L, sigma=sigma, gamma=gamma, c=c, c_max=c_max,
        epsilon_phi=eps, epsilon_prime=eps_prime, Xi_r=xi, m=m, r=r,
        alpha=alpha, delta=delta, Q=Q, records=records,
    )
