"""Full-branch circle maps, potentials and covers by injectivity domains.

Points of the circle are represented by floats in ``[0, 1)``.  A map is
given branchwise: on ``[a_k, a_{k+1})`` it is the projection of an
increasing lift ``F_k`` with ``F_k(a_{k+1}) - F_k(a_k) = 1``, so every
point has exactly one preimage per branch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import CoverGap, InvalidParameter, MissingDerivative, NumericFailure

__all__ = [
    "CircleMap",
    "PotentialSpec",
    "CoverSpec",
    "circle_distance",
    "eval_map",
    "inverse_branches",
    "make_doubling",
    "make_manneville_pomeau",
    "make_shifted_doubling",
    "make_pitchfork_perturbed",
    "pitchfork_safe_range",
    "make_potential_constant",
    "make_potential_geometric",
    "make_potential_fourier",
    "make_potential_callable",
    "contraction_region_from_sigma",
    "make_cover",
    "build_partition_P",
    "arc_contains",
]

INVERSE_TOL = 1e-12
INVERSE_MAXITER = 200
DIAMETER = 0.5

Arc = tuple[float, float]


def circle_distance(x, y):
    """Distance on the circle ``R/Z``."""
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


def _wrap(x):
    x = np.mod(x, 1.0)
    return np.where(x >= 1.0, x - 1.0, x)


def arc_contains(arc: Arc, x, closed: bool = True):
    """Membership of ``x`` in the arc ``[a, b]`` read modulo 1.

    Arcs are pairs ``(a, b)`` with ``a <= b`` and ``b - a <= 1``; ``a`` may be
    negative to describe an arc through 0.
    """
    a, b = arc
    s = np.mod(np.asarray(x, dtype=float) - a, 1.0)
    length = b - a
    if length >= 1.0:
        return np.ones_like(s, dtype=bool)
    return s <= length if closed else s < length


def _region_contains(region: Sequence[Arc], x):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape, dtype=bool)
    for arc in region:
        out |= arc_contains(arc, x)
    return out


def _invert_increasing(F, dF, lo, hi, u, tol=INVERSE_TOL, maxiter=INVERSE_MAXITER):
    """Solve ``F(y) = u`` for increasing ``F`` on ``[lo, hi]``, vectorised.

    A few bisection steps bracket the root, then safeguarded Newton
    refines it.
    """
    u = np.asarray(u, dtype=float)
    a = np.full(u.shape, float(lo))
    b = np.full(u.shape, float(hi))
    for _ in range(8):
        mid = 0.5 * (a + b)
        below = F(mid) < u
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    y = 0.5 * (a + b)
    for _ in range(maxiter):
        r = F(y) - u
        a = np.where(r < 0, y, a)
        b = np.where(r > 0, y, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = y - r / dF(y)
        bad = ~np.isfinite(step) | (step <= a) | (step >= b)
        y_new = np.where(bad, 0.5 * (a + b), step)
        y_new = np.where(r == 0, y, y_new)
        if np.max(np.abs(y_new - y), initial=0.0) <= 1e-16:
            y = y_new
            break
        y = y_new
    resid = np.abs(F(y) - u)
    if resid.size and np.max(resid) > tol:
        raise NumericFailure(
            f"branch inversion did not converge: residual {np.max(resid):.3e}"
        )
    return y


@dataclass(frozen=True, eq=False)
class CircleMap:
    """A full-branch map of the circle.

    Attributes
    ----------
    name : str
        Family identifier.
    branch_endpoints : tuple of float
        ``0 = a_0 < a_1 < ... < a_K = 1``.
    lifts : tuple of callable
        ``lifts[k]`` is the increasing lift on ``[a_k, a_{k+1}]``.
    derivatives : tuple of tuple of callable
        ``derivatives[s - 1][k]`` evaluates ``D^s F_k``.
    inverses : tuple
        Analytic inverse of each lift, or None for numeric inversion.
    contraction_region : tuple of arcs
        The region ``A`` where mild contraction is allowed.
    sigma : float
        Expansion constant outside ``A``.
    inverse_lip_bound : float
        ``L``, the sup of ``1/|Df|`` on ``A`` (1 when ``A`` is empty).
    smoothness : int
        Order ``r`` up to which derivatives are bounded.
    derivative_hoelder : float
        Hoelder exponent of ``Df``; below 1 for maps whose second
        derivative blows up.
    params : dict
        Family parameters, for reporting.
    """

    name: str
    branch_endpoints: tuple[float, ...]
    lifts: tuple[Callable, ...]
    derivatives: tuple[tuple[Callable, ...], ...]
    inverses: tuple[Callable | None, ...]
    contraction_region: tuple[Arc, ...] = ()
    sigma: float = 2.0
    inverse_lip_bound: float = 1.0
    smoothness: int = 2
    derivative_hoelder: float = 1.0
    params: dict = field(default_factory=dict)

    @property
    def branch_count(self) -> int:
        return len(self.branch_endpoints) - 1

    @property
    def deg(self) -> int:
        return self.branch_count

    @property
    def max_derivative_order(self) -> int:
        return len(self.derivatives)

    def branch_of(self, x):
        """Index of the branch domain containing each point."""
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.branch_endpoints, x, side="right") - 1
        return np.clip(k, 0, self.branch_count - 1)

    def _branchwise(self, funcs, x, branch=None):
        x = _wrap(np.asarray(x, dtype=float))
        if branch is not None:
            return np.asarray(funcs[branch](x), dtype=float) * np.ones_like(x)
        k = self.branch_of(x)
        out = np.empty_like(x)
        for j, fj in enumerate(funcs):
            sel = k == j
            if np.any(sel):
                out[sel] = fj(x[sel])
        return out

    def __call__(self, x):
        return _wrap(self._branchwise(self.lifts, x))

    def lift(self, x, branch: int):
        return np.asarray(self.lifts[branch](np.asarray(x, dtype=float)), dtype=float)

    def derivative(self, x, s: int = 1, branch: int | None = None):
        """``D^s f`` evaluated with the branch containing ``x`` (or ``branch``)."""
        if s < 1 or s > self.max_derivative_order:
            raise MissingDerivative(
                f"{self.name} supplies derivatives up to order {self.max_derivative_order}, got {s}"
            )
        return self._branchwise(self.derivatives[s - 1], x, branch)

    def in_contraction_region(self, x):
        return _region_contains(self.contraction_region, x)

    def preimages(self, x) -> np.ndarray:
        """All preimages, shape ``(deg, *x.shape)``; row ``k`` is branch ``k``."""
        x = _wrap(np.asarray(x, dtype=float))
        out = np.empty((self.branch_count,) + x.shape)
        for k in range(self.branch_count):
            lo, hi = self.branch_endpoints[k], self.branch_endpoints[k + 1]
            c = float(self.lifts[k](np.array(lo)))
            u = c + np.mod(x - c, 1.0)
            u = np.where(u >= c + 1.0, u - 1.0, u)
            inv = self.inverses[k]
            if inv is not None:
                y = np.asarray(inv(u), dtype=float)
            else:
                y = _invert_increasing(self.lifts[k], self.derivatives[0][k], lo, hi, u)
            out[k] = np.clip(y, lo, np.nextafter(hi, lo))
        return out

    def with_region(self, region: Sequence[Arc], sigma: float | None = None) -> "CircleMap":
        """Copy with a different contraction region (and optionally sigma)."""
        sigma = self.sigma if sigma is None else float(sigma)
        region = tuple((float(a), float(b)) for a, b in region)
        return _finalize(
            self.name, self.branch_endpoints, self.lifts, self.derivatives,
            self.inverses, region, sigma, self.smoothness,
            self.derivative_hoelder, self.params,
        )


def _inverse_lip(endpoints, derivs1, region, n=4096):
    if not region:
        return 1.0
    worst = 0.0
    for a, b in region:
        x = _wrap(np.linspace(a, b, n))
        k = np.clip(np.searchsorted(endpoints, x, side="right") - 1, 0, len(endpoints) - 2)
        d = np.empty_like(x)
        for j, fj in enumerate(derivs1):
            sel = k == j
            if np.any(sel):
                d[sel] = fj(x[sel])
        worst = max(worst, float(np.max(1.0 / np.abs(d))))
    return max(1.0, worst)


def _finalize(name, endpoints, lifts, derivatives, inverses, region, sigma,
              smoothness, derivative_hoelder, params):
    if not sigma > 1.0:
        raise InvalidParameter(f"sigma must exceed 1, got {sigma}")
    L = _inverse_lip(endpoints, derivatives[0], region)
    return CircleMap(
        name=name,
        branch_endpoints=tuple(float(a) for a in endpoints),
        lifts=tuple(lifts),
        derivatives=tuple(tuple(d) for d in derivatives),
        inverses=tuple(inverses),
        contraction_region=tuple(region),
        sigma=float(sigma),
        inverse_lip_bound=L,
        smoothness=smoothness,
        derivative_hoelder=derivative_hoelder,
        params=dict(params),
    )


def eval_map(fmap: CircleMap, x):
    """Image of ``x`` under ``fmap``, reduced modulo 1."""
    return fmap(x)


def inverse_branches(fmap: CircleMap, x: float) -> list[tuple[int, float]]:
    """Preimages of a single point as ``(branch, preimage)`` pairs."""
    pre = fmap.preimages(np.array([float(x)]))[:, 0]
    return [(k, float(y)) for k, y in enumerate(pre)]


def contraction_region_from_sigma(fmap: CircleMap, sigma: float, n: int = 2 ** 16) -> tuple[Arc, ...]:
    """Arcs of grid points where ``1/|Df| >= 1/sigma``.

    Each maximal cyclic run of flagged grid points becomes one closed arc
    between its first and last point.
    """
    x = np.arange(n) / n
    flag = 1.0 / np.abs(fmap.derivative(x)) >= 1.0 / sigma
    if not np.any(flag):
        return ()
    if np.all(flag):
        return ((0.0, 1.0),)
    # rotate so that index 0 is unflagged, then runs do not wrap
    start = int(np.argmin(flag))
    rolled = np.roll(flag, -start)
    edges = np.diff(np.concatenate([[0], rolled.astype(int), [0]]))
    begins = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    arcs = []
    for b, e in zip(begins, ends):
        a0 = ((b + start) % n) / n
        length = (e - b) / n
        if a0 + length >= 1.0:
            a0 -= 1.0
        arcs.append((a0, a0 + length))
    return tuple(sorted(arcs))


# ---------------------------------------------------------------- families

def _linear_branch(slope, shift):
    return (lambda x: slope * x + shift,
            lambda x: np.full_like(np.asarray(x, dtype=float), slope),
            lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            lambda u: (u - shift) / slope)


def _affine_degree_two(name, shift, sigma, params):
    b0 = _linear_branch(2.0, shift)
    b1 = _linear_branch(2.0, shift)
    return _finalize(
        name, (0.0, 0.5, 1.0), (b0[0], b1[0]),
        ((b0[1], b1[1]), (b0[2], b1[2]), (b0[3], b1[3])),
        (b0[4], b1[4]), (), sigma, 2, 1.0, params,
    )


def make_doubling(sigma: float = 1.99) -> CircleMap:
    """The doubling map ``x -> 2x mod 1``.

    ``sigma`` is the expansion constant reported to the hypothesis checks;
    it must be strictly below 2 for the strict inequality outside ``A``.
    """
    if not 1.0 < sigma <= 2.0:
        raise InvalidParameter(f"doubling sigma must lie in (1, 2], got {sigma}")
    return _affine_degree_two("doubling", 0.0, sigma, {"sigma": sigma})


def make_shifted_doubling(n: int, sigma: float = 1.99) -> CircleMap:
    """``x -> 2(x + 1/(10 n)) mod 1``."""
    if int(n) != n or n < 1:
        raise InvalidParameter(f"n must be a positive integer, got {n}")
    s = 1.0 / (10.0 * n)
    return _affine_degree_two(
        "shifted_doubling", 2.0 * s, sigma, {"n": int(n), "sigma": sigma}
    )


def _mp_region(alpha, sigma):
    c = (1.0 + alpha) * 2.0 ** alpha
    xa = ((sigma - 1.0) / c) ** (1.0 / alpha)
    return ((0.0, min(xa, 0.5)),)


def make_manneville_pomeau(alpha: float, sigma: float = 1.9,
                           region: Sequence[Arc] | None = None) -> CircleMap:
    """Intermittent map with an indifferent fixed point at 0.

    ``f(x) = x (1 + 2^alpha x^alpha)`` on ``[0, 1/2)`` and ``2x - 1`` on
    ``[1/2, 1)``.  Unless given, ``A`` is the maximal arc ``[0, x_A]`` on
    which ``1/|Df| >= 1/sigma``.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1), got {alpha}")
    if not 1.0 < sigma < 2.0 + alpha:
        raise InvalidParameter(f"sigma must lie in (1, 2 + alpha), got {sigma}")
    ca = 2.0 ** alpha
    c1 = (1.0 + alpha) * ca

    def F0(x):
        x = np.asarray(x, dtype=float)
        return x * (1.0 + ca * np.power(np.maximum(x, 0.0), alpha))

    def DF0(x):
        return 1.0 + c1 * np.power(np.maximum(np.asarray(x, dtype=float), 0.0), alpha)

    def D2F0(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        with np.errstate(divide="ignore"):
            return alpha * c1 * np.power(x, alpha - 1.0)

    def D3F0(x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        with np.errstate(divide="ignore"):
            return alpha * (alpha - 1.0) * c1 * np.power(x, alpha - 2.0)

    b1 = _linear_branch(2.0, -1.0)
    if region is None:
        region = _mp_region(alpha, sigma)
    return _finalize(
        "manneville_pomeau", (0.0, 0.5, 1.0), (F0, b1[0]),
        ((DF0, b1[1]), (D2F0, b1[2]), (D3F0, b1[3])),
        (None, b1[4]), tuple(region), sigma, 1, alpha,
        {"alpha": alpha, "sigma": sigma},
    )


# bump psi(u) = exp(1 - 1/(1 - u^2)) on |u| < 1, and its derivatives

def _bump_derivs(u):
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < 1.0
    uu = np.where(inside, u, 0.0)
    v = 1.0 - uu * uu
    psi = np.where(inside, np.exp(1.0 - 1.0 / v), 0.0)
    e1 = -2.0 * uu / v ** 2
    e2 = -2.0 / v ** 2 - 8.0 * uu ** 2 / v ** 3
    e3 = -24.0 * uu / v ** 3 - 48.0 * uu ** 3 / v ** 4
    p1 = psi * e1
    p2 = psi * (e1 ** 2 + e2)
    p3 = psi * (e1 ** 3 + 3.0 * e1 * e2 + e3)
    return psi, p1, p2, p3


@lru_cache(maxsize=None)
def _bump_slope_range():
    u = np.linspace(-1.0, 1.0, 200001)
    psi, p1, _, _ = _bump_derivs(u)
    g = psi + u * p1
    return float(g.min()), float(g.max())


def pitchfork_safe_range(strength: float = 1.05) -> tuple[float, float]:
    """Open interval of ``t`` for which both branches stay increasing."""
    gmin, gmax = _bump_slope_range()
    return 2.0 / (strength * gmin), 2.0 / (strength * gmax)


def make_pitchfork_perturbed(t: float, width: float = 0.1, strength: float = 1.05,
                             sigma: float = 1.5) -> CircleMap:
    """Doubling deformed near the fixed point 0.

    ``f_t(x) = 2x - t * strength * xt * psi(xt / width)`` where ``xt`` is
    the representative of ``x`` in ``[-1/2, 1/2)``.  The slope at 0 is
    ``2 - strength * t``, which drops below 1 at ``t = 1``.  The
    contraction region is computed from ``sigma``.
    """
    lo, hi = pitchfork_safe_range(strength)
    if not lo < t < hi:
        raise InvalidParameter(f"t={t} outside the monotone range ({lo:.4f}, {hi:.4f})")
    if not 0.0 < width < 0.5:
        raise InvalidParameter(f"width must lie in (0, 1/2), got {width}")
    ct = t * strength

    def parts(x, shift):
        xt = np.asarray(x, dtype=float) - shift
        psi, p1, p2, p3 = _bump_derivs(xt / width)
        u = xt / width
        rho = xt * psi
        d1 = psi + u * p1
        d2 = (2.0 * p1 + u * p2) / width
        d3 = (3.0 * p2 + u * p3) / width ** 2
        return rho, d1, d2, d3

    def branch(shift):
        return (
            lambda x: 2.0 * np.asarray(x, dtype=float) - ct * parts(x, shift)[0],
            lambda x: 2.0 - ct * parts(x, shift)[1],
            lambda x: -ct * parts(x, shift)[2],
            lambda x: -ct * parts(x, shift)[3],
        )

    b0, b1 = branch(0.0), branch(1.0)
    endpoints = (0.0, 0.5, 1.0)
    derivs = ((b0[1], b1[1]), (b0[2], b1[2]), (b0[3], b1[3]))
    inverses = (None, None)
    if t == 0.0:
        aff = _linear_branch(2.0, 0.0)
        inverses = (aff[4], aff[4])
    params = {"t": t, "width": width, "strength": strength, "sigma": sigma}
    base = _finalize("pitchfork", endpoints, (b0[0], b1[0]), derivs, inverses,
                     (), sigma, 2, 1.0, params)
    region = contraction_region_from_sigma(base, sigma)
    return base.with_region(region)


# ------------------------------------------------------------- potentials

@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """A real potential on the circle.

    Attributes
    ----------
    name : str
    evaluator : callable
        Vectorised ``phi``.
    derivatives : tuple of callable
        ``derivatives[s - 1]`` evaluates ``D^s phi``.
    hoelder_exponent : float
        Exponent ``alpha`` in ``(0, 1]``.
    sup, inf : float or None
        Analytic bounds when known.
    breaks : tuple of float
        Points where ``phi`` may jump; Hoelder seminorms are taken branchwise
        between consecutive breaks.
    branch_evaluator : callable or None
        ``(y, k) -> phi(y)`` using branch ``k`` of the underlying map, so that
        preimages sitting on a break get the value of their own branch.
    """

    name: str
    evaluator: Callable
    derivatives: tuple[Callable, ...] = ()
    hoelder_exponent: float = 1.0
    sup: float | None = None
    inf: float | None = None
    breaks: tuple[float, ...] = ()
    branch_evaluator: Callable | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.hoelder_exponent <= 1.0:
            raise InvalidParameter(
                f"hoelder_exponent must lie in (0, 1], got {self.hoelder_exponent}"
            )

    @property
    def order(self) -> int:
        return len(self.derivatives)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.evaluator(x), dtype=float) * np.ones_like(x)

    def on_branch(self, y, k: int):
        if self.branch_evaluator is None:
            return self(y)
        y = np.asarray(y, dtype=float)
        return np.asarray(self.branch_evaluator(y, k), dtype=float) * np.ones_like(y)

    def derivative(self, x, s: int = 1):
        if s < 1 or s > self.order:
            raise MissingDerivative(
                f"potential {self.name} supplies derivatives up to order {self.order}, got {s}"
            )
        x = np.asarray(x, dtype=float)
        return np.asarray(self.derivatives[s - 1](x), dtype=float) * np.ones_like(x)


def make_potential_constant(c: float = 0.0) -> PotentialSpec:
    c = float(c)
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return PotentialSpec(
        name="constant",
        evaluator=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        derivatives=(zero, zero, zero),
        hoelder_exponent=1.0, sup=c, inf=c, params={"c": c},
    )


def make_potential_geometric(fmap: CircleMap, t: float, hoelder_exponent: float | None = None,
                             offset: float = 0.0) -> PotentialSpec:
    """``phi = -t log|Df| + offset``.

    The derivative order is one less than what the map supplies.  The
    Hoelder exponent defaults to that of ``Df``.
    """
    if fmap.max_derivative_order < 1:
        raise MissingDerivative("geometric potential needs first derivatives of the map")
    t = float(t)
    offset = float(offset)

    def phi(x):
        return offset - t * np.log(np.abs(fmap.derivative(x)))

    def phi_branch(y, k):
        return offset - t * np.log(np.abs(fmap.derivative(y, 1, branch=k)))

    derivs = []
    if fmap.max_derivative_order >= 2:
        derivs.append(lambda x: -t * fmap.derivative(x, 2) / fmap.derivative(x, 1))
    if fmap.max_derivative_order >= 3:
        def d2(x):
            d1 = fmap.derivative(x, 1)
            return -t * (fmap.derivative(x, 3) / d1 - (fmap.derivative(x, 2) / d1) ** 2)
        derivs.append(d2)

    vals = []
    for k in range(fmap.branch_count):
        y = np.linspace(fmap.branch_endpoints[k], fmap.branch_endpoints[k + 1], 8193)
        vals.append(phi_branch(y, k))
    vals = np.concatenate(vals)
    alpha = fmap.derivative_hoelder if hoelder_exponent is None else hoelder_exponent
    return PotentialSpec(
        name="geometric",
        evaluator=phi,
        derivatives=tuple(derivs),
        hoelder_exponent=alpha,
        sup=float(vals.max()), inf=float(vals.min()),
        breaks=tuple(fmap.branch_endpoints[:-1]),
        branch_evaluator=phi_branch,
        params={"t": t, "offset": offset, "map": fmap.name},
    )


def make_potential_fourier(coeffs, hoelder_exponent: float = 1.0) -> PotentialSpec:
    """Trigonometric polynomial ``sum a_k cos(2 pi k x) + b_k sin(2 pi k x)``.

    Parameters
    ----------
    coeffs : sequence of (k, a_k, b_k)
        ``k = 0`` contributes the constant ``a_0``.
    """
    terms = [(int(k), float(a), float(b)) for k, a, b in coeffs]
    if any(k < 0 for k, _, _ in terms):
        raise InvalidParameter("Fourier modes must be nonnegative")

    def nth(s):
        def f(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            for k, a, b in terms:
                if k == 0:
                    if s == 0:
                        out += a
                    continue
                w = 2.0 * np.pi * k
                # the s-th derivative of cos/sin is a phase shift of s*pi/2
                ph = w * x + s * np.pi / 2.0
                out += w ** s * (a * np.cos(ph) + b * np.sin(ph))
            return out
        return f

    bound = sum(math.hypot(a, b) for k, a, b in terms if k > 0)
    const = sum(a for k, a, _ in terms if k == 0)
    return PotentialSpec(
        name="fourier",
        evaluator=nth(0),
        derivatives=(nth(1), nth(2), nth(3)),
        hoelder_exponent=hoelder_exponent,
        sup=None, inf=None,
        params={"coeffs": terms, "abs_bound": const + bound},
    )


def make_potential_callable(func: Callable, derivatives: Sequence[Callable] = (),
                            hoelder_exponent: float = 1.0, name: str = "custom") -> PotentialSpec:
    return PotentialSpec(name=name, evaluator=func, derivatives=tuple(derivatives),
                         hoelder_exponent=hoelder_exponent)


# ------------------------------------------------------------------ covers

def _normalize(arcs) -> list[tuple[float, float]]:
    """Disjoint sorted half-open intervals in ``[0, 1)`` for a list of arcs."""
    pieces = []
    for a, b in arcs:
        if b - a >= 1.0:
            pieces.append((0.0, 1.0))
            continue
        a0 = a % 1.0
        b0 = a0 + (b - a)
        if b0 <= 1.0:
            pieces.append((a0, b0))
        else:
            pieces.append((a0, 1.0))
            pieces.append((0.0, b0 - 1.0))
    pieces = sorted(p for p in pieces if p[1] > p[0])
    merged: list[tuple[float, float]] = []
    for a, b in pieces:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def _subtract(s, t):
    out = []
    for a, b in s:
        cur = [(a, b)]
        for c, d in t:
            nxt = []
            for x, y in cur:
                if d <= x or c >= y:
                    nxt.append((x, y))
                    continue
                if c > x:
                    nxt.append((x, c))
                if d < y:
                    nxt.append((d, y))
            cur = nxt
        out.extend(cur)
    return [p for p in out if p[1] - p[0] > 0.0]


def _measure(s):
    return sum(b - a for a, b in s)


def _meets(arc, region):
    """Whether the half-open arc meets any closed arc of ``region``."""
    pieces = _normalize([arc])
    for c, d in region:
        if d - c >= 1.0:
            return bool(pieces)
        c0 = c % 1.0
        closed = [(c0, c0 + (d - c))]
        if c0 + (d - c) > 1.0:
            closed = [(c0, 1.0), (0.0, c0 + (d - c) - 1.0)]
        for x, y in pieces:
            for lo, hi in closed:
                if x <= hi and lo < y:
                    return True
                if hi >= 1.0 and x == 0.0:
                    return True
    return False


@dataclass(frozen=True)
class CoverSpec:
    """Ordered cover of the circle by half-open arcs ``[a, b)``.

    Arcs meeting ``A`` come first; ``q`` is their number.
    """

    arcs: tuple[Arc, ...]
    meets_A: tuple[bool, ...]

    @property
    def q(self) -> int:
        return int(sum(self.meets_A))

    @classmethod
    def from_arcs(cls, arcs: Sequence[Arc], region: Sequence[Arc] = ()) -> "CoverSpec":
        arcs = [(float(a), float(b)) for a, b in arcs]
        flags = [_meets(a, region) for a in arcs]
        order = sorted(range(len(arcs)), key=lambda i: (not flags[i], i))
        return cls(tuple(arcs[i] for i in order), tuple(flags[i] for i in order))


def _image_length(fmap: CircleMap, arc: Arc, n: int = 2049) -> float:
    x = np.linspace(arc[0], arc[1], n)
    d = np.abs(fmap.derivative(_wrap(x)))
    return float(np.trapezoid(d, x))


def make_cover(fmap: CircleMap, eta: float | None = None, target: float = 0.45) -> CoverSpec:
    """Cover adapted to ``A``: one arc per component plus a tiling of the rest.

    Each component ``[a, b]`` of ``A`` gets the arc ``[a - eta, b + eta)``.
    The complement is tiled by arcs of image length at most ``target`` that
    do not meet ``A``.  Every arc has image length below 1, hence lies in an
    injectivity domain.
    """
    region = list(fmap.contraction_region)
    if eta is None:
        eta = 0.01
    arcs = [(a - eta, b + eta) for a, b in region]
    for arc in arcs:
        if _image_length(fmap, arc) >= 1.0:
            raise CoverGap(f"arc {arc} around A is not an injectivity domain")
    rest = _subtract([(0.0, 1.0)], _normalize(arcs))
    for a, b in rest:
        length = _image_length(fmap, (a, b))
        pieces = max(1, int(math.ceil(length / target)))
        # split evenly in image length
        xs = np.linspace(a, b, 4097)
        d = np.abs(fmap.derivative(xs))
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (d[1:] + d[:-1]) * np.diff(xs))])
        cuts = np.interp(np.linspace(0.0, cum[-1], pieces + 1), cum, xs)
        cuts[0], cuts[-1] = a, b
        arcs.extend((float(cuts[i]), float(cuts[i + 1])) for i in range(pieces))
    return CoverSpec.from_arcs(arcs, region)


@dataclass(frozen=True)
class PartitionElement:
    intervals: tuple[tuple[float, float], ...]
    meets_A: bool

    @property
    def measure(self) -> float:
        return _measure(self.intervals)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (x >= a) & (x < b)
        return out


def build_partition_P(cover: CoverSpec, tol: float = 1e-14) -> list[PartitionElement]:
    """Disjoint half-open sets ``P_1 = U_1``, ``P_{i+1} = U_{i+1}`` minus earlier ones."""
    covered = _normalize(cover.arcs)
    if abs(_measure(covered) - 1.0) > tol:
        raise CoverGap(f"arcs cover only {_measure(covered):.6f} of the circle")
    used: list[tuple[float, float]] = []
    out = []
    for arc, flag in zip(cover.arcs, cover.meets_A):
        piece = _subtract(_normalize([arc]), used)
        if piece:
            out.append(PartitionElement(tuple(piece), flag))
            used = _normalize(used + piece)
    return out
