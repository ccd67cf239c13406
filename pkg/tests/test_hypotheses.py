import math

import numpy as np
import pytest
from scipy.optimize import brentq

from thermogap import dynamics as d
from thermogap import hypotheses as h
from thermogap.errors import Infeasible


def test_H1_strictness():
    assert h.check_H1(d.make_doubling(1.99)).passed
    # at sigma = 2 the inequality outside A is an equality
    rec = h.check_H1(d.make_doubling(2.0))
    assert not rec.passed and rec.margin == pytest.approx(0.0, abs=1e-12)


def test_H2_counts_arcs_meeting_A():
    rec = h.check_H2(d.make_manneville_pomeau(0.5))
    assert rec.passed and rec.lhs == 1 and rec.rhs == 2


def test_backward_contraction_closed_form():
    # deg 2, one arc through A, L = 1, sigma = 1.9, alpha = 1/2
    Q = h.backward_contraction(2, 1, 1.0, 1.9, 0.5)
    assert Q == pytest.approx((1.9 ** -0.5 + 1.0) / 2)


@pytest.mark.parametrize("args", [
    (2, 0, 1 / 1.99, 1.99, 1.0, 5),
    (2, 1, 1.0, 1.9, 0.5, 5),
    (3, 1, 1.2, 2.5, 0.7, 3),
])
def test_epsilon_phi_against_root_finder(args):
    deg, q, L, sigma, alpha, m = args
    eps = h.compute_epsilon_phi(deg, q, L, sigma, alpha, m)
    Q = h.backward_contraction(deg, q, L, sigma, alpha)
    slope = 2 * m * L ** alpha * 0.5 ** alpha
    root = brentq(lambda e: math.exp(e) * Q + e * slope - 1.0, 0.0, 10.0, xtol=1e-14)
    if q >= 1:
        root = min(root, math.log(deg / q))
    assert eps == pytest.approx(root, abs=2e-10)
    assert eps <= root
    assert math.exp(eps) * Q + eps * slope < 1.0


def test_epsilon_phi_infeasible():
    with pytest.raises(Infeasible):
        h.compute_epsilon_phi(2, 2, 1.0, 1.9, 0.5, 5)
    with pytest.raises(Infeasible):
        h.compute_epsilon_phi(2, 1, 3.0, 1.1, 1.0, 5)


def test_epsilon_prime_keeps_strict_inequality():
    Q = 0.8
    for eps in (0.01, 0.1):
        ep = h.compute_epsilon_prime(eps, Q)
        assert (1 + ep) * math.exp(eps) * Q < 1.0
        assert ep == pytest.approx(1 / (math.exp(eps) * Q) - 1, rel=1e-8)


def test_Xi_r():
    xi = h.compute_Xi_r(2, 1, 1.0, 1.9, 0.05, 1)
    assert xi == pytest.approx(math.exp(0.05) * (1 + 1 / 1.9) / 2)
    with pytest.raises(Infeasible):
        h.compute_Xi_r(2, 1, 2.0, 1.9, 0.05, 2)


def test_global_holder_factor():
    assert h.global_holder_factor(0.5) == 5
    assert h.global_holder_factor(1.5) == 3
    assert h.global_holder_factor(0.1) == 17
    with pytest.raises(ValueError):
        h.global_holder_factor(0.0)


def test_check_P_matches_lipschitz_oracle():
    a = 0.01
    pot = d.make_potential_fourier([[1, a, 0.0]])
    eps = 0.1
    rec = h.check_P(pot, eps, n=4096, delta=0.6, alpha=1.0)
    # Lipschitz constant of exp(a cos 2 pi x) on a fine grid, and the oscillation 2a
    x = np.linspace(0, 1, 200001)
    lip = float(np.max(np.abs(2 * np.pi * a * np.sin(2 * np.pi * x) * np.exp(a * np.cos(2 * np.pi * x)))))
    expected = max(2 * a / eps, lip / (eps * math.exp(-a)))
    assert rec.lhs == pytest.approx(expected, rel=1e-3)
    assert rec.passed


def test_check_P_rejects_nonpositive_epsilon():
    with pytest.raises(ValueError):
        h.check_P(d.make_potential_constant(0.0), 0.0)


def test_check_P_prime_r0_is_oscillation_only():
    pot = d.make_potential_fourier([[1, 0.01, 0.0]])
    rec = h.check_P_prime(pot, 0.1, 1e-6, r=0)
    assert rec.lhs == pytest.approx(0.2, rel=1e-6)


def test_expansion_relation():
    rec, c_max = h.check_expansion_relation(1.9, 1.0, 0.9, 0.01)
    assert c_max == pytest.approx(0.5 * 0.1 * math.log(1.9))
    assert rec.passed
    rec, _ = h.check_expansion_relation(1.9, 1.0, 0.9, c_max * 1.01)
    assert not rec.passed


@pytest.mark.parametrize("n,q,p,gamma,expected", [
    (3, 1, 2, 0.5, 4),   # words with at least 2 of 3 letters equal to 0
    (4, 2, 3, 0.5, 48),  # 3 or 4 of 4 letters in {0, 1}: 4*2^3*1 + 2^4
    (5, 0, 2, 0.0, 0),
    (0, 1, 1, 0.5, 0),
])
def test_count_itineraries_small(n, q, p, gamma, expected):
    assert h.count_itineraries(gamma, n, q, p) == expected


def test_count_itineraries_is_exact_for_large_n():
    c = h.count_itineraries(0.5, 3000, 1, 2)
    assert isinstance(c, int) and c > 2 ** 2990


def test_c_gamma_limit_is_binary_entropy():
    # (1/n) log #{words with > 0.9 n marked letters} -> H(0.1) for q = 1, p = 2
    H = -(0.1 * math.log(0.1) + 0.9 * math.log(0.9))
    est = h.c_gamma_estimate(0.9, 1, 2, 4000)
    assert est == pytest.approx(H, abs=2e-3)
    assert est < math.log(2)


def test_extend_holder_constant():
    assert h.extend_holder_constant(2.0, 0.1, 3.0, 0.5) == pytest.approx(2.0 * (1 + 3 ** 0.5))


def test_report_doubling_zero():
    rep = h.check_hypotheses(d.make_doubling(), d.make_potential_constant(0.0))
    assert rep.passed
    names = [r.name for r in rep.records]
    assert names == ["H1", "H2", "P", "P'", "eq-relation-expansion", "eq-relation-potential",
                     "eq-vep", "eq-vepp"]
    assert rep.q == 0 and rep.deg == 2
    assert "H1" in rep.table()
    assert rep.to_dict()["passed"] is True


def test_report_mp_t1_fails_P():
    f = d.make_manneville_pomeau(0.5)
    rep = h.check_hypotheses(f, d.make_potential_geometric(f, 1.0), alpha=0.5)
    p = rep.record("P")
    assert not p.passed and p.margin < 0
    assert rep.record("H1").passed and rep.record("H2").passed


def test_report_mp_small_t_passes():
    # below roughly t = 0.013 the oscillation fits inside the largest epsilon_phi
    f = d.make_manneville_pomeau(0.5, sigma=1.99)
    rep = h.check_hypotheses(f, d.make_potential_geometric(f, 0.01), alpha=0.5, delta=1.5, r=0)
    assert rep.passed
