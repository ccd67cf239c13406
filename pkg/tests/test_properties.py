"""Property-based checks of structural invariants."""
import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from thermogap import cones, dynamics as d, operator as op
from thermogap import config as cfgmod
from thermogap._grid import hoelder_seminorm
from thermogap.hypotheses import count_itineraries

unit = st.floats(0.0, 1.0, allow_nan=False, exclude_max=True)
alphas = st.floats(0.05, 0.95)
small = st.floats(-0.2, 0.2)

SETTINGS = settings(max_examples=40, deadline=None)


@SETTINGS
@given(unit, unit, unit)
def test_circle_distance_is_a_metric(x, y, z):
    dxy = float(d.circle_distance(x, y))
    assert 0.0 <= dxy <= 0.5
    assert dxy == float(d.circle_distance(y, x))
    assert dxy <= float(d.circle_distance(x, z)) + float(d.circle_distance(z, y)) + 1e-15


@SETTINGS
@given(alphas, unit)
def test_mp_preimages_are_preimages(alpha, x):
    f = d.make_manneville_pomeau(alpha)
    pre = f.preimages(np.array(x))
    assert pre.shape == (2,)
    assert 0.0 <= pre[0] < 0.5 <= pre[1] < 1.0
    assert np.all(d.circle_distance(f(pre), x) < 1e-11)


@SETTINGS
@given(st.floats(-1.0, 1.5), unit)
def test_pitchfork_preimages_are_preimages(t, x):
    f = d.make_pitchfork_perturbed(t)
    pre = f.preimages(np.array(x))
    assert np.all(d.circle_distance(f(pre), x) < 1e-11)
    assert np.all(f.derivative(pre) > 0)


@SETTINGS
@given(small, small, small, st.integers(1, 4))
def test_operator_positive_and_linear(a, b, c0, k):
    f = d.make_manneville_pomeau(0.4)
    pot = d.make_potential_fourier([[0, c0, 0.0], [k, a, b]])
    M = op.build_matrix(f, pot, 64).matrix
    assert M.min() >= 0.0
    rng = np.random.default_rng(abs(hash((a, b, k))) % 2 ** 32)
    u, v = rng.random(64), rng.random(64)
    assert np.allclose(M @ (2 * u + 3 * v), 2 * (M @ u) + 3 * (M @ v))
    assert np.all(M @ (u + 0.1) > 0)


@SETTINGS
@given(small, small, st.integers(1, 3))
def test_eigenvalue_within_potential_bounds(a, b, k):
    pot = d.make_potential_fourier([[k, a, b]])
    f = d.make_doubling()
    sol = op.solve(f, pot, 128)
    x = np.arange(4096) / 4096
    vals = pot(x)
    assert 2 * math.exp(vals.min()) * (1 - 1e-9) <= sol.lam <= 2 * math.exp(vals.max()) * (1 + 1e-9)
    assert np.all(sol.h.values > 0) and np.all(sol.nu > 0)


@SETTINGS
@given(st.floats(0.1, 1.0), st.floats(0.05, 1.0), st.floats(-5, 5), st.floats(0.1, 10))
def test_seminorm_shift_and_scale(alpha, delta, shift, scale):
    v = np.sin(2 * np.pi * np.arange(128) / 128) + 0.3 * np.cos(6 * np.pi * np.arange(128) / 128)
    base = hoelder_seminorm(v, alpha, delta)
    assert math.isclose(hoelder_seminorm(v + shift, alpha, delta), base, rel_tol=1e-9)
    assert math.isclose(hoelder_seminorm(scale * v, alpha, delta), scale * base, rel_tol=1e-9)


@SETTINGS
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.integers(0, 2 ** 16))
def test_theta_plus_projective(s1, s2, seed):
    rng = np.random.default_rng(seed)
    g1, g2 = 1 + rng.random(32), 1 + rng.random(32)
    assert math.isclose(cones.theta_plus(s1 * g1, s2 * g2), cones.theta_plus(g1, g2),
                        rel_tol=1e-9, abs_tol=1e-12)
    assert cones.theta_plus(g1, g2) == cones.theta_plus(g2, g1) or math.isclose(
        cones.theta_plus(g1, g2), cones.theta_plus(g2, g1), rel_tol=1e-12)


@SETTINGS
@given(st.floats(0.02, 0.12), st.floats(0.02, 0.12), st.floats(0.5, 3.0))
def test_theta_kappa_dominates_theta_plus_and_is_projective(a1, a2, s):
    x = np.arange(128) / 128
    g1 = 1 + a1 * np.cos(2 * np.pi * x)
    g2 = 1 + a2 * np.sin(4 * np.pi * x)
    params = cones.ConeParams(kappa=4.0)
    r = cones.theta_kappa(g1, g2, params)
    assert r.theta >= r.theta_plus - 1e-9
    assert math.isclose(cones.theta_kappa(s * g1, g2, params).theta, r.theta, rel_tol=1e-6)


@SETTINGS
@given(st.integers(1, 40), st.integers(1, 4), st.data())
def test_itinerary_counts_partition_words(n, p, data):
    q = data.draw(st.integers(0, p))
    assert count_itineraries(-1.0, n, q, p) == p ** n
    g1, g2 = sorted(data.draw(st.lists(st.floats(0, 1), min_size=2, max_size=2)))
    assert count_itineraries(g2, n, q, p) <= count_itineraries(g1, n, q, p)


@SETTINGS
@given(st.dictionaries(st.sampled_from(["a", "b", "c"]), st.integers(), min_size=1))
def test_config_hash_ignores_key_order(section):
    cfg1 = {"map": {"family": "doubling"}, "x": section}
    cfg2 = {"x": dict(reversed(list(section.items()))), "map": {"family": "doubling"}}
    assert cfgmod.config_hash(cfg1) == cfgmod.config_hash(cfg2)


@SETTINGS
@given(st.floats(0.01, 0.99), st.floats(-0.5, 2.5))
def test_validate_flags_hoelder_range_only(alpha_ok, value):
    assume(not 0 < value <= 1)
    cfg = {"map": {"family": "doubling"}, "constants": {"hoelder_exponent": value}}
    assert [x.split(":")[0] for x in cfgmod.validate(cfg)] == ["constants.hoelder_exponent"]
    cfg["constants"]["hoelder_exponent"] = alpha_ok
    assert cfgmod.validate(cfg) == []
