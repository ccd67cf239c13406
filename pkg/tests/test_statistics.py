import numpy as np
import pytest

from thermogap import dynamics as d
from thermogap import operator as op
from thermogap import statistics as st
from thermogap.errors import AllBelowFloor, ZeroVariance

ZERO = d.make_potential_constant(0.0)
COS = d.make_potential_fourier([[1, 1.0, 0.0]]).evaluator


@pytest.fixture(scope="module")
def doubling():
    return op.solve(d.make_doubling(), ZERO, 1024)


@pytest.fixture(scope="module")
def mp():
    return op.solve(d.make_manneville_pomeau(0.25), ZERO, 512)


def test_fit_geometric_exact():
    n = np.arange(1, 15)
    tau, K, r2 = st.fit_geometric(n, 3.0 * 0.6 ** n)
    assert tau == pytest.approx(0.6) and K == pytest.approx(3.0) and r2 == pytest.approx(1.0)


def test_doubling_cosine_correlations(doubling):
    s = st.correlation(doubling, COS, COS, 10)
    assert s.values[0] == pytest.approx(0.5, abs=1e-12)
    assert np.max(np.abs(s.values[1:])) < 1e-12
    assert s.tau_fit is None
    with pytest.raises(AllBelowFloor):
        st.fit_decay_rate(s)


def test_correlations_match_iterated_koopman(mp):
    # C(n) = int phi o f^n psi dmu, with the discrete Koopman adjoint standing in for o f
    phi = np.cos(2 * np.pi * np.arange(512) / 512)
    psi = np.sin(4 * np.pi * np.arange(512) / 512) + 0.3
    s = st.correlation(mp, phi, psi, 5)
    k = phi.copy()
    for n in range(6):
        expected = float((k * psi) @ mp.mu) - float(phi @ mp.mu) * float(psi @ mp.mu)
        assert s.values[n] == pytest.approx(expected, abs=1e-13)
        k = st.discrete_koopman(mp, k)


def test_koopman_adjoint_identity(mp):
    rng = np.random.default_rng(0)
    g, w = rng.normal(size=512), rng.normal(size=512)
    lhs = float(st.discrete_koopman(mp, g) * w @ mp.nu)
    rhs = float(g * (mp.matrix.matrix @ w / mp.lam) @ mp.nu)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_decay_rate_below_subdominant(mp):
    obs = d.make_potential_fourier([[1, 1.0, 0.0], [2, 0.0, 0.5]]).evaluator
    s = st.correlation(mp, obs, obs, 20)
    assert s.r2 > 0.9
    assert s.tau_fit <= mp.tau_sub + 0.05


def test_green_kubo_doubling(doubling):
    gk = st.green_kubo(doubling, COS, 50)
    assert gk.sigma2 == pytest.approx(0.5, abs=1e-10)
    assert st.clt_variance(doubling, COS) == pytest.approx(0.5, abs=1e-10)


def test_green_kubo_discrete_coboundary_telescopes(mp):
    # for v = K u - u the series telescopes to ||u||^2 - ||K u||^2 (mean-zero u);
    # this vanishes for the true Koopman operator, an L^2(mu) isometry
    u = np.cos(2 * np.pi * np.arange(512) / 512)
    u = u - float(u @ mp.mu)
    ku = st.discrete_koopman(mp, u)
    expected = float(u ** 2 @ mp.mu) - float(ku ** 2 @ mp.mu)
    assert st.green_kubo(mp, ku - u, 200).sigma2 == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_zero_variance_raises(doubling):
    with pytest.raises(ZeroVariance):
        st.clt_empirical(d.make_doubling(), doubling, lambda x: 0.0 * x + 1.0, 10, 100, seed=0)


def test_clt_reproducible_and_thread_independent(doubling):
    f = d.make_doubling()
    a = st.clt_empirical(f, doubling, COS, 50, 3000, seed=4, chunk=1000)
    b = st.clt_empirical(f, doubling, COS, 50, 3000, seed=4, chunk=1000, threads=3)
    c = st.clt_empirical(f, doubling, COS, 50, 3000, seed=5, chunk=1000)
    assert a.ks == b.ks
    assert a.ks != c.ks
    assert a.ks < 0.05


def test_birkhoff_sum():
    f = d.make_doubling()
    assert st.birkhoff_sum(f, lambda x: np.ones_like(x), 0.1, 7) == 7.0
    # 1/3 -> 2/3 -> 1/3 ...
    total = st.birkhoff_sum(f, lambda x: x, 1 / 3, 4)
    assert total == pytest.approx(2.0, abs=1e-12)


def test_sample_mu_follows_density(mp):
    x = st.sample_mu(mp, 200000, np.random.default_rng(1))
    hist, _ = np.histogram(x, bins=8, range=(0, 1))
    mass = np.add.reduceat(mp.mu, np.arange(0, 512, 64))
    assert np.allclose(hist / x.size, mass, atol=0.01)
