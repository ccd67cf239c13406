import math

import numpy as np
import pytest
import scipy.linalg

from thermogap import dynamics as d
from thermogap import operator as op
from thermogap.errors import ArcTooLarge, NoConvergence

ZERO = d.make_potential_constant(0.0)


def _dense(tm):
    w, vr = scipy.linalg.eig(tm.toarray())
    order = np.argsort(-np.abs(w))
    return w[order], vr[:, order]


def test_interpolation_is_exact_on_linear_pieces():
    g = op.GridFunction(np.arange(8) / 8.0)
    assert g(np.array([0.0625, 0.3])) == pytest.approx([0.0625, 0.3])
    assert g.sup_norm() == pytest.approx(7 / 8)
    # periodic wrap between the last node and the first
    assert float(g(np.array(0.9375))) == pytest.approx(0.5 * 7 / 8)


def test_apply_operator_exact_for_callables():
    f = d.make_doubling()
    pot = d.make_potential_fourier([[1, 0.2, 0.0]])
    g = lambda x: np.sin(2 * np.pi * x) + 2.0
    out = op.apply_operator(f, pot, g, 64)
    x = np.arange(64) / 64
    direct = sum(np.exp(pot((x + k) / 2)) * g((x + k) / 2) for k in (0, 1))
    assert np.allclose(out.values, direct, atol=1e-14)
    with pytest.raises(ValueError):
        op.apply_operator(f, pot, g)


def test_matrix_row_sums_zero_potential():
    M = op.build_matrix(d.make_manneville_pomeau(0.3), ZERO, 128)
    assert np.allclose(M.matrix @ np.ones(128), 2.0)
    assert M.matrix.nnz <= 4 * 128


def test_matrix_too_small():
    with pytest.raises(ValueError):
        op.build_matrix(d.make_doubling(), ZERO, 2)


@pytest.mark.parametrize("fmap,pot", [
    (d.make_manneville_pomeau(0.25), ZERO),
    (d.make_manneville_pomeau(0.5), d.make_potential_fourier([[1, 0.05, 0.02], [2, 0.0, 0.03]])),
    (d.make_pitchfork_perturbed(0.5), d.make_potential_fourier([[3, 0.1, 0.0]])),
])
def test_power_iteration_matches_dense(fmap, pot):
    tm = op.build_matrix(fmap, pot, 256)
    sol = op.solve_spectrum(tm)
    w, vr = _dense(tm)
    lam = w[0].real
    assert sol.lam == pytest.approx(lam, rel=1e-10)
    h = np.abs(vr[:, 0].real)
    assert np.allclose(sol.h.values / sol.h.values.mean(), h / h.mean(), rtol=1e-8)
    # left eigenvector
    wl, vl = scipy.linalg.eig(tm.toarray().T)
    nu = np.abs(vl[:, np.argmax(wl.real)].real)
    assert np.allclose(sol.nu, nu / nu.sum(), rtol=1e-7)
    assert sol.tau_sub == pytest.approx(abs(w[1]) / lam, abs=2e-3)


def test_solution_normalisation():
    sol = op.solve(d.make_manneville_pomeau(0.4), d.make_potential_fourier([[1, 0.1, 0.0]]), 256)
    assert sol.nu.sum() == pytest.approx(1.0)
    assert float(sol.h.values @ sol.nu) == pytest.approx(1.0)
    assert np.allclose(sol.mu, sol.h.values * sol.nu)
    assert sol.residual < 1e-9
    assert set(sol.to_dict()) >= {"lambda", "pressure", "tau_sub"}


def test_constant_shift_scales_lambda():
    f = d.make_manneville_pomeau(0.3)
    a = op.solve(f, d.make_potential_fourier([[1, 0.1, 0.0]]), 256).lam
    b = op.solve(f, d.make_potential_fourier([[0, 0.7, 0.0], [1, 0.1, 0.0]]), 256).lam
    assert b == pytest.approx(a * math.exp(0.7), rel=1e-10)


def test_no_convergence_raised():
    tm = op.build_matrix(d.make_manneville_pomeau(0.5), d.make_potential_fourier([[1, 0.3, 0.0]]), 256)
    with pytest.raises(NoConvergence):
        op.solve_spectrum(tm, max_iter=2)


def test_pressure_diagnostic_converges():
    p, diag = op.pressure(d.make_doubling(), d.make_potential_fourier([[1, 0.1, 0.0]]), 256, n_max=40)
    assert abs(diag[-1] - p) < abs(diag[0] - p) + 1e-15
    assert abs(diag[-1] - p) < 0.01


def test_jacobian_of_conformal_measure():
    f = d.make_doubling()
    pot = d.make_potential_fourier([[1, 0.1, 0.0]])
    sol = op.solve(f, pot, 1024)
    err = op.jacobian_check(f, pot, sol, [(0.0, 0.25), (0.5, 0.75), (0.125, 0.375)])
    assert err < 5e-3
    with pytest.raises(ArcTooLarge):
        op.jacobian_check(f, pot, sol, [(0.25, 0.75)])


def test_pushforward_converges_to_mu():
    sol = op.solve(d.make_manneville_pomeau(0.25), d.make_potential_fourier([[1, 0.1, 0.0]]), 512)
    test = np.cos(2 * np.pi * np.arange(512) / 512)
    errs = op.pushforward_convergence(sol, test, 30)
    assert errs[-1] < 1e-8 < errs[0]
