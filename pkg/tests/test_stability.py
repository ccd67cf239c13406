import math

import numpy as np
import pytest

from thermogap import dynamics as d
from thermogap import stability as s
from thermogap.errors import InvalidParameter, TooFar


def _tent_direct(x):
    xt = np.mod(x + 0.5, 1.0) - 0.5
    a = np.abs(xt)
    out = np.zeros_like(a)
    out[a <= 0.125] = a[a <= 0.125]
    mid = (a > 0.125) & (a < 0.2)
    out[mid] = 0.125 * (0.2 - a[mid]) / 0.075
    return out


def test_tent_observable():
    x = np.linspace(-0.5, 0.5, 1001)
    assert np.allclose(s.tent_observable(x), _tent_direct(x))
    assert float(s.tent_observable(np.array(0.125))) == pytest.approx(0.125)


@pytest.mark.parametrize("n", [1, 10, 100])
def test_discontinuity_rows_against_direct_sum(n):
    # (L_n - L) phi(x) = sum_k phi((x + k)/2 - 1/(10n)) - phi((x + k)/2)
    grid = 8192
    x = np.arange(grid) / grid
    shift = 1.0 / (10 * n)
    diff = sum(_tent_direct((x + k) / 2 - shift) - _tent_direct((x + k) / 2) for k in (0, 1))
    row, = s.lip_discontinuity_demo([n], grid)
    assert row["sup"] == pytest.approx(np.max(np.abs(diff)), abs=1e-12)
    lip = np.max(np.abs(np.roll(diff, -1) - diff)) * grid
    assert row["lip"] == pytest.approx(lip, rel=1e-9)
    assert row["lip"] >= 0.99


def test_discontinuity_limit_row_is_zero():
    row, = s.lip_discontinuity_demo([5], limit=True)
    assert row["sup"] == 0.0 and row["lip"] == 0.0


def test_map_distance_shifted_doubling():
    for n in (1, 3, 10):
        assert s.map_distance(d.make_doubling(), d.make_shifted_doubling(n)) == pytest.approx(0.2 / n)


def test_pairing_equality_for_linear_pair():
    # the offset of y and the shift of g point the same way, so nothing cancels
    res = s.paired_preimages(d.make_doubling(), d.make_shifted_doubling(2), 0.4, 0.39, 4)
    for dist, bound in zip(res.distances, res.bounds):
        assert np.allclose(dist, bound, rtol=0, atol=1e-14)
    assert res.L == pytest.approx(0.5)
    assert res.x_preimages.size == 16


def test_pairing_too_far():
    with pytest.raises(TooFar):
        s.paired_preimages(d.make_doubling(), d.make_doubling(), 0.1, 0.45, 1)


def test_pairing_depth_limited():
    with pytest.raises(ValueError):
        s.paired_preimages(d.make_doubling(), d.make_doubling(), 0.1, 0.1, 9)


def test_count_preimages_in_A():
    f = d.make_manneville_pomeau(0.5)
    # both preimages of a point near 0: one near 0 (in A), one near 1/2
    assert s.count_preimages_in_A(f, 0.01, 0.02, 0.05) == 1
    assert s.count_preimages_in_A(d.make_doubling(), 0.3, 0.31, 0.05) == 0


def test_sweep_reference_row_reproduces():
    def family(t):
        f = d.make_pitchfork_perturbed(t, sigma=1.9)
        return f, d.make_potential_geometric(f, 0.02, offset=0.02 * math.log(2))

    tab = s.pressure_density_sweep(family, [0.0, 0.02], 256)
    assert tab.h_dist[0] == 0.0 and tab.lam[0] == tab.reference_lam
    assert tab.h_dist[1] > 0
    assert tab.reference_lam == pytest.approx(2.0)
    rows = tab.rows()
    assert rows[1]["t"] == 0.02 and set(tab.dictionary) <= set(rows[1])


def test_sweep_marks_failed_rows():
    def family(t):
        if t > 0.5:
            raise InvalidParameter("out of range")
        return d.make_doubling(), d.make_potential_constant(0.0)

    tab = s.pressure_density_sweep(family, [0.1, 0.9], 64)
    assert tab.failed == (False, True)
    assert np.isnan(tab.lam[1]) and "out of range" in tab.errors[1]


def test_sweep_threads_agree():
    def family(t):
        return d.make_doubling(), d.make_potential_fourier([[1, t, 0.0]])

    a = s.pressure_density_sweep(family, [0.1, 0.05, 0.02], 128)
    b = s.pressure_density_sweep(family, [0.1, 0.05, 0.02], 128, threads=3)
    assert np.array_equal(a.lam, b.lam) and np.array_equal(a.h_dist, b.h_dist)


def test_perturbation_measure_validation():
    f, p = d.make_doubling(), d.make_potential_constant(0.0)
    with pytest.raises(ValueError):
        s.PerturbationMeasure(((f, p, 0.6), (f, p, 0.6)))
    theta = s.PerturbationMeasure.uniform([(f, p)] * 4, 0.1)
    M = s.integrated_operator(theta, 64)
    assert np.allclose(M.matrix @ np.ones(64), 2.0)


def test_random_stability_zero_radius_row():
    def family(a):
        f = d.make_manneville_pomeau(a, sigma=1.99)
        return f, d.make_potential_geometric(f, 0.01)

    rows = s.random_stability_sweep(0.5, [0.0, 0.01], family, 3, seed=0, n=256)
    assert rows[0]["lambda_dist"] == 0.0 and rows[0]["h_dist"] == 0.0
    assert rows[1]["lambda_dist"] > 0
    # the averaged operator moves lambda by no more than its worst atom
    assert rows[1]["lambda_dist"] <= rows[1]["atom_lambda_dist"] + 1e-12
