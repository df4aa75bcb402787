import math

import numpy as np
import pytest
from scipy import integrate, stats

from sandwichqr.dataset import Dataset
from sandwichqr.gibbs import PriorSpec
from sandwichqr.oracle import (GridTooSmallError, brute_force_qr,
                               default_grid, grid_posterior,
                               inverse_gaussian_cdf, ks_statistic,
                               naive_matmul, naive_s_n)


def test_grid_prior_only_recovers_gaussian():
    # with no data the grid should integrate the prior exactly
    mean0 = np.array([0.4, -1.1])
    var0 = np.array([0.8, 1.5])
    prior = PriorSpec(mean0, var0)
    grids = default_grid(mean0, np.sqrt(var0), half_width=8.0, steps=301)
    mean, cov, log_norm = grid_posterior(None, 0.5, prior, 1.0, grids)
    np.testing.assert_allclose(mean, mean0, atol=1e-8)
    np.testing.assert_allclose(np.diag(cov), var0, atol=1e-6)
    assert abs(cov[0, 1]) < 1e-8
    assert log_norm == pytest.approx(0.0, abs=1e-7)


def test_grid_resolution_stability():
    rng = np.random.default_rng(3)
    data = Dataset(rng.normal(size=30), np.ones((30, 1)))
    prior = PriorSpec(np.zeros(1), np.array([100.0]))
    # the check-loss kink limits the trapezoid rule to O(h^2), so compare
    # two fine grids rather than expecting machine-level agreement
    coarse = default_grid(np.zeros(1), np.array([0.5]), steps=801)
    fine = default_grid(np.zeros(1), np.array([0.5]), steps=1601)
    m1, _, _ = grid_posterior(data, 0.5, prior, 1.0, coarse)
    m2, _, _ = grid_posterior(data, 0.5, prior, 1.0, fine)
    assert abs(float(m1[0] - m2[0])) < 1e-5


def test_grid_too_narrow_raises():
    # posterior peaks at 5.0, the right edge of this grid
    data = Dataset(np.full(20, 5.0), np.ones((20, 1)))
    prior = PriorSpec(np.zeros(1), np.array([1e6]))
    with pytest.raises(GridTooSmallError):
        grid_posterior(data, 0.5, prior, 1.0, [(4.9, 5.0, 51)])


def test_grid_argument_validation():
    data = Dataset(np.zeros(5), np.ones((5, 1)))
    p1 = PriorSpec(np.zeros(1), np.ones(1))
    p3 = PriorSpec(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        grid_posterior(None, 0.5, p3, 1.0, [(-1.0, 1.0, 21)] * 3)
    with pytest.raises(ValueError):
        grid_posterior(data, 0.5, p1, 1.0, [(-1.0, 1.0, 21)] * 2)
    with pytest.raises(ValueError):
        grid_posterior(data, 0.5, p1, 1.0, [(-1.0, 1.0, 5)])
    with pytest.raises(ValueError):
        grid_posterior(data, 0.5, p1, 1.0, [(1.0, -1.0, 21)])


def test_default_grid_geometry():
    grids = default_grid(np.array([2.0]), np.array([0.5]),
                         half_width=4.0, steps=9)
    assert grids == [(0.0, 4.0, 9)]


def test_brute_force_qr_median_on_grid():
    # grid contains the sample median, so exhaustive search must find it
    data = Dataset(np.array([1.0, 2.0, 3.0, 4.0, 100.0]), np.ones((5, 1)))
    beta = brute_force_qr(data, 0.5, [(0.0, 10.0, 101)])
    assert beta.shape == (1,)
    assert beta[0] == pytest.approx(3.0, abs=1e-12)


def test_ks_statistic_exact_value():
    # points at (i - 0.5)/n give D = 1/(2n) against the uniform cdf
    n = 200
    x = (np.arange(1, n + 1) - 0.5) / n
    d, p = ks_statistic(x, lambda t: np.asarray(t))
    assert d == pytest.approx(1.0 / (2 * n), abs=1e-12)
    assert p > 0.99


def test_ks_null_calibration():
    rng = np.random.default_rng(11)
    hits = 0
    for _ in range(100):
        x = rng.normal(size=1000)
        _, p = ks_statistic(x, stats.norm.cdf)
        if p > 0.01:
            hits += 1
    assert hits >= 97


def test_ks_detects_shift():
    rng = np.random.default_rng(12)
    x = rng.normal(size=2000) + 0.5
    _, p = ks_statistic(x, stats.norm.cdf)
    assert p < 1e-6


def test_ks_requires_sample_size():
    with pytest.raises(ValueError):
        ks_statistic(np.zeros(10), stats.norm.cdf)


def test_inverse_gaussian_cdf_against_quadrature():
    mu, lam = 1.7, 3.2

    def dens(t):
        return (math.sqrt(lam / (2.0 * math.pi * t ** 3))
                * math.exp(-lam * (t - mu) ** 2 / (2.0 * mu ** 2 * t)))

    for x in (0.3, 1.0, 2.5, 6.0):
        num, _ = integrate.quad(dens, 0.0, x)
        assert inverse_gaussian_cdf(x, mu, lam) == pytest.approx(num,
                                                                 abs=1e-9)


def test_inverse_gaussian_cdf_shape():
    x = np.linspace(0.05, 15.0, 500)
    F = inverse_gaussian_cdf(x, 2.0, 5.0)
    assert np.all(np.diff(F) > 0)
    assert F[0] < 1e-6
    assert F[-1] > 1 - 1e-3
    assert isinstance(inverse_gaussian_cdf(1.0, 2.0, 5.0), float)
    assert inverse_gaussian_cdf(-1.0, 2.0, 5.0) == 0.0


def test_naive_s_n_matches_definition():
    rng = np.random.default_rng(13)
    X = np.column_stack([np.ones(40), rng.normal(size=(40, 2))])
    data = Dataset(rng.normal(size=40), X)
    np.testing.assert_allclose(naive_s_n(data), X.T @ X / 40, atol=1e-12)


def test_naive_matmul_matches_numpy():
    rng = np.random.default_rng(14)
    A = rng.normal(size=(4, 6))
    B = rng.normal(size=(6, 3))
    np.testing.assert_allclose(naive_matmul(A, B), A @ B, atol=1e-12)
    with pytest.raises(ValueError):
        naive_matmul(A, np.zeros((5, 2)))
