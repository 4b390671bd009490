import numpy as np
import pytest

from zdclock.stats import (InsufficientDataError, autocorrelation, block_mean,
                           integrated_autocorr_time, jackknife)


def ar1(n, rho, seed=0):
    rng = np.random.default_rng(seed)
    x = np.empty(n)
    x[0] = rng.normal()
    noise = rng.normal(size=n) * np.sqrt(1 - rho * rho)
    for i in range(1, n):
        x[i] = rho * x[i - 1] + noise[i]
    return x


def test_block_mean_white_noise():
    x = np.random.default_rng(1).normal(size=100_000)
    est = block_mean(x)
    assert abs(est.error - 1 / np.sqrt(x.size)) < 0.3 / np.sqrt(x.size)
    assert est.within(0.0)


def test_block_mean_correlated_series():
    rho = 0.9
    x = ar1(200_000, rho)
    tau = (1 + rho) / (1 - rho) / 2
    assert abs(integrated_autocorr_time(x) - tau) < 0.15 * tau
    naive = x.std() / np.sqrt(x.size)
    assert block_mean(x).error > 3 * naive


def test_jackknife_matches_variance_error():
    x = np.random.default_rng(2).normal(size=50_000)
    est = jackknife(x, np.var)
    assert abs(est.mean - 1) < 4 * est.error
    assert abs(est.error - np.sqrt(2 / x.size)) < 0.4 * np.sqrt(2 / x.size)


def test_constant_series():
    x = np.full(1000, 3.0)
    assert jackknife(x, np.var).mean == 0
    assert integrated_autocorr_time(x) == 0.5
    assert np.all(autocorrelation(x) == 0)


def test_halving_samples_inflates_error():
    x = np.random.default_rng(5).normal(size=80_000)
    full = jackknife(x, np.var).error
    half = jackknife(x[:40_000], np.var).error
    assert 0.5 * np.sqrt(2) < half / full < 1.5 * np.sqrt(2)


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        block_mean(np.ones(10))
    with pytest.raises(InsufficientDataError):
        jackknife(np.ones(100), np.var, n_blocks=1)


def test_autocorrelation_normalized():
    rho = autocorrelation(ar1(50_000, 0.5, seed=3))
    assert rho[0] == pytest.approx(1.0)
    assert abs(rho[1] - 0.5) < 0.03
