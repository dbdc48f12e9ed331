import numpy as np
import pytest

from qlstat.dgp import Dgp
from qlstat.errors import CollinearDesignError, DegenerateDataError, InsufficientDataError
from qlstat.nuisance import (estimate_nuisances, gaussian_kde, gaussian_kde_derivative,
                             kde_with_derivative, local_cubic_cdf_derivs, local_polynomial_fit,
                             pilot_window)
from qlstat.simulation import block_generator


@pytest.fixture(scope="module")
def normal_x():
    return np.random.default_rng(10).standard_normal(5000)


def test_kde_value_and_derivative_at_zero(normal_x):
    est = kde_with_derivative(normal_x, 0.0)
    assert est.value == pytest.approx(1 / np.sqrt(2 * np.pi), abs=0.05)
    assert abs(est.derivative) <= 0.05
    sd = np.std(normal_x, ddof=1)
    assert est.pilot_bandwidths == pytest.approx((1.06 * sd * 5000 ** -0.2, 1.06 * sd * 5000 ** (-1 / 7)))


def test_kde_derivative_matches_finite_difference(normal_x):
    h = 0.3
    delta = 1e-4 * np.std(normal_x, ddof=1)
    for x0 in (-1.3, 0.2, 0.9):
        fd = (gaussian_kde(normal_x, x0 + delta, h) - gaussian_kde(normal_x, x0 - delta, h)) / (2 * delta)
        assert gaussian_kde_derivative(normal_x, x0, h) == pytest.approx(fd, rel=1e-6)


def test_kde_permutation_and_affine(normal_x):
    x = normal_x[:500]
    est = kde_with_derivative(x, 0.4)
    perm = kde_with_derivative(np.random.default_rng(1).permutation(x), 0.4)
    assert perm.value == pytest.approx(est.value, rel=1e-12)
    for a, b in ((2.5, 1.0), (-0.5, 3.0)):
        t = kde_with_derivative(a * x + b, a * 0.4 + b)
        assert t.value == pytest.approx(est.value / abs(a), rel=1e-10)
        assert t.derivative == pytest.approx(est.derivative / (a * abs(a)), rel=1e-10)


def test_kde_errors():
    with pytest.raises(DegenerateDataError):
        kde_with_derivative(np.ones(20), 0.0)
    with pytest.raises(InsufficientDataError):
        kde_with_derivative(np.arange(5.0), 0.0)


def _ols_se(x, y, x0, p, est):
    """Classical standard errors of (d1, d2) for the uniform-window cubic fit."""
    mask = np.abs(x - x0) <= est.pilot_bandwidth
    t = x[mask] - x0
    design = np.vander(t, 4, increasing=True)
    r = (y[mask] <= est.pilot_xi_p).astype(float)
    coef, *_ = np.linalg.lstsq(design, r, rcond=None)
    s2 = np.sum((r - design @ coef) ** 2) / (mask.sum() - 4)
    cov = s2 * np.linalg.inv(design.T @ design)
    return np.sqrt(cov[1, 1]), 2 * np.sqrt(cov[2, 2])


def test_independence_null_within_sampling_error():
    for seed in range(20):
        g = np.random.default_rng(seed)
        x = g.standard_normal(5000)
        y = g.standard_normal(5000)
        est = local_cubic_cdf_derivs(x, y, 0.0, 0.5)
        se1, se2 = _ols_se(x, y, 0.0, 0.5, est)
        assert abs(est.d1) <= 4 * se1 and abs(est.d2) <= 4 * se2, seed


@pytest.mark.xfail(reason="per-sample spread of the d2 estimate at n=5000 exceeds 0.15 "
                          "for the default pilot window", strict=False)
def test_independence_null_fixed_band():
    g = np.random.default_rng(2)
    x = g.standard_normal(5000)
    y = g.standard_normal(5000)
    est = local_cubic_cdf_derivs(x, y, 0.0, 0.5)
    assert abs(est.d1) <= 0.15 and abs(est.d2) <= 0.15


def test_polynomial_exactness():
    g = np.random.default_rng(3)
    x = g.uniform(-1, 1, 400)
    coef = np.array([0.3, -1.2, 0.7, 2.1])
    x0 = 0.15
    r = np.polynomial.polynomial.polyval(x - x0, coef)
    got = local_polynomial_fit(x, r, x0, 0.4, degree=3)
    assert np.max(np.abs(got - coef)) <= 1e-8
    resid = r - np.polynomial.polynomial.polyval(x - x0, got)
    assert np.max(np.abs(resid[np.abs(x - x0) <= 0.4])) <= 1e-8


def test_polynomial_fit_errors():
    x = np.array([0.0] * 5 + [0.1] * 5)
    with pytest.raises(CollinearDesignError):
        local_polynomial_fit(x, np.ones(10), 0.0, 1.0)
    with pytest.raises(InsufficientDataError):
        local_polynomial_fit(np.linspace(0, 1, 50), np.ones(50), 0.0, 0.05)


def test_model1_d1_sign():
    x, y = Dgp("fan_liu_model1").sample_xy(block_generator(4, 0), (5000,))
    # m'(0) = 2: P(Y <= level | X = x) falls as x rises through 0
    assert local_cubic_cdf_derivs(x, y, 0.0, 0.5).d1 < 0


def test_shift_invariance_of_indicator_fit():
    g = np.random.default_rng(5)
    x = g.standard_normal(3000)
    y = x + g.standard_normal(3000)
    a = local_cubic_cdf_derivs(x, y, 0.3, 0.4)
    b = local_cubic_cdf_derivs(x, y + 7.0, 0.3, 0.4)
    assert b.pilot_xi_p == pytest.approx(a.pilot_xi_p + 7.0, abs=1e-12)
    assert (b.d1, b.d2) == pytest.approx((a.d1, a.d2), abs=1e-12)


def test_pilot_window_rate():
    x = np.random.default_rng(6).standard_normal(1000)
    assert pilot_window(x) == pytest.approx(0.75 * np.std(x, ddof=1) * 1000 ** (-1 / 7))


def test_estimate_nuisances_positive():
    x, y = Dgp("fan_liu_model1").sample_xy(block_generator(7, 0), (2000,))
    nu = estimate_nuisances(x, y, 0.75, 0.5)
    assert nu.f_x > 0 and nu.cond_density > 0
    assert np.isfinite(nu.bracket)
