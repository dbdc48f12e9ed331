import math
import warnings

import numpy as np
import pytest
from scipy import stats

from qlstat.bandwidth import (PLUS_PLUS_RATIO, FlatBiasWarning, bias_leading_term, bias_sign,
                              large_n_coefficient, one_sided_pm, plugin_one_sided,
                              plugin_two_sided, two_sided_h)
from qlstat.errors import DegenerateNuisanceError, DomainError
from qlstat.nuisance import CdfDerivativeEstimate, DensityEstimate, Nuisances


def make(f=1.0, fp=1.0, d1=1.0, d2=1.0, fy=1.0, scale=1.0):
    return Nuisances(DensityEstimate(f, fp, (0.1, 0.1), scale, 100),
                     CdfDerivativeEstimate(d1, d2, 0.0, 0.1, 50), fy)


def test_two_sided_example_exact():
    rep = plugin_two_sided(1000, 0.5, make(fp=0.0))
    assert rep.h == pytest.approx(0.1, abs=1e-15)
    assert rep.large_n_coefficient == 1.0


def test_bias_examples():
    assert bias_leading_term(0.1, make()) == pytest.approx(-0.005, abs=1e-15)
    assert bias_leading_term(0.1, make(fp=0.0, d2=0.0)) == 0.0
    nu = make(f=0.7, fp=-0.3, d1=0.4, d2=1.9, fy=0.8)
    assert bias_leading_term(0.4, nu) == pytest.approx(4 * bias_leading_term(0.2, nu), rel=1e-14)
    with pytest.raises(DegenerateNuisanceError):
        bias_leading_term(0.1, make(fy=0.0))


def test_bias_sign_flips_with_bracket():
    nu = make(f=0.7, fp=-0.3, d1=0.4, d2=1.9)
    neg = make(f=0.7, fp=-0.3, d1=-0.4, d2=-1.9)
    assert bias_sign(nu) == -bias_sign(neg) != 0
    assert bias_leading_term(0.2, nu) == pytest.approx(-bias_leading_term(0.2, neg), rel=1e-14)


def test_one_sided_example():
    z = stats.norm.ppf(0.95)
    assert one_sided_pm(128, 0.5, 0.05, 1.0, 1.0) == pytest.approx(
        128 ** (-3 / 7) * (z / (3 * 0.5)) ** (2 / 7), rel=1e-14)
    # z factor set to 1: alpha with z_{1-alpha} = 1
    # p(1-p) f_X = 1 reduces the bracket to z/(3|B|)
    a1 = 1 - stats.norm.cdf(1.0)
    pm = one_sided_pm(128, 0.5, a1, 4.0, 1.0)
    assert pm == pytest.approx(128 ** (-3 / 7) * (1 / 3) ** (2 / 7), rel=1e-12)


def test_plus_plus_ratio():
    assert PLUS_PLUS_RATIO == pytest.approx(0.770, abs=5e-4)
    # bracket > 0 -> bias < 0: lower CI uses h_pm, upper CI uses h_pp
    lo = plugin_one_sided(500, 0.3, 0.05, make(), "lower")
    up = plugin_one_sided(500, 0.3, 0.05, make(), "upper")
    assert (lo.rule, up.rule) == ("h_pm", "h_pp")
    assert up.h / lo.h == pytest.approx(PLUS_PLUS_RATIO, rel=1e-14)
    flipped = make(d1=-1.0, d2=-1.0)
    assert plugin_one_sided(500, 0.3, 0.05, flipped, "lower").rule == "h_pp"


def _slope(fn, ns):
    return np.polyfit(np.log(ns), np.log([fn(n) for n in ns]), 1)[0]


def test_exponent_laws():
    ns = np.array([50, 100, 200, 400, 800])
    nu = make(f=0.6, fp=0.2, d1=0.5, d2=-1.3)
    s1 = _slope(lambda n: plugin_one_sided(int(n), 0.4, 0.05, nu, "lower").h, ns)
    s2 = _slope(lambda n: plugin_two_sided(int(n), 0.4, nu).h, ns)
    assert abs(s1 + 3 / 7) <= 1e-12
    assert abs(s2 + 1 / 3) <= 1e-12
    h1 = plugin_one_sided(200, 0.4, 0.05, nu, "lower").h
    assert plugin_one_sided(400, 0.4, 0.05, nu, "lower").h / h1 == pytest.approx(2 ** (-3 / 7), rel=1e-14)


def test_large_n_coefficient():
    nu = make(fp=0.0)
    r = plugin_two_sided(8000, 0.5, nu).h / plugin_two_sided(1000, 0.5, nu).h
    assert r == pytest.approx(8 ** (-1 / 3) * 8 ** (5 / 60), rel=1e-14)
    assert large_n_coefficient(500) == 1.0
    assert plugin_two_sided(8000, 0.5, nu, large_n=False).h == pytest.approx(8000 ** (-1 / 3), rel=1e-14)


def test_two_sided_general_p_continuous():
    for sign in (1, -1):
        vals = [two_sided_h(300, p, 1.7, sign) for p in (0.5 - 1e-9, 0.5, 0.5 + 1e-9)]
        assert max(vals) - min(vals) <= 1e-9
        assert two_sided_h(300, 0.5, 1.7, sign) == pytest.approx(300 ** (-1 / 3) * 1.7 ** (-1 / 3), abs=1e-12)
    # sgn(0) taken as +1
    assert two_sided_h(300, 0.2, 1.0, 0) == two_sided_h(300, 0.2, 1.0, 1)


def test_flat_bias_fallback():
    nu = make(fp=0.0, d2=0.0, scale=2.0)
    with pytest.warns(FlatBiasWarning):
        rep = plugin_one_sided(100, 0.5, 0.05, nu, "lower")
    assert rep.h == pytest.approx(2.0 * 100 ** (-3 / 7)) and rep.bias_sign == 0
    with pytest.warns(FlatBiasWarning):
        rep = plugin_two_sided(100, 0.5, nu)
    assert rep.h == pytest.approx(2.0 * 100 ** (-1 / 3))


def test_positivity_and_errors():
    rng = np.random.default_rng(0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for _ in range(200):
            nu = make(*rng.uniform(0.05, 2, 1), *rng.normal(size=3), fy=1.0)
            for side in ("lower", "upper"):
                assert plugin_one_sided(int(rng.integers(10, 5000)), 0.3, 0.1, nu, side).h > 0
            assert plugin_two_sided(int(rng.integers(10, 5000)), 0.7, nu).h > 0
    with pytest.raises(DomainError):
        plugin_one_sided(100, 0.5, 0.6, make(), "lower")
    with pytest.raises(DegenerateNuisanceError):
        plugin_two_sided(100, 0.5, make(f=0.0))
    assert math.isfinite(plugin_two_sided(10 ** 6, 0.5, make()).h)
