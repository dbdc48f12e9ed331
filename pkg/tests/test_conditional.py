import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlstat.conditional import (Dataset, LocalWindow, conditional_interval, extract_local_sample,
                                joint_intervals, joint_level, plugin_bandwidth, window_mask)
from qlstat.errors import (DomainError, EmptyWindowError, ExtremeQuantileError,
                           ModeViolationError)
from qlstat.unconditional import QuantileRequest, confidence_interval


def _uniform_data(n, seed, d=1):
    g = np.random.default_rng(seed)
    x = g.random((n, d))
    y = x.sum(axis=1) + g.standard_normal(n)
    return Dataset.from_arrays(y, x)


def test_whole_sample_when_window_covers_support():
    data = _uniform_data(10_000, 1)
    local = extract_local_sample(data, LocalWindow.make(0.0, 1.0))
    assert local.N_n == 10_000
    assert np.array_equal(local.y_values.values, np.sort(data.y))


def test_empty_window():
    data = Dataset.from_arrays([1.0, 2.0, 3.0], [0.0, 0.5, 1.0])
    with pytest.raises(EmptyWindowError):
        extract_local_sample(data, LocalWindow.make(0.25, 0.1))
    with pytest.raises(DomainError):
        LocalWindow.make(0.0, 0.0)


def test_window_boundary_inclusive():
    data = Dataset.from_arrays([1.0, 2.0, 3.0], [0.0, 0.5, 1.0])
    assert extract_local_sample(data, LocalWindow.make(0.25, 0.25)).N_n == 2


def test_tie_order_is_deterministic():
    data = Dataset.from_arrays([1.0, 0.0, 1.0, 1.0], [0.1, 0.2, 0.3, 0.4])
    local = extract_local_sample(data, LocalWindow.make(0.25, 1.0))
    assert list(local.indices) == [1, 0, 2, 3]


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.5), st.floats(0.05, 0.95), st.floats(0.2, 0.8),
       st.sampled_from(["lower", "upper", "two_sided"]))
def test_composition_exactness(seed, h, x0, p, side):
    data = _uniform_data(400, seed)
    req = QuantileRequest(p, 0.1, side)
    try:
        res = conditional_interval(data, x0, req, h)
    except ExtremeQuantileError as exc:
        local = extract_local_sample(data, LocalWindow.make(x0, h))
        assert exc.local_n == local.N_n
        with pytest.raises(ExtremeQuantileError):
            confidence_interval(local.y_values, req)
        return
    direct = confidence_interval(extract_local_sample(data, LocalWindow.make(x0, h)).y_values, req)
    assert res.ci == direct


def test_independent_response_passthrough():
    g = np.random.default_rng(3)
    x, y = g.random(800), g.standard_normal(800)
    data = Dataset.from_arrays(y, x)
    res = conditional_interval(data, 0.5, QuantileRequest(0.5), 0.2)
    subset = y[np.abs(x - 0.5) <= 0.2]
    assert res.ci == confidence_interval(subset, QuantileRequest(0.5))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 0.6), st.floats(0.01, 0.6), st.floats(0.0, 1.0))
def test_window_monotone(seed, h1, h2, x0):
    h1, h2 = sorted((h1, h2))
    data = _uniform_data(200, seed, d=2)
    a = window_mask(data, LocalWindow.make([x0, 0.5], h1))
    b = window_mask(data, LocalWindow.make([x0, 0.5], h2))
    assert not np.any(a & ~b)


def test_discrete_cells_do_not_leak():
    g = np.random.default_rng(4)
    n = 900
    x = g.random(n)
    cell = g.integers(0, 3, n)
    y = x + 5 * cell + g.standard_normal(n)
    data = Dataset.from_arrays(y, x, cell)
    req = QuantileRequest(0.5)
    for c in range(3):
        got = conditional_interval(data, 0.5, req, 0.3, cell=c).ci
        part = Dataset.from_arrays(y[cell == c], x[cell == c])
        assert got == conditional_interval(part, 0.5, req, 0.3).ci
    with pytest.raises(DomainError):
        conditional_interval(Dataset.from_arrays(y, x), 0.5, req, 0.3, cell=1)


def test_joint_levels():
    assert joint_level(0.1, 1, "bonferroni") == 0.1
    assert joint_level(0.1, 9, "bonferroni") == pytest.approx(0.1 / 9)
    assert joint_level(0.1, 2, "independent_windows") == pytest.approx(1 - 0.9 ** 0.5)
    assert round(joint_level(0.1, 2, "independent_windows"), 4) == 0.0513
    for m in range(2, 12):
        assert joint_level(0.1, m, "bonferroni") <= joint_level(0.1, m, "independent_windows")
    with pytest.raises(DomainError):
        joint_level(0.1, 0, "bonferroni")


def test_joint_intervals_modes():
    data = _uniform_data(3000, 5)
    req = QuantileRequest(0.5, 0.1)
    single = joint_intervals(data, [0.5], req, h=0.1)[0]
    assert single.ci == conditional_interval(data, 0.5, req, 0.1).ci
    bonf = joint_intervals(data, [0.2, 0.8], req, "bonferroni", h=0.1)
    ind = joint_intervals(data, [0.2, 0.8], req, "independent_windows", h=0.1)
    for b, i in zip(bonf, ind):
        assert b.ci.lower <= i.ci.lower and i.ci.upper <= b.ci.upper
    with pytest.raises(ModeViolationError):
        joint_intervals(data, [0.4, 0.5], req, "independent_windows", h=0.1)


def test_plugin_refuses_multivariate():
    data = _uniform_data(500, 6, d=2)
    with pytest.raises(DomainError, match="pass h explicitly"):
        conditional_interval(data, [0.5, 0.5], QuantileRequest(0.5))
    assert conditional_interval(data, [0.5, 0.5], QuantileRequest(0.5), 0.2).local.N_n > 0


def test_plugin_path_attaches_report():
    data = _uniform_data(2000, 7)
    res = conditional_interval(data, 0.5, QuantileRequest(0.5))
    assert res.bandwidth is not None and res.h == res.bandwidth.h
    assert res.h == plugin_bandwidth(data, 0.5, QuantileRequest(0.5)).h


def test_extreme_quantile_annotated_with_local_n():
    data = _uniform_data(300, 8)
    with pytest.raises(ExtremeQuantileError) as info:
        conditional_interval(data, 0.5, QuantileRequest(0.97), 0.02)
    assert info.value.local_n is not None and info.value.min_n > info.value.local_n


def test_oversmoothing_degrades_coverage():
    # linear conditional median 3x; a window 10x too wide is dominated by bias
    g = np.random.default_rng(9)
    reps, n, x0 = 400, 500, 0.2
    req = QuantileRequest(0.5, 0.05)
    hits = {1: 0, 10: 0}
    for _ in range(reps):
        x = g.random(n)
        data = Dataset.from_arrays(3 * x + 0.3 * g.standard_normal(n), x)
        h = plugin_bandwidth(data, x0, req).h
        for mult in hits:
            ci = conditional_interval(data, x0, req, mult * h).ci
            hits[mult] += ci.lower <= 3 * x0 <= ci.upper
    assert hits[10] / reps < 0.95 - 0.05
    assert hits[10] < hits[1]
