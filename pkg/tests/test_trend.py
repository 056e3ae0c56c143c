import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trendhedge.errors import InvalidParameter, NumericDegeneracy
from trendhedge.timeseries import DEFAULT_DT, PriceSeries
from trendhedge.trend import TrendDecomposition, estimate_trend, moving_average, trend_return

from conftest import gbm


def polyfit_trend(x, window, degree, dt=DEFAULT_DT):
    """Brute-force oracle: refit every window with numpy.polyfit."""
    n = x.size
    trend = np.empty(n)
    deriv = np.empty(n)
    for i in range(n):
        lo = max(0, i - window + 1) if i >= window - 1 else 0
        u = np.arange(lo, lo + window) - i
        coef = np.polyfit(u, x[lo : lo + window], degree)
        trend[i] = np.polyval(coef, 0.0)
        deriv[i] = np.polyval(np.polyder(coef), 0.0) / dt if degree else 0.0
    return trend, deriv


def test_constant_series():
    d = estimate_trend(PriceSeries(np.full(60, 7.5)), 30, 2)
    np.testing.assert_allclose(d.trend, 7.5, rtol=1e-13)
    np.testing.assert_allclose(d.fluct, 0.0, atol=1e-12)
    np.testing.assert_allclose(d.trend_deriv, 0.0, atol=1e-9)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_exact_line(degree):
    a, b = 50.0, 0.3
    x = a + b * np.arange(120)
    d = estimate_trend(PriceSeries(x), 30, degree)
    np.testing.assert_allclose(d.trend, x, rtol=1e-9)
    np.testing.assert_allclose(d.trend_deriv, b / DEFAULT_DT, rtol=1e-9)


@pytest.mark.parametrize("degree", [1, 2])
def test_matches_polyfit_oracle(degree):
    x = gbm(seed=3, n_steps=150).values
    d = estimate_trend(PriceSeries(x), 30, degree)
    trend, deriv = polyfit_trend(x, 30, degree)
    np.testing.assert_allclose(d.trend, trend, rtol=1e-10)
    np.testing.assert_allclose(d.trend_deriv, deriv, rtol=1e-7, atol=1e-7)


def test_alternating_noise_is_attenuated():
    eps = 0.5
    i = np.arange(200)
    line = 100.0 + 0.2 * i
    x = line + eps * (-1.0) ** i
    d = estimate_trend(PriceSeries(x), 30, 1)
    # Response of the fitted line to a pure alternating input, window by window.
    alt_response, _ = polyfit_trend(eps * (-1.0) ** i, 30, 1)
    err = np.abs(d.trend - line)
    np.testing.assert_allclose(err, np.abs(alt_response), atol=1e-9)
    assert err.max() <= eps


def test_warm_up_uses_first_window():
    x = gbm(seed=11, n_steps=80).values
    d = estimate_trend(PriceSeries(x), 30, 2)
    coef = np.polyfit(np.arange(30), x[:30], 2)
    np.testing.assert_allclose(d.trend[:30], np.polyval(coef, np.arange(30)), rtol=1e-11)


def test_window_checks():
    s = PriceSeries(np.linspace(1, 2, 20))
    with pytest.raises(InvalidParameter):
        estimate_trend(s, 21, 2)
    with pytest.raises(InvalidParameter):
        estimate_trend(s, 3, 3)
    with pytest.raises(InvalidParameter):
        estimate_trend(s, 5, -1)


def test_outputs_carry_parameters():
    d = estimate_trend(gbm(seed=1, n_steps=100), 20, 1)
    assert (d.window, d.degree) == (20, 1)
    assert len(d.trend) == len(d.fluct) == len(d.trend_deriv) == 101


class TestMovingAverage:
    def test_constant(self):
        np.testing.assert_allclose(moving_average(PriceSeries(np.full(40, 3.0)), 30), 3.0)

    def test_two_point(self):
        np.testing.assert_allclose(moving_average(PriceSeries([1.0, 2.0, 3.0, 4.0]), 2), [1, 1.5, 2.5, 3.5])

    def test_ramp_lag(self):
        b = 0.7
        x = 10 + b * np.arange(100)
        ma = moving_average(PriceSeries(x), 30)
        np.testing.assert_allclose((x - ma)[29:], (30 - 1) / 2 * b, rtol=1e-10)

    def test_window_too_large(self):
        with pytest.raises(InvalidParameter):
            moving_average(PriceSeries([1.0, 2.0]), 3)


class TestTrendReturn:
    def test_flat(self):
        d = estimate_trend(PriceSeries(np.full(40, 9.0)), 30, 2)
        np.testing.assert_allclose(trend_return(d), 0.0, atol=1e-9)

    def test_exponential(self):
        r = 0.05
        i = np.arange(300)
        x = 80.0 * np.exp(r * i * DEFAULT_DT)
        d = estimate_trend(PriceSeries(x), 30, 2)
        np.testing.assert_allclose(trend_return(d)[29:], r, rtol=0.01)

    def test_ratio_definition(self):
        c, r = 40.0, 0.03
        n = 5
        d = TrendDecomposition(np.full(n, c), np.zeros(n), np.full(n, c * r), 3, 1, DEFAULT_DT)
        np.testing.assert_array_equal(trend_return(d), np.full(n, r))

    def test_non_positive_trend(self):
        d = TrendDecomposition(np.array([1.0, 0.0]), np.zeros(2), np.zeros(2), 2, 1, DEFAULT_DT)
        with pytest.raises(NumericDegeneracy):
            trend_return(d)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), window=st.integers(3, 60), degree=st.integers(0, 2))
def test_additivity(seed, window, degree):
    s = gbm(seed, n_steps=300)
    d = estimate_trend(s, window, degree)
    assert np.all(np.abs(d.trend + d.fluct - s.values) <= 1e-12 * s.values)


@settings(max_examples=40, deadline=None)
@given(
    c0=st.floats(10, 1000),
    c1=st.floats(-2, 2),
    c2=st.floats(-0.01, 0.01),
    window=st.integers(5, 60),
)
def test_polynomial_reproduction(c0, c1, c2, window):
    i = np.arange(200, dtype=float)
    x = c0 + c1 * i + c2 * i**2
    if np.any(x <= 0):
        return
    d = estimate_trend(PriceSeries(x), window, 2)
    np.testing.assert_allclose(d.fluct, 0.0, atol=1e-8 * np.abs(x).max())
    slope = (c1 + 2 * c2 * i) / DEFAULT_DT
    scale = np.abs((np.abs(c1) + 2 * np.abs(c2) * i) / DEFAULT_DT) + 1e-300
    assert np.all(np.abs(d.trend_deriv - slope)[window - 1 :] <= 1e-6 * scale[window - 1 :] + 1e-9 * x.max())


def test_fluctuation_means_are_small():
    rng = np.random.default_rng(77)
    window, noise = 30, 1.0
    i = np.arange(3000)
    x = 100 + 5 * np.sin(2 * np.pi * i / 500) + rng.normal(0, noise, i.size)
    d = estimate_trend(PriceSeries(x), window, 2)
    span = 5 * window
    for lo in range(window, i.size - span, span):
        chunk = d.fluct[lo : lo + span]
        assert abs(chunk.mean()) <= 5 * noise / math.sqrt(span)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), i=st.integers(29, 198), bump=st.floats(0.5, 2.0))
def test_causality(seed, i, bump):
    s = gbm(seed, n_steps=200)
    x = np.array(s.values)
    x[i + 1] *= bump
    a = estimate_trend(s, 30, 2)
    b = estimate_trend(PriceSeries(x), 30, 2)
    np.testing.assert_array_equal(a.trend[: i + 1], b.trend[: i + 1])
    np.testing.assert_array_equal(a.trend_deriv[: i + 1], b.trend_deriv[: i + 1])
