import math

import pytest

from trendhedge.timeseries import DEFAULT_DT, GbmParams, replace_return, simulate_gbm

SIGMA = 0.2
DAILY_SIGMA = SIGMA * math.sqrt(DEFAULT_DT)

# Crash scenario: a 200-day option written at price 599, one -10 sigma day in
# the middle of its life, 600 days of history before the option starts.
CRASH_STEPS = 799
CRASH_START = 599
CRASH_JUMP = 699  # price index; the return index is CRASH_JUMP - 1


def gbm(seed, n_steps=1000, mu=0.01, sigma=SIGMA, s0=100.0):
    return simulate_gbm(GbmParams(s0, mu, sigma, n_steps, DEFAULT_DT, seed))


def crash_path(seed, n_steps=CRASH_STEPS, jump_index=CRASH_JUMP):
    return replace_return(gbm(seed, n_steps), jump_index, -10 * DAILY_SIGMA)


@pytest.fixture
def rng_path():
    return gbm(seed=12345, n_steps=500)


def vol_series(path, alpha=0.2):
    """The three volatility estimates on the default settings."""
    from trendhedge.stats import annualized_volatility, detect_change_points, lowpass_filter, time_scaled_volatility
    from trendhedge.timeseries import log_returns

    r = log_returns(path)
    raw = annualized_volatility(r, 10)
    return {
        "raw": raw,
        "filtered": lowpass_filter(raw, alpha),
        "time_scaled": time_scaled_volatility(r, detect_change_points(r, 8.0, 0.5), 10, 50, 50),
    }


def backtests(path, start, maturity=200, rate=0.01, k_pct=10.0, rebalance_every=1, sources=None):
    """Run the hedging backtest for each volatility source on the default settings."""
    from trendhedge.hedging import HedgeConfig, run_backtest
    from trendhedge.pricing import EuropeanCallSpec, strike_from_offset
    from trendhedge.trend import estimate_trend

    d = estimate_trend(path, 30, 2)
    vols = vol_series(path)
    strike = strike_from_offset(d.trend[start], k_pct, maturity, path.dt)
    spec = EuropeanCallSpec(strike, maturity, rate, path.dt)
    out = {}
    for name in sources or vols:
        cfg = HedgeConfig(spec, name, rebalance_every, start_index=start)
        out[name] = run_backtest(path, d, vols[name], cfg)
    return out
