"""Trend-based European call pricing and tracking-control delta hedging."""

from .errors import (
    DegenerateInitialization,
    DegenerateInputs,
    InvalidParameter,
    InvalidPrice,
    NonPositivePrice,
    NumericDegeneracy,
    SeriesTooShort,
    TrendHedgeError,
)
from .hedging import HedgeConfig, HedgeMetrics, HedgeTrace, delta_at, hedge_metrics, initial_delta, run_backtest
from .pricing import (
    CallQuote,
    EuropeanCallSpec,
    d1_d2,
    norm_cdf,
    price_call_classic,
    price_call_trend,
    strike_from_offset,
)
from .stats import (
    ChangePointEvent,
    VolatilitySeries,
    annualized_volatility,
    detect_change_points,
    lowpass_filter,
    sliding_covariance,
    sliding_variance,
    sliding_volatility,
    time_scaled_volatility,
)
from .timeseries import GbmParams, PriceSeries, ReturnSeries, load_csv, log_returns, simulate_gbm
from .trend import TrendDecomposition, estimate_trend, moving_average, trend_return

__version__ = "0.1.0"

__all__ = [
    "DegenerateInitialization",
    "DegenerateInputs",
    "InvalidParameter",
    "InvalidPrice",
    "NonPositivePrice",
    "NumericDegeneracy",
    "SeriesTooShort",
    "TrendHedgeError",
    "HedgeConfig",
    "HedgeMetrics",
    "HedgeTrace",
    "delta_at",
    "hedge_metrics",
    "initial_delta",
    "run_backtest",
    "CallQuote",
    "EuropeanCallSpec",
    "d1_d2",
    "norm_cdf",
    "price_call_classic",
    "price_call_trend",
    "strike_from_offset",
    "ChangePointEvent",
    "VolatilitySeries",
    "annualized_volatility",
    "detect_change_points",
    "lowpass_filter",
    "sliding_covariance",
    "sliding_variance",
    "sliding_volatility",
    "time_scaled_volatility",
    "GbmParams",
    "PriceSeries",
    "ReturnSeries",
    "load_csv",
    "log_returns",
    "simulate_gbm",
    "TrendDecomposition",
    "estimate_trend",
    "moving_average",
    "trend_return",
]
