"""Tracking-control hedging of a long call against the trend of the underlying.

The portfolio is one long call worth ``V`` and a short position of ``delta``
units of the underlying, valued on the trend: ``Pi = V - delta * S_trend``.
``delta`` is chosen so that this value tracks ``Pi(0) * exp(r t)``, which
makes the tracking residual vanish at every rebalance. The initial
``delta`` comes from matching logarithmic derivatives of the two sides at
``t = 0``.

Trades, however, go through at the raw market price. ``pi_realized`` is the
resulting self-financing portfolio: call plus short shares marked at the
raw price, plus a cash account that collects the proceeds of rebalancing
and accrues at ``r``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateInitialization, InvalidParameter
from .pricing import EuropeanCallSpec, price_call_trend
from .stats import METHODS, VolatilitySeries
from .timeseries import PriceSeries
from .trend import TrendDecomposition


@dataclass(frozen=True)
class HedgeConfig:
    spec: EuropeanCallSpec
    vol_source: str = "time_scaled"
    rebalance_every: int = 1
    epsilon_denominator: float = 1e-8
    # Price index at which the option is written; it matures at
    # ``start_index + spec.maturity_index``.
    start_index: int = 0

    def __post_init__(self):
        if self.vol_source not in METHODS:
            raise InvalidParameter(f"unknown vol_source {self.vol_source!r}")
        if int(self.rebalance_every) != self.rebalance_every or self.rebalance_every < 1:
            raise InvalidParameter(f"rebalance_every must be an integer >= 1, got {self.rebalance_every}")
        if not self.epsilon_denominator > 0:
            raise InvalidParameter("epsilon_denominator must be positive")
        if self.start_index < 0:
            raise InvalidParameter(f"start_index must be >= 0, got {self.start_index}")


@dataclass(frozen=True, eq=False)
class HedgeTrace:
    """Per-step record of a backtest; arrays have ``maturity_index + 1`` entries."""

    t_index: np.ndarray
    price: np.ndarray
    sigma: np.ndarray
    tau: np.ndarray
    option_value: np.ndarray
    s_trend: np.ndarray
    delta: np.ndarray
    pi_target: np.ndarray
    pi_realized: np.ndarray
    tracking_residual: np.ndarray
    raw_residual: np.ndarray  # V - delta * S - pi_target, trades at raw price
    rebalanced: np.ndarray
    pi0: float
    delta0: float
    vol_source: str
    start_index: int

    def __len__(self) -> int:
        return self.t_index.size


@dataclass(frozen=True)
class HedgeMetrics:
    max_delta_step: float
    delta_total_variation: float
    rms_tracking_error: float
    terminal_shortfall: float
    max_abs_tracking_residual: float

    def as_dict(self) -> dict:
        return asdict(self)


def initial_delta(
    v0: float, v0_dot: float, s_trend0: float, s_trend0_dot: float, r: float, eps: float = 1e-8
) -> float:
    """``(V'(0) - r V(0)) / (S_trend'(0) - r S_trend(0))``.

    Raises :class:`DegenerateInitialization` when the trend initially grows at
    the risk-free rate, i.e. the denominator is below ``eps * |r S_trend(0)|``.
    """
    values = (v0, v0_dot, s_trend0, s_trend0_dot, r)
    if not all(math.isfinite(x) for x in values):
        raise InvalidParameter(f"initial_delta inputs must be finite, got {values}")
    num = v0_dot - r * v0
    den = s_trend0_dot - r * s_trend0
    if abs(den) < eps * abs(r * s_trend0) or den == 0.0:
        raise DegenerateInitialization(
            f"trend grows at the risk-free rate at the start (S'={s_trend0_dot!r}, r*S={r * s_trend0!r}); "
            "move the start index or change the trend window"
        )
    return num / den


def delta_at(v_t: float, pi0: float, r: float, t_years: float, s_trend_t: float) -> float:
    if not s_trend_t > 0:
        raise InvalidParameter(f"trend must be positive, got {s_trend_t}")
    return (v_t - pi0 * math.exp(r * t_years)) / s_trend_t


def vol_at_prices(vols: VolatilitySeries) -> np.ndarray:
    """Align a return-indexed volatility with price indices.

    The volatility known at price ``j`` is the one ending with return
    ``j - 1``; price 0 reuses the first estimate.
    """
    v = vols.values
    return np.concatenate((v[:1], v))


def run_backtest(
    prices: PriceSeries,
    decomposition: TrendDecomposition,
    vols: VolatilitySeries,
    config: HedgeConfig,
) -> HedgeTrace:
    spec = config.spec
    n = len(prices)
    if len(decomposition) != n:
        raise InvalidParameter(f"decomposition length {len(decomposition)} != price length {n}")
    if len(vols) != n - 1:
        raise InvalidParameter(f"volatility length {len(vols)} != number of returns {n - 1}")
    start = config.start_index
    steps = spec.maturity_index
    if start + steps >= n:
        raise InvalidParameter(
            f"maturity at index {start + steps} is beyond the last price index {n - 1}"
        )

    r, dt = spec.rate, spec.dt
    idx = np.arange(start, start + steps + 1)
    price = prices.values[idx]
    s_trend = decomposition.trend[idx]
    sigma = vol_at_prices(vols)[idx]
    t = np.arange(steps + 1)
    tau = np.array([spec.tau(k) for k in t])

    quotes = [price_call_trend(s_trend[k], spec, sigma[k], tau[k]) for k in t]
    v = np.array([q.value for q in quotes])

    # Chain rule through the pricing formula: V' = theta + dC/dS * S_trend'.
    s_dot0 = decomposition.trend_deriv[start]
    v_dot0 = quotes[0].theta + quotes[0].delta_bs * s_dot0
    delta0 = initial_delta(v[0], v_dot0, s_trend[0], s_dot0, r, config.epsilon_denominator)
    pi0 = v[0] - delta0 * s_trend[0]
    growth = np.exp(r * t * dt)
    pi_target = pi0 * growth

    delta = np.empty(steps + 1)
    rebalanced = t % config.rebalance_every == 0
    delta[0] = delta0
    for k in range(1, steps + 1):
        if rebalanced[k]:
            delta[k] = delta_at(v[k], pi0, r, k * dt, s_trend[k])
        else:
            delta[k] = delta[k - 1]

    cash = np.empty(steps + 1)
    cash[0] = 0.0
    accrual = math.exp(r * dt)
    for k in range(1, steps + 1):
        cash[k] = cash[k - 1] * accrual + (delta[k] - delta[k - 1]) * price[k]
    pi_realized = v - delta * price + cash

    return HedgeTrace(
        t_index=idx,
        price=price,
        sigma=sigma,
        tau=tau,
        option_value=v,
        s_trend=s_trend,
        delta=delta,
        pi_target=pi_target,
        pi_realized=pi_realized,
        tracking_residual=v - delta * s_trend - pi_target,
        raw_residual=v - delta * price - pi_target,
        rebalanced=rebalanced,
        pi0=float(pi0),
        delta0=float(delta0),
        vol_source=vols.method,
        start_index=start,
    )


def hedge_metrics(trace: HedgeTrace) -> HedgeMetrics:
    steps = np.abs(np.diff(trace.delta))
    gap = trace.pi_realized - trace.pi_target
    return HedgeMetrics(
        max_delta_step=float(steps.max()) if steps.size else 0.0,
        delta_total_variation=float(steps.sum()),
        rms_tracking_error=float(np.sqrt(np.mean(gap**2))),
        terminal_shortfall=float(trace.pi_target[-1] - trace.pi_realized[-1]),
        max_abs_tracking_residual=float(np.abs(trace.tracking_residual[trace.rebalanced]).max()),
    )
