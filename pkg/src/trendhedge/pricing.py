"""European call pricing on the raw price or on its trend.

Both pricers share one closed form; the trend pricer only changes which
level is fed into it. When ``sigma * sqrt(tau)`` is zero the formula is
replaced by its deterministic limit, which the hedging loop needs at
maturity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateInputs, InvalidParameter

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class EuropeanCallSpec:
    strike: float
    maturity_index: int
    rate: float = 0.01
    dt: float = 1.0 / 255

    def __post_init__(self):
        if not self.strike > 0:
            raise InvalidParameter(f"strike must be positive, got {self.strike}")
        if int(self.maturity_index) != self.maturity_index or self.maturity_index < 1:
            raise InvalidParameter(f"maturity_index must be an integer >= 1, got {self.maturity_index}")
        if not self.dt > 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt}")

    def tau(self, t_index: int) -> float:
        """Time to maturity in years at step ``t_index``."""
        return (self.maturity_index - t_index) * self.dt


@dataclass(frozen=True)
class CallQuote:
    value: float
    d1: float
    d2: float
    delta_bs: float  # dC/dS
    theta: float  # dC/dt, per year


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function.

    ``erfc`` keeps full relative accuracy in the lower tail, where
    ``0.5 * (1 + erf(x))`` cancels catastrophically.
    """
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def d1_d2(s: float, k: float, r: float, sigma: float, tau: float) -> tuple[float, float]:
    if not (s > 0 and k > 0):
        raise InvalidParameter(f"price and strike must be positive, got {s}, {k}")
    if not (sigma > 0 and tau > 0):
        raise DegenerateInputs(f"d1/d2 need sigma > 0 and tau > 0, got sigma={sigma}, tau={tau}")
    vol_sqrt = sigma * math.sqrt(tau)
    d1 = (math.log(s / k) + (r + 0.5 * sigma * sigma) * tau) / vol_sqrt
    return d1, d1 - vol_sqrt


def _deterministic_quote(s: float, k: float, r: float, tau: float) -> CallQuote:
    discounted = k * math.exp(-r * tau)
    if s > discounted:
        weight, d = 1.0, math.inf
    elif s < discounted:
        weight, d = 0.0, -math.inf
    else:
        weight, d = 0.5, 0.0
    value = max(0.0, s - discounted)
    # d/dt of (s - K e^{-r tau}) with tau = T - t
    theta = -weight * r * discounted
    return CallQuote(value, d, d, weight, theta)


def price_call_classic(s: float, spec: EuropeanCallSpec, sigma: float, tau: float) -> CallQuote:
    if not s > 0:
        raise InvalidParameter(f"price must be positive, got {s}")
    if sigma < 0 or tau < 0:
        raise InvalidParameter(f"sigma and tau must be non-negative, got {sigma}, {tau}")
    k, r = spec.strike, spec.rate
    if sigma * math.sqrt(tau) == 0.0:
        return _deterministic_quote(s, k, r, tau)

    d1, d2 = d1_d2(s, k, r, sigma, tau)
    discounted = k * math.exp(-r * tau)
    nd1 = norm_cdf(d1)
    nd2 = norm_cdf(d2)
    value = s * nd1 - discounted * nd2
    theta = -s * norm_pdf(d1) * sigma / (2.0 * math.sqrt(tau)) - r * discounted * nd2
    return CallQuote(max(value, 0.0), d1, d2, nd1, theta)


def price_call_trend(s_trend: float, spec: EuropeanCallSpec, sigma: float, tau: float) -> CallQuote:
    """Call value with the trend level standing in for the spot price."""
    return price_call_classic(s_trend, spec, sigma, tau)


def strike_from_offset(s_trend_0: float, k_pct: float, maturity_index: int, dt: float = 1.0 / 255) -> float:
    """Strike set ``k_pct`` percent per year above the initial trend level.

    ``K = s_trend_0 * (1 + k_pct / 100) ** (maturity_index * dt)``.
    """
    if not s_trend_0 > 0:
        raise InvalidParameter(f"initial trend must be positive, got {s_trend_0}")
    if not k_pct > -100:
        raise InvalidParameter(f"k_pct must exceed -100, got {k_pct}")
    return s_trend_0 * (1.0 + k_pct / 100.0) ** (maturity_index * dt)
