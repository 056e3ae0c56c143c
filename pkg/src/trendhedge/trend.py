"""Trend / quick-fluctuation decomposition of a price series.

The trend at step ``i`` is the value, at the right edge of the window, of the
least-squares polynomial fitted to the trailing ``window`` samples. Because
the fit is linear in the data, it reduces to a fixed set of weights applied
to every window, and the same fit yields the first derivative.

The first ``window - 1`` steps have no full trailing window. There, the
polynomial fitted to the first ``window`` samples is evaluated at the step
itself, so every output has the length of the input. These warm-up values
use samples after ``i`` and are therefore not causal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidParameter, NumericDegeneracy
from .timeseries import PriceSeries


@dataclass(frozen=True, eq=False)
class TrendDecomposition:
    """``trend + fluct`` reproduces the source series.

    ``trend_deriv`` is in price units per year.
    """

    trend: np.ndarray
    fluct: np.ndarray
    trend_deriv: np.ndarray
    window: int
    degree: int
    dt: float

    def __len__(self) -> int:
        return self.trend.size

    def slice(self, start: int, stop: int) -> "TrendDecomposition":
        return TrendDecomposition(
            self.trend[start:stop],
            self.fluct[start:stop],
            self.trend_deriv[start:stop],
            self.window,
            self.degree,
            self.dt,
        )


@lru_cache(maxsize=32)
def fit_weights(window: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights of the windowed polynomial fit evaluated at each window position.

    Returns ``(value, slope)``, both ``(window, window)``: row ``p`` applied to
    the samples of a window gives the fitted value (resp. first derivative
    per step) at position ``p``. Row ``window - 1`` is the right edge.
    """
    if window < degree + 1:
        raise InvalidParameter(f"window {window} must be at least degree + 1 = {degree + 1}")
    scale = max(window - 1, 1)
    # Local coordinate in [-1, 0] keeps the Vandermonde matrix well conditioned.
    x = (np.arange(window) - (window - 1)) / scale
    powers = np.arange(degree + 1)
    vander = x[:, None] ** powers
    coef_map = np.linalg.pinv(vander)  # (degree + 1, window)

    value = vander @ coef_map
    dvander = np.zeros_like(vander)
    if degree >= 1:
        dvander[:, 1:] = powers[1:] * x[:, None] ** (powers[1:] - 1)
    slope = dvander @ coef_map / scale
    value.setflags(write=False)
    slope.setflags(write=False)
    return value, slope


def _check_window(n: int, window: int):
    if int(window) != window or window < 1:
        raise InvalidParameter(f"window must be a positive integer, got {window}")
    if window > n:
        raise InvalidParameter(f"window {window} exceeds series length {n}")


def estimate_trend(s: PriceSeries, window: int = 30, degree: int = 2) -> TrendDecomposition:
    x = s.values
    n = x.size
    if int(degree) != degree or degree < 0:
        raise InvalidParameter(f"degree must be a non-negative integer, got {degree}")
    _check_window(n, window)
    if degree >= window:
        raise InvalidParameter(f"degree {degree} must be below window {window}")

    value_w, slope_w = fit_weights(window, degree)
    windows = sliding_window_view(x, window)

    trend = np.empty(n)
    slope = np.empty(n)
    trend[window - 1 :] = windows @ value_w[-1]
    slope[window - 1 :] = windows @ slope_w[-1]
    head = x[:window]
    trend[: window - 1] = value_w[:-1] @ head
    slope[: window - 1] = slope_w[:-1] @ head

    fluct = x - trend
    return TrendDecomposition(trend, fluct, slope / s.dt, int(window), int(degree), s.dt)


def moving_average(s, window: int = 30) -> np.ndarray:
    """Trailing mean; the first ``window - 1`` outputs average what is available."""
    x = s.values if isinstance(s, PriceSeries) else np.asarray(s, dtype=float)
    n = x.size
    _check_window(n, window)
    out = np.empty(n)
    out[window - 1 :] = sliding_window_view(x, window).mean(axis=1)
    out[: window - 1] = np.cumsum(x[: window - 1]) / np.arange(1, window)
    return out


def trend_return(d: TrendDecomposition) -> np.ndarray:
    """Logarithmic derivative of the trend, per year."""
    bad = ~(d.trend > 0)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise NumericDegeneracy(f"trend is not positive at index {i} ({d.trend[i]!r})")
    return d.trend_deriv / d.trend
