"""Windowed second moments and the annualized volatility pipeline.

All moments use the trailing-window mean as the trend operator and the
population convention (divide by the number of samples). Before a full
window is available, the first ``i + 1`` samples are used, matching
:func:`trendhedge.trend.moving_average`.

Three volatility estimates are produced from log returns:

* ``raw``: rolling standard deviation, annualized by ``sqrt(1 / dt)``;
* ``filtered``: the raw series passed through a first-order low-pass filter;
* ``time_scaled``: the raw estimate, except that for ``hold`` steps after a
  detected change-point the rolling window is widened, diluting the jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

from .errors import InvalidParameter
from .timeseries import ReturnSeries

METHODS = ("raw", "filtered", "time_scaled")
MAD_TO_SIGMA = 1.4826
# A 50-point MAD is too noisy for the CUSUM at threshold 8: its scale error
# alone multiplies the false-alarm rate roughly tenfold.
ROBUST_WINDOW = 250
SCALE_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class VolatilitySeries:
    values: np.ndarray
    method: str
    base_window: int
    params: dict = field(default_factory=dict)
    dt: float = 1.0 / 255

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidParameter(f"unknown volatility method {self.method!r}")
        values = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidParameter("volatility must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ChangePointEvent:
    index: int
    statistic: float
    direction: str  # "up" or "down"
    scale_floored: bool = False


def _as_array(x) -> np.ndarray:
    if isinstance(x, (ReturnSeries, VolatilitySeries)):
        return x.values
    return np.asarray(getattr(x, "values", x), dtype=float)


def _check_window(n: int, window: int):
    if int(window) != window or window < 1:
        raise InvalidParameter(f"window must be a positive integer, got {window}")
    if window > n:
        raise InvalidParameter(f"window {window} exceeds series length {n}")


def sliding_covariance(s1, s2, window: int) -> np.ndarray:
    """``Tr(s1 s2) - Tr(s1) Tr(s2)`` with ``Tr`` the trailing mean.

    Evaluated in the centered form ``Tr((s1 - Tr s1)(s2 - Tr s2))``, which is
    algebraically identical and avoids cancellation on large-valued inputs.
    """
    x = _as_array(s1)
    y = _as_array(s2)
    if x.shape != y.shape:
        raise InvalidParameter(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    _check_window(n, window)

    out = np.empty(n)
    xw = sliding_window_view(x, window)
    yw = sliding_window_view(y, window)
    xc = xw - xw.mean(axis=1, keepdims=True)
    yc = yw - yw.mean(axis=1, keepdims=True)
    out[window - 1 :] = (xc * yc).mean(axis=1)
    for i in range(window - 1):
        xs = x[: i + 1]
        ys = y[: i + 1]
        out[i] = ((xs - xs.mean()) * (ys - ys.mean())).mean()
    return out


def sliding_variance(s, window: int) -> np.ndarray:
    out = sliding_covariance(s, s, window)
    neg = out < 0
    if np.any(out[neg] < -1e-12):
        i = int(np.flatnonzero(out < -1e-12)[0])
        raise ArithmeticError(f"variance {out[i]!r} at index {i} is negative")
    out[neg] = 0.0
    return out


def sliding_volatility(s, window: int) -> np.ndarray:
    return np.sqrt(sliding_variance(s, window))


def annualized_volatility(r: ReturnSeries, window: int = 10) -> VolatilitySeries:
    if int(window) != window or window < 2:
        raise InvalidParameter(f"volatility window must be >= 2, got {window}")
    values = sliding_volatility(r.values, window) * math.sqrt(1.0 / r.dt)
    return VolatilitySeries(values, "raw", int(window), {"window": int(window)}, r.dt)


def lowpass_filter(v: VolatilitySeries, alpha: float = 0.2) -> VolatilitySeries:
    """First-order exponential smoother ``y[i] = a x[i] + (1 - a) y[i-1]``, ``y[0] = x[0]``."""
    if not 0 < alpha <= 1:
        raise InvalidParameter(f"alpha must lie in (0, 1], got {alpha}")
    x = v.values
    y = np.empty_like(x)
    y[0] = x[0]
    if x.size > 1:
        y[1:], _ = lfilter([alpha], [1.0, alpha - 1.0], x[1:], zi=[(1.0 - alpha) * x[0]])
    params = dict(v.params, alpha=alpha, source=v.method)
    return VolatilitySeries(y, "filtered", v.base_window, params, v.dt)


def _robust_location_scale(x: np.ndarray, window: int, min_history: int):
    """Median and scaled MAD of the ``window`` samples strictly before each index."""
    n = x.size
    loc = np.zeros(n)
    scale = np.full(n, np.nan)
    for i in range(min(n, window)):
        if i >= min_history:
            past = x[:i]
            med = np.median(past)
            loc[i] = med
            scale[i] = MAD_TO_SIGMA * np.median(np.abs(past - med))
    if n > window:
        past = sliding_window_view(x[:-1], window)  # row j covers x[j : j + window]
        med = np.median(past, axis=1)
        loc[window:] = med
        scale[window:] = MAD_TO_SIGMA * np.median(np.abs(past - med[:, None]), axis=1)
    return loc, scale


def detect_change_points(
    r: ReturnSeries,
    threshold: float = 8.0,
    drift: float = 0.5,
    window: int = ROBUST_WINDOW,
    min_history: int = 50,
) -> list[ChangePointEvent]:
    """Two-sided CUSUM on robustly standardized returns.

    Each return is standardized by the median and ``1.4826 * MAD`` of the
    ``window`` returns that precede it, so the decision at index ``i`` uses
    data up to ``i`` only. Until ``min_history`` past returns exist the
    standardized value is taken as 0. A zero scale is replaced by
    ``1e-12`` and the resulting event, if any, is marked ``scale_floored``.
    After an event both sums restart from 0.
    """
    if not threshold > 0:
        raise InvalidParameter(f"threshold must be positive, got {threshold}")
    if not drift >= 0:
        raise InvalidParameter(f"drift must be non-negative, got {drift}")
    if window < 1 or min_history < 1:
        raise InvalidParameter("window and min_history must be >= 1")

    x = _as_array(r)
    loc, scale = _robust_location_scale(x, window, min(min_history, window))
    known = ~np.isnan(scale)
    floored = known & (scale < SCALE_FLOOR)
    z = np.zeros(x.size)
    z[known] = (x[known] - loc[known]) / np.maximum(scale[known], SCALE_FLOOR)

    events = []
    g_up = g_down = 0.0
    for i, zi in enumerate(z.tolist()):
        g_up = max(0.0, g_up + zi - drift)
        g_down = max(0.0, g_down - zi - drift)
        if g_up > threshold or g_down > threshold:
            if g_up >= g_down:
                events.append(ChangePointEvent(i, g_up, "up", bool(floored[i])))
            else:
                events.append(ChangePointEvent(i, g_down, "down", bool(floored[i])))
            g_up = g_down = 0.0
    return events


def augmentation_mask(n: int, events: Sequence[ChangePointEvent], hold: int) -> np.ndarray:
    """True at ``i`` when some event index lies in ``(i - hold, i]``."""
    marks = np.zeros(n + 1, dtype=int)
    for e in events:
        if not 0 <= e.index < n:
            raise InvalidParameter(f"event index {e.index} outside [0, {n})")
        marks[e.index] += 1
        marks[min(e.index + hold, n)] -= 1
    return np.cumsum(marks[:n]) > 0


def time_scaled_volatility(
    r: ReturnSeries,
    events: Sequence[ChangePointEvent],
    base_window: int = 10,
    augmented_window: int = 50,
    hold: int = 50,
) -> VolatilitySeries:
    if not augmented_window > base_window >= 2:
        raise InvalidParameter(
            f"need augmented_window > base_window >= 2, got {augmented_window}, {base_window}"
        )
    if hold < 1:
        raise InvalidParameter(f"hold must be >= 1, got {hold}")

    raw = annualized_volatility(r, base_window)
    n = len(r)
    mask = augmentation_mask(n, events, hold)
    values = raw.values.copy()
    clamped = []
    if mask.any():
        wide = min(augmented_window, n)
        widened = sliding_volatility(r.values, wide) * math.sqrt(1.0 / r.dt)
        values[mask] = widened[mask]
        clamped = [int(i) for i in np.flatnonzero(mask) if i + 1 < augmented_window]
    params = {
        "base_window": int(base_window),
        "augmented_window": int(augmented_window),
        "hold": int(hold),
        "n_events": len(events),
        "clamped": clamped,
    }
    return VolatilitySeries(values, "time_scaled", int(base_window), params, r.dt)


def total_variation(x) -> float:
    return float(np.abs(np.diff(np.asarray(x, dtype=float))).sum())
