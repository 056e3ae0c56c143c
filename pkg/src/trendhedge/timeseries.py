"""Sampled price series, CSV ingestion, log returns and a seeded GBM simulator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import ndtri

from .errors import InvalidParameter, InvalidPrice, NonPositivePrice, SeriesTooShort

TRADING_DAYS = 255
DEFAULT_DT = 1.0 / TRADING_DAYS


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Uniformly sampled, strictly positive prices.

    ``dt`` is the sampling step in years. ``start_index`` records the offset
    of this series inside the series it was sliced from (0 for roots), and
    ``labels`` carries the opaque date strings of a loaded file, if any.
    """

    values: np.ndarray
    dt: float = DEFAULT_DT
    start_index: int = 0
    labels: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise InvalidParameter("price series must be one-dimensional")
        if values.size < 2:
            raise SeriesTooShort(f"need at least 2 prices, got {values.size}")
        if not np.all(np.isfinite(values)):
            row = int(np.flatnonzero(~np.isfinite(values))[0])
            raise InvalidPrice(f"non-finite price at row {row}", row=row)
        if np.any(values <= 0):
            row = int(np.flatnonzero(values <= 0)[0])
            raise NonPositivePrice(f"non-positive price {values[row]!r} at row {row}", row=row)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidParameter(f"dt must be positive, got {self.dt}")
        if self.labels is not None and len(self.labels) != values.size:
            raise InvalidParameter("labels must match the number of prices")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def slice(self, start: int, stop: int) -> "PriceSeries":
        """Sub-series ``[start, stop)``; ``start_index`` stays relative to the root."""
        labels = None if self.labels is None else self.labels[start:stop]
        return PriceSeries(self.values[start:stop], self.dt, self.start_index + start, labels)


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """Log returns; entry ``i`` is the return from price ``i`` to ``i + 1``."""

    values: np.ndarray
    dt: float = DEFAULT_DT

    def __post_init__(self):
        values = _frozen(self.values)
        if values.ndim != 1:
            raise InvalidParameter("return series must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise InvalidParameter("returns must be finite")
        if not self.dt > 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class GbmParams:
    s0: float = 100.0
    mu: float = 0.01
    sigma: float = 0.2
    n_steps: int = 1000
    dt: float = DEFAULT_DT
    seed: int = 0

    def __post_init__(self):
        if not self.s0 > 0:
            raise InvalidParameter(f"s0 must be positive, got {self.s0}")
        if not self.sigma >= 0:
            raise InvalidParameter(f"sigma must be non-negative, got {self.sigma}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise InvalidParameter(f"n_steps must be an integer >= 1, got {self.n_steps}")
        if not self.dt > 0:
            raise InvalidParameter(f"dt must be positive, got {self.dt}")


def _parse_float(text: str, row: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise InvalidPrice(f"non-numeric price {text!r} at row {row}", row=row) from None
    if not math.isfinite(value):
        raise InvalidPrice(f"non-finite price {text!r} at row {row}", row=row)
    if value <= 0:
        raise NonPositivePrice(f"non-positive price {text!r} at row {row}", row=row)
    return value


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(
    path: Union[str, Path],
    column: Union[str, int, None] = None,
    dt: float = DEFAULT_DT,
) -> PriceSeries:
    """Read a daily close file into a :class:`PriceSeries`.

    The expected layout is ``date,close``, but single-column files and wider
    files are accepted. A header is detected by trying to parse the first
    row. ``column`` selects the price column by header name or by position;
    by default the ``close`` column is used when there is a header, otherwise
    the last column. Any bad price raises with its 0-based data-row index.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")

    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise SeriesTooShort(f"{path} contains no rows")

    first = [cell.strip() for cell in rows[0]]
    if isinstance(column, int):
        col = column
    elif column is None:
        col = len(first) - 1
    else:
        col = None

    probe = first[col] if col is not None and -len(first) <= col < len(first) else None
    has_header = probe is None or not _looks_numeric(probe)
    header = first if has_header else None
    body = rows[1:] if has_header else rows

    if isinstance(column, str):
        if header is None or column not in header:
            raise InvalidParameter(f"column {column!r} not found in header of {path}")
        col = header.index(column)
    elif column is None and header is not None:
        lowered = [h.lower() for h in header]
        if "close" in lowered:
            col = lowered.index("close")

    values = []
    labels = []
    for i, row in enumerate(body):
        if not -len(row) <= col < len(row):
            raise InvalidPrice(f"row {i} has no column {col}", row=i)
        values.append(_parse_float(row[col].strip(), i))
        labels.append(row[0].strip() if len(row) > 1 else str(i))

    if len(values) < 2:
        raise SeriesTooShort(f"{path} has {len(values)} price rows, need at least 2")
    return PriceSeries(np.asarray(values), dt=dt, labels=tuple(labels))


def log_returns(s: PriceSeries) -> ReturnSeries:
    return ReturnSeries(np.diff(np.log(s.values)), s.dt)


def standard_normals(seed: int, n: int) -> np.ndarray:
    """Seeded standard normal variates.

    PCG64 integers in ``[0, 2**53)`` are mapped to uniforms strictly inside
    ``(0, 1)`` and pushed through the inverse normal CDF, so the stream is
    fixed by the seed alone.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    k = rng.integers(0, 2**53, size=n, dtype=np.int64)
    u = (k.astype(float) + 0.5) / 2.0**53
    return ndtri(u)


def simulate_gbm(p: GbmParams) -> PriceSeries:
    """Exact lognormal discretization of geometric Brownian motion.

    Returns ``n_steps + 1`` prices starting at ``s0``.
    """
    z = standard_normals(p.seed, p.n_steps)
    increments = (p.mu - 0.5 * p.sigma**2) * p.dt + p.sigma * math.sqrt(p.dt) * z
    log_path = np.concatenate(([0.0], np.cumsum(increments)))
    values = p.s0 * np.exp(log_path)
    values[0] = p.s0
    return PriceSeries(values, p.dt)


def apply_jump(s: PriceSeries, index: int, factor: float) -> PriceSeries:
    """Scale every price from ``index`` on by ``factor``.

    This adds ``log(factor)`` to the single log return ending at ``index``
    and leaves all other returns untouched.
    """
    if not 1 <= index < len(s):
        raise InvalidParameter(f"jump index {index} outside [1, {len(s) - 1}]")
    if not factor > 0:
        raise InvalidParameter(f"jump factor must be positive, got {factor}")
    values = np.array(s.values)
    values[index:] *= factor
    return PriceSeries(values, s.dt, s.start_index, s.labels)


def from_values(values: Sequence[float], dt: float = DEFAULT_DT) -> PriceSeries:
    return PriceSeries(np.asarray(values, dtype=float), dt)


def replace_return(s: PriceSeries, index: int, log_return: float) -> PriceSeries:
    """Force the log return ending at price ``index`` to ``log_return``."""
    if not 1 <= index < len(s):
        raise InvalidParameter(f"return index {index} outside [1, {len(s) - 1}]")
    current = math.log(s.values[index] / s.values[index - 1])
    return apply_jump(s, index, math.exp(log_return - current))
