"""Command-line front end: ingest or simulate, decompose, estimate, price, hedge.

Every subcommand runs the pipeline up to the stage it needs and writes CSV
files (plus ``metrics.json`` for ``hedge``) into the output directory.

Settings are resolved in this order: command-line flags, then the
``TRENDHEDGE_OUTPUT_DIR`` environment variable (output directory only), then
an optional ``--config`` file of ``key=value`` lines, then built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import NumericDegeneracy, TrendHedgeError
from .hedging import HedgeConfig, HedgeTrace, hedge_metrics, run_backtest, vol_at_prices
from .pricing import EuropeanCallSpec, price_call_trend, strike_from_offset
from .stats import (
    METHODS,
    ROBUST_WINDOW,
    annualized_volatility,
    detect_change_points,
    lowpass_filter,
    time_scaled_volatility,
)
from .timeseries import DEFAULT_DT, GbmParams, PriceSeries, apply_jump, load_csv, log_returns, simulate_gbm
from .trend import estimate_trend, moving_average, trend_return

log = logging.getLogger("trendhedge")

OUTPUT_ENV = "TRENDHEDGE_OUTPUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE = 0, 1, 2


@dataclass
class RunConfig:
    input: Optional[str] = None
    column: Optional[str] = None
    # Simulated input, used when ``input`` is not given.
    s0: float = 100.0
    mu: float = 0.01
    sigma: float = 0.2
    n_steps: int = 1000
    seed: int = 0
    jump_index: Optional[int] = None
    jump_pct: float = 0.0

    window_trend: int = 30
    degree: int = 2
    vol_window: int = 10
    alpha: float = 0.2
    cpd_threshold: float = 8.0
    cpd_drift: float = 0.5
    cpd_window: int = ROBUST_WINDOW
    augmented_window: int = 50
    hold: int = 50

    r: float = 0.01
    k_pct: float = 10.0
    maturity: int = 200
    start_index: Optional[int] = None  # default: the option matures on the last price
    rebalance_every: int = 1
    output_dir: str = "out"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, text: str):
    current = RunConfig.__dataclass_fields__[name].default
    if text.lower() in ("none", ""):
        return None
    if name in ("input", "column", "output_dir"):
        return text
    if isinstance(current, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(current, int) or name in ("jump_index", "start_index"):
        return int(text)
    return float(text)


def read_config_file(path: str) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise TrendHedgeError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise TrendHedgeError(f"{path}:{lineno}: unknown setting {key!r}")
        try:
            values[key] = _coerce(key, value)
        except ValueError:
            raise TrendHedgeError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return values


def resolve_config(flags: dict, config_file: Optional[str] = None, environ=os.environ) -> RunConfig:
    merged = {}
    if config_file:
        merged.update(read_config_file(config_file))
    if environ.get(OUTPUT_ENV):
        merged["output_dir"] = environ[OUTPUT_ENV]
    merged.update({k: v for k, v in flags.items() if v is not None and k in _FIELDS})
    return RunConfig(**merged)


class Pipeline:
    """Lazily evaluated stages of one run; each stage is computed once."""

    def __init__(self, config: RunConfig):
        self.config = config

    @cached_property
    def prices(self) -> PriceSeries:
        c = self.config
        if c.input:
            column = c.column
            if column is not None and column.lstrip("-").isdigit():
                column = int(column)
            return load_csv(c.input, column)
        path = simulate_gbm(GbmParams(c.s0, c.mu, c.sigma, c.n_steps, DEFAULT_DT, c.seed))
        if c.jump_index is not None and c.jump_pct != 0.0:
            path = apply_jump(path, c.jump_index, 1.0 + c.jump_pct / 100.0)
        return path

    @cached_property
    def decomposition(self):
        return estimate_trend(self.prices, self.config.window_trend, self.config.degree)

    @cached_property
    def returns(self):
        return log_returns(self.prices)

    @cached_property
    def change_points(self):
        c = self.config
        return detect_change_points(self.returns, c.cpd_threshold, c.cpd_drift, c.cpd_window)

    @cached_property
    def vols(self) -> dict:
        c = self.config
        raw = annualized_volatility(self.returns, c.vol_window)
        return {
            "raw": raw,
            "filtered": lowpass_filter(raw, c.alpha),
            "time_scaled": time_scaled_volatility(
                self.returns, self.change_points, c.vol_window, c.augmented_window, c.hold
            ),
        }

    @cached_property
    def start_index(self) -> int:
        c = self.config
        n = len(self.prices)
        start = n - 1 - c.maturity if c.start_index is None else c.start_index
        if start < 0 or start + c.maturity > n - 1:
            raise TrendHedgeError(
                f"option window [{start}, {start + c.maturity}] does not fit in {n} prices"
            )
        return start

    @cached_property
    def spec(self) -> EuropeanCallSpec:
        c = self.config
        s_trend0 = self.decomposition.trend[self.start_index]
        strike = strike_from_offset(s_trend0, c.k_pct, c.maturity, self.prices.dt)
        return EuropeanCallSpec(strike, c.maturity, c.r, self.prices.dt)

    @cached_property
    def traces(self) -> dict:
        c = self.config
        out = {}
        for method in METHODS:
            cfg = HedgeConfig(self.spec, method, c.rebalance_every, start_index=self.start_index)
            out[method] = run_backtest(self.prices, self.decomposition, self.vols[method], cfg)
        return out


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.16e}"


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: Sequence[str], columns: Sequence[Iterable]):
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(x) for x in row))
    write_atomic(path, "\n".join(lines) + "\n")
    log.info("wrote %s (%d rows)", path, len(lines) - 1)


def cmd_simulate(p: Pipeline) -> list[Path]:
    out = Path(p.config.output_dir) / "path.csv"
    s = p.prices
    labels = s.labels if s.labels is not None else [str(i) for i in range(len(s))]
    write_csv(out, ["date", "close"], [labels, s.values])
    return [out]


def cmd_trend(p: Pipeline) -> list[Path]:
    out = Path(p.config.output_dir) / "trend.csv"
    d = p.decomposition
    ma = moving_average(p.prices, p.config.window_trend)
    write_csv(
        out,
        ["index", "price", "moving_average", "trend", "fluct"],
        [range(len(d)), p.prices.values, ma, d.trend, d.fluct],
    )
    return [out]


def cmd_vol(p: Pipeline) -> list[Path]:
    out_dir = Path(p.config.output_dir)
    n = len(p.returns)
    # Row for return i is stamped with the price index i + 1 at which it is known.
    index = range(1, n + 1)
    v = p.vols
    write_csv(
        out_dir / "vol.csv",
        ["index", "log_return", "vol_raw", "vol_filtered", "vol_time_scaled"],
        [index, p.returns.values, v["raw"].values, v["filtered"].values, v["time_scaled"].values],
    )
    events = p.change_points
    write_csv(
        out_dir / "changepoints.csv",
        ["index", "statistic", "direction"],
        [[e.index + 1 for e in events], [e.statistic for e in events], [e.direction for e in events]],
    )
    return [out_dir / "vol.csv", out_dir / "changepoints.csv"]


def call_columns(p: Pipeline) -> dict:
    spec, start = p.spec, p.start_index
    steps = np.arange(spec.maturity_index + 1)
    trend = p.decomposition.trend[start + steps]
    cols = {}
    for method in METHODS:
        sigma = vol_at_prices(p.vols[method])[start + steps]
        cols[method] = np.array(
            [price_call_trend(trend[k], spec, sigma[k], spec.tau(k)).value for k in steps]
        )
    return cols


def cmd_price(p: Pipeline) -> list[Path]:
    out = Path(p.config.output_dir) / "calls.csv"
    spec, start = p.spec, p.start_index
    steps = np.arange(spec.maturity_index + 1)
    cols = call_columns(p)
    write_csv(
        out,
        ["index", "tau", "strike", "call_raw", "call_filtered", "call_time_scaled"],
        [start + steps, [spec.tau(k) for k in steps], [spec.strike] * steps.size,
         cols["raw"], cols["filtered"], cols["time_scaled"]],
    )
    return [out]


HEDGE_FIELDS = ("V", "delta", "pi_target", "pi_realized", "tracking_residual", "raw_residual")


def _trace_column(trace: HedgeTrace, name: str):
    return trace.option_value if name == "V" else getattr(trace, name)


def metrics_document(p: Pipeline) -> dict:
    d = p.decomposition
    maturity = p.start_index + p.spec.maturity_index
    doc = {
        "strike": p.spec.strike,
        "rate": p.spec.rate,
        "start_index": p.start_index,
        "maturity_index": maturity,
        "trend_return_at_maturity": float(trend_return(d)[maturity]),
        "n_change_points": len(p.change_points),
    }
    for method, trace in p.traces.items():
        entry = hedge_metrics(trace).as_dict()
        entry["delta0"] = trace.delta0
        entry["pi0"] = trace.pi0
        doc[method] = entry
    return doc


def cmd_hedge(p: Pipeline) -> list[Path]:
    out_dir = Path(p.config.output_dir)
    traces = p.traces
    first = traces["raw"]
    header = ["index", "s_trend"]
    columns = [first.t_index, first.s_trend]
    for method in METHODS:
        for name in HEDGE_FIELDS:
            header.append(f"{name}_{method}")
            columns.append(_trace_column(traces[method], name))
    write_csv(out_dir / "hedge.csv", header, columns)

    doc = metrics_document(p)
    write_atomic(out_dir / "metrics.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    tr = doc["trend_return_at_maturity"]
    log.info("trend-return at maturity %.4f vs risk-free rate %.4f", tr, p.spec.rate)
    return [out_dir / "hedge.csv", out_dir / "metrics.json"]


def cmd_all(p: Pipeline) -> list[Path]:
    written = []
    if not p.config.input:
        written += cmd_simulate(p)
    for cmd in (cmd_trend, cmd_vol, cmd_price, cmd_hedge):
        written += cmd(p)
    return written


COMMANDS = {
    "simulate": cmd_simulate,
    "trend": cmd_trend,
    "vol": cmd_vol,
    "price": cmd_price,
    "hedge": cmd_hedge,
    "all": cmd_all,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # Usage errors are validation errors: exit 1, keep 2 for numeric degeneracy.
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="trendhedge", description="Trend-based call pricing and tracking-control hedging."
    )
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("-v", "--verbose", action="store_true")
    for f in dataclasses.fields(RunConfig):
        kind = str if f.name in ("input", "column", "output_dir") else None
        if kind is None:
            default = f.default
            kind = int if isinstance(default, int) or f.name in ("jump_index", "start_index") else float
        common.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=None)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        config = resolve_config(vars(args), args.config)
        written = COMMANDS[args.command](Pipeline(config))
    except NumericDegeneracy as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (TrendHedgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
