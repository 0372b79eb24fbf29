"""Daily net-yield backtest of a standard pool against the hybrid pool.

Both positions earn the same fee APR (proportional routing).  The standard
position pays the full LVR drag ``sigma_t**2 / 8`` per year of exposure; the
hybrid position pays ``N`` times that and earns ``(1 - N) * r_c`` on the
idle buffer.  Yields are fractions of initial capital.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, ValidationError

DAYS_PER_YEAR = 365
MAX_GAP_DAYS = 3
MIN_OBSERVATIONS = 30


@dataclass(frozen=True)
class MarketSeries:
    dates: tuple
    closes: np.ndarray
    tvl: float
    daily_volume: float
    fee_rate: float
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if len(self.dates) != len(self.closes):
            raise ValidationError("dates and closes differ in length")
        if len(self.dates) < 2:
            raise ValidationError("need at least two observations")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur == prev:
                raise ValidationError(f"duplicate date {cur.isoformat()}")
            if cur < prev:
                raise ValidationError(f"dates not increasing at {cur.isoformat()}")
        closes = np.asarray(self.closes, float)
        if not (np.isfinite(closes).all() and (closes > 0).all()):
            raise ValidationError("closes must be positive and finite")
        object.__setattr__(self, "closes", closes)
        if not 0 < self.fee_rate <= 0.01:
            raise ValidationError(f"fee_rate must lie in (0, 0.01], got {self.fee_rate}")
        if self.tvl < 0 or self.daily_volume < 0:
            raise ValidationError("tvl and daily_volume must be non-negative")

    @property
    def day_fractions(self) -> np.ndarray:
        """Length of each step in years."""
        days = np.array([(b - a).days for a, b in zip(self.dates, self.dates[1:])], float)
        return days / DAYS_PER_YEAR

    @property
    def log_returns(self) -> np.ndarray:
        return np.diff(np.log(self.closes))


def _gap_warnings(dates) -> list[str]:
    out = []
    for a, b in zip(dates, dates[1:]):
        gap = (b - a).days
        if gap > MAX_GAP_DAYS:
            out.append(f"{gap}-day gap between {a.isoformat()} and {b.isoformat()}")
    return out


def _load_mapping(src) -> dict:
    if isinstance(src, dict):
        return dict(src)
    path = Path(src)
    text = path.read_text()
    if path.suffix == ".toml":
        from ._toml import loads

        return loads(text)
    return json.loads(text)


def load_series(path, aggregates, schema: dict | None = None) -> MarketSeries:
    """Read ``date,close`` rows from CSV and attach pool aggregates.

    ``aggregates`` is a mapping (or a JSON/TOML file) with ``tvl``,
    ``daily_volume`` and ``fee_rate``.  ``schema`` maps the logical columns
    ``date`` and ``close`` to header names in the file.  Gaps longer than
    three days are accepted and listed in ``MarketSeries.warnings``.
    """
    cols = {"date": "date", "close": "close"}
    if schema:
        unknown = set(schema) - set(cols)
        if unknown:
            raise ValidationError(f"unknown schema keys {sorted(unknown)}")
        cols.update(schema)
    agg = _load_mapping(aggregates)
    missing = {"tvl", "daily_volume", "fee_rate"} - set(agg)
    extra = set(agg) - {"tvl", "daily_volume", "fee_rate"}
    if missing or extra:
        raise ValidationError(f"aggregates: missing {sorted(missing)}, unknown {sorted(extra)}")

    dates, closes = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for c in cols.values():
            if c not in header:
                raise ParseError(f"missing column {c!r}", 1)
        for row_no, row in enumerate(reader, start=2):
            try:
                d = date.fromisoformat(row[cols["date"]].strip())
                c = float(row[cols["close"]])
            except (TypeError, ValueError, AttributeError) as exc:
                raise ParseError(str(exc), row_no) from None
            dates.append(d)
            closes.append(c)
    notes = _gap_warnings(dates)
    for msg in notes:
        warnings.warn(msg, stacklevel=2)
    return MarketSeries(
        tuple(dates), np.array(closes), float(agg["tvl"]), float(agg["daily_volume"]),
        float(agg["fee_rate"]), tuple(notes),
    )


def realized_vol(series: MarketSeries) -> float:
    """Annualised sample std of daily log-returns."""
    if len(series.closes) < MIN_OBSERVATIONS:
        raise ValidationError(
            f"need at least {MIN_OBSERVATIONS} observations, got {len(series.closes)}"
        )
    return float(np.std(series.log_returns, ddof=1) * math.sqrt(DAYS_PER_YEAR))


def fee_apr(series: MarketSeries) -> tuple[float, float]:
    """Gross fee APR on TVL and its daily-compounded APY."""
    if not series.tvl > 0:
        raise DomainError("TVL must be positive")
    annual_fees = series.daily_volume * series.fee_rate * DAYS_PER_YEAR
    apr = annual_fees / series.tvl
    return apr, apr_to_apy(apr)


def apr_to_apy(apr: float) -> float:
    return (1.0 + apr / DAYS_PER_YEAR) ** DAYS_PER_YEAR - 1.0


def rolling_variance(returns: np.ndarray, dts: np.ndarray, window: int) -> np.ndarray:
    """Annualised trailing realised variance, zero-mean, per step.

    Step ``i`` averages ``r_j**2 / dt_j`` over the last ``window`` steps up to
    and including ``i``; the first ``window - 1`` steps use what is available.
    """
    if window < 1:
        raise ValidationError("vol window must be at least 1")
    per_year = returns**2 / dts
    csum = np.concatenate(([0.0], np.cumsum(per_year)))
    idx = np.arange(1, len(returns) + 1)
    lo = np.maximum(0, idx - window)
    return (csum[idx] - csum[lo]) / (idx - lo)


@dataclass(frozen=True)
class BacktestSeries:
    dates: tuple
    net_yield_std: np.ndarray
    net_yield_hlcp: np.ndarray
    cum_lvr_drag: np.ndarray
    cum_fees: np.ndarray
    fee_apr: float
    realized_vol: float
    params: dict

    def rows(self):
        for i, d in enumerate(self.dates):
            yield (d.isoformat(), float(self.net_yield_std[i]), float(self.net_yield_hlcp[i]),
                   float(self.cum_lvr_drag[i]), float(self.cum_fees[i]))

    @property
    def columns(self) -> tuple:
        return ("date", "net_yield_std", "net_yield_hlcp", "cum_lvr_drag", "cum_fees")

    @property
    def final_gap(self) -> float:
        return float(self.net_yield_hlcp[-1] - self.net_yield_std[-1])


def run_backtest(
    series: MarketSeries,
    n_ratio: float = 0.5,
    y_c_rate: float = 0.0,
    vol_window: int = 30,
    constant_vol: bool = False,
    compound_fees: bool = False,
    exposure: str = "initial",
    sigma: float | None = None,
    apr: float | None = None,
    hlcp_fee_haircut: float = 0.0,
) -> BacktestSeries:
    """Cumulative net yield of both positions on each date.

    ``cum_lvr_drag`` is the drag on a fully exposed position; the standard
    pool pays all of it and the hybrid pool ``n_ratio`` of it.

    ``constant_vol`` uses one volatility for every step: ``sigma`` if given,
    else the full-sample realised vol.  Otherwise the drag follows a trailing
    ``vol_window``-day realised variance.  ``exposure="marked"`` scales the
    drag by the constant-product value ``sqrt(P_t / P_0)`` instead of the
    initial capital.  ``apr`` overrides the fee APR derived from the series
    aggregates.  ``hlcp_fee_haircut`` removes that fraction of the hybrid
    pool's fees (robustness extension; 0 reproduces proportional routing).
    """
    if not 0 < n_ratio <= 1:
        raise ValidationError(f"n_ratio must lie in (0, 1], got {n_ratio}")
    if y_c_rate < 0:
        raise ValidationError("y_c_rate must be non-negative")
    if exposure not in ("initial", "marked"):
        raise ValidationError(f"exposure must be 'initial' or 'marked', got {exposure!r}")
    if not 0 <= hlcp_fee_haircut <= 1:
        raise ValidationError("hlcp_fee_haircut must lie in [0, 1]")

    fee_rate = fee_apr(series)[0] if apr is None else apr
    dts = series.day_fractions
    rets = series.log_returns
    enough = len(series.closes) >= MIN_OBSERVATIONS
    full_vol = realized_vol(series) if enough else math.nan
    if constant_vol:
        vol = realized_vol(series) if sigma is None else sigma
        variances = np.full(len(rets), vol * vol)
    else:
        variances = rolling_variance(rets, dts, vol_window)

    if exposure == "marked":
        scale = np.sqrt(series.closes[:-1] / series.closes[0])
    else:
        scale = np.ones(len(rets))

    drag = np.concatenate(([0.0], np.cumsum(variances / 8.0 * scale * dts)))
    elapsed = np.concatenate(([0.0], np.cumsum(dts)))
    if compound_fees:
        fees = (1.0 + fee_rate / DAYS_PER_YEAR) ** (elapsed * DAYS_PER_YEAR) - 1.0
    else:
        fees = fee_rate * elapsed
    buffer_yield = (1.0 - n_ratio) * y_c_rate * elapsed

    net_std = fees - drag
    net_hlcp = fees * (1.0 - hlcp_fee_haircut) - n_ratio * drag + buffer_yield
    params = {
        "n_ratio": n_ratio, "y_c_rate": y_c_rate, "vol_window": vol_window,
        "constant_vol": constant_vol, "compound_fees": compound_fees,
        "exposure": exposure, "sigma": sigma, "apr": apr,
        "hlcp_fee_haircut": hlcp_fee_haircut, "fee_routing": "proportional",
    }
    return BacktestSeries(
        series.dates, net_std, net_hlcp, drag, fees, fee_rate, full_vol, params,
    )


def synthetic_series(
    n_days: int = 365,
    sigma: float = 0.7456,
    s0: float = 3300.0,
    start: date = date(2025, 1, 1),
    seed: int = 0,
    tvl: float = 31.21e6,
    daily_volume: float = 3.15e6,
    fee_rate: float = 0.003,
    exact_vol: bool = False,
) -> MarketSeries:
    """Daily GBM closes (``n_days`` steps) for demos and tests.

    With ``exact_vol`` the log-returns are rescaled so the sample realised
    vol equals ``sigma`` exactly.
    """
    from datetime import timedelta

    from .rng import make_rng

    rng = make_rng(seed)
    dt = 1.0 / DAYS_PER_YEAR
    r = rng.normal(-0.5 * sigma**2 * dt, sigma * math.sqrt(dt), n_days)
    if exact_vol:
        r = (r - r.mean()) * (sigma * math.sqrt(dt) / np.std(r, ddof=1))
    closes = s0 * np.exp(np.concatenate(([0.0], np.cumsum(r))))
    dates = tuple(start + timedelta(days=i) for i in range(n_days + 1))
    return MarketSeries(dates, closes, tvl, daily_volume, fee_rate)


def write_series_csv(series: MarketSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "close"])
        for d, c in zip(series.dates, series.closes.tolist()):
            w.writerow([d.isoformat(), repr(c)])
