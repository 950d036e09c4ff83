"""Building maxima series from raw prices.

Two constructions are supported: daily cross-sectional maxima of negative
log-returns over a panel of instruments, and intra-day maxima of negative
log-returns on a fixed-minute grid.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .dynamics import MaximaSeries

__all__ = [
    "PricePanel",
    "TickSeries",
    "IngestReport",
    "neg_log_returns",
    "cross_sectional_maxima",
    "intraday_maxima",
]


def neg_log_returns(prices: Sequence[float]) -> np.ndarray:
    """``r_t = -log(p_t / p_{t-1})``; one shorter than ``prices``."""
    p = np.asarray(prices, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValueError("need at least two prices")
    bad = np.flatnonzero(~(p > 0))
    if bad.size:
        raise ValueError(f"nonpositive or missing price at index {int(bad[0])}: {p[bad[0]]}")
    return -np.log(p[1:] / p[:-1])


@dataclass(frozen=True)
class IngestReport:
    """Row accounting for an ingestion run.

    ``rows_in`` counts input periods (dates or days); every one of them is
    either in the output or listed in ``dropped`` with a reason.
    """

    rows_in: int
    rows_out: int
    dropped: list[tuple[str, str]] = field(default_factory=list)
    contributors: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def reasons(self) -> dict[str, int]:
        return dict(Counter(r for _, r in self.dropped))

    def manifest_line(self) -> str:
        reasons = ";".join(f"{k}={v}" for k, v in sorted(self.reasons().items())) or "none"
        c = self.contributors
        span = f"{int(c.min())}-{int(c.max())}" if c.size else "n/a"
        return (f"rows_in={self.rows_in} rows_out={self.rows_out} dropped={len(self.dropped)} "
                f"reasons={reasons} contributors={span}")


@dataclass(frozen=True)
class PricePanel:
    """Closing prices, one row per date and one column per ticker; NaN marks a gap."""

    dates: tuple
    tickers: tuple
    prices: np.ndarray

    def __post_init__(self) -> None:
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape != (len(self.dates), len(self.tickers)):
            raise ValueError("prices must be a dates x tickers table")
        if np.any(prices[~np.isnan(prices)] <= 0):
            raise ValueError("prices must be strictly positive where present")
        d = np.asarray(self.dates, dtype="datetime64[ns]") if len(self.dates) else np.array([])
        if d.size > 1 and np.any(np.diff(d) <= np.timedelta64(0)):
            raise ValueError("dates must be strictly increasing")
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))

    @classmethod
    def from_csv(
        cls,
        path: str | Path,
        date_column: str = "date",
        tickers: Sequence[str] | None = None,
        delimiter: str = ",",
        missing: Sequence[str] = ("", "NA", "NaN", "nan", "null"),
    ) -> "PricePanel":
        """Wide layout: a date column followed by one price column per ticker."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh, delimiter=delimiter)
            cols = [c for c in (reader.fieldnames or []) if c != date_column]
            use = list(tickers) if tickers is not None else cols
            dates, rows = [], []
            for row in reader:
                dates.append(row[date_column])
                rows.append([np.nan if row[t].strip() in missing else float(row[t]) for t in use])
        prices = np.array(rows, dtype=float).reshape(len(dates), len(use))
        return cls(tuple(dates), tuple(use), prices)


@dataclass(frozen=True)
class TickSeries:
    timestamps: np.ndarray
    prices: np.ndarray

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps, dtype="datetime64[ns]")
        p = np.asarray(self.prices, dtype=float)
        if ts.shape != p.shape or ts.ndim != 1:
            raise ValueError("timestamps and prices must be aligned 1-d arrays")
        if ts.size > 1 and np.any(np.diff(ts) < np.timedelta64(0)):
            i = int(np.flatnonzero(np.diff(ts) < np.timedelta64(0))[0]) + 1
            raise ValueError(f"timestamps out of order at row {i}")
        if np.any(~(p > 0)):
            raise ValueError("tick prices must be positive")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "prices", p)

    @classmethod
    def from_csv(
        cls,
        path: str | Path,
        time_column: str = "timestamp",
        price_column: str = "price",
        delimiter: str = ",",
    ) -> "TickSeries":
        ts, px = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh, delimiter=delimiter):
                ts.append(np.datetime64(row[time_column].strip().replace("Z", ""), "ns"))
                px.append(float(row[price_column]))
        return cls(np.array(ts, dtype="datetime64[ns]"), np.array(px))


def cross_sectional_maxima(panel: PricePanel) -> tuple[MaximaSeries, IngestReport]:
    """Per-date maximum negative log-return across tickers.

    A ticker contributes on a date only when it has prices on that date and
    the previous one; nothing is imputed. The first date and dates with no
    contributor are dropped and reported.
    """
    if len(panel.dates) == 0 or len(panel.tickers) == 0:
        raise ValueError("empty panel")
    p = panel.prices
    with np.errstate(invalid="ignore"):
        r = -np.log(p[1:] / p[:-1])
    valid = ~np.isnan(r)
    counts = valid.sum(axis=1)
    dropped = [(str(panel.dates[0]), "no_previous_price")]
    keep = counts > 0
    dropped += [(str(panel.dates[t + 1]), "no_contributor") for t in np.flatnonzero(~keep)]
    q = np.max(np.where(valid, r, -np.inf), axis=1)[keep]
    labels = tuple(panel.dates[t + 1] for t in np.flatnonzero(keep))
    report = IngestReport(len(panel.dates), int(keep.sum()), dropped, counts[keep].astype(int))
    return MaximaSeries(q, labels), report


def _resample_day(minutes: np.ndarray, prices: np.ndarray, interval: int) -> np.ndarray:
    """Last price in each interval, carried forward over empty intervals.

    ``minutes`` are minutes since midnight of one day, nondecreasing. The grid
    runs from the first to the last occupied interval.
    """
    slot = np.floor_divide(minutes, interval).astype(np.int64)
    # Last tick of each occupied slot.
    last = np.flatnonzero(np.r_[slot[1:] != slot[:-1], True])
    occ_slot, occ_price = slot[last], prices[last]
    grid = np.arange(occ_slot[0], occ_slot[-1] + 1)
    pos = np.searchsorted(occ_slot, grid, side="right") - 1
    return occ_price[pos]


def intraday_maxima(ticks: TickSeries, interval: int = 5) -> tuple[MaximaSeries, IngestReport]:
    """Daily maximum of within-day negative log-returns on an ``interval``-minute grid.

    Returns never span two days. Days with fewer than two grid points are
    dropped and reported.
    """
    if int(interval) != interval or interval <= 0:
        raise ValueError("interval must be a positive whole number of minutes")
    interval = int(interval)
    ts = ticks.timestamps
    if ts.size == 0:
        raise ValueError("no ticks")
    day = ts.astype("datetime64[D]")
    minutes = (ts - day).astype("timedelta64[s]").astype(np.int64) / 60.0
    bounds = np.flatnonzero(np.r_[True, day[1:] != day[:-1], True])
    values, labels, counts, dropped = [], [], [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        label = str(day[a])
        grid = _resample_day(minutes[a:b], ticks.prices[a:b], interval)
        if grid.size < 2:
            dropped.append((label, "fewer_than_two_slots"))
            continue
        r = -np.log(grid[1:] / grid[:-1])
        values.append(float(r.max()))
        labels.append(label)
        counts.append(r.size)
    n_days = bounds.size - 1
    report = IngestReport(n_days, len(values), dropped, np.array(counts, dtype=int))
    if not values:
        raise ValueError("no day has two or more resampled prices")
    return MaximaSeries(np.array(values), tuple(labels)), report
