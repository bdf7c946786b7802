"""Price and return panels, CSV ingestion and distribution moments.

Panels are stored asset-major: ``prices`` has shape ``(n_assets, n_dates)``
and ``returns`` has shape ``(n_assets, n_dates - 1)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from ._validation import DataError, check_series


class MissingPolicy(str, Enum):
    DROP_ROW = "drop-row"
    FORWARD_FILL = "forward-fill"


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _check_dates(dates):
    dates = np.asarray(dates, dtype="datetime64[D]")
    if dates.ndim != 1:
        raise DataError("dates must be one-dimensional")
    if dates.size > 1:
        step = np.diff(dates).astype(np.int64)
        if np.any(step == 0):
            raise DataError("duplicate date")
        if np.any(step < 0):
            raise DataError("dates must be strictly increasing")
    return dates


def _check_ids(asset_ids, n):
    ids = tuple(str(a) for a in asset_ids)
    if len(ids) != n:
        raise DataError(f"expected {n} asset ids, got {len(ids)}")
    if len(set(ids)) != len(ids):
        raise DataError("asset ids must be unique")
    return ids


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Aligned strictly positive price levels."""

    dates: np.ndarray
    prices: np.ndarray
    asset_ids: tuple

    def __post_init__(self):
        dates = _check_dates(self.dates)
        prices = np.atleast_2d(np.asarray(self.prices, dtype=float))
        if prices.shape[1] != dates.size:
            raise DataError(
                f"prices have {prices.shape[1]} columns but there are {dates.size} dates"
            )
        if not np.all(np.isfinite(prices)):
            raise DataError("prices contain missing or non-finite cells")
        if np.any(prices <= 0):
            raise DataError("non-positive price")
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "prices", _frozen(prices))
        object.__setattr__(self, "asset_ids", _check_ids(self.asset_ids, prices.shape[0]))

    @property
    def n_assets(self):
        return self.prices.shape[0]

    @property
    def n_dates(self):
        return self.prices.shape[1]


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """Arithmetic per-period returns; ``dates[j]`` is the end of period ``j``."""

    dates: np.ndarray
    returns: np.ndarray
    asset_ids: tuple

    def __post_init__(self):
        dates = _check_dates(self.dates)
        returns = np.atleast_2d(np.asarray(self.returns, dtype=float))
        if returns.shape[1] != dates.size:
            raise DataError(
                f"returns have {returns.shape[1]} columns but there are {dates.size} dates"
            )
        if not np.all(np.isfinite(returns)):
            raise DataError("returns contain NaN or infinite values")
        if np.any(returns <= -1):
            raise DataError("arithmetic returns must exceed -1")
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "returns", _frozen(returns))
        object.__setattr__(self, "asset_ids", _check_ids(self.asset_ids, returns.shape[0]))

    @property
    def n_assets(self):
        return self.returns.shape[0]

    @property
    def n_periods(self):
        return self.returns.shape[1]

    def window(self, start, stop):
        """Sub-panel over periods ``[start, stop)``."""
        return ReturnPanel(self.dates[start:stop], self.returns[:, start:stop], self.asset_ids)

    def to_frame(self):
        """Date-indexed DataFrame, one column per asset."""
        return pd.DataFrame(self.returns.T, index=pd.DatetimeIndex(self.dates), columns=self.asset_ids)

    @classmethod
    def from_frame(cls, frame):
        return cls(frame.index.values, frame.to_numpy(dtype=float).T, tuple(frame.columns))


@dataclass(frozen=True)
class SummaryStats:
    """Mean, sample standard deviation, skewness and raw (non-excess) kurtosis."""

    mean: float
    std_dev: float
    skewness: float
    kurtosis: float

    COLUMNS = ("Mean", "Std. Dev.", "Skewness", "Kurtosis")

    def as_row(self):
        return (self.mean, self.std_dev, self.skewness, self.kurtosis)


def load_price_csv(path, date_column=None, assets=None, missing="drop-row"):
    """Read a price CSV into a :class:`PricePanel`.

    Parameters
    ----------
    path : str or Path
        CSV with a header row. The date column (the first column unless
        ``date_column`` is given) holds ISO-8601 dates; every other selected
        column holds prices.
    date_column : str, optional
        Name of the date column.
    assets : sequence of str, optional
        Subset and order of asset columns. Defaults to all remaining columns.
    missing : {"drop-row", "forward-fill"}
        What to do with empty or unparseable price cells. Forward filling
        cannot repair leading gaps, so rows that remain incomplete are
        dropped either way.
    """
    policy = MissingPolicy(missing)
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"price file not found: {path}")
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if frame.shape[1] < 2:
        raise DataError("price file needs a date column and at least one asset column")
    date_column = frame.columns[0] if date_column is None else date_column
    if date_column not in frame.columns:
        raise DataError(f"date column {date_column!r} not in file")
    asset_cols = [c for c in frame.columns if c != date_column] if assets is None else list(assets)
    missing_cols = [c for c in asset_cols if c not in frame.columns]
    if missing_cols:
        raise DataError(f"asset columns not in file: {missing_cols}")

    raw_dates = frame[date_column].str.strip()
    try:
        dates = pd.to_datetime(raw_dates, format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise DataError(f"malformed date: {exc}") from exc
    if dates.isna().any():
        bad = raw_dates[dates.isna()].iloc[0]
        raise DataError(f"malformed date: {bad!r}")

    values = frame[asset_cols].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    values.index = dates
    values = values.sort_index()
    if values.index.has_duplicates:
        dup = values.index[values.index.duplicated()][0]
        raise DataError(f"duplicate date: {dup.date().isoformat()}")
    if (values <= 0).any().any():
        raise DataError("non-positive price")
    if policy is MissingPolicy.FORWARD_FILL:
        values = values.ffill()
    values = values.dropna(how="any")
    if values.empty:
        raise DataError("no complete rows after applying the missing-data policy")
    return PricePanel(values.index.values, values.to_numpy(dtype=float).T, tuple(asset_cols))


def to_arithmetic_returns(panel):
    """Simple returns ``p_t / p_{t-1} - 1`` for every asset."""
    if panel.n_dates < 2:
        raise DataError("need at least two price dates to form returns")
    p = panel.prices
    returns = p[:, 1:] / p[:, :-1] - 1.0
    return ReturnPanel(panel.dates[1:], returns, panel.asset_ids)


def compound_prices(returns, p0):
    """Rebuild price paths from returns and starting levels (inverse of the above)."""
    returns = np.atleast_2d(np.asarray(returns, dtype=float))
    p0 = np.asarray(p0, dtype=float).reshape(-1, 1)
    growth = np.cumprod(1.0 + returns, axis=1)
    return np.hstack([p0, p0 * growth])


def summary_stats(series):
    """Moments of a return series.

    The standard deviation uses the ``n - 1`` denominator. Skewness and
    kurtosis are ratios of central moments ``m3 / m2**1.5`` and ``m4 / m2**2``,
    so a normal sample has kurtosis near 3 and a two-point sample exactly 1.
    """
    x = check_series(series, "series", min_length=4)
    mean = float(np.mean(x))
    dev = x - mean
    m2 = float(np.mean(dev**2))
    if m2 <= np.finfo(float).tiny or np.ptp(x) == 0:
        raise DataError("zero variance: skewness and kurtosis are undefined")
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    return SummaryStats(
        mean=mean,
        std_dev=float(np.std(x, ddof=1)),
        skewness=m3 / m2**1.5,
        kurtosis=m4 / m2**2,
    )


def write_summary_csv(path, rows):
    """Write ``{label: SummaryStats}`` in Mean / Std. Dev. / Skewness / Kurtosis order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("series",) + SummaryStats.COLUMNS)
        for label, stats in rows.items():
            writer.writerow((label,) + tuple(repr(float(v)) for v in stats.as_row()))


def load_regime_labels(path):
    """Read a ``date,state`` CSV into dates and a 0/1 integer array."""
    frame = pd.read_csv(path)
    if frame.shape[1] < 2:
        raise DataError("regime label file needs date and state columns")
    dates = _check_dates(pd.to_datetime(frame.iloc[:, 0], format="ISO8601").values)
    states = frame.iloc[:, 1].to_numpy()
    if not np.all(np.isin(states, (0, 1))):
        raise DataError("regime states must be 0 or 1")
    return dates, states.astype(np.int64)
