"""Daily close-price panels, returns, and the statistics derived from them.

This module owns the tabular market-data types used by every allocation
method: aligned close-price panels, daily simple returns, per-stock
return/volatility statistics, and the covariance/correlation matrices of
daily returns.

Conventions
-----------
* Daily simple returns: ``r_t = p_{t+1} / p_t - 1``.
* Annualization assumes 250 trading days: means scale by 250, standard
  deviations by sqrt(250).
* Standard deviations and covariances use the sample (N-1) denominator.
* Missing cells in price CSVs are forward-filled from the prior row;
  leading rows with missing values are dropped.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError

TRADING_DAYS_PER_YEAR = 250

# Header used by the price CSV interchange format.
PRICE_CSV_DATE_COLUMN = "date"


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PricePanel:
    """Aligned daily close prices for N stocks over T trading days.

    Invariants (checked on construction): all prices strictly positive and
    finite; dates strictly increasing ISO-8601 strings with no duplicates;
    the price matrix is T x N.
    """

    tickers: tuple[str, ...]
    dates: tuple[str, ...]
    prices: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        prices = _readonly(self.prices)
        object.__setattr__(self, "prices", prices)
        if prices.ndim != 2:
            raise DataError("price matrix must be 2-dimensional")
        t, n = prices.shape
        if n != len(self.tickers):
            raise DataError(
                f"price matrix has {n} columns for {len(self.tickers)} tickers"
            )
        if t != len(self.dates):
            raise DataError(f"price matrix has {t} rows for {len(self.dates)} dates")
        if len(set(self.tickers)) != len(self.tickers):
            raise DataError("duplicate tickers")
        if not np.all(np.isfinite(prices)):
            raise DataError("non-finite price")
        if np.any(prices <= 0.0):
            raise DataError("non-positive price")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise DataError(f"non-increasing dates: {prev!r} then {cur!r}")

    @property
    def n_rows(self) -> int:
        return self.prices.shape[0]

    @property
    def n_stocks(self) -> int:
        return self.prices.shape[1]

    def window(self, start_date: str, end_date: str) -> "PricePanel":
        """Rows with ``start_date <= date <= end_date`` (ISO string order)."""
        keep = [i for i, d in enumerate(self.dates) if start_date <= d <= end_date]
        if not keep:
            raise DataError(f"no rows between {start_date} and {end_date}")
        return PricePanel(
            tickers=self.tickers,
            dates=tuple(self.dates[i] for i in keep),
            prices=self.prices[keep, :],
        )

    def select(self, tickers: tuple[str, ...] | list[str]) -> "PricePanel":
        """Columns restricted to ``tickers``, in the order given."""
        missing = [t for t in tickers if t not in self.tickers]
        if missing:
            raise DataError(f"panel has no columns for {missing}")
        cols = [self.tickers.index(t) for t in tickers]
        return PricePanel(
            tickers=tuple(tickers),
            dates=self.dates,
            prices=self.prices[:, cols],
        )


@dataclass(frozen=True)
class ReturnPanel:
    """Daily simple returns derived from a :class:`PricePanel`.

    ``dates`` are the source panel's dates[1:]; ``start_date`` keeps the
    source panel's first date so cumulative-return series can anchor their
    leading 1.0 factor.
    """

    tickers: tuple[str, ...]
    dates: tuple[str, ...]
    returns: np.ndarray = field(repr=False)
    start_date: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "dates", tuple(self.dates))
        returns = _readonly(self.returns)
        object.__setattr__(self, "returns", returns)
        if returns.ndim != 2:
            raise DataError("return matrix must be 2-dimensional")
        if returns.shape[1] != len(self.tickers):
            raise DataError("return matrix width does not match tickers")
        if returns.shape[0] != len(self.dates):
            raise DataError("return matrix height does not match dates")
        if not np.all(np.isfinite(returns)):
            raise DataError("non-finite return")
        if np.any(returns <= -1.0):
            raise DataError("return <= -1 implies a non-positive price")

    @property
    def n_rows(self) -> int:
        return self.returns.shape[0]


@dataclass(frozen=True)
class StockStats:
    """Per-stock summary statistics of daily simple returns."""

    ticker: str
    mean_daily_return: float
    daily_volatility: float
    annual_return: float
    annual_volatility: float


@dataclass(frozen=True)
class CovarianceMatrix:
    """Sample covariance of daily returns (fraction^2 per day)."""

    tickers: tuple[str, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        m = _readonly(self.matrix)
        object.__setattr__(self, "matrix", m)
        _check_square(m, len(self.tickers))
        if np.any(np.diag(m) < 0.0):
            raise NumericError("negative variance on covariance diagonal")

    def variance(self, i: int) -> float:
        return float(self.matrix[i, i])


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pearson correlations of daily returns, unit diagonal."""

    tickers: tuple[str, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        m = _readonly(self.matrix)
        object.__setattr__(self, "matrix", m)
        _check_square(m, len(self.tickers))
        if np.any(np.abs(m) > 1.0 + 1e-12):
            raise NumericError("correlation outside [-1, 1]")
        if not np.all(np.diag(m) == 1.0):
            raise NumericError("correlation diagonal must be exactly 1")


def _check_square(m: np.ndarray, n: int) -> None:
    if m.ndim != 2 or m.shape != (n, n):
        raise DataError(f"expected a {n}x{n} matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("non-finite matrix entry")
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-12:
        raise NumericError("matrix is not symmetric within 1e-12")


def load_price_csv(path) -> PricePanel:
    """Load and validate a close-price CSV.

    Expected format: UTF-8, comma separated, header ``date,<TICKER>,...``,
    ISO-8601 dates, decimal prices, empty cell = missing. Rows with missing
    values are forward-filled from the prior row; leading rows that still
    have missing values are dropped.

    Raises
    ------
    DataError
        On malformed CSV, non-positive prices, non-increasing dates, or
        fewer than 3 rows after cleaning.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read price CSV {path}: {exc}") from exc
    return parse_price_csv(text)


def parse_price_csv(text: str) -> PricePanel:
    """Parse CSV text into a :class:`PricePanel` (same rules as the file loader)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty CSV") from None
    if len(header) < 2 or header[0].strip().lower() != PRICE_CSV_DATE_COLUMN:
        raise DataError("malformed CSV header: expected 'date,<TICKER>,...'")
    tickers = tuple(h.strip() for h in header[1:])
    if any(not t for t in tickers):
        raise DataError("malformed CSV header: empty ticker name")

    dates: list[str] = []
    rows: list[list[float | None]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(tickers) + 1:
            raise DataError(f"malformed CSV row {lineno}: expected {len(tickers) + 1} cells")
        dates.append(row[0].strip())
        cells: list[float | None] = []
        for raw in row[1:]:
            raw = raw.strip()
            if raw == "":
                cells.append(None)
                continue
            try:
                value = float(raw)
            except ValueError:
                raise DataError(f"malformed CSV row {lineno}: {raw!r} is not a number") from None
            if not math.isfinite(value) or value <= 0.0:
                raise DataError(f"non-positive price {raw!r} at row {lineno}")
            cells.append(value)
        rows.append(cells)

    # Drop leading rows that cannot be forward-filled, then fill the rest.
    start = 0
    while start < len(rows) and any(c is None for c in rows[start]):
        start += 1
    dates = dates[start:]
    rows = rows[start:]
    filled = np.empty((len(rows), len(tickers)), dtype=float)
    for i, cells in enumerate(rows):
        for j, cell in enumerate(cells):
            filled[i, j] = filled[i - 1, j] if cell is None else cell

    if len(rows) < 3:
        raise DataError(f"fewer than 3 rows after cleaning ({len(rows)})")
    return PricePanel(tickers=tickers, dates=tuple(dates), prices=filled)


def render_price_csv(panel: PricePanel) -> str:
    """Render a panel back to the CSV interchange format (exact round-trip)."""
    lines = [",".join((PRICE_CSV_DATE_COLUMN,) + panel.tickers)]
    for i, date in enumerate(panel.dates):
        lines.append(date + "," + ",".join(repr(float(v)) for v in panel.prices[i]))
    return "\n".join(lines) + "\n"


def daily_returns(panel: PricePanel) -> ReturnPanel:
    """Daily simple returns ``p_{t+1}/p_t - 1`` for each stock."""
    if panel.n_rows < 2:
        raise DataError("need at least 2 price rows to compute returns")
    rets = panel.prices[1:, :] / panel.prices[:-1, :] - 1.0
    return ReturnPanel(
        tickers=panel.tickers,
        dates=panel.dates[1:],
        returns=rets,
        start_date=panel.dates[0],
    )


def stock_stats(returns: ReturnPanel, ticker: str) -> StockStats:
    """Daily/annual return and volatility statistics for one stock.

    The daily volatility is the sample standard deviation (N-1 denominator)
    of the daily returns; annual figures scale by 250 and sqrt(250).
    """
    if ticker not in returns.tickers:
        raise DataError(f"unknown ticker {ticker!r}")
    if returns.n_rows < 2:
        raise DataError("need at least 2 return rows for statistics")
    col = returns.returns[:, returns.tickers.index(ticker)]
    mean_daily = float(np.mean(col))
    daily_vol = float(np.std(col, ddof=1))
    return StockStats(
        ticker=ticker,
        mean_daily_return=mean_daily,
        daily_volatility=daily_vol,
        annual_return=mean_daily * TRADING_DAYS_PER_YEAR,
        annual_volatility=daily_vol * math.sqrt(TRADING_DAYS_PER_YEAR),
    )


def annual_returns(returns: ReturnPanel) -> np.ndarray:
    """Vector of annualized mean returns, one entry per ticker."""
    if returns.n_rows < 2:
        raise DataError("need at least 2 return rows for statistics")
    return np.mean(returns.returns, axis=0) * TRADING_DAYS_PER_YEAR


def covariance_matrix(returns: ReturnPanel) -> CovarianceMatrix:
    """Sample covariance matrix of daily returns (N-1 denominator)."""
    if returns.n_rows < 2:
        raise DataError("need at least 2 return rows for a covariance matrix")
    cov = np.cov(returns.returns, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    cov = (cov + cov.T) / 2.0  # enforce exact symmetry against rounding
    return CovarianceMatrix(tickers=returns.tickers, matrix=cov)


def correlation_matrix(cov: CovarianceMatrix) -> CorrelationMatrix:
    """Correlations ``rho_ij = cov_ij / (sigma_i sigma_j)`` with unit diagonal."""
    variances = np.diag(cov.matrix)
    for ticker, var in zip(cov.tickers, variances):
        if var <= 0.0:
            raise NumericError(f"zero-variance stock {ticker!r}")
    sigma = np.sqrt(variances)
    corr = cov.matrix / np.outer(sigma, sigma)
    corr = np.clip(corr, -1.0, 1.0)
    corr = (corr + corr.T) / 2.0
    np.fill_diagonal(corr, 1.0)
    return CorrelationMatrix(tickers=cov.tickers, matrix=corr)
