"""Scoring frozen portfolio weights on a window of daily returns.

A portfolio's daily return is the weight-weighted sum of its stocks' daily
returns (weights stay fixed; no drift modeling).  Reports carry the annual
return (mean x 250), annual volatility (sample std x sqrt(250)), the Sharpe
ratio, and the compounded cumulative-return series used for charting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError
from .market_data import TRADING_DAYS_PER_YEAR, ReturnPanel
from .mvp import Portfolio, sharpe_ratio


@dataclass(frozen=True)
class PerformanceReport:
    """Annualized performance of one (method, period) combination.

    ``cumulative`` pairs each date with the compounded growth factor of one
    unit invested at the window start; its first entry is the window-start
    date at exactly 1.0.
    """

    method: str
    period: str
    annual_return: float
    annual_volatility: float
    sharpe: float
    risk_free: float
    cumulative: tuple[tuple[str, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "cumulative", tuple(self.cumulative))
        if self.period not in ("train", "test"):
            raise DataError(f"unknown period tag {self.period!r}")
        for name in ("annual_return", "annual_volatility", "sharpe", "risk_free"):
            if not math.isfinite(getattr(self, name)):
                raise NumericError(f"non-finite {name}")
        expected = (self.annual_return - self.risk_free) / self.annual_volatility
        if abs(self.sharpe - expected) > 1e-9:
            raise NumericError("sharpe does not match (return - rf) / volatility")
        if not self.cumulative:
            raise DataError("empty cumulative series")
        if self.cumulative[0][1] != 1.0:
            raise NumericError("cumulative series must start at 1.0")
        for _, factor in self.cumulative:
            if not math.isfinite(factor) or factor <= 0.0:
                raise NumericError(f"non-positive cumulative factor {factor!r}")


def portfolio_daily_returns(portfolio: Portfolio, returns: ReturnPanel) -> np.ndarray:
    """Daily weighted return series ``r_p(t) = sum_i w_i r_i(t)``.

    Weights align to the panel by ticker name, so the portfolio and panel
    may list stocks in different orders.
    """
    if len(set(portfolio.tickers)) != len(portfolio.tickers):
        raise DataError("duplicate portfolio tickers")
    if set(portfolio.tickers) != set(returns.tickers):
        missing = set(portfolio.tickers) ^ set(returns.tickers)
        raise DataError(f"portfolio and panel tickers differ: {sorted(missing)}")
    weight_of = dict(zip(portfolio.tickers, portfolio.weights))
    aligned = np.array([weight_of[t] for t in returns.tickers], dtype=float)
    return returns.returns @ aligned


def cumulative_returns(daily: np.ndarray) -> np.ndarray:
    """Compounded growth factors: 1, (1+r1), (1+r1)(1+r2), ...

    Output is one longer than the input series.
    """
    daily = np.asarray(daily, dtype=float)
    if not np.all(np.isfinite(daily)):
        raise NumericError("non-finite daily return")
    if np.any(daily <= -1.0):
        raise NumericError("daily return <= -100% cannot compound")
    return np.concatenate(([1.0], np.cumprod(1.0 + daily)))


def evaluate(
    portfolio: Portfolio,
    returns: ReturnPanel,
    risk_free: float = 0.0,
    period: str = "train",
) -> PerformanceReport:
    """Annualized performance of fixed weights over one return window."""
    if returns.n_rows < 2:
        raise DataError("need at least 2 return rows to evaluate")
    if not returns.start_date:
        raise DataError("return panel has no start date for the cumulative anchor")
    daily = portfolio_daily_returns(portfolio, returns)
    annual_return = float(np.mean(daily)) * TRADING_DAYS_PER_YEAR
    annual_volatility = float(np.std(daily, ddof=1)) * math.sqrt(TRADING_DAYS_PER_YEAR)
    if annual_volatility <= 0.0:
        raise NumericError("zero-volatility portfolio return series")
    factors = cumulative_returns(daily)
    dates = (returns.start_date,) + returns.dates
    return PerformanceReport(
        method=portfolio.method,
        period=period,
        annual_return=annual_return,
        annual_volatility=annual_volatility,
        sharpe=sharpe_ratio(annual_return, annual_volatility, risk_free),
        risk_free=risk_free,
        cumulative=tuple(zip(dates, (float(f) for f in factors))),
    )
