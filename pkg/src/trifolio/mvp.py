"""Monte-Carlo mean-variance portfolios.

Candidate portfolios are sampled by drawing N uniform(0, 1) variates and
normalizing by their sum, so every candidate lies on the long-only simplex.
Each candidate is scored by annual return ``w . mu``, annual volatility
``sqrt(w' Sigma w * 250)`` (Sigma is the daily covariance), and Sharpe ratio
``(return - risk_free) / volatility``.  The max-Sharpe candidate is the
selected portfolio; the min-volatility candidate marks the other end of the
sampled frontier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericError
from .market_data import TRADING_DAYS_PER_YEAR, CovarianceMatrix

DEFAULT_N_CANDIDATES = 10_000

# Quadratic forms below this are treated as numerical noise around zero;
# anything more negative means the covariance input is not PSD.
NEGATIVE_VARIANCE_TOLERANCE = -1e-12


@dataclass(frozen=True)
class Portfolio:
    """A weighted long-only portfolio, optionally carrying its annualized score.

    Allocation methods that do not score candidates (hierarchical risk
    parity, autoencoder extraction) leave the score fields as None; the
    evaluation layer computes performance from the weights alone.
    """

    method: str
    tickers: tuple[str, ...]
    weights: np.ndarray = field(repr=False)
    annual_return: float | None = None
    annual_volatility: float | None = None
    sharpe_ratio: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.shape[0] != len(self.tickers):
            raise DataError("weights must be a vector aligned to tickers")
        if not np.all(np.isfinite(w)):
            raise NumericError("non-finite weight")
        if np.any(w < -1e-12):
            raise NumericError("negative weight")
        if abs(float(np.sum(w)) - 1.0) > 1e-9:
            raise NumericError(f"weights sum to {float(np.sum(w))!r}, expected 1")


@dataclass(frozen=True)
class CandidateCloud:
    """All sampled candidates with their scores, in draw order.

    ``weights`` is (n_candidates, n_stocks); the three score vectors are
    aligned to its rows.  Kept whole so the frontier scatter can be exported
    and so selection tie-breaks are reproducible.
    """

    tickers: tuple[str, ...]
    weights: np.ndarray = field(repr=False)
    annual_returns: np.ndarray = field(repr=False)
    annual_volatilities: np.ndarray = field(repr=False)
    sharpe_ratios: np.ndarray = field(repr=False)
    seed: int = 0
    risk_free: float = 0.0

    def __post_init__(self):
        for name in ("weights", "annual_returns", "annual_volatilities", "sharpe_ratios"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.weights.ndim != 2:
            raise DataError("candidate weights must be 2-dimensional")
        n = self.weights.shape[0]
        for name in ("annual_returns", "annual_volatilities", "sharpe_ratios"):
            if getattr(self, name).shape != (n,):
                raise DataError(f"{name} not aligned to candidates")

    @property
    def n_candidates(self) -> int:
        return self.weights.shape[0]

    def portfolio_at(self, index: int, method: str) -> Portfolio:
        """Materialize one candidate row as a :class:`Portfolio`."""
        return Portfolio(
            method=method,
            tickers=self.tickers,
            weights=self.weights[index],
            annual_return=float(self.annual_returns[index]),
            annual_volatility=float(self.annual_volatilities[index]),
            sharpe_ratio=float(self.sharpe_ratios[index]),
        )


def portfolio_return(weights: np.ndarray, annual_mu: np.ndarray) -> float:
    """Annual portfolio return ``w . mu`` for annualized mean returns mu."""
    w = np.asarray(weights, dtype=float)
    mu = np.asarray(annual_mu, dtype=float)
    if w.shape != mu.shape:
        raise DataError("weights and returns have different lengths")
    return float(w @ mu)


def portfolio_volatility(weights: np.ndarray, daily_cov: np.ndarray) -> float:
    """Annual portfolio volatility ``sqrt(w' Sigma w * 250)``.

    Sigma is the daily covariance matrix.  A quadratic form more negative
    than -1e-12 raises; tiny negatives from rounding clamp to zero.
    """
    w = np.asarray(weights, dtype=float)
    sigma = np.asarray(daily_cov, dtype=float)
    if sigma.shape != (w.shape[0], w.shape[0]):
        raise DataError("covariance shape does not match weights")
    quad = float(w @ sigma @ w)
    if quad < NEGATIVE_VARIANCE_TOLERANCE:
        raise NumericError(f"negative portfolio variance {quad!r}")
    return math.sqrt(max(quad, 0.0) * TRADING_DAYS_PER_YEAR)


def sharpe_ratio(annual_return: float, annual_volatility: float, risk_free: float = 0.0) -> float:
    """Sharpe ratio ``(return - risk_free) / volatility``; volatility must be > 0."""
    if annual_volatility <= 0.0:
        raise NumericError("Sharpe ratio undefined for non-positive volatility")
    return (annual_return - risk_free) / annual_volatility


def sample_candidates(
    annual_mu: np.ndarray,
    cov: CovarianceMatrix,
    n_candidates: int = DEFAULT_N_CANDIDATES,
    seed: int = 0,
    risk_free: float = 0.0,
) -> CandidateCloud:
    """Draw and score ``n_candidates`` random long-only portfolios.

    Weights come from a PCG64 stream seeded with ``seed``: each candidate is
    N uniform(0, 1) draws divided by their sum.  The same seed and inputs
    always produce the identical cloud.
    """
    mu = np.asarray(annual_mu, dtype=float)
    n = len(cov.tickers)
    if mu.shape != (n,):
        raise DataError("annual return vector does not match covariance tickers")
    if n_candidates < 1:
        raise DataError("need at least one candidate")

    rng = np.random.Generator(np.random.PCG64(seed))
    raw = rng.uniform(0.0, 1.0, size=(n_candidates, n))
    sums = raw.sum(axis=1)
    if np.any(sums == 0.0):
        raise NumericError("degenerate all-zero uniform draw")
    weights = raw / sums[:, None]

    rets = weights @ mu
    quad = np.einsum("ij,jk,ik->i", weights, cov.matrix, weights)
    if np.any(quad < NEGATIVE_VARIANCE_TOLERANCE):
        raise NumericError("negative candidate variance; covariance is not PSD")
    vols = np.sqrt(np.maximum(quad, 0.0) * TRADING_DAYS_PER_YEAR)
    if np.any(vols == 0.0):
        raise NumericError("zero-volatility candidate; covariance is degenerate")
    sharpes = (rets - risk_free) / vols

    return CandidateCloud(
        tickers=cov.tickers,
        weights=weights,
        annual_returns=rets,
        annual_volatilities=vols,
        sharpe_ratios=sharpes,
        seed=seed,
        risk_free=risk_free,
    )


def max_sharpe_portfolio(cloud: CandidateCloud) -> Portfolio:
    """Candidate with the highest Sharpe ratio.

    Exact ties break to the lowest volatility, then the lowest draw index.
    """
    best = np.flatnonzero(cloud.sharpe_ratios == np.max(cloud.sharpe_ratios))
    # argmin returns the first minimum, which is the lowest surviving index
    index = int(best[np.argmin(cloud.annual_volatilities[best])])
    return cloud.portfolio_at(index, method="mvp")


def min_volatility_portfolio(cloud: CandidateCloud) -> Portfolio:
    """Candidate with the lowest volatility; ties break to the higher Sharpe,
    then the lowest draw index."""
    best = np.flatnonzero(cloud.annual_volatilities == np.min(cloud.annual_volatilities))
    index = int(best[np.argmax(cloud.sharpe_ratios[best])])
    return cloud.portfolio_at(index, method="mvp-minvol")


def frontier_rows(cloud: CandidateCloud) -> np.ndarray:
    """(n_candidates, 3) array of [annual_volatility, annual_return, sharpe]
    in draw order, matching the frontier CSV column order."""
    return np.column_stack(
        (cloud.annual_volatilities, cloud.annual_returns, cloud.sharpe_ratios)
    )
