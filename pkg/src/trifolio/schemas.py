"""Request and response bodies for the HTTP service.

Price data travels inline as a PanelPayload (column-major friendly JSON of
dates, tickers, and a row-per-date price matrix) so every endpoint is usable
without shared filesystem state.  The run/validate/fetch endpoints instead
take a full run config, mirroring the CLI.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .market_data import PricePanel


class PanelPayload(BaseModel):
    """Inline close-price panel: one row of prices per date."""

    model_config = ConfigDict(extra="forbid")

    tickers: list[str] = Field(min_length=1)
    dates: list[str] = Field(min_length=1)
    prices: list[list[float]] = Field(min_length=1)

    def to_panel(self) -> PricePanel:
        return PricePanel(
            tickers=tuple(self.tickers),
            dates=tuple(self.dates),
            prices=np.asarray(self.prices, dtype=float),
        )


class StatsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    panel: PanelPayload


class StockStatsBody(BaseModel):
    ticker: str
    mean_daily_return: float
    daily_volatility: float
    annual_return: float
    annual_volatility: float


class StatsResponse(BaseModel):
    stats: list[StockStatsBody]


class MvpRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    panel: PanelPayload
    n_candidates: int = Field(default=10_000, ge=1)
    seed: int = 0
    risk_free: float = 0.0


class PortfolioBody(BaseModel):
    method: str
    weights: dict[str, float]
    annual_return: float | None = None
    annual_volatility: float | None = None
    sharpe_ratio: float | None = None


class MvpResponse(BaseModel):
    portfolio: PortfolioBody
    min_volatility: PortfolioBody


class HrpRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    panel: PanelPayload


class LinkageRowBody(BaseModel):
    left: int
    right: int
    height: float
    count: int


class HrpResponse(BaseModel):
    portfolio: PortfolioBody
    linkage: list[LinkageRowBody]
    leaf_order: list[int]


class AutoencoderRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    panel: PanelPayload
    code_dim: int = Field(default=5, ge=1)
    epochs: int = Field(default=500, ge=1)
    batch_size: int = Field(default=10, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    seed: int = 0


class AutoencoderResponse(BaseModel):
    portfolio: PortfolioBody
    losses: list[float]


class EvaluateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    panel: PanelPayload
    weights: dict[str, float]
    method: str = "custom"
    period: str = "train"
    risk_free: float = 0.0


class CumulativePointBody(BaseModel):
    date: str
    factor: float


class EvaluateResponse(BaseModel):
    method: str
    period: str
    annual_return: float
    annual_volatility: float
    sharpe: float
    risk_free: float
    cumulative: list[CumulativePointBody]


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict


class PerformanceRowBody(BaseModel):
    sector: str
    method: str
    period: str
    annual_return_pct: float
    annual_volatility_pct: float
    sharpe: float


class RunResponse(BaseModel):
    sector_name: str
    files: dict[str, str]
    performance: list[PerformanceRowBody]


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict


class ValidateResponse(BaseModel):
    violations: list[str]


class FetchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict


class FetchResponse(BaseModel):
    cached: list[str]
    cache_dir: str


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorBody(BaseModel):
    """Error shape returned for every domain failure."""

    stage: str
    kind: str
    message: str
