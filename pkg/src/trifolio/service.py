"""HTTP service exposing the allocation toolkit.

Every domain failure maps to one JSON error shape ``{stage, kind, message}``
with the HTTP status chosen by kind: config errors 400, data errors 422,
numeric failures 500.  The CLI relies on ``kind`` to pick its exit code, so
handlers never let a bare exception shape leak through.
"""

from __future__ import annotations

import os

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import __version__, autoencoder, data_client, hrp, mvp, schemas
from .config import parse_config, validate_config
from .errors import ConfigError, DataError, StageError, TrifolioError
from .evaluation import evaluate
from .market_data import (
    annual_returns,
    covariance_matrix,
    daily_returns,
    stock_stats,
)
from .pipeline import run_pipeline

STATUS_BY_KIND = {"config": 400, "data": 422, "numeric": 500, "error": 500}


def portfolio_body(portfolio: mvp.Portfolio) -> schemas.PortfolioBody:
    return schemas.PortfolioBody(
        method=portfolio.method,
        weights={
            t: float(w) for t, w in zip(portfolio.tickers, portfolio.weights)
        },
        annual_return=portfolio.annual_return,
        annual_volatility=portfolio.annual_volatility,
        sharpe_ratio=portfolio.sharpe_ratio,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="trifolio", version=__version__)

    @app.exception_handler(TrifolioError)
    async def domain_error(request: Request, exc: TrifolioError):
        stage = exc.stage if isinstance(exc, StageError) else "request"
        message = str(exc.cause) if isinstance(exc, StageError) else str(exc)
        body = schemas.ErrorBody(stage=stage, kind=exc.kind, message=message)
        return JSONResponse(
            status_code=STATUS_BY_KIND.get(exc.kind, 500),
            content=body.model_dump(),
        )

    @app.exception_handler(RequestValidationError)
    async def request_error(request: Request, exc: RequestValidationError):
        body = schemas.ErrorBody(stage="request", kind="config", message=str(exc))
        return JSONResponse(status_code=400, content=body.model_dump())

    @app.get("/health", response_model=schemas.HealthResponse)
    async def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/stats", response_model=schemas.StatsResponse)
    async def stats(request: schemas.StatsRequest):
        returns = daily_returns(request.panel.to_panel())
        rows = [stock_stats(returns, t) for t in returns.tickers]
        return schemas.StatsResponse(
            stats=[schemas.StockStatsBody(**vars(r)) for r in rows]
        )

    @app.post("/portfolio/mvp", response_model=schemas.MvpResponse)
    async def portfolio_mvp(request: schemas.MvpRequest):
        returns = daily_returns(request.panel.to_panel())
        cloud = mvp.sample_candidates(
            annual_returns(returns),
            covariance_matrix(returns),
            n_candidates=request.n_candidates,
            seed=request.seed,
            risk_free=request.risk_free,
        )
        return schemas.MvpResponse(
            portfolio=portfolio_body(mvp.max_sharpe_portfolio(cloud)),
            min_volatility=portfolio_body(mvp.min_volatility_portfolio(cloud)),
        )

    @app.post("/portfolio/hrp", response_model=schemas.HrpResponse)
    async def portfolio_hrp(request: schemas.HrpRequest):
        returns = daily_returns(request.panel.to_panel())
        portfolio, tree, order = hrp.hrp_portfolio(covariance_matrix(returns))
        return schemas.HrpResponse(
            portfolio=portfolio_body(portfolio),
            linkage=[
                schemas.LinkageRowBody(left=l, right=r, height=h, count=c)
                for l, r, h, c in hrp.linkage_rows(tree)
            ],
            leaf_order=list(order),
        )

    @app.post("/portfolio/autoencoder", response_model=schemas.AutoencoderResponse)
    async def portfolio_autoencoder(request: schemas.AutoencoderRequest):
        panel = request.panel.to_panel()
        config = autoencoder.AutoencoderConfig(
            input_dim=panel.n_stocks,
            code_dim=request.code_dim,
            epochs=request.epochs,
            batch_size=request.batch_size,
            learning_rate=request.learning_rate,
            seed=request.seed,
        )
        model, trace = autoencoder.train(panel, config)
        scaled, _, _ = autoencoder.scale_prices(panel)
        portfolio = autoencoder.extract_weights(model, scaled, panel.tickers)
        return schemas.AutoencoderResponse(
            portfolio=portfolio_body(portfolio), losses=list(trace.losses)
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    async def evaluate_weights(request: schemas.EvaluateRequest):
        panel = request.panel.to_panel()
        try:
            weights = np.array(
                [request.weights[t] for t in panel.tickers], dtype=float
            )
        except KeyError as exc:
            raise DataError(f"weights missing ticker {exc.args[0]!r}") from exc
        if len(request.weights) != len(panel.tickers):
            raise DataError("weights name tickers absent from the panel")
        portfolio = mvp.Portfolio(
            method=request.method, tickers=panel.tickers, weights=weights
        )
        report = evaluate(
            portfolio,
            daily_returns(panel),
            risk_free=request.risk_free,
            period=request.period,
        )
        return schemas.EvaluateResponse(
            method=report.method,
            period=report.period,
            annual_return=report.annual_return,
            annual_volatility=report.annual_volatility,
            sharpe=report.sharpe,
            risk_free=report.risk_free,
            cumulative=[
                schemas.CumulativePointBody(date=d, factor=f)
                for d, f in report.cumulative
            ],
        )

    @app.post("/run", response_model=schemas.RunResponse)
    async def run(request: schemas.RunRequest):
        config = parse_config(request.config)
        artifacts = run_pipeline(config)
        rows = []
        for m in artifacts.methods:
            for report in (m.train_report, m.test_report):
                rows.append(
                    schemas.PerformanceRowBody(
                        sector=artifacts.sector_name,
                        method=m.method,
                        period=report.period,
                        annual_return_pct=report.annual_return * 100,
                        annual_volatility_pct=report.annual_volatility * 100,
                        sharpe=report.sharpe,
                    )
                )
        return schemas.RunResponse(
            sector_name=artifacts.sector_name,
            files=artifacts.files,
            performance=rows,
        )

    @app.post("/validate", response_model=schemas.ValidateResponse)
    async def validate(request: schemas.ValidateRequest):
        return schemas.ValidateResponse(violations=validate_config(request.config))

    @app.post("/fetch", response_model=schemas.FetchResponse)
    async def fetch(request: schemas.FetchRequest):
        config = parse_config(request.config)
        if config.fetch is None:
            raise ConfigError("fetch requires a config with a fetch data source")
        cached = []
        for ticker in config.tickers:
            spec = data_client.FetchSpec(
                ticker=ticker,
                start_date=config.train_start,
                end_date=config.test_end,
                endpoint_url_template=config.fetch.endpoint_url_template,
                cache_dir=config.fetch.cache_dir,
            )
            data_client.fetch_prices(spec)
            cached.append(ticker)
        effective_dir = (
            os.environ.get(data_client.CACHE_DIR_ENV) or config.fetch.cache_dir
        )
        return schemas.FetchResponse(cached=cached, cache_dir=effective_dir)

    return app


app = create_app()
