"""End-to-end run: load prices, fit each method on the train window,
evaluate on both windows, and render every output file.

All computation happens in memory first; files are emitted only for methods
whose whole artifact set exists, so a failure never leaves partial output.
Randomness derives from the single config seed per stage: the stage seed is
the first 8 bytes (big-endian) of SHA-256 over ``"{seed}:{stage}"``, which
keeps the sampling and training streams independent and lets either stage
be reproduced in isolation.
"""

from __future__ import annotations

import contextlib
import hashlib
from dataclasses import dataclass
from pathlib import Path

from . import autoencoder, data_client, hrp, mvp
from .config import RunConfig
from .errors import StageError, TrifolioError
from .evaluation import PerformanceReport, evaluate
from .market_data import (
    PricePanel,
    annual_returns,
    covariance_matrix,
    daily_returns,
    load_price_csv,
)

METHOD_ORDER = ("MVP", "HRP", "ENC")

PERFORMANCE_FILE = "performance.csv"
PERFORMANCE_HEADER = "sector,method,period,annual_return_pct,annual_volatility_pct,sharpe"


def stage_seed(seed: int, stage: str) -> int:
    """Derived per-stage seed: first 8 bytes of sha256(\"{seed}:{stage}\")."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class MethodArtifacts:
    """One method's fitted portfolio, its reports, and its rendered files."""

    method: str
    portfolio: mvp.Portfolio
    train_report: PerformanceReport
    test_report: PerformanceReport
    files: dict[str, str]


@dataclass(frozen=True)
class RunArtifacts:
    """Everything a run produces, keyed for emission or service transport."""

    sector_name: str
    methods: tuple[MethodArtifacts, ...]
    performance_csv: str

    @property
    def files(self) -> dict[str, str]:
        merged: dict[str, str] = {}
        for m in self.methods:
            merged.update(m.files)
        merged[PERFORMANCE_FILE] = self.performance_csv
        return merged


def load_panel(config: RunConfig) -> PricePanel:
    """Prices for the configured universe, from the CSV or the fetch spec."""
    if config.csv_path is not None:
        panel = load_price_csv(config.csv_path)
    else:
        specs = [
            data_client.FetchSpec(
                ticker=ticker,
                start_date=config.train_start,
                end_date=config.test_end,
                endpoint_url_template=config.fetch.endpoint_url_template,
                cache_dir=config.fetch.cache_dir,
            )
            for ticker in config.tickers
        ]
        panel = data_client.assemble_universe(specs)
    return panel.select(config.tickers)


def render_weights_csv(portfolio: mvp.Portfolio) -> str:
    lines = ["ticker,weight"]
    lines.extend(
        f"{ticker},{repr(float(weight))}"
        for ticker, weight in zip(portfolio.tickers, portfolio.weights)
    )
    return "\n".join(lines) + "\n"


def render_cumulative_csv(report: PerformanceReport) -> str:
    lines = ["date,factor"]
    lines.extend(f"{date},{repr(float(f))}" for date, f in report.cumulative)
    return "\n".join(lines) + "\n"


def render_frontier_csv(cloud: mvp.CandidateCloud) -> str:
    lines = ["volatility,return,sharpe"]
    lines.extend(
        f"{repr(float(v))},{repr(float(r))},{repr(float(s))}"
        for v, r, s in mvp.frontier_rows(cloud)
    )
    return "\n".join(lines) + "\n"


def render_linkage_csv(tree: hrp.LinkageTree) -> str:
    lines = ["left,right,height,count"]
    lines.extend(
        f"{left},{right},{repr(float(height))},{count}"
        for left, right, height, count in hrp.linkage_rows(tree)
    )
    return "\n".join(lines) + "\n"


def render_trace_csv(trace: autoencoder.TrainingTrace) -> str:
    lines = ["epoch,loss"]
    lines.extend(
        f"{epoch},{repr(float(loss))}"
        for epoch, loss in enumerate(trace.losses, start=1)
    )
    return "\n".join(lines) + "\n"


def render_performance_csv(sector_name: str, methods: tuple[MethodArtifacts, ...]) -> str:
    lines = [PERFORMANCE_HEADER]
    for m in methods:
        for report in (m.train_report, m.test_report):
            lines.append(
                f"{sector_name},{m.method},{report.period},"
                f"{report.annual_return * 100:.2f},"
                f"{report.annual_volatility * 100:.2f},"
                f"{report.sharpe:.4f}"
            )
    return "\n".join(lines) + "\n"


@contextlib.contextmanager
def _stage(stage_name: str):
    """Tag any domain error with the stage it happened in."""
    try:
        yield
    except StageError:
        raise
    except TrifolioError as exc:
        raise StageError(stage_name, exc) from exc


def run_pipeline(config: RunConfig, panel: PricePanel | None = None) -> RunArtifacts:
    """Fit every configured method on the train window and score both windows.

    ``panel`` short-circuits data loading (used by tests and the service);
    it must already contain all configured tickers.
    """
    if panel is None:
        with _stage("load"):
            panel = load_panel(config)
    else:
        with _stage("load"):
            panel = panel.select(config.tickers)

    with _stage("returns"):
        train_panel = panel.window(config.train_start, config.train_end)
        test_panel = panel.window(config.test_start, config.test_end)
        train_returns = daily_returns(train_panel)
        test_returns = daily_returns(test_panel)

    with _stage("stats"):
        mu = annual_returns(train_returns)
        cov = covariance_matrix(train_returns)

    methods: list[MethodArtifacts] = []
    for method in METHOD_ORDER:
        if method not in config.methods:
            continue
        extra_files: dict[str, str] = {}
        if method == "MVP":
            with _stage("mvp"):
                cloud = mvp.sample_candidates(
                    mu,
                    cov,
                    n_candidates=config.mvp_samples,
                    seed=stage_seed(config.seed, "mvp"),
                    risk_free=config.rf,
                )
                portfolio = mvp.max_sharpe_portfolio(cloud)
                extra_files["frontier_mvp.csv"] = render_frontier_csv(cloud)
        elif method == "HRP":
            with _stage("hrp"):
                portfolio, tree, _ = hrp.hrp_portfolio(cov)
                extra_files["hrp_linkage.csv"] = render_linkage_csv(tree)
                extra_files["hrp_dendrogram.txt"] = hrp.dendrogram_text(tree)
        else:
            with _stage("enc"):
                ae_config = autoencoder.AutoencoderConfig(
                    input_dim=len(config.tickers),
                    code_dim=config.autoencoder.code_dim,
                    epochs=config.autoencoder.epochs,
                    batch_size=config.autoencoder.batch_size,
                    learning_rate=config.autoencoder.learning_rate,
                    beta1=config.autoencoder.beta1,
                    beta2=config.autoencoder.beta2,
                    epsilon=config.autoencoder.epsilon,
                    seed=stage_seed(config.seed, "enc"),
                )
                model, trace = autoencoder.train(train_panel, ae_config)
                scaled, _, _ = autoencoder.scale_prices(train_panel)
                portfolio = autoencoder.extract_weights(
                    model, scaled, train_panel.tickers
                )
                extra_files["enc_training_trace.csv"] = render_trace_csv(trace)
                extra_files["enc_model.txt"] = autoencoder.save_model(model)

        with _stage("evaluate"):
            train_report = evaluate(
                portfolio, train_returns, risk_free=config.rf, period="train"
            )
            test_report = evaluate(
                portfolio, test_returns, risk_free=config.rf, period="test"
            )

        tag = method.lower()
        files = {f"weights_{tag}.csv": render_weights_csv(portfolio)}
        files.update(extra_files)
        files[f"cumulative_{tag}_train.csv"] = render_cumulative_csv(train_report)
        files[f"cumulative_{tag}_test.csv"] = render_cumulative_csv(test_report)
        methods.append(
            MethodArtifacts(
                method=method,
                portfolio=portfolio,
                train_report=train_report,
                test_report=test_report,
                files=files,
            )
        )

    artifacts = tuple(methods)
    return RunArtifacts(
        sector_name=config.sector_name,
        methods=artifacts,
        performance_csv=render_performance_csv(config.sector_name, artifacts),
    )


def write_files(files: dict[str, str], out_dir: str | Path) -> list[str]:
    """Write rendered files under ``out_dir``; returns names in written order.

    Any write failure removes what this call already wrote, so the output
    directory never holds a partial artifact set.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        for name, content in files.items():
            path = out / name
            path.write_text(content)
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return [p.name for p in written]


def write_artifacts(artifacts: RunArtifacts, out_dir: str | Path) -> list[str]:
    """Write a run's whole artifact set under ``out_dir``."""
    return write_files(artifacts.files, out_dir)
