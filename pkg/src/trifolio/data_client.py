"""HTTP acquisition of historical close prices, with a local CSV cache.

Each (ticker, date range) request is served from the cache when possible;
otherwise the endpoint template is expanded and fetched with retries.  The
JSON payload is normalized to parallel timestamp/close arrays, cleaned of
null closes, and written to the cache as the standard price CSV so later
runs never touch the network.
"""

from __future__ import annotations

import datetime
import os
import time
from dataclasses import dataclass
from pathlib import Path

import httpx
import numpy as np

from .errors import DataError
from .market_data import PricePanel, load_price_csv, render_price_csv

CACHE_DIR_ENV = "TRIFOLIO_CACHE_DIR"
RETRY_ATTEMPTS = 3
BACKOFF_BASE_SECONDS = 0.5
REQUEST_TIMEOUT_SECONDS = 10.0

URL_PLACEHOLDERS = ("{ticker}", "{start}", "{end}")


@dataclass(frozen=True)
class FetchSpec:
    """One ticker's date range plus where to get it and where to cache it."""

    ticker: str
    start_date: str
    end_date: str
    endpoint_url_template: str
    cache_dir: str = "cache"

    def __post_init__(self):
        if not self.ticker:
            raise DataError("empty ticker")
        if self.start_date >= self.end_date:
            raise DataError(
                f"start {self.start_date!r} must precede end {self.end_date!r}"
            )
        for placeholder in URL_PLACEHOLDERS:
            if placeholder not in self.endpoint_url_template:
                raise DataError(f"endpoint template missing {placeholder}")

    @property
    def url(self) -> str:
        return self.endpoint_url_template.format(
            ticker=self.ticker, start=self.start_date, end=self.end_date
        )


def cache_path(spec: FetchSpec) -> Path:
    """Cache file for one FetchSpec; the env override beats its cache_dir."""
    root = os.environ.get(CACHE_DIR_ENV) or spec.cache_dir
    safe_ticker = spec.ticker.replace("/", "_")
    return Path(root) / f"{safe_ticker}_{spec.start_date}_{spec.end_date}.csv"


def normalize_payload(payload) -> tuple[list[int], list]:
    """Timestamp and close arrays from a chart payload.

    Accepts the flat shape ``{"timestamps": [...], "close": [...]}`` and the
    nested vendor shape ``{"chart": {"result": [{"timestamp": [...],
    "indicators": {"quote": [{"close": [...]}]}}]}}``.
    """
    if not isinstance(payload, dict):
        raise DataError("chart payload is not a JSON object")
    if "chart" in payload:
        try:
            result = payload["chart"]["result"][0]
            timestamps = result["timestamp"]
            closes = result["indicators"]["quote"][0]["close"]
        except (KeyError, IndexError, TypeError) as exc:
            raise DataError(f"malformed chart payload: {exc!r}") from exc
    else:
        timestamps = payload.get("timestamps")
        closes = payload.get("close")
    if not isinstance(timestamps, list) or not isinstance(closes, list):
        raise DataError("chart payload lacks timestamp/close arrays")
    if len(timestamps) != len(closes):
        raise DataError(
            f"timestamp/close length mismatch: {len(timestamps)} vs {len(closes)}"
        )
    return timestamps, closes


def _epoch_to_date(ts) -> str:
    try:
        moment = datetime.datetime.fromtimestamp(int(ts), datetime.timezone.utc)
    except (ValueError, TypeError, OSError, OverflowError) as exc:
        raise DataError(f"bad epoch timestamp {ts!r}") from exc
    return moment.date().isoformat()


def _payload_to_csv(spec: FetchSpec, payload) -> str:
    timestamps, closes = normalize_payload(payload)
    rows = [
        (_epoch_to_date(ts), float(close))
        for ts, close in zip(timestamps, closes)
        if close is not None
    ]
    if not rows:
        raise DataError(f"no usable close prices for {spec.ticker}")
    lines = [f"date,{spec.ticker}"]
    lines.extend(f"{date},{repr(price)}" for date, price in rows)
    return "\n".join(lines) + "\n"


def _write_cache(path: Path, text: str) -> None:
    # temp-then-rename so a concurrent reader never sees a half-written file
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def fetch_prices(
    spec: FetchSpec,
    transport: httpx.BaseTransport | None = None,
    sleep=time.sleep,
) -> PricePanel:
    """One ticker's close prices as a single-column panel.

    A cache hit skips the network entirely.  HTTP failures retry with
    exponential backoff (0.5s, 1s) up to 3 attempts; payload problems fail
    immediately.  ``transport`` and ``sleep`` exist for hermetic tests.
    """
    path = cache_path(spec)
    if path.exists():
        return load_price_csv(path)

    last_error: Exception | None = None
    payload = None
    for attempt in range(1, RETRY_ATTEMPTS + 1):
        try:
            with httpx.Client(
                transport=transport, timeout=REQUEST_TIMEOUT_SECONDS
            ) as client:
                response = client.get(spec.url)
                response.raise_for_status()
                payload = response.json()
            break
        except httpx.HTTPError as exc:
            last_error = exc
            if attempt < RETRY_ATTEMPTS:
                sleep(BACKOFF_BASE_SECONDS * 2 ** (attempt - 1))
    else:
        raise DataError(
            f"fetch failed for {spec.url} after {RETRY_ATTEMPTS} attempts: {last_error}"
        )

    _write_cache(path, _payload_to_csv(spec, payload))
    return load_price_csv(path)


def assemble_universe(
    specs: list[FetchSpec],
    transport: httpx.BaseTransport | None = None,
    sleep=time.sleep,
) -> PricePanel:
    """Multi-ticker panel from per-ticker fetches, inner-joined on dates."""
    if not specs:
        raise DataError("no fetch specs given")
    tickers = [s.ticker for s in specs]
    if len(set(tickers)) != len(tickers):
        raise DataError("duplicate ticker in fetch specs")
    panels = [fetch_prices(s, transport=transport, sleep=sleep) for s in specs]

    common = set(panels[0].dates)
    for panel in panels[1:]:
        common &= set(panel.dates)
    if not common:
        raise DataError("tickers share no common dates")
    dates = sorted(common)

    columns = []
    for panel in panels:
        by_date = dict(zip(panel.dates, panel.prices[:, 0]))
        columns.append([by_date[d] for d in dates])
    return PricePanel(
        tickers=tuple(tickers),
        dates=tuple(dates),
        prices=np.array(columns, dtype=float).T,
    )
