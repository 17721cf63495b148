"""Run configuration: the single JSON file that drives a pipeline run.

A run is defined by a universe of tickers, a train/test date split, the
allocation methods to fit, sampling and training knobs, one seed, and a data
source (a local price CSV or a fetch block for the HTTP client).
"""

from __future__ import annotations

import datetime
import json
import pathlib
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

METHOD_NAMES = ("MVP", "HRP", "ENC")

ISO_DATE_FIELDS = ("train_start", "train_end", "test_start", "test_end")


class AutoencoderSettings(BaseModel):
    """Training knobs for the autoencoder method."""

    model_config = ConfigDict(extra="forbid")

    code_dim: int = Field(default=5, ge=1)
    epochs: int = Field(default=500, ge=1)
    batch_size: int = Field(default=10, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)


class FetchSettings(BaseModel):
    """Where to fetch prices from when no local CSV is given."""

    model_config = ConfigDict(extra="forbid")

    endpoint_url_template: str
    cache_dir: str = "cache"

    @field_validator("endpoint_url_template")
    @classmethod
    def template_has_placeholders(cls, value: str) -> str:
        for placeholder in ("{ticker}", "{start}", "{end}"):
            if placeholder not in value:
                raise ValueError(f"endpoint_url_template missing {placeholder}")
        return value


class RunConfig(BaseModel):
    """Validated run description; see configs/ for checked-in examples."""

    model_config = ConfigDict(extra="forbid")

    sector_name: str = Field(min_length=1)
    tickers: list[str] = Field(min_length=2, max_length=50)
    train_start: str
    train_end: str
    test_start: str
    test_end: str
    methods: list[Literal["MVP", "HRP", "ENC"]] = Field(min_length=1)
    mvp_samples: int = Field(default=10_000, ge=1)
    seed: int = 0
    rf: float = 0.0
    autoencoder: AutoencoderSettings = Field(default_factory=AutoencoderSettings)
    output_dir: str = "output"
    csv_path: str | None = None
    fetch: FetchSettings | None = None

    @field_validator("tickers")
    @classmethod
    def tickers_nonempty_and_unique(cls, value: list[str]) -> list[str]:
        for t in value:
            if not t or t != t.strip():
                raise ValueError(f"tickers: blank or padded ticker {t!r}")
        if len(set(value)) != len(value):
            raise ValueError("tickers: duplicate ticker")
        return value

    @field_validator("methods")
    @classmethod
    def methods_unique(cls, value: list[str]) -> list[str]:
        if len(set(value)) != len(value):
            raise ValueError("methods: duplicate method")
        return value

    @field_validator(*ISO_DATE_FIELDS)
    @classmethod
    def date_is_iso(cls, value: str) -> str:
        try:
            datetime.date.fromisoformat(value)
        except ValueError:
            raise ValueError(f"not an ISO-8601 date: {value!r}")
        return value

    @model_validator(mode="after")
    def windows_are_ordered(self) -> "RunConfig":
        if self.train_start > self.train_end:
            raise ValueError("train_start: train window ends before it starts")
        if self.test_start > self.test_end:
            raise ValueError("test_start: test window ends before it starts")
        if self.train_end >= self.test_start:
            raise ValueError("test_start: test window must begin after train_end")
        return self

    @model_validator(mode="after")
    def one_data_source(self) -> "RunConfig":
        if (self.csv_path is None) == (self.fetch is None):
            raise ValueError("csv_path: exactly one of csv_path or fetch is required")
        return self


def _violation_lines(error: ValidationError) -> list[str]:
    lines = []
    for err in error.errors():
        loc = ".".join(str(p) for p in err["loc"])
        msg = err["msg"]
        # our own validators already lead with the field name
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        lines.append(f"{loc}: {msg}" if loc and not msg.startswith(loc) else msg)
    return lines


def validate_config(raw: dict) -> list[str]:
    """Violation messages for a parsed config mapping; empty when valid."""
    if not isinstance(raw, dict):
        return ["config: top level must be a JSON object"]
    try:
        RunConfig.model_validate(raw)
    except ValidationError as error:
        return _violation_lines(error)
    return []


def parse_config(raw: dict) -> RunConfig:
    """Build a RunConfig, raising ConfigError listing every violation."""
    violations = validate_config(raw)
    if violations:
        raise ConfigError("; ".join(violations))
    return RunConfig.model_validate(raw)


def load_config(path: str | pathlib.Path) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        text = pathlib.Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)
