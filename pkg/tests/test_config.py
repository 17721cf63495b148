"""Tests for run-config parsing and validation."""

import json

import pytest

from trifolio.config import RunConfig, load_config, parse_config, validate_config
from trifolio.errors import ConfigError


def base_config(**overrides):
    raw = {
        "sector_name": "demo",
        "tickers": ["AAA", "BBB", "CCC"],
        "train_start": "2018-01-01",
        "train_end": "2021-12-31",
        "test_start": "2022-01-01",
        "test_end": "2022-12-31",
        "methods": ["MVP", "HRP", "ENC"],
        "csv_path": "prices.csv",
    }
    raw.update(overrides)
    return raw


class TestValidation:
    def test_valid_config_has_no_violations(self):
        assert validate_config(base_config()) == []

    def test_defaults_applied(self):
        cfg = parse_config(base_config())
        assert cfg.mvp_samples == 10_000
        assert cfg.seed == 0
        assert cfg.rf == 0.0
        assert cfg.autoencoder.code_dim == 5
        assert cfg.autoencoder.epochs == 500
        assert cfg.autoencoder.batch_size == 10
        assert cfg.output_dir == "output"

    def test_test_window_before_train_window(self):
        raw = base_config(
            train_start="2022-01-01",
            train_end="2022-12-31",
            test_start="2018-01-01",
            test_end="2018-12-31",
        )
        violations = validate_config(raw)
        assert len(violations) == 1
        assert "test_start" in violations[0]

    def test_overlapping_windows_rejected(self):
        raw = base_config(test_start="2021-12-31")
        assert any("test_start" in v for v in validate_config(raw))

    def test_empty_methods_rejected(self):
        violations = validate_config(base_config(methods=[]))
        assert any("methods" in v for v in violations)

    def test_unknown_method_rejected(self):
        violations = validate_config(base_config(methods=["MVP", "XYZ"]))
        assert any("methods" in v for v in violations)

    def test_duplicate_method_rejected(self):
        violations = validate_config(base_config(methods=["HRP", "HRP"]))
        assert any("duplicate method" in v for v in violations)

    def test_too_few_tickers(self):
        violations = validate_config(base_config(tickers=["ONLY"]))
        assert any("tickers" in v for v in violations)

    def test_duplicate_ticker(self):
        violations = validate_config(base_config(tickers=["A", "B", "A"]))
        assert any("duplicate ticker" in v for v in violations)

    def test_bad_date_format(self):
        violations = validate_config(base_config(train_start="01/01/2018"))
        assert any("train_start" in v for v in violations)

    def test_zero_mvp_samples_rejected(self):
        violations = validate_config(base_config(mvp_samples=0))
        assert any("mvp_samples" in v for v in violations)

    def test_both_data_sources_rejected(self):
        raw = base_config(
            fetch={"endpoint_url_template": "https://x/{ticker}/{start}/{end}"}
        )
        assert any("csv_path" in v for v in validate_config(raw))

    def test_missing_data_source_rejected(self):
        raw = base_config()
        del raw["csv_path"]
        assert any("csv_path" in v for v in validate_config(raw))

    def test_fetch_template_placeholders_required(self):
        raw = base_config()
        del raw["csv_path"]
        raw["fetch"] = {"endpoint_url_template": "https://x/{ticker}"}
        violations = validate_config(raw)
        assert any("{start}" in v for v in violations)

    def test_unknown_field_rejected(self):
        violations = validate_config(base_config(sector="oops"))
        assert violations

    def test_multiple_violations_all_reported(self):
        raw = base_config(methods=[], mvp_samples=-5)
        violations = validate_config(raw)
        assert len(violations) >= 2

    def test_non_mapping_rejected(self):
        assert validate_config(["not", "a", "mapping"]) != []


class TestLoading:
    def test_round_trip_from_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(base_config(seed=7)))
        cfg = load_config(path)
        assert isinstance(cfg, RunConfig)
        assert cfg.seed == 7
        assert cfg.tickers == ["AAA", "BBB", "CCC"]

    def test_missing_file_raises_config_error(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_malformed_json_raises_config_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(path)

    def test_invalid_config_raises_with_field_name(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(base_config(methods=[])))
        with pytest.raises(ConfigError, match="methods"):
            load_config(path)

    def test_parse_config_error_exit_code(self):
        try:
            parse_config(base_config(methods=[]))
        except ConfigError as exc:
            assert exc.exit_code == 1
        else:
            pytest.fail("expected ConfigError")
