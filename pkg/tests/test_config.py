"""Tests for run configuration documents."""

import json

import pytest

from covspec import __version__
from covspec.config import RunConfig, config_hash, load_config, parse_config, provenance
from covspec.exceptions import ConfigError
from covspec.spectral_core import SpectralMeasure, identity_measure


class TestParseConfig:
    """Tests for parse_config and load_config."""

    def test_defaults(self):
        config = load_config(None)
        assert config == RunConfig()
        assert config.functions == ["x", "x2"]
        assert config.test == "both"
        assert config.seed == 0

    def test_full_document(self):
        config = parse_config(
            json.dumps(
                {
                    "p": 100,
                    "n": 400,
                    "measure": {"atoms": [1.0, 0.5], "weights": [0.5, 0.5]},
                    "moments": {"alpha": 0.0, "delta": -1.0},
                    "functions": ["x", [0.0, 1.0, 1.0]],
                    "seed": 7,
                }
            )
        )
        assert config.ratios().c1 == pytest.approx(100 / 900)
        assert config.resolve_measure().atoms == [0.5, 1.0]
        assert config.supplied_moments().delta == -1.0

    @pytest.mark.parametrize(
        "text",
        [
            "{not json",
            '{"unknown": 1}',
            '{"solver": {"tol": 0}}',
            '{"seed": -1}',
            '{"measure": {"atoms": [1.0], "weights": [1.0]}, "measure_file": "h.json"}',
        ],
    )
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_study_must_fit_geometry(self):
        text = json.dumps(
            {"study": {"p": 30, "n": 30, "replicates": 1, "tests": ["corrected-lrt"]}}
        )
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{"p": 10, "n": 20}', encoding="utf-8")
        assert load_config(path).p == 10

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")


class TestRunConfig:
    """Tests for the RunConfig accessors."""

    def test_ratios_need_dimensions(self):
        with pytest.raises(ConfigError):
            RunConfig(p=10).ratios()

    def test_estimated_moments_not_supplied(self):
        with pytest.raises(ConfigError):
            RunConfig(moments="estimate").supplied_moments()

    def test_default_measure_is_identity(self):
        assert RunConfig().resolve_measure() == identity_measure()

    def test_measure_file_relative_to_base(self, tmp_path):
        measure = SpectralMeasure(atoms=[0.5, 1.0], weights=[0.25, 0.75])
        (tmp_path / "h.json").write_text(measure.model_dump_json(), encoding="utf-8")
        config = RunConfig(measure_file="h.json")
        assert config.resolve_measure(base=tmp_path) == measure

    def test_missing_measure_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            RunConfig(measure_file="h.json").resolve_measure(base=tmp_path)

    def test_invalid_measure_file(self, tmp_path):
        (tmp_path / "h.json").write_text('{"atoms": [1.0]}', encoding="utf-8")
        with pytest.raises(ConfigError, match="invalid measure"):
            RunConfig(measure_file="h.json").resolve_measure(base=tmp_path)


class TestProvenance:
    """Tests for config hashing and provenance blocks."""

    def test_hash_is_stable(self):
        assert config_hash(RunConfig(seed=3)) == config_hash(RunConfig(seed=3))
        assert len(config_hash(RunConfig())) == 64

    def test_hash_tracks_seed(self):
        assert config_hash(RunConfig(seed=3)) != config_hash(RunConfig(seed=4))

    def test_provenance_block(self):
        block = provenance(RunConfig(seed=5))
        assert block["version"] == __version__
        assert block["seed"] == 5
        assert block["config"]["seed"] == 5
        assert block["config_hash"] == config_hash(RunConfig(seed=5))
