"""Tests for the CLI module."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from covspec import __version__
from covspec.cli import main
from covspec.datafile import write_matrix


@pytest.fixture
def runner():
    """Create a CLI runner."""
    return CliRunner()


@pytest.fixture
def write_config(tmp_path):
    """Write a JSON config into tmp_path and return its path."""

    def _write(payload: dict, name: str = "run.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return str(path)

    return _write


@pytest.fixture
def data_file(tmp_path):
    """Write a p x n Gaussian data matrix as CSV and return its path."""

    def _write(p: int, n: int, seed: int = 0) -> str:
        path = tmp_path / f"x_{p}_{n}.csv"
        write_matrix(path, np.random.default_rng(seed).standard_normal((p, n)), binary=False)
        return str(path)

    return _write


class TestMain:
    """Tests for the command group."""

    def test_version(self, runner):
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_lists_commands(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for command in ("lsd", "lss-moments", "test", "simulate", "verify"):
            assert command in result.output


class TestLsd:
    """Tests for the lsd command."""

    def test_writes_outputs(self, runner, write_config, tmp_path):
        config = write_config({"p": 100, "n": 400, "solver": {"grid_points": 200}})
        out = tmp_path / "out"
        result = runner.invoke(main, ["lsd", "--config", config, "--out", str(out)])
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "lsd.json").read_text())
        assert summary["c1"] == pytest.approx(0.1111111111111111)
        assert summary["zero_atom"] == 0.0
        assert summary["provenance"]["version"] == __version__
        header = (out / "density.csv").read_text().splitlines()[0]
        assert header == "x,f,F"

    def test_needs_dimensions(self, runner):
        result = runner.invoke(main, ["lsd"])
        assert result.exit_code == 2
        assert "p and n" in result.output

    def test_malformed_config(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json", encoding="utf-8")
        result = runner.invoke(main, ["lsd", "--config", str(path)])
        assert result.exit_code == 2
        assert "Error:" in result.output

    def test_unknown_key(self, runner, write_config):
        result = runner.invoke(main, ["lsd", "--config", write_config({"p": 1, "colour": 2})])
        assert result.exit_code == 2

    def test_threads_give_same_density(self, runner, write_config, tmp_path):
        config = write_config({"p": 100, "n": 400, "solver": {"grid_points": 200}})
        tables = []
        for threads in ("1", "3"):
            out = tmp_path / threads
            args = ["lsd", "--config", config, "--out", str(out), "--threads", threads]
            assert runner.invoke(main, args).exit_code == 0
            tables.append(np.loadtxt(out / "density.csv", delimiter=",", skiprows=1))
        np.testing.assert_allclose(tables[0], tables[1], atol=1e-10)


class TestLssMoments:
    """Tests for the lss-moments command."""

    def test_matches_closed_form(self, runner, write_config, tmp_path):
        config = write_config({"p": 100, "n": 400, "functions": ["x", "x2"]})
        out = tmp_path / "out"
        result = runner.invoke(main, ["lss-moments", "--config", config, "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads((out / "lss_moments.json").read_text())
        assert payload["table"]["functions"] == ["x", "x2"]
        assert payload["closed_form"]["max_deviation"] < 1e-6

    def test_rejects_estimated_moments(self, runner, write_config):
        config = write_config({"p": 10, "n": 20, "moments": "estimate"})
        result = runner.invoke(main, ["lss-moments", "--config", config])
        assert result.exit_code == 2

    def test_has_no_threads_option(self, runner, write_config):
        config = write_config({"p": 10, "n": 20})
        result = runner.invoke(main, ["lss-moments", "--config", config, "--threads", "2"])
        assert result.exit_code == 2
        assert "--threads" in result.output


class TestTestCommand:
    """Tests for the test command."""

    def test_both_tests(self, runner, data_file, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, ["test", "--data", data_file(10, 40), "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads((out / "test_report.json").read_text())
        assert [r["name"] for r in payload["reports"]] == ["frobenius", "corrected-lrt"]
        assert payload["partial"] is False
        assert "p-value=" in result.output

    def test_square_data_gives_partial_report(self, runner, data_file, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, ["test", "--data", data_file(6, 6), "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads((out / "test_report.json").read_text())
        assert payload["partial"] is True
        assert [r["name"] for r in payload["reports"]] == ["frobenius"]
        assert payload["errors"][0]["test"] == "lrt"

    def test_square_data_lrt_only(self, runner, data_file):
        result = runner.invoke(main, ["test", "--data", data_file(6, 6), "--test", "lrt"])
        assert result.exit_code == 2
        assert "Error:" in result.output

    def test_missing_data_file(self, runner, tmp_path):
        result = runner.invoke(main, ["test", "--data", str(tmp_path / "absent.csv")])
        assert result.exit_code == 2

    def test_undecodable_data_file(self, runner, tmp_path):
        path = tmp_path / "x.csv"
        path.write_bytes(b"\xff\xfe1,2\n3,4\n")
        result = runner.invoke(main, ["test", "--data", str(path)])
        assert result.exit_code == 2
        assert "UTF-8" in result.output


class TestSimulate:
    """Tests for the simulate command."""

    def test_writes_replicates(self, runner, write_config, tmp_path):
        config = write_config(
            {"study": {"p": 5, "n": 10, "replicates": 4, "functions": ["x"]}}
        )
        out = tmp_path / "out"
        result = runner.invoke(
            main, ["simulate", "--config", config, "--out", str(out), "--replicates", "3"]
        )
        assert result.exit_code == 0, result.output
        lines = (out / "replicates.csv").read_text().splitlines()
        assert lines[0] == "replicate,X[x]"
        assert len(lines) == 4
        summary = json.loads((out / "summary.json").read_text())
        assert summary["study"]["replicates"] == 3

    def test_seed_override_is_reproducible(self, runner, write_config, tmp_path):
        config = write_config({"study": {"p": 5, "n": 10, "replicates": 2, "functions": ["x"]}})
        texts = []
        for name in ("a", "b"):
            out = tmp_path / name
            args = ["simulate", "--config", config, "--out", str(out), "--seed", "17"]
            assert runner.invoke(main, args).exit_code == 0
            texts.append((out / "replicates.csv").read_text())
        assert texts[0] == texts[1]

    def test_top_level_seed_drives_replicates(self, runner, write_config, tmp_path):
        study = {"p": 5, "n": 10, "replicates": 2, "functions": ["x"]}
        texts = []
        for name, payload in (("a", {"study": study, "seed": 23}), ("b", {"study": study})):
            out = tmp_path / name
            config = write_config(payload, name=f"{name}.json")
            args = ["simulate", "--config", config, "--out", str(out)]
            assert runner.invoke(main, args).exit_code == 0
            summary = json.loads((out / "summary.json").read_text())
            assert summary["study"]["dist"]["seed"] == summary["provenance"]["seed"]
            texts.append((out / "replicates.csv").read_text())
        assert texts[0] != texts[1]

    def test_study_seed_reported_in_provenance(self, runner, write_config, tmp_path):
        study = {"p": 5, "n": 10, "replicates": 2, "functions": ["x"], "dist": {"seed": 41}}
        out = tmp_path / "out"
        config = write_config({"study": study})
        result = runner.invoke(main, ["simulate", "--config", config, "--out", str(out)])
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["study"]["dist"]["seed"] == 41
        assert summary["provenance"]["seed"] == 41

    def test_zero_replicates(self, runner, write_config):
        config = write_config({"study": {"p": 5, "n": 10, "replicates": 2}})
        result = runner.invoke(main, ["simulate", "--config", config, "--replicates", "0"])
        assert result.exit_code == 2

    def test_needs_study(self, runner):
        result = runner.invoke(main, ["simulate"])
        assert result.exit_code == 2
        assert "study" in result.output


class TestVerify:
    """Tests for the verify command."""

    def test_list(self, runner):
        result = runner.invoke(main, ["verify", "--list"])
        assert result.exit_code == 0
        assert "delta-method:" in result.output
        assert "theorem3-null:" in result.output

    def test_passing_suite(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(main, ["verify", "delta-method", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "PASS delta-method" in result.output
        report = json.loads((out / "verify.json").read_text())
        assert report["results"][0]["passed"] is True

    def test_unknown_suite(self, runner):
        result = runner.invoke(main, ["verify", "no-such-suite"])
        assert result.exit_code == 2
        assert "unknown suites" in result.output
