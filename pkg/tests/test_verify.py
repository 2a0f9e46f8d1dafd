"""Tests for the verification suites."""

import pytest
from pydantic import ValidationError

from covspec.exceptions import InvalidInputError
from covspec.verify import SUITES, SuiteOptions, run_suite, run_suites

CHEAP_SUITES = ["stieltjes-oracle", "degenerate-limits", "delta-method", "unitary-invariance"]


class TestSuites:
    """Tests for the suite registry."""

    def test_registry(self):
        assert list(SUITES) == [
            "stieltjes-oracle",
            "degenerate-limits",
            "stieltjes-properties",
            "appendix-b-oracle",
            "delta-method",
            "theorem1-esd",
            "theorem3-null",
            "theorem4-null",
            "generator-moments",
            "structure-check",
            "unitary-invariance",
        ]

    @pytest.mark.parametrize("name", CHEAP_SUITES)
    def test_cheap_suite_passes(self, name):
        result = run_suite(name)
        assert result.name == name
        assert result.checks
        assert result.passed, [c for c in result.checks if not c.passed]

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["stieltjes-properties", "appendix-b-oracle"])
    def test_analytic_suite_passes(self, name):
        assert run_suite(name).passed

    @pytest.mark.slow
    def test_null_suite_passes(self):
        assert run_suite("theorem3-null", SuiteOptions(replicates=500, threads=4)).passed

    def test_unknown_suite(self):
        with pytest.raises(InvalidInputError, match="unknown suite"):
            run_suite("no-such-suite")


class TestRunSuites:
    """Tests for run_suites and the report."""

    def test_names_checked_before_running(self):
        with pytest.raises(InvalidInputError, match="bogus"):
            run_suites(["delta-method", "bogus"])

    def test_report(self):
        report = run_suites(["delta-method", "degenerate-limits"])
        assert [r.name for r in report.results] == ["delta-method", "degenerate-limits"]
        assert report.passed
        assert report.failures == []

    def test_options_validation(self):
        with pytest.raises(ValidationError):
            SuiteOptions(replicates=1)
        with pytest.raises(ValidationError):
            SuiteOptions(threads=0)
