"""Tests for the identity-covariance tests."""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from covspec.exceptions import (
    DegenerateError,
    DimensionError,
    InsufficientDataError,
    LogDomainError,
    SingularMatrixError,
)
from covspec.identity_tests import (
    TestReport,
    classical_lrt_test,
    delta_method_check,
    estimate_moment_profile,
    frobenius_statistic,
    frobenius_test,
    lrt_constants,
    lrt_eigenvalues,
    lrt_statistic,
    lrt_test,
    nagao_statistic,
    nagao_test,
    normal_p_value,
    sample_eigenvalues,
)
from covspec.montecarlo import EntryDistribution, generate
from covspec.spectral_core import MomentProfile, make_ratios
from covspec.types import Alternative, EntryKind, MomentSource, TestName

GAUSSIAN = MomentProfile.real_gaussian()


class TestFrobenius:
    """Tests for the Frobenius-norm statistic W."""

    def test_square_example(self):
        assert frobenius_statistic([0.0, 2.0], 2, 2) == pytest.approx(1.0)

    def test_identity_spectrum(self):
        assert frobenius_statistic(np.ones(3), 3, 5) == pytest.approx(0.0, abs=1e-14)

    def test_structural_zeros_count(self):
        # p = 3, n = 1: one sample eigenvalue, two structural zeros
        w = frobenius_statistic([3.0], 3, 1)
        assert w == pytest.approx((4.0 + 2.0) / 3.0 - 9.0 / 3.0 + 3.0)

    def test_wrong_count(self):
        with pytest.raises(DimensionError):
            frobenius_statistic([1.0, 1.0], 3, 5)

    def test_report(self):
        report = frobenius_test(np.ones(3), 3, 5, GAUSSIAN)
        assert report.name == TestName.FROBENIUS
        assert report.raw_statistic == pytest.approx(0.0, abs=1e-13)
        assert report.centering == 4.0
        assert report.scale == 2.0
        assert report.z_score == pytest.approx(-2.0)
        assert report.p_value == pytest.approx(2.0 * 0.022750131948179195)

    def test_complex_scale(self):
        report = frobenius_test(np.ones(3), 3, 5, MomentProfile.complex_gaussian())
        assert report.scale == pytest.approx(math.sqrt(2.0))
        assert report.centering == 3.0


class TestLrt:
    """Tests for the corrected LRT and quasi-LRT."""

    def test_statistic_example(self):
        assert lrt_statistic([math.e], 1, 2) == pytest.approx(math.e - 2.0)

    def test_constants_small_ratio(self):
        a, b, var = lrt_constants(0.01, GAUSSIAN)
        assert a == pytest.approx(0.005, abs=1e-4)
        assert b == pytest.approx(-math.log(0.99) / 2.0)
        assert var == pytest.approx(-2.0 * (math.log(0.99) + 0.01))

    @pytest.mark.parametrize("c", [0.0, 1.0, 1.5, -0.1])
    def test_constants_domain(self, c):
        with pytest.raises(LogDomainError):
            lrt_constants(c, GAUSSIAN)

    def test_square_is_degenerate(self):
        with pytest.raises(DegenerateError):
            lrt_statistic(np.ones(4), 4, 4)
        with pytest.raises(DegenerateError):
            lrt_eigenvalues(np.ones((4, 4)))

    def test_singular_spectrum(self):
        with pytest.raises(SingularMatrixError):
            lrt_statistic([0.0, 1.0], 2, 5)

    def test_names_follow_geometry(self):
        rng = np.random.default_rng(3)
        for p, n, name in ((20, 60, TestName.CORRECTED_LRT), (60, 20, TestName.QUASI_LRT)):
            X = rng.standard_normal((p, n))
            report = lrt_test(lrt_eigenvalues(X), p, n, GAUSSIAN)
            assert report.name == name
            assert report.meta["c_n"] == pytest.approx(1.0 / 3.0)
            assert 0.0 <= report.p_value <= 1.0

    def test_quasi_lrt_uses_sample_side_scaling(self):
        X = np.random.default_rng(4).standard_normal((30, 10))
        np.testing.assert_allclose(
            lrt_eigenvalues(X), np.linalg.eigvalsh(X.T @ X / 30), rtol=1e-10
        )

    def test_unchanged_by_rotation(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((20, 50))
        U, _ = np.linalg.qr(rng.standard_normal((20, 20)))
        before = lrt_statistic(lrt_eigenvalues(X), 20, 50)
        after = lrt_statistic(lrt_eigenvalues(U @ X), 20, 50)
        assert after == pytest.approx(before, rel=1e-10)
        w0 = frobenius_statistic(sample_eigenvalues(X), 20, 50)
        w1 = frobenius_statistic(sample_eigenvalues(U @ X), 20, 50)
        assert w1 == pytest.approx(w0, rel=1e-10)


class TestReferenceTests:
    """Tests for Nagao's test and the classical LRT."""

    def test_nagao_at_identity(self):
        report = nagao_test(np.ones(2), 2, 4)
        assert nagao_statistic(np.ones(2), 2, 4) == 0.0
        assert report.name == TestName.NAGAO
        assert report.centering == 3.0
        assert report.p_value == 1.0
        assert report.alternative == Alternative.GREATER

    def test_classical_lrt(self):
        report = classical_lrt_test([math.e], 1, 2)
        assert report.raw_statistic == pytest.approx(2.0 * (math.e - 2.0))
        assert report.centering == 1.0

    def test_classical_lrt_needs_p_below_n(self):
        with pytest.raises(DegenerateError):
            classical_lrt_test(np.ones(3), 5, 3)


class TestReports:
    """Tests for TestReport and p-values."""

    @pytest.mark.parametrize(
        ("z", "alternative", "expected"),
        [
            (0.0, Alternative.TWO_SIDED, 1.0),
            (1.959963984540054, Alternative.TWO_SIDED, 0.05),
            (1.6448536269514722, Alternative.GREATER, 0.05),
            (-1.6448536269514722, Alternative.LESS, 0.05),
        ],
    )
    def test_normal_p_value(self, z, alternative, expected):
        assert normal_p_value(z, alternative) == pytest.approx(expected)

    def test_reject(self):
        report = TestReport(
            name=TestName.FROBENIUS, raw_statistic=1.0, centering=0.0, scale=1.0,
            z_score=1.0, p_value=0.01,
        )
        assert report.reject(0.05)
        assert not report.reject(0.01)

    def test_invalid(self):
        with pytest.raises(ValidationError):
            TestReport(
                name=TestName.FROBENIUS, raw_statistic=1.0, centering=0.0, scale=0.0,
                z_score=1.0, p_value=0.5,
            )


class TestDeltaMethod:
    """The null laws follow from the LSS closed forms."""

    @pytest.mark.parametrize(("p", "n"), [(50, 500), (100, 400), (299, 300)])
    @pytest.mark.parametrize(("alpha", "delta"), [(1.0, 0.0), (0.0, 0.0), (1.0, -2.0)])
    def test_reconstruction(self, p, n, alpha, delta):
        check = delta_method_check(make_ratios(p, n), MomentProfile(alpha=alpha, delta=delta))
        assert check.max_deviation() < 1e-8

    def test_needs_p_below_n(self):
        with pytest.raises(LogDomainError):
            delta_method_check(make_ratios(300, 300), GAUSSIAN)


class TestEstimateMoments:
    """Tests for estimate_moment_profile."""

    def test_rademacher(self):
        X = generate(10, 2000, EntryDistribution(kind=EntryKind.RADEMACHER, seed=1))
        profile = estimate_moment_profile(X, is_real=True)
        assert profile.delta == pytest.approx(-2.0, abs=0.02)
        assert profile.source == MomentSource.ESTIMATED

    def test_gaussian(self):
        X = generate(20, 20_000, EntryDistribution(seed=2))
        assert estimate_moment_profile(X, is_real=True).delta == pytest.approx(0.0, abs=0.1)

    def test_complex(self):
        X = generate(20, 5000, EntryDistribution(kind=EntryKind.COMPLEX_GAUSSIAN, seed=3))
        profile = estimate_moment_profile(X, is_real=False)
        assert profile.alpha == 0.0
        assert profile.delta == pytest.approx(0.0, abs=0.1)

    def test_logs_warning(self, caplog):
        X = generate(10, 20, EntryDistribution(seed=4))
        estimate_moment_profile(X, is_real=True)
        assert "estimated" in caplog.text

    def test_too_small(self):
        with pytest.raises(InsufficientDataError):
            estimate_moment_profile(np.ones((3, 3)), is_real=True)

    def test_constant_row(self):
        X = generate(10, 20, EntryDistribution(seed=5))
        X[3] = 1.5
        with pytest.raises(InsufficientDataError):
            estimate_moment_profile(X, is_real=True)
