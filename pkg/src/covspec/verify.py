"""
Named acceptance suites run by `covspec verify`.

Each suite returns a SuiteResult listing the individual checks it made; a
suite passes when every check passes.
"""

import logging
import math
import time
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from covspec.exceptions import InvalidInputError
from covspec.identity_tests import (
    delta_method_check,
    frobenius_statistic,
    lrt_eigenvalues,
    lrt_statistic,
    sample_eigenvalues,
)
from covspec.lss_moments import KernelContext, identity_closed_forms, lss_table
from covspec.montecarlo import (
    EntryDistribution,
    ReplicateStudy,
    SigmaSpec,
    dependent_structure_check,
    esd_distance,
    generate,
    lss_replicates,
    moment_audit,
    renormalized_spectrum,
    replicate_rng,
)
from covspec.spectral_core import (
    MomentProfile,
    SpectralMeasure,
    identity_measure,
    make_ratios,
)
from covspec.stieltjes import DEFAULT_TOL, fixed_point_rhs, solve, stieltjes_values
from covspec.test_functions import IDENTITY, LOG, SQUARE
from covspec.types import EntryKind, TestName

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-10
CLOSED_FORM_TOL = 1e-6
DELTA_METHOD_TOL = 1e-10
KS_LEVEL = 0.01
DEFAULT_REPLICATES = 2000
# z·(−1/z) = −1 only up to rounding
ULP_BOUND = 8.0 * float(np.finfo(float).eps)


class CheckLine(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    value: float
    bound: str
    passed: bool


class SuiteResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    checks: list[CheckLine]
    seconds: float


class SuiteOptions(BaseModel):
    """Knobs shared by all suites."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    replicates: int = Field(default=DEFAULT_REPLICATES, ge=2)
    seed: int = Field(default=0, ge=0)
    threads: int = Field(default=1, ge=1)


class VerifyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    results: list[SuiteResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[str]:
        return [r.name for r in self.results if not r.passed]


def _check(label: str, value: float, upper: float) -> CheckLine:
    return CheckLine(
        label=label, value=value, bound=f"≤ {upper:.3g}", passed=bool(value <= upper)
    )


def _within(label: str, value: float, low: float, high: float) -> CheckLine:
    return CheckLine(
        label=label,
        value=value,
        bound=f"[{low:.4g}, {high:.4g}]",
        passed=bool(low <= value <= high),
    )


def _at_least(label: str, value: float, lower: float) -> CheckLine:
    return CheckLine(
        label=label, value=value, bound=f"≥ {lower:.3g}", passed=bool(value >= lower)
    )


# =============================================================================
# Analytic oracles
# =============================================================================


def identity_stieltjes(z: np.ndarray, c1: float, c2: float) -> np.ndarray:
    """
    m(z) for H = δ₁ from the quadratic c1·z·m² + (z − c2 + c1)·m + 1 = 0.

    The root is the one keeping both m and the companion transform in ℂ⁺.
    """
    z = np.asarray(z, dtype=complex)
    b = z - c2 + c1
    root = np.sqrt(b * b - 4.0 * c1 * z)
    candidates = np.stack([(-b + root) / (2.0 * c1 * z), (-b - root) / (2.0 * c1 * z)])
    companions = -(c2 - c1) / z + c1 * candidates
    score = np.minimum(candidates.imag, companions.imag)
    return np.take_along_axis(candidates, np.argmax(score, axis=0)[None, :], axis=0)[0]


def two_point_measure() -> SpectralMeasure:
    """H = uniform{0.5, 1}."""
    return SpectralMeasure(atoms=[0.5, 1.0], weights=[0.5, 0.5])


# =============================================================================
# Suites
# =============================================================================


def stieltjes_oracle(options: SuiteOptions) -> list[CheckLine]:
    """Fixed-point solver against the quadratic root at p = n."""
    ratios = make_ratios(400, 400)
    x = np.linspace(-0.5, 1.5, 10)
    v = np.logspace(-3.0, 0.0, 10)
    z = (x[:, None] + 1j * v[None, :]).ravel()
    m, _ = stieltjes_values(z, ratios, identity_measure())
    exact = identity_stieltjes(z, ratios.c1, ratios.c2)
    gap = float(np.max(np.abs(m - exact)))
    return [_check("max |m − m_exact| over 100 points", gap, ORACLE_TOL)]


def degenerate_limits(options: SuiteOptions) -> list[CheckLine]:
    """Endpoint ratios: (0, 1) gives ∫dH/(t − z); (1, 0) has the fixed point −1/z."""
    H = two_point_measure()
    checks = []
    for z in (0.3 + 0.2j, 1.5 + 1e-3j, -0.4 + 0.7j):
        m = 0.1 + 0.1j
        large_n = fixed_point_rhs(m, z, 0.0, 1.0, H)
        exact = complex(np.sum(H.w / (H.t - z)))
        bound = 1e-15 * max(1.0, abs(exact))
        checks.append(_check(f"large-n RHS at z={z}", abs(large_n - exact), bound))
        large_p = fixed_point_rhs(-1.0 / z, z, 1.0, 0.0, H)
        gap = abs(large_p + 1.0 / z)
        checks.append(_check(f"large-p fixed point at z={z}", gap, ULP_BOUND / abs(z) ** 2))
    return checks


NORMALIZATION_HEIGHT = 1e6
NORMALIZATION_TOL = 1e-3


def stieltjes_properties(options: SuiteOptions) -> list[CheckLine]:
    """
    Solver properties over random (p, n, H, z) triples: Nevanlinna sign, the
    |m| ≤ 1/Im z and Im(z·m) > −1 bounds, uniqueness-set membership of m̲,
    start-independence between m₀ = −1/z and m₀ = i, and iv·m(iv) → −1.
    """
    rng = replicate_rng(options.seed, 7)
    sign = norm_bound = mass_bound = outside = 0
    worst_spread = worst_normalization = 0.0
    for _ in range(1000):
        p, n = (int(v) for v in rng.integers(1, 2000, size=2))
        atoms = np.append(rng.uniform(0.05, 1.0, size=2), 1.0)
        H = SpectralMeasure.from_atoms(atoms.tolist(), rng.uniform(0.1, 1.0, size=3).tolist())
        z = complex(rng.uniform(-0.5, 1.5), 10.0 ** rng.uniform(-2.0, 0.5))
        ratios = make_ratios(p, n)
        first = solve(z, ratios, H)
        second = solve(z, ratios, H, m0=1j)
        scale = DEFAULT_TOL * max(1.0, abs(first.m))
        sign += first.m.imag <= 0.0
        norm_bound += abs(first.m) > 1.0 / z.imag * (1.0 + 1e-9)
        mass_bound += (z * first.m).imag <= -1.0 - scale
        outside += first.m_under.imag <= -scale
        worst_spread = max(worst_spread, abs(first.m - second.m) / max(1.0, abs(first.m)))

        v = 1j * NORMALIZATION_HEIGHT
        far = solve(v, ratios, H)
        worst_normalization = max(worst_normalization, abs(v * far.m + 1.0))
    return [
        _check("Im m ≤ 0 count", float(sign), 0.0),
        _check("|m| > 1/Im z count", float(norm_bound), 0.0),
        _check("Im(z·m) ≤ −1 count", float(mass_bound), 0.0),
        _check("m̲ outside ℂ⁺ count", float(outside), 0.0),
        _check("max spread between m₀ = −1/z and m₀ = i", worst_spread, 1e-8),
        _check(
            f"max |iv·m(iv) + 1| at v = {NORMALIZATION_HEIGHT:.0e}",
            worst_normalization,
            NORMALIZATION_TOL,
        ),
    ]


ORACLE_GRID: tuple[tuple[int, int], ...] = ((100, 400), (200, 300), (50, 5000))
ORACLE_PROFILES: tuple[tuple[float, float], ...] = ((1.0, 0.0), (0.0, 0.0), (1.0, -2.0))


def closed_form_oracle(options: SuiteOptions) -> list[CheckLine]:
    """Contour means, covariances and centers against the Σ = I closed forms."""
    checks = []
    for p, n in ORACLE_GRID:
        ratios = make_ratios(p, n)
        for alpha, delta in ORACLE_PROFILES:
            moments = MomentProfile(alpha=alpha, delta=delta)
            ctx = KernelContext(ratios=ratios, H=identity_measure(), moments=moments)
            numeric = lss_table([IDENTITY, SQUARE, LOG], ctx, with_centers=True)
            exact = identity_closed_forms(ratios, moments)
            gap = max(
                float(np.max(np.abs(np.subtract(numeric.means, exact.means)))),
                float(np.max(np.abs(np.subtract(numeric.cov, exact.cov)))),
                float(np.max(np.abs(np.subtract(numeric.centers, exact.centers)))),
            )
            checks.append(_check(f"p={p} n={n} alpha={alpha} delta={delta}", gap, CLOSED_FORM_TOL))
    return checks


DELTA_PAIRS: tuple[tuple[int, int], ...] = (
    (50, 500),
    (100, 400),
    (200, 300),
    (10, 1000),
    (299, 300),
)


def delta_method(options: SuiteOptions) -> list[CheckLine]:
    """Null laws of the tests rebuilt from the closed forms agree with their constants."""
    checks = []
    for p, n in DELTA_PAIRS:
        for alpha, delta in ORACLE_PROFILES:
            result = delta_method_check(make_ratios(p, n), MomentProfile(alpha=alpha, delta=delta))
            label = f"p={p} n={n} alpha={alpha} delta={delta}"
            checks.append(_check(label, result.max_deviation(), DELTA_METHOD_TOL))
    return checks


ESD_CASES: tuple[tuple[int, int, float], ...] = (
    (1000, 1000, 0.03),
    (20000, 50, 0.05),
    (50, 20000, 0.05),
)


def esd_convergence(options: SuiteOptions) -> list[CheckLine]:
    """Kolmogorov distance between one simulated ESD and the computed limit."""
    checks = []
    dist = EntryDistribution(seed=options.seed)
    for H, label in ((identity_measure(), "identity"), (two_point_measure(), "uniform{0.5,1}")):
        sigma = SigmaSpec.identity() if H.is_identity else SigmaSpec.from_measure(H)
        for p, n, bound in ESD_CASES:
            X = generate(p, n, dist, sigma, replicate_rng(options.seed, p * 7 + n))
            lam = renormalized_spectrum(X, sigma.norm(p))
            distance = esd_distance(lam, p, make_ratios(p, n), sigma.population_measure(p))
            checks.append(_check(f"KS distance p={p} n={n} H={label}", distance, bound))
    return checks


FROBENIUS_CASES: tuple[tuple[int, int], ...] = ((100, 100), (400, 100), (100, 400), (5000, 50))


def _mean_band(label: str, values: np.ndarray, target: float) -> CheckLine:
    se = float(np.std(values, ddof=1) / math.sqrt(values.size))
    return _within(label, float(np.mean(values)), target - 3.0 * se, target + 3.0 * se)


def _ks(label: str, z: np.ndarray) -> CheckLine:
    return _at_least(label, float(stats.kstest(z, "norm").pvalue), KS_LEVEL)


def frobenius_null(options: SuiteOptions) -> list[CheckLine]:
    """nW − p → N(α + Δ, 2(1 + α)) in all three scenarios."""
    checks = []
    runs = [(p, n, EntryKind.REAL_GAUSSIAN) for p, n in FROBENIUS_CASES]
    runs.append((100, 400, EntryKind.RADEMACHER))
    for p, n, kind in runs:
        dist = EntryDistribution(kind=kind, seed=options.seed)
        study = ReplicateStudy(
            p=p, n=n, dist=dist, replicates=options.replicates, functions=["x"],
            tests=[TestName.FROBENIUS],
        )
        result = lss_replicates(study, threads=options.threads)
        z = result.column(f"z[{TestName.FROBENIUS.value}]")
        moments = dist.moments
        scale = math.sqrt(2.0 * (1.0 + moments.alpha))
        pivot = z * scale + moments.alpha + moments.delta
        tag = f"{kind.value} p={p} n={n}"
        checks.append(_mean_band(f"mean of nW − p, {tag}", pivot, moments.alpha + moments.delta))
        if kind == EntryKind.REAL_GAUSSIAN:
            target = scale**2
            half = max(0.4, 3.0 * target * math.sqrt(2.0 / (z.size - 1)))
            variance = float(np.var(pivot, ddof=1))
            checks.append(
                _within(f"variance of nW − p, {tag}", variance, target - half, target + half)
            )
            checks.append(_ks(f"KS p-value of z, {tag}", z))
    return checks


def lrt_null(options: SuiteOptions) -> list[CheckLine]:
    """Corrected LRT at (50, 500) and quasi-LRT at (500, 50) are standard normal."""
    checks = []
    for p, n, name in ((50, 500, TestName.CORRECTED_LRT), (500, 50, TestName.QUASI_LRT)):
        study = ReplicateStudy(
            p=p, n=n, dist=EntryDistribution(seed=options.seed), replicates=options.replicates,
            functions=["x"], tests=[name],
        )
        z = lss_replicates(study, threads=options.threads).column(f"z[{name.value}]")
        checks.append(_ks(f"KS p-value, {name.value} p={p} n={n}", z))
        checks.append(_mean_band(f"mean z, {name.value} p={p} n={n}", z, 0.0))
    return checks


def generator_moments(options: SuiteOptions) -> list[CheckLine]:
    """Pooled moments of every entry law match their analytic values within 5 SE."""
    checks = []
    dists = [
        EntryDistribution(kind=kind, seed=options.seed)
        for kind in EntryKind
        if kind != EntryKind.STUDENT_T_SCALED
    ]
    dists.append(EntryDistribution(kind=EntryKind.STUDENT_T_SCALED, df=10.0, seed=options.seed))
    for dist in dists:
        audit = moment_audit(dist)
        for key, line in audit.lines.items():
            gap = abs(line.empirical - line.analytic)
            checks.append(
                CheckLine(
                    label=f"{dist.kind.value} {key}",
                    value=gap,
                    bound=f"≤ 5·SE = {5.0 * line.std_error:.3g}",
                    passed=line.passed,
                )
            )
    return checks


def structure_check(options: SuiteOptions) -> list[CheckLine]:
    """E|x*Bx − tr(BΣ)|^q / p^{q/2} shows no growth for Gaussian and Rademacher entries."""
    checks = []
    for kind in (EntryKind.REAL_GAUSSIAN, EntryKind.RADEMACHER):
        for q in (2, 4):
            result = dependent_structure_check(EntryDistribution(kind=kind, seed=options.seed), q=q)
            checks.append(
                CheckLine(
                    label=f"{kind.value} q={q} growth slope",
                    value=result.slope,
                    bound=f"< 0.25 or not significant (se {result.slope_se:.3g})",
                    passed=result.passed,
                )
            )
    return checks


def unitary_invariance(options: SuiteOptions) -> list[CheckLine]:
    """W and the LRT statistics are unchanged when every sample is rotated by one orthogonal U."""
    rng = replicate_rng(options.seed, 11)
    worst = 0.0
    for p, n in ((30, 90), (90, 30)):
        X = generate(p, n, EntryDistribution(seed=options.seed), rng=rng)
        U, _ = np.linalg.qr(rng.standard_normal((p, p)))
        w0, w1 = (frobenius_statistic(sample_eigenvalues(Y), p, n) for Y in (X, U @ X))
        l0, l1 = (lrt_statistic(lrt_eigenvalues(Y), p, n) for Y in (X, U @ X))
        worst = max(worst, abs(w0 - w1) / max(1.0, abs(w0)), abs(l0 - l1) / max(1.0, abs(l0)))
    return [_check("max relative change under rotation", worst, 1e-10)]


SUITES: dict[str, Callable[[SuiteOptions], list[CheckLine]]] = {
    "stieltjes-oracle": stieltjes_oracle,
    "degenerate-limits": degenerate_limits,
    "stieltjes-properties": stieltjes_properties,
    "appendix-b-oracle": closed_form_oracle,
    "delta-method": delta_method,
    "theorem1-esd": esd_convergence,
    "theorem3-null": frobenius_null,
    "theorem4-null": lrt_null,
    "generator-moments": generator_moments,
    "structure-check": structure_check,
    "unitary-invariance": unitary_invariance,
}


def run_suite(name: str, options: Optional[SuiteOptions] = None) -> SuiteResult:
    """
    Run one named suite.

    Raises:
        InvalidInputError: On an unknown suite name.
    """
    try:
        suite = SUITES[name]
    except KeyError:
        known = ", ".join(SUITES)
        raise InvalidInputError(f"unknown suite {name!r} (known: {known})") from None
    options = options or SuiteOptions()
    started = time.perf_counter()
    checks = suite(options)
    elapsed = time.perf_counter() - started
    passed = all(c.passed for c in checks)
    logger.info("suite %s: %s in %.1fs", name, "pass" if passed else "FAIL", elapsed)
    return SuiteResult(name=name, passed=passed, checks=checks, seconds=elapsed)


def run_suites(names: list[str], options: Optional[SuiteOptions] = None) -> VerifyReport:
    """Run suites in order; every name is validated before any suite starts."""
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise InvalidInputError(f"unknown suites: {', '.join(unknown)}")
    return VerifyReport(results=[run_suite(name, options) for name in names or list(SUITES)])
