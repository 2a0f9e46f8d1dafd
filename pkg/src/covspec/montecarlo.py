"""
Synthetic data under the ICS model X = ΓY and replicate studies built on it.

Every replicate draws from its own counter-based stream derived from
(study seed, replicate index), so serial and threaded runs agree bit for bit.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import IO, Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from covspec.exceptions import DimensionError, InvalidInputError
from covspec.identity_tests import (
    TestReport,
    classical_lrt_test,
    frobenius_test,
    lrt_test,
    nagao_test,
)
from covspec.lss_moments import spectral_integral
from covspec.spectral_core import (
    AspectRatios,
    MomentProfile,
    SpectralMeasure,
    gram_eigenvalues,
    identity_measure,
    make_ratios,
    measure_from_sigma_eigenvalues,
)
from covspec.stieltjes import DensityCurve, density_curve
from covspec.test_functions import TestFunction, resolve
from covspec.types import EntryKind, SigmaKind, TestName

logger = logging.getLogger(__name__)

SEED_BOUND = 1 << 64
AUDIT_SIGMAS = 5.0
STRUCTURE_DIMS = (100, 400, 1600)
STRUCTURE_SLOPE_LIMIT = 0.25
ONE_SIDED_5PCT = 1.6448536269514722


# =============================================================================
# Entry distributions
# =============================================================================


class EntryDistribution(BaseModel):
    """
    Law of the standardized entries of Y (zero mean, unit variance).

    Student-t entries are scaled by √((df−2)/df) and need df > 4.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: EntryKind = EntryKind.REAL_GAUSSIAN
    df: Optional[float] = None
    seed: int = Field(default=0, ge=0, lt=SEED_BOUND)

    @model_validator(mode="after")
    def _check_df(self) -> "EntryDistribution":
        if self.kind == EntryKind.STUDENT_T_SCALED:
            if self.df is None or self.df <= 4.0:
                raise ValueError("student-t entries need df > 4 for a finite fourth moment")
        elif self.df is not None:
            raise ValueError(f"df only applies to {EntryKind.STUDENT_T_SCALED.value}")
        return self

    @property
    def is_real(self) -> bool:
        return self.kind != EntryKind.COMPLEX_GAUSSIAN

    @property
    def alpha(self) -> float:
        return 1.0 if self.is_real else 0.0

    @property
    def delta(self) -> float:
        if self.kind == EntryKind.RADEMACHER:
            return -2.0
        if self.kind == EntryKind.UNIFORM_SCALED:
            return -1.2
        if self.kind == EntryKind.STUDENT_T_SCALED:
            return 6.0 / (self.df - 4.0)
        return 0.0

    @property
    def moments(self) -> MomentProfile:
        return MomentProfile(alpha=self.alpha, delta=self.delta)

    def with_seed(self, seed: int) -> "EntryDistribution":
        return self.model_copy(update={"seed": seed})

    def sample(self, rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
        """Draw an array of i.i.d. entries."""
        if self.kind == EntryKind.REAL_GAUSSIAN:
            return rng.standard_normal(shape)
        if self.kind == EntryKind.COMPLEX_GAUSSIAN:
            return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
        if self.kind == EntryKind.RADEMACHER:
            return 2.0 * rng.integers(0, 2, size=shape).astype(float) - 1.0
        if self.kind == EntryKind.UNIFORM_SCALED:
            bound = math.sqrt(3.0)
            return rng.uniform(-bound, bound, size=shape)
        return rng.standard_t(self.df, size=shape) * math.sqrt((self.df - 2.0) / self.df)


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox stream for replicate `index` of a study seeded with `seed`."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


# =============================================================================
# Population covariance
# =============================================================================


def apportion(total: int, weights: Sequence[float]) -> np.ndarray:
    """
    Split `total` into integer counts proportional to `weights` (largest remainder).

    Ties in the fractional parts go to the earlier weight.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0.0) or w.sum() <= 0.0:
        raise InvalidInputError("weights must be a non-empty nonnegative vector with positive sum")
    quotas = total * w / w.sum()
    counts = np.floor(quotas).astype(int)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


class SigmaSpec(BaseModel):
    """Population covariance Σ = ΓΓ* of a simulated study."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: SigmaKind = SigmaKind.IDENTITY
    measure: Optional[SpectralMeasure] = None
    gamma: Optional[list[list[float]]] = Field(default=None, repr=False)

    @model_validator(mode="after")
    def _check_kind(self) -> "SigmaSpec":
        if (self.kind == SigmaKind.DIAGONAL_FROM_MEASURE) != (self.measure is not None):
            raise ValueError("a measure is required for, and only for, diagonal-from-measure")
        if (self.kind == SigmaKind.EXPLICIT_GAMMA) != (self.gamma is not None):
            raise ValueError("gamma is required for, and only for, explicit-gamma")
        return self

    @classmethod
    def identity(cls) -> "SigmaSpec":
        return cls()

    @classmethod
    def from_measure(cls, measure: SpectralMeasure) -> "SigmaSpec":
        return cls(kind=SigmaKind.DIAGONAL_FROM_MEASURE, measure=measure)

    @classmethod
    def from_gamma(cls, gamma: np.ndarray) -> "SigmaSpec":
        return cls(kind=SigmaKind.EXPLICIT_GAMMA, gamma=np.asarray(gamma, dtype=float).tolist())

    def diagonal(self, p: int) -> np.ndarray:
        """Eigenvalues t of Σ = diag(t) in diagonal modes, with counts apportioned from H."""
        if self.kind == SigmaKind.IDENTITY:
            return np.ones(p)
        if self.kind == SigmaKind.DIAGONAL_FROM_MEASURE:
            counts = apportion(p, self.measure.weights)
            return np.repeat(self.measure.t, counts)
        raise InvalidInputError("an explicit Γ has no diagonal form")

    def gamma_matrix(self, p: int) -> np.ndarray:
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.shape != (p, p):
            raise DimensionError(f"gamma has shape {gamma.shape}, expected ({p}, {p})")
        return gamma

    def covariance(self, p: int) -> np.ndarray:
        """Σ as a dense p × p matrix."""
        if self.kind == SigmaKind.EXPLICIT_GAMMA:
            gamma = self.gamma_matrix(p)
            return gamma @ gamma.T
        return np.diag(self.diagonal(p))

    def eigenvalues(self, p: int) -> np.ndarray:
        if self.kind == SigmaKind.EXPLICIT_GAMMA:
            return np.clip(np.linalg.eigvalsh(self.covariance(p)), 0.0, None)
        return self.diagonal(p)

    def norm(self, p: int) -> float:
        """‖Σ‖, the spectral norm."""
        return float(np.max(self.eigenvalues(p)))

    def population_measure(self, p: int) -> SpectralMeasure:
        """H_p = F^{Σ/‖Σ‖}."""
        if self.kind == SigmaKind.IDENTITY:
            return identity_measure()
        return measure_from_sigma_eigenvalues(self.eigenvalues(p))

    def apply(self, Y: np.ndarray) -> np.ndarray:
        """Return ΓY."""
        p = Y.shape[0]
        if self.kind == SigmaKind.IDENTITY:
            return Y
        if self.kind == SigmaKind.DIAGONAL_FROM_MEASURE:
            return np.sqrt(self.diagonal(p))[:, None] * Y
        return self.gamma_matrix(p) @ Y


# =============================================================================
# Generation and spectra
# =============================================================================


def generate(
    p: int,
    n: int,
    dist: EntryDistribution,
    sigma: Optional[SigmaSpec] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Draw a p × n data matrix X = ΓY.

    Args:
        p: Dimension.
        n: Sample size.
        dist: Entry distribution of Y.
        sigma: Population covariance (default identity).
        rng: Random stream (default: replicate 0 of `dist.seed`).

    Raises:
        DimensionError: If p or n < 1 or Γ is not p × p.
    """
    if p < 1 or n < 1:
        raise DimensionError(f"p and n must be positive, got p={p}, n={n}")
    sigma = sigma or SigmaSpec.identity()
    if rng is None:
        rng = replicate_rng(dist.seed, 0)
    return sigma.apply(dist.sample(rng, (p, n)))


def renormalized_spectrum(X: np.ndarray, sigma_norm: float = 1.0) -> np.ndarray:
    """
    The min(p, n) eigenvalues of S_n = XX*/(ν·‖Σ‖), ascending.

    Raises:
        InvalidInputError: If sigma_norm ≤ 0.
        EigensolverError: If the dense solver fails.
    """
    if sigma_norm <= 0.0:
        raise InvalidInputError(f"sigma_norm must be positive, got {sigma_norm}")
    p, n = np.shape(X)
    nu = (math.sqrt(p) + math.sqrt(n)) ** 2
    return gram_eigenvalues(X, scale=nu * sigma_norm)


def esd_distance(
    eigs: Sequence[float] | np.ndarray,
    p: int,
    ratios: AspectRatios,
    H: SpectralMeasure,
    curve: Optional[DensityCurve] = None,
) -> float:
    """
    Kolmogorov distance between the ESD of S_n and F^{c1,c2,H}.

    The ESD counts the p − min(p, n) structural zeros. The supremum is taken
    over the eigenvalues (both one-sided limits) and the density grid.
    """
    lam = np.sort(np.asarray(eigs, dtype=float))
    k = min(p, ratios.n)
    if lam.ndim != 1 or lam.size != k:
        raise DimensionError(f"expected {k} eigenvalues, got {lam.size}")
    curve = curve or density_curve(ratios, H)
    values = np.concatenate([np.zeros(p - k), lam])

    def esd(x: np.ndarray, side: str) -> np.ndarray:
        return np.searchsorted(values, x, side=side) / p

    theory = curve.cdf_at(values)
    theory_left = np.where(values <= 0.0, 0.0, theory)
    jumps = max(
        float(np.max(np.abs(esd(values, "right") - theory))),
        float(np.max(np.abs(esd(values, "left") - theory_left))),
    )
    grid = np.asarray(curve.grid)
    on_grid = float(np.max(np.abs(esd(grid, "right") - curve.cumulative())))
    return max(jumps, on_grid)


# =============================================================================
# Replicate studies
# =============================================================================


class ReplicateStudy(BaseModel):
    """A Monte Carlo study: geometry, entry law, Σ, replicate count and statistics."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    p: int = Field(ge=1)
    n: int = Field(ge=1)
    dist: EntryDistribution = Field(default_factory=EntryDistribution)
    sigma: SigmaSpec = Field(default_factory=SigmaSpec)
    replicates: int = Field(ge=1)
    functions: list[str | list[float]] = Field(default_factory=lambda: ["x", "x2"])
    tests: list[TestName] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_tests(self) -> "ReplicateStudy":
        for name in self.tests:
            if name == TestName.CORRECTED_LRT and self.p >= self.n:
                raise ValueError("the corrected LRT needs p < n")
            if name == TestName.QUASI_LRT and self.p <= self.n:
                raise ValueError("the quasi-LRT needs p > n")
            if name == TestName.CLASSICAL_LRT and self.p >= self.n:
                raise ValueError("the classical LRT needs p < n")
        return self

    @property
    def ratios(self) -> AspectRatios:
        return make_ratios(self.p, self.n)

    def resolved_functions(self) -> list[TestFunction]:
        return [resolve(f) for f in self.functions]

    def columns(self) -> list[str]:
        names = [f"X[{f.name}]" for f in self.resolved_functions()]
        return names + [f"z[{t.value}]" for t in self.tests]


class ReplicateSummary(BaseModel):
    """Column means, standard errors and covariance over replicates."""

    model_config = ConfigDict(frozen=True)

    mean: list[float]
    std_error: list[float]
    cov: list[list[float]]


class ReplicateResult(BaseModel):
    """Per-replicate values of a study plus their summary."""

    model_config = ConfigDict(frozen=True)

    columns: list[str]
    rows: list[list[float]]
    summary: ReplicateSummary
    centers: list[float]
    study: ReplicateStudy

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.rows)[:, self.columns.index(name)]

    def write_csv(self, stream: IO[str]) -> None:
        """One row per replicate with round-trip precision."""
        writer = csv.writer(stream)
        writer.writerow(["replicate", *self.columns])
        for index, row in enumerate(self.rows):
            writer.writerow([index, *(repr(float(v)) for v in row)])


def summarize(rows: np.ndarray) -> ReplicateSummary:
    """Deterministic reduction of a replicates × columns array."""
    r, k = rows.shape
    mean = np.array([math.fsum(rows[:, j]) / r for j in range(k)])
    centered = rows - mean
    if r > 1:
        cov = np.array(
            [
                [math.fsum(centered[:, a] * centered[:, b]) / (r - 1) for b in range(k)]
                for a in range(k)
            ]
        )
    else:
        cov = np.zeros((k, k))
    se = np.sqrt(np.diag(cov) / r)
    return ReplicateSummary(mean=mean.tolist(), std_error=se.tolist(), cov=cov.tolist())


def _test_report(
    name: TestName, lam: np.ndarray, p: int, n: int, unscale: float, moments: MomentProfile
) -> TestReport:
    """Run a test on the spectrum λ of XX*/(ν‖Σ‖); `unscale` is ν‖Σ‖."""
    if name in (TestName.CORRECTED_LRT, TestName.QUASI_LRT):
        # L* runs on XX*/n, L on X*X/p; both share the nonzero spectrum of XX*
        return lrt_test(lam * unscale / max(p, n), p, n, moments)
    sample = lam * unscale / n
    if name == TestName.FROBENIUS:
        return frobenius_test(sample, p, n, moments)
    if name == TestName.NAGAO:
        return nagao_test(sample, p, n)
    return classical_lrt_test(sample, p, n)


def lss_replicates(study: ReplicateStudy, threads: int = 1) -> ReplicateResult:
    """
    Simulate one row of linear spectral statistics per replicate.

    Each column is

        X_f = (ν/√(pn))·(Σᵢ f(λᵢ) + (p − k)·f(0) − p∫f dF^{c_{n1},c_{n2},H_p}),

    where λᵢ are the k = min(p, n) eigenvalues of S_n = XX*/(ν‖Σ‖) and the p − k
    structural zeros enter through f(0). The factor ν/√(pn) makes the columns O(1)
    and directly comparable with `lss_mean` and `lss_cov`.

    The centering integrals are computed once per study. Requested identity
    tests are evaluated on the same spectra and reported as z-scores.

    Args:
        study: Study definition.
        threads: Worker threads; results do not depend on it.

    Returns:
        The ReplicateResult with one row per replicate.
    """
    if threads < 1:
        raise InvalidInputError(f"threads must be ≥ 1, got {threads}")
    p, n = study.p, study.n
    ratios = study.ratios
    H = study.sigma.population_measure(p)
    sigma_norm = study.sigma.norm(p)
    functions = study.resolved_functions()
    moments = study.dist.moments
    scale = ratios.nu / math.sqrt(p * n)
    k = min(p, n)
    centers = [p * spectral_integral(f, ratios, H) for f in functions]
    logger.info(
        "study p=%d n=%d replicates=%d dist=%s sigma=%s",
        p, n, study.replicates, study.dist.kind.value, study.sigma.kind.value,
    )

    def run(index: int) -> list[float]:
        X = generate(p, n, study.dist, study.sigma, replicate_rng(study.dist.seed, index))
        lam = renormalized_spectrum(X, sigma_norm)
        row = []
        for f, center in zip(functions, centers):
            total = math.fsum(np.real(f(lam)))
            if p > k:
                total += (p - k) * float(np.real(f(np.zeros(1)))[0])
            row.append(scale * (total - center))
        for name in study.tests:
            row.append(_test_report(name, lam, p, n, ratios.nu * sigma_norm, moments).z_score)
        return row

    indices = range(study.replicates)
    if threads == 1:
        rows = [run(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, indices))
    data = np.asarray(rows, dtype=float).reshape(study.replicates, -1)
    return ReplicateResult(
        columns=study.columns(),
        rows=data.tolist(),
        summary=summarize(data),
        centers=centers,
        study=study,
    )


# =============================================================================
# Diagnostics
# =============================================================================


class StructureCheck(BaseModel):
    """Growth of E|x*Bx − tr(BΣ)|^q / p^{q/2} across dimensions."""

    model_config = ConfigDict(frozen=True)

    q: int
    dims: list[int]
    ratios: list[float]
    std_errors: list[float]
    slope: float
    slope_se: float
    passed: bool


def _householder_sign_matrix(p: int, rng: np.random.Generator) -> np.ndarray:
    """B = HDH with D a random ±1 diagonal and H a random Householder reflection; ‖B‖ = 1."""
    v = rng.standard_normal(p)
    v /= np.linalg.norm(v)
    reflect = np.eye(p) - 2.0 * np.outer(v, v)
    signs = 2.0 * rng.integers(0, 2, size=p) - 1.0
    return reflect @ (signs[:, None] * reflect)


def dependent_structure_check(
    dist: EntryDistribution,
    sigma: Optional[SigmaSpec] = None,
    q: int = 2,
    trials: int = 400,
    dims: Sequence[int] = STRUCTURE_DIMS,
) -> StructureCheck:
    """
    Check that E|x*Bx − tr(BΣ)|^q = O(p^{q/2}) shows no growth trend in p.

    The scaled moments are regressed on log p (weighted by their standard
    errors); the check passes when the slope is not significantly positive at
    5% or is below 0.25.

    Raises:
        InvalidInputError: If q ∉ {2, 4} or fewer than two dimensions are given.
    """
    if q not in (2, 4):
        raise InvalidInputError(f"q must be 2 or 4, got {q}")
    if len(dims) < 2 or trials < 2:
        raise InvalidInputError("need at least two dimensions and two trials")
    sigma = sigma or SigmaSpec.identity()
    means, errors = [], []
    for index, p in enumerate(dims):
        rng = replicate_rng(dist.seed, index)
        B = _householder_sign_matrix(p, rng)
        X = generate(p, trials, dist, sigma, rng)
        trace = float(np.sum(B * sigma.covariance(p).T))
        forms = np.real(np.sum(X.conj() * (B @ X), axis=0))
        scaled = np.abs(forms - trace) ** q / p ** (q / 2)
        means.append(float(np.mean(scaled)))
        errors.append(float(np.std(scaled, ddof=1) / math.sqrt(trials)))

    means_arr, errors_arr = np.asarray(means), np.asarray(errors)
    if np.any(means_arr <= 0.0):
        slope, slope_se = 0.0, math.inf
    else:
        sigma_log = np.maximum(errors_arr / means_arr, 1e-12)
        coeffs, cov = np.polyfit(
            np.log(dims), np.log(means_arr), 1, w=1.0 / sigma_log, cov="unscaled"
        )
        slope, slope_se = float(coeffs[0]), float(math.sqrt(cov[0, 0]))
    passed = slope < STRUCTURE_SLOPE_LIMIT or slope / slope_se < ONE_SIDED_5PCT
    logger.debug("structure check q=%d slope=%.4g ± %.3g", q, slope, slope_se)
    return StructureCheck(
        q=q,
        dims=list(dims),
        ratios=means,
        std_errors=errors,
        slope=slope,
        slope_se=slope_se,
        passed=passed,
    )


class MomentAuditLine(BaseModel):
    model_config = ConfigDict(frozen=True)

    empirical: float
    analytic: float
    std_error: float
    passed: bool


class MomentAudit(BaseModel):
    """Empirical vs analytic (mean, variance, E y², E|y|⁴) of an entry distribution."""

    model_config = ConfigDict(frozen=True)

    kind: EntryKind
    draws: int
    lines: dict[str, MomentAuditLine]

    @property
    def passed(self) -> bool:
        return all(line.passed for line in self.lines.values())


def _audit_line(samples: np.ndarray, analytic: complex) -> MomentAuditLine:
    draws = samples.size
    empirical = complex(np.mean(samples))
    se = float(math.sqrt((np.var(samples.real) + np.var(samples.imag)) / draws))
    gap = abs(empirical - analytic)
    return MomentAuditLine(
        empirical=abs(empirical) if np.iscomplexobj(samples) else empirical.real,
        analytic=abs(analytic) if np.iscomplexobj(samples) else complex(analytic).real,
        std_error=se,
        passed=gap <= max(AUDIT_SIGMAS * se, 1e-12),
    )


def moment_audit(dist: EntryDistribution, draws: int = 1_000_000) -> MomentAudit:
    """
    Compare pooled empirical moments of `draws` entries with their analytic values.

    The fourth moment is skipped for Student-t with df ≤ 8, where its
    standard error is not finite.
    """
    if draws < 2:
        raise InvalidInputError("an audit needs at least two draws")
    y = dist.sample(replicate_rng(dist.seed, 0), (draws,))
    square = np.abs(y) ** 2
    lines: dict[str, Any] = {
        "mean": _audit_line(y, 0.0),
        "variance": _audit_line(square, 1.0),
        "second": _audit_line(y**2, dist.alpha),
    }
    if not (dist.kind == EntryKind.STUDENT_T_SCALED and dist.df <= 8.0):
        lines["fourth"] = _audit_line(square**2, dist.moments.fourth_moment)
    return MomentAudit(kind=dist.kind, draws=draws, lines=lines)
