"""Foundational domain types: population spectra, aspect ratios and moment profiles."""

import math
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator
from scipy import linalg

from covspec.exceptions import DimensionError, EigensolverError, InvalidInputError
from covspec.types import LimitScenario, MomentSource

# Relative distance under which two atoms are the same point
ATOM_MERGE_TOL = 1e-12
WEIGHT_SUM_TOL = 1e-12
SCENARIO_THRESHOLD = 0.01


# =============================================================================
# Population spectral measure
# =============================================================================


def _canonical_atoms(atoms: Sequence[float], weights: Sequence[float]) -> tuple[list, list]:
    """Sort atoms and merge those within ATOM_MERGE_TOL relative distance."""
    order = np.argsort(np.asarray(atoms, dtype=float), kind="stable")
    merged_atoms: list[float] = []
    merged_weights: list[float] = []
    for idx in order:
        t, w = float(atoms[idx]), float(weights[idx])
        if merged_atoms and abs(t - merged_atoms[-1]) <= ATOM_MERGE_TOL * max(1.0, abs(t)):
            merged_weights[-1] += w
        else:
            merged_atoms.append(t)
            merged_weights.append(w)
    return merged_atoms, merged_weights


class SpectralMeasure(BaseModel):
    """
    Discrete population spectral distribution H of Σ/‖Σ‖.

    Atoms are kept sorted with duplicates merged; the largest atom is exactly 1.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    atoms: list[float]
    weights: list[float]

    @model_validator(mode="before")
    @classmethod
    def _canonicalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        atoms, weights = data.get("atoms"), data.get("weights")
        if atoms is None or weights is None or len(atoms) != len(weights) or not atoms:
            return data
        atoms, weights = _canonical_atoms(atoms, weights)
        if abs(atoms[-1] - 1.0) <= ATOM_MERGE_TOL:
            atoms[-1] = 1.0
        return {**data, "atoms": atoms, "weights": weights}

    @model_validator(mode="after")
    def _check_invariants(self) -> "SpectralMeasure":
        if not self.atoms or len(self.atoms) != len(self.weights):
            raise ValueError("atoms and weights must be non-empty and of equal length")
        if any(t < 0.0 or t > 1.0 for t in self.atoms):
            raise ValueError("atoms must lie in [0, 1]")
        if self.atoms[-1] != 1.0:
            raise ValueError("largest atom must be 1 (spectral-norm normalization)")
        if any(w <= 0.0 for w in self.weights):
            raise ValueError("weights must be strictly positive")
        if abs(math.fsum(self.weights) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights must sum to 1")
        return self

    @classmethod
    def from_atoms(cls, atoms: Sequence[float], weights: Sequence[float]) -> "SpectralMeasure":
        """
        Build a measure from unnormalized weights.

        Args:
            atoms: Atom locations in [0, 1] with maximum 1.
            weights: Nonnegative masses; rescaled to sum to 1.

        Returns:
            The canonical SpectralMeasure.
        """
        total = math.fsum(weights)
        if total <= 0.0:
            raise InvalidInputError("weights must have positive total mass")
        return cls(atoms=list(atoms), weights=[w / total for w in weights])

    @property
    def t(self) -> np.ndarray:
        """Atom locations as an array."""
        return np.asarray(self.atoms, dtype=float)

    @property
    def w(self) -> np.ndarray:
        """Atom weights as an array."""
        return np.asarray(self.weights, dtype=float)

    @property
    def zero_mass(self) -> float:
        """Mass H places at the origin (singular Σ)."""
        return self.weights[0] if self.atoms[0] == 0.0 else 0.0

    @property
    def min_atom(self) -> float:
        return self.atoms[0]

    @property
    def is_identity(self) -> bool:
        """True for H = δ₁."""
        return len(self.atoms) == 1

    def moment(self, k: int) -> float:
        """Return ∫ t^k dH(t)."""
        return float(np.dot(self.w, self.t**k))


def identity_measure() -> SpectralMeasure:
    """Return H = δ₁, the population spectrum under Σ = I."""
    return SpectralMeasure(atoms=[1.0], weights=[1.0])


def measure_from_sigma_eigenvalues(eigs: Sequence[float]) -> SpectralMeasure:
    """
    Build H_n = F^{Σ/‖Σ‖} from the eigenvalues of Σ.

    Args:
        eigs: Nonnegative eigenvalues of Σ, not all zero.

    Returns:
        Atoms at the distinct values of eigs/max(eigs) with empirical frequencies.

    Raises:
        InvalidInputError: If eigs is empty, has a negative entry or is all zero.
    """
    values = np.asarray(eigs, dtype=float).ravel()
    if values.size == 0:
        raise InvalidInputError("eigenvalue list is empty")
    if np.any(values < 0.0):
        raise InvalidInputError("eigenvalues of a covariance matrix must be nonnegative")
    top = float(values.max())
    if top <= 0.0:
        raise InvalidInputError(
            "all eigenvalues are zero",
            cause="Σ = 0 has no spectral-norm normalization",
        )
    scaled = values / top
    scaled[values == top] = 1.0
    atoms, weights = _canonical_atoms(scaled.tolist(), [1.0 / values.size] * values.size)
    return SpectralMeasure.from_atoms(atoms, weights)


# =============================================================================
# Aspect ratios
# =============================================================================


class AspectRatios(BaseModel):
    """The (p, n) geometry with ν = (√p+√n)², c1 = p/ν and c2 = n/ν."""

    model_config = ConfigDict(frozen=True, extra="ignore")

    p: int = Field(ge=1)
    n: int = Field(ge=1)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def nu(self) -> float:
        return (math.sqrt(self.p) + math.sqrt(self.n)) ** 2

    @computed_field  # type: ignore[prop-decorator]
    @property
    def c1(self) -> float:
        return self.p / self.nu

    @computed_field  # type: ignore[prop-decorator]
    @property
    def c2(self) -> float:
        return self.n / self.nu

    @property
    def sqrt_c1c2(self) -> float:
        return math.sqrt(self.c1 * self.c2)

    @property
    def scenario(self) -> LimitScenario:
        """Diagnostic classification; never changes any formula."""
        if self.c1 < SCENARIO_THRESHOLD:
            return LimitScenario.LARGE_N
        if self.c2 < SCENARIO_THRESHOLD:
            return LimitScenario.LARGE_P
        return LimitScenario.COMPARABLE

    @property
    def zero_atom(self) -> float:
        """Mass of the structural zero eigenvalues, max(0, 1 − c2/c1)."""
        return max(0.0, 1.0 - self.n / self.p)

    @property
    def support_bounds(self) -> tuple[float, float]:
        """Bounds ((√c2−√c1)², 1) of the continuous part of F under H = δ₁."""
        return ((math.sqrt(self.c2) - math.sqrt(self.c1)) ** 2, 1.0)


def make_ratios(p: int, n: int) -> AspectRatios:
    """
    Compute the aspect ratios of a p × n data matrix.

    Raises:
        InvalidInputError: If p or n is not a positive integer.
    """
    if isinstance(p, bool) or isinstance(n, bool) or int(p) != p or int(n) != n:
        raise InvalidInputError(f"p and n must be integers, got p={p!r}, n={n!r}")
    if p < 1 or n < 1:
        raise InvalidInputError(f"p and n must be positive, got p={p}, n={n}")
    return AspectRatios(p=int(p), n=int(n))


# =============================================================================
# Moment profile
# =============================================================================


class MomentProfile(BaseModel):
    """
    Fourth-moment parameters of the standardized entries.

    alpha is E y² (1 for real entries, 0 for complex); delta is E|y|⁴ − 2 − alpha.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float
    delta: float
    source: MomentSource = MomentSource.SUPPLIED

    @model_validator(mode="after")
    def _check_invariants(self) -> "MomentProfile":
        if self.alpha not in (0.0, 1.0):
            raise ValueError("alpha must be exactly 0 (complex) or 1 (real)")
        if self.delta < -1.0 - self.alpha:
            raise ValueError("delta must be ≥ −1 − alpha since E|y|⁴ ≥ 1")
        return self

    @classmethod
    def real_gaussian(cls) -> "MomentProfile":
        return cls(alpha=1.0, delta=0.0)

    @classmethod
    def complex_gaussian(cls) -> "MomentProfile":
        return cls(alpha=0.0, delta=0.0)

    @property
    def fourth_moment(self) -> float:
        """E|y|⁴ = 2 + α + Δ."""
        return 2.0 + self.alpha + self.delta


# =============================================================================
# Gram spectra
# =============================================================================

NEGATIVE_EIG_TOL = 1e-10


def gram_eigenvalues(X: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """
    Nonzero-side spectrum of XX*/scale, computed on the smaller Gram matrix.

    Args:
        X: p × n data matrix (real or complex).
        scale: Positive divisor applied to the Gram matrix.

    Returns:
        The min(p, n) eigenvalues in ascending order, rounding negatives clamped to 0.

    Raises:
        DimensionError: If X is not a non-empty 2-d array.
        EigensolverError: If the solver fails or returns a clearly indefinite spectrum.
    """
    X = np.asarray(X)
    if X.ndim != 2 or X.size == 0:
        raise DimensionError(f"data must be a non-empty 2-d array, got shape {X.shape}")
    p, n = X.shape
    gram = X.conj().T @ X if p > n else X @ X.conj().T
    try:
        eigs = linalg.eigvalsh(gram)
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(
            "dense symmetric eigensolver failed",
            cause=str(exc),
            details={"shape": [p, n], "finite": bool(np.all(np.isfinite(gram)))},
        ) from exc
    top = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    if not np.all(np.isfinite(eigs)) or eigs[0] < -NEGATIVE_EIG_TOL * max(top, 1e-300):
        raise EigensolverError(
            "Gram spectrum is not positive semidefinite",
            details={"min": float(eigs[0]), "max": top},
        )
    return np.clip(eigs, 0.0, None) / scale
