"""Enums shared across the covspec modules."""

from enum import Enum


class LimitScenario(str, Enum):
    """Divergence regime of (p, n), classified from the aspect ratios."""

    COMPARABLE = "comparable"
    LARGE_N = "large-n"
    LARGE_P = "large-p"


class DegenerateLimit(str, Enum):
    """Exact endpoint limits of the aspect ratios."""

    LARGE_N = "large-n"
    LARGE_P = "large-p"


class SigmaMode(str, Enum):
    """How the population covariance enters the kernel functionals."""

    DIAGONAL = "diagonal"
    EXPLICIT_GAMMA = "explicit-gamma"


class ContourKind(str, Enum):
    """Contour shapes used for Cauchy integrals."""

    CIRCLE = "circle"
    RECTANGLE = "rectangle"


class TestName(str, Enum):
    """Identity-covariance test statistics."""

    __test__ = False

    FROBENIUS = "frobenius"
    CORRECTED_LRT = "corrected-lrt"
    QUASI_LRT = "quasi-lrt"
    NAGAO = "nagao"
    CLASSICAL_LRT = "classical-lrt"


class Alternative(str, Enum):
    """Side of the rejection region for p-values."""

    TWO_SIDED = "two-sided"
    GREATER = "greater"
    LESS = "less"


class EntryKind(str, Enum):
    """Distributions for the standardized entries of Y."""

    REAL_GAUSSIAN = "real-gaussian"
    COMPLEX_GAUSSIAN = "complex-gaussian"
    RADEMACHER = "rademacher"
    UNIFORM_SCALED = "uniform-scaled"
    STUDENT_T_SCALED = "student-t-scaled"


class SigmaKind(str, Enum):
    """Population covariance structure of a simulated study."""

    IDENTITY = "identity"
    DIAGONAL_FROM_MEASURE = "diagonal-from-measure"
    EXPLICIT_GAMMA = "explicit-gamma"


class MomentSource(str, Enum):
    """Provenance of a moment profile."""

    SUPPLIED = "supplied"
    ESTIMATED = "estimated"
