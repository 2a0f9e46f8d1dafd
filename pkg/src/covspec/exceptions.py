"""Custom exception classes for the covspec library."""

from typing import Any, Optional

from pydantic import ValidationError


class CovspecError(Exception):
    """Base exception for all covspec errors."""

    exit_code: int = 1

    def __init__(
        self,
        message: str,
        code: Optional[str] = None,
        cause: Optional[str] = None,
        details: Optional[dict[str, Any]] = None,
    ) -> None:
        super().__init__(message)
        self.message = message
        self.code = code
        self.cause = cause
        self.details = details

    def __str__(self) -> str:
        parts = [self.message]
        if self.code:
            parts.insert(0, f"[{self.code}]")
        if self.cause:
            parts.append(f"(cause: {self.cause})")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(message={self.message!r}, code={self.code!r})"


# -----------------------------------------------------------------------------
# Input and domain errors (exit 2)
# -----------------------------------------------------------------------------


class InvalidInputError(CovspecError):
    """Raised when an argument violates a precondition."""

    exit_code = 2


class DomainError(InvalidInputError):
    """Raised when a value lies outside the domain a function is defined on."""


class LogDomainError(DomainError):
    """Raised when a logarithm would be taken of a non-positive quantity."""


class DimensionError(InvalidInputError):
    """Raised when array shapes or counts do not conform."""


class DegenerateError(InvalidInputError):
    """Raised when a formula is undefined for the given geometry (p = n for the LRT)."""


class ConfigError(CovspecError):
    """Raised when a run configuration cannot be parsed or validated."""

    exit_code = 2


class DataFormatError(CovspecError):
    """Raised when a data matrix file is malformed."""

    exit_code = 2


class InsufficientDataError(InvalidInputError):
    """Raised when there is too little data for an estimate."""


class ContourError(InvalidInputError):
    """Raised when a contour does not clear the support or a singularity."""


class ContourOverlapError(ContourError):
    """Raised when two contours of a double integral intersect."""


class CoincidentPointsError(InvalidInputError):
    """Raised when the covariance kernel is evaluated at coincident points."""


# -----------------------------------------------------------------------------
# Numerical failures (exit 3)
# -----------------------------------------------------------------------------


class NumericalError(CovspecError):
    """Base class for numerical failures."""

    exit_code = 3


class NonConvergenceError(NumericalError):
    """Raised when the Stieltjes fixed-point iteration does not converge."""

    def __init__(
        self,
        message: str,
        iterations: int,
        residual: float,
        z: Optional[complex] = None,
        **kwargs: Any,
    ) -> None:
        super().__init__(message, **kwargs)
        self.iterations = iterations
        self.residual = residual
        self.z = z


class PoleError(NumericalError):
    """Raised when 1 + t*m_under vanishes at an atom of H."""


class NearSingularError(NumericalError):
    """Raised when the mean-parameter denominator is close to zero (support edge)."""


class QuadratureDivergedError(NumericalError):
    """Raised when node doubling does not stabilise a contour integral."""


# -----------------------------------------------------------------------------
# Degenerate data (exit 4)
# -----------------------------------------------------------------------------


class SingularMatrixError(CovspecError):
    """Raised when a spectrum required to be positive has a (near) zero eigenvalue."""

    exit_code = 4


class EigensolverError(CovspecError):
    """Raised when the dense eigensolver fails."""

    exit_code = 4


# -----------------------------------------------------------------------------
# Verification (exit 5)
# -----------------------------------------------------------------------------


class VerificationError(CovspecError):
    """Raised when one or more acceptance suites fail."""

    exit_code = 5


def exit_code_for(exc: BaseException) -> int:
    """
    Map an exception to the CLI exit code.

    Args:
        exc: The exception raised by a command.

    Returns:
        The stable exit code (2 input, 3 numeric, 4 degenerate data, 5 verification).
    """
    if isinstance(exc, CovspecError):
        return exc.exit_code

    if isinstance(exc, (ValidationError, ValueError)):
        return 2
    return 1
