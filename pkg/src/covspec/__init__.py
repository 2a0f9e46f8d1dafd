"""
covspec - spectral analysis of renormalized sample covariance matrices.

S_n = XX*/((√p+√n)²‖Σ‖) has a limiting spectral distribution for any rates of
p and n. This package computes that limit, the CLT means and covariances of
linear spectral statistics, and identity-covariance tests built on them, with
a Monte Carlo harness to check all of it.

Example:
    ```python
    from covspec import KernelContext, MomentProfile, identity_measure, lss_table, make_ratios
    from covspec.test_functions import IDENTITY, SQUARE

    ctx = KernelContext(
        ratios=make_ratios(100, 400),
        H=identity_measure(),
        moments=MomentProfile.real_gaussian(),
    )
    table = lss_table([IDENTITY, SQUARE], ctx)
    print(table.means, table.cov)
    ```
"""

__version__ = "0.1.0"

from covspec.exceptions import (  # noqa: E402
    ConfigError,
    ContourError,
    CovspecError,
    DataFormatError,
    DegenerateError,
    DimensionError,
    DomainError,
    EigensolverError,
    InsufficientDataError,
    InvalidInputError,
    LogDomainError,
    NonConvergenceError,
    NumericalError,
    QuadratureDivergedError,
    SingularMatrixError,
    VerificationError,
)
from covspec.identity_tests import (  # noqa: E402
    TestReport,
    delta_method_check,
    estimate_moment_profile,
    frobenius_statistic,
    frobenius_test,
    lrt_statistic,
    lrt_test,
)
from covspec.lss_moments import (  # noqa: E402
    KernelContext,
    LssMomentTable,
    identity_closed_forms,
    lss_cov,
    lss_mean,
    lss_table,
    spectral_integral,
)
from covspec.montecarlo import (  # noqa: E402
    EntryDistribution,
    ReplicateStudy,
    SigmaSpec,
    dependent_structure_check,
    esd_distance,
    generate,
    lss_replicates,
    renormalized_spectrum,
)
from covspec.spectral_core import (  # noqa: E402
    AspectRatios,
    MomentProfile,
    SpectralMeasure,
    identity_measure,
    make_ratios,
)
from covspec.stieltjes import (  # noqa: E402
    DensityCurve,
    cdf,
    density_curve,
    solve,
    solve_degenerate,
)
from covspec.types import (  # noqa: E402
    Alternative,
    ContourKind,
    DegenerateLimit,
    EntryKind,
    LimitScenario,
    SigmaKind,
    SigmaMode,
    TestName,
)

__all__ = [
    # Core types
    "SpectralMeasure",
    "AspectRatios",
    "MomentProfile",
    "identity_measure",
    "make_ratios",
    # Stieltjes transform
    "solve",
    "solve_degenerate",
    "density_curve",
    "cdf",
    "DensityCurve",
    # LSS moments
    "KernelContext",
    "LssMomentTable",
    "lss_table",
    "lss_mean",
    "lss_cov",
    "spectral_integral",
    "identity_closed_forms",
    # Identity tests
    "TestReport",
    "frobenius_statistic",
    "frobenius_test",
    "lrt_statistic",
    "lrt_test",
    "delta_method_check",
    "estimate_moment_profile",
    # Monte Carlo
    "EntryDistribution",
    "SigmaSpec",
    "ReplicateStudy",
    "generate",
    "renormalized_spectrum",
    "esd_distance",
    "lss_replicates",
    "dependent_structure_check",
    # Exceptions
    "CovspecError",
    "InvalidInputError",
    "DomainError",
    "LogDomainError",
    "DimensionError",
    "DegenerateError",
    "InsufficientDataError",
    "ContourError",
    "ConfigError",
    "DataFormatError",
    "NumericalError",
    "NonConvergenceError",
    "QuadratureDivergedError",
    "SingularMatrixError",
    "EigensolverError",
    "VerificationError",
    # Enums
    "LimitScenario",
    "DegenerateLimit",
    "SigmaMode",
    "ContourKind",
    "TestName",
    "Alternative",
    "EntryKind",
    "SigmaKind",
    # Version
    "__version__",
]
