"""
Central-limit ingredients for linear spectral statistics of S_n.

For a test function f the statistic is

    X_f = (ν/√(pn)) · (Σᵢ f(λᵢ) − p ∫ f dF^{c1,c2,H}),

whose mean and covariance are contour integrals of the mean parameter 𝒜(z)
and the kernel ℬ(z1, z2). Both are affine in the moment profile:

    𝒜 = α·𝒜_α + Δ·𝒜_Δ,    ℬ = (1+α)·ℬ_0 + Δ·ℬ_Δ,

so a table is integrated once and combined with any (α, Δ).
"""

import logging
import math
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg

from covspec.contours import (
    DEFAULT_NODES,
    MAX_NODES,
    Contour,
    check_nested,
    default_contour,
    integrate_with_doubling,
    validate_contour,
)
from covspec.exceptions import (
    CoincidentPointsError,
    DimensionError,
    InvalidInputError,
    LogDomainError,
    NearSingularError,
    PoleError,
    QuadratureDivergedError,
)
from covspec.spectral_core import (
    AspectRatios,
    MomentProfile,
    SpectralMeasure,
    measure_from_sigma_eigenvalues,
)
from covspec.stieltjes import stieltjes_values, zero_atom
from covspec.test_functions import IDENTITY, LOG, SQUARE, TestFunction
from covspec.types import SigmaMode

logger = logging.getLogger(__name__)

POLE_TOL = 1e-14
NEAR_SINGULAR_TOL = 1e-10
COINCIDENT_TOL = 1e-12
GAMMA_NORM_TOL = 1e-10
REALNESS_TOL = 1e-8
SYMMETRY_TOL = 1e-9
PSD_TOL = 1e-8
MAX_DOUBLE_NODES = 8192
CHUNK_ELEMENTS = 1 << 21


# =============================================================================
# Context and result types
# =============================================================================


class KernelContext(BaseModel):
    """Everything the kernel functionals depend on."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ratios: AspectRatios
    H: SpectralMeasure
    moments: MomentProfile
    sigma_mode: SigmaMode = SigmaMode.DIAGONAL
    gamma: Optional[np.ndarray] = Field(default=None, repr=False)

    @model_validator(mode="after")
    def _check_gamma(self) -> "KernelContext":
        if self.sigma_mode == SigmaMode.DIAGONAL:
            if self.gamma is not None:
                raise InvalidInputError("gamma is only used in explicit-gamma mode")
            return self
        if self.gamma is None:
            raise InvalidInputError("explicit-gamma mode requires gamma")
        if self.gamma.ndim != 2 or self.gamma.shape[0] != self.gamma.shape[1]:
            raise DimensionError(f"gamma must be square, got shape {self.gamma.shape}")
        if self.gamma.shape[0] != self.ratios.p:
            size = self.gamma.shape[0]
            raise DimensionError(f"gamma is {size}×{size} but p={self.ratios.p}")
        norm = linalg.norm(self.gamma, 2) ** 2
        if abs(norm - 1.0) > GAMMA_NORM_TOL:
            raise InvalidInputError(
                f"gamma must be normalized so that ‖ΓΓ*‖ = 1, got {norm:.12g}",
                cause="use KernelContext.from_gamma to normalize",
            )
        return self

    @classmethod
    def from_gamma(
        cls, ratios: AspectRatios, gamma: np.ndarray, moments: MomentProfile
    ) -> "KernelContext":
        """
        Build an explicit-gamma context, normalizing Γ by √‖ΓΓ*‖.

        H is taken as the spectrum of ΓΓ*/‖ΓΓ*‖.
        """
        gamma = np.asarray(gamma)
        if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
            raise DimensionError(f"gamma must be square, got shape {gamma.shape}")
        norm = linalg.norm(gamma, 2)
        if norm == 0.0:
            raise InvalidInputError("gamma is zero")
        scaled = gamma / norm
        eigs = linalg.eigvalsh(scaled @ scaled.conj().T)
        H = measure_from_sigma_eigenvalues(np.clip(eigs, 0.0, None))
        return cls(
            ratios=ratios, H=H, moments=moments, sigma_mode=SigmaMode.EXPLICIT_GAMMA, gamma=scaled
        )

    def with_moments(self, moments: MomentProfile) -> "KernelContext":
        return self.model_copy(update={"moments": moments})


class LssMomentTable(BaseModel):
    """Limiting means and covariances of X_f for a list of test functions."""

    model_config = ConfigDict(frozen=True)

    functions: list[str]
    means: list[float]
    cov: list[list[float]]
    centers: Optional[list[float]] = None
    diagnostics: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_cov(self) -> "LssMomentTable":
        k = len(self.functions)
        if len(self.means) != k or len(self.cov) != k or any(len(row) != k for row in self.cov):
            raise ValueError("means and cov must match the number of functions")
        if self.centers is not None and len(self.centers) != k:
            raise ValueError("centers must match the number of functions")
        if k == 0:
            return self
        cov = np.asarray(self.cov)
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        if np.min(np.linalg.eigvalsh(cov)) < -PSD_TOL * scale:
            raise ValueError("covariance matrix is not positive semidefinite")
        return self

    def mean_of(self, name: str) -> float:
        return self.means[self.functions.index(name)]

    def cov_of(self, first: str, second: str) -> float:
        return self.cov[self.functions.index(first)][self.functions.index(second)]

    def center_of(self, name: str) -> float:
        if self.centers is None:
            raise InvalidInputError("table has no centering values")
        return self.centers[self.functions.index(name)]


# =============================================================================
# Functionals on arrays of companion values
# =============================================================================


class _Kernels:
    """Vectorized g, h, s, t evaluated from companion values m̲."""

    def __init__(self, ctx: KernelContext) -> None:
        self.ctx = ctx
        self.c1 = ctx.ratios.c1
        self.c2 = ctx.ratios.c2
        self.t = ctx.H.t
        self.w = ctx.H.w
        self.explicit = ctx.sigma_mode == SigmaMode.EXPLICIT_GAMMA
        if self.explicit:
            sigma = ctx.gamma @ ctx.gamma.conj().T
            self.d, q = linalg.eigh(sigma)
            self.projection = np.abs(q.conj().T @ ctx.gamma) ** 2
            logger.debug("explicit-gamma kernels with p=%d", ctx.ratios.p)

    @staticmethod
    def _resolvent(mu: np.ndarray, atoms: np.ndarray) -> np.ndarray:
        u = 1.0 + np.outer(mu, atoms)
        if np.min(np.abs(u)) < POLE_TOL:
            raise PoleError("1 + t·m̲(z) vanishes at an atom of H")
        return u

    def u(self, mu: np.ndarray) -> np.ndarray:
        return self._resolvent(mu, self.t)

    def g(self, z: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.c1 * (u ** -1 * self.t) @ self.w - z

    def h_diag(self, u: np.ndarray) -> np.ndarray:
        return (self.t / u) ** 2 @ self.w

    def h_cross(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        return (self.w * self.t / u1) @ (self.t / u2).T

    def third(self, u: np.ndarray) -> np.ndarray:
        """∫ t²/(1+t·m̲)³ dH."""
        return (self.t**2 / u**3) @ self.w

    def s(self, mu: np.ndarray, u: np.ndarray) -> np.ndarray:
        if not self.explicit:
            return self.third(u)
        v = self._resolvent(mu, self.d)
        first = (1.0 / v) @ self.projection
        second = (1.0 / v**2) @ self.projection
        return np.sum(first * second, axis=1) / self.ctx.ratios.p

    def t_factors(self, mu: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Rows whose inner products give t(z1, z2)."""
        if not self.explicit:
            return self.t / u**2 * np.sqrt(self.w)
        v = self._resolvent(mu, self.d)
        return (1.0 / v**2) @ self.projection / math.sqrt(self.ctx.ratios.p)

    def mean_terms(self, mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """The coefficients 𝒜_α and 𝒜_Δ of the mean parameter."""
        u = self.u(mu)
        denom = 1.0 - (self.c1 / self.c2) * ((np.outer(mu, self.t) / u) ** 2 @ self.w)
        if np.min(np.abs(denom)) < NEAR_SINGULAR_TOL:
            raise NearSingularError(
                "mean-parameter denominator vanishes (contour at a support edge)"
            )
        pref = math.sqrt(self.c1 * self.c2) * mu**3 / self.c2**3
        return pref * self.third(u) / denom**2, pref * self.s(mu, u) / denom


def _check_companion(m_under: complex | np.ndarray) -> np.ndarray:
    return np.atleast_1d(np.asarray(m_under, dtype=complex))


# =============================================================================
# Scalar functionals
# =============================================================================


def g_fun(z: complex, ctx: KernelContext, m_under: complex) -> complex:
    """
    g(z) = c1 ∫ t/(1+t·m̲) dH(t) − z.

    At a solved point g(z) = c2/m̲(z).

    Raises:
        PoleError: If 1 + t·m̲ vanishes at an atom.
    """
    k = _diag_view(ctx)
    mu = _check_companion(m_under)
    return complex(k.g(np.atleast_1d(complex(z)), k.u(mu))[0])


def h_fun(z1: complex, z2: complex, ctx: KernelContext, m1: complex, m2: complex) -> complex:
    """h(z1, z2) = ∫ t²/((1+t·m̲₁)(1+t·m̲₂)) dH(t)."""
    k = _diag_view(ctx)
    return complex(k.h_cross(k.u(_check_companion(m1)), k.u(_check_companion(m2)))[0, 0])


def s_fun(z: complex, ctx: KernelContext, m: complex) -> complex:
    """
    s(z): ∫ t²/(1+t·m̲)³ dH for diagonal Σ, the finite-p trace for explicit Γ.
    """
    k = _Kernels(ctx)
    mu = _check_companion(m)
    return complex(k.s(mu, k.u(mu))[0])


def t_fun(z1: complex, z2: complex, ctx: KernelContext, m1: complex, m2: complex) -> complex:
    """
    t(z1, z2): ∫ t²/((1+t·m̲₁)²(1+t·m̲₂)²) dH for diagonal Σ, the finite-p
    trace of the Hadamard product for explicit Γ.
    """
    k = _Kernels(ctx)
    mu1, mu2 = _check_companion(m1), _check_companion(m2)
    a = k.t_factors(mu1, k.u(mu1))
    b = k.t_factors(mu2, k.u(mu2))
    return complex((a @ b.T)[0, 0])


def _diag_view(ctx: KernelContext) -> _Kernels:
    # g and h only involve H; skip the eigendecomposition of explicit Γ.
    if ctx.sigma_mode == SigmaMode.DIAGONAL:
        return _Kernels(ctx)
    return _Kernels(ctx.model_copy(update={"sigma_mode": SigmaMode.DIAGONAL, "gamma": None}))


def _companions(z: np.ndarray, ctx: KernelContext) -> np.ndarray:
    _, m_under = stieltjes_values(z, ctx.ratios, ctx.H)
    return m_under


def mean_param(z: complex, ctx: KernelContext, m_under: Optional[complex] = None) -> complex:
    """
    The mean parameter 𝒜(z).

    Args:
        z: Non-real point.
        ctx: Kernel context.
        m_under: Companion value at z; solved for when omitted.

    Raises:
        PoleError: If 1 + t·m̲ vanishes at an atom.
        NearSingularError: If the shared denominator is below 1e-10 in modulus.
    """
    zs = np.atleast_1d(complex(z))
    mu = _companions(zs, ctx) if m_under is None else _check_companion(m_under)
    a_alpha, a_delta = _Kernels(ctx).mean_terms(mu)
    return complex(ctx.moments.alpha * a_alpha[0] + ctx.moments.delta * a_delta[0])


def _kernel_block(
    k: _Kernels,
    z1: np.ndarray,
    mu1: np.ndarray,
    z2: np.ndarray,
    mu2: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """ℬ_0 and ℬ_Δ on the grid z1 × z2."""
    diff = z1[:, None] - z2[None, :]
    if np.min(np.abs(diff)) < COINCIDENT_TOL:
        raise CoincidentPointsError("covariance kernel evaluated at coincident points")
    u1, u2 = k.u(mu1), k.u(mu2)
    g1, g2 = k.g(z1, u1), k.g(z2, u2)
    h11, h22 = k.h_diag(u1), k.h_diag(u2)
    h12 = k.h_cross(u1, u2)
    cc = k.c1 * k.c2
    q1 = g1**2 - cc * h11
    q2 = g2**2 - cc * h22
    den = q1[:, None] * q2[None, :]
    num = (
        cc * (h12**2 - h11[:, None] * h22[None, :])
        + (g1**2)[:, None] * h22[None, :]
        + h11[:, None] * (g2**2)[None, :]
        - 2.0 * g1[:, None] * g2[None, :] * h12
    )
    t12 = k.t_factors(mu1, u1) @ k.t_factors(mu2, u2).T
    return num / (diff**2 * den), t12 / den


def cov_kernel(
    z1: complex,
    z2: complex,
    ctx: KernelContext,
    m1: Optional[complex] = None,
    m2: Optional[complex] = None,
) -> complex:
    """
    The covariance kernel ℬ(z1, z2).

    Raises:
        CoincidentPointsError: If |z1 − z2| < 1e-12.
    """
    za, zb = np.atleast_1d(complex(z1)), np.atleast_1d(complex(z2))
    if abs(za[0] - zb[0]) < COINCIDENT_TOL:
        raise CoincidentPointsError("covariance kernel evaluated at coincident points")
    mu1 = _companions(za, ctx) if m1 is None else _check_companion(m1)
    mu2 = _companions(zb, ctx) if m2 is None else _check_companion(m2)
    b0, b1 = _kernel_block(_Kernels(ctx), za, mu1, zb, mu2)
    return complex((1.0 + ctx.moments.alpha) * b0[0, 0] + ctx.moments.delta * b1[0, 0])


# =============================================================================
# Contour integrals
# =============================================================================


def _check_functions(
    functions: Sequence[TestFunction], ratios: AspectRatios, H: SpectralMeasure
) -> bool:
    """Return whether any function is singular at 0, refusing impossible cases."""
    singular = any(f.singular_at_zero for f in functions)
    if singular and (zero_atom(ratios, H) > 0.0 or ratios.p >= ratios.n):
        raise LogDomainError(
            "test functions singular at 0 need p < n and no null directions in Σ",
            cause=f"zero atom {zero_atom(ratios, H):.6g}, p={ratios.p}, n={ratios.n}",
        )
    return singular


def _real_part(values: np.ndarray, label: str) -> np.ndarray:
    scale = np.maximum(1.0, np.abs(values.real))
    residue = float(np.max(np.abs(values.imag) / scale)) if values.size else 0.0
    if residue > REALNESS_TOL:
        raise QuadratureDivergedError(
            f"{label} has a non-negligible imaginary part ({residue:.3g})",
            details={"imaginary_residue": residue},
        )
    return values.real


def _mean_integrals(
    functions: Sequence[TestFunction], ctx: KernelContext, contour: Contour, max_nodes: int
) -> tuple[np.ndarray, int]:
    kernels = _Kernels(ctx)

    def rule(nodes: int) -> np.ndarray:
        z, weights = contour.with_nodes(nodes).quadrature(ctx.ratios)
        a_alpha, a_delta = kernels.mean_terms(_companions(z, ctx))
        fz = np.column_stack([f(z) for f in functions]) * weights[:, None]
        # rows: α-coefficient, Δ-coefficient
        return -np.vstack([a_alpha @ fz, a_delta @ fz]) / (2j * math.pi)

    return integrate_with_doubling(rule, contour.nodes, max_nodes, label="mean integral")


def _cov_integrals(
    functions: Sequence[TestFunction],
    ctx: KernelContext,
    outer: Contour,
    inner: Contour,
    max_nodes: int,
) -> tuple[np.ndarray, int]:
    kernels = _Kernels(ctx)

    def rule(nodes: int) -> np.ndarray:
        z1, w1 = outer.with_nodes(nodes).quadrature(ctx.ratios)
        z2, w2 = inner.with_nodes(nodes).quadrature(ctx.ratios)
        mu1, mu2 = _companions(z1, ctx), _companions(z2, ctx)
        f1 = np.column_stack([f(z1) for f in functions]) * w1[:, None]
        f2 = np.column_stack([f(z2) for f in functions]) * w2[:, None]
        m = len(functions)
        acc0 = np.zeros((m, m), dtype=complex)
        acc1 = np.zeros((m, m), dtype=complex)
        rows = max(1, CHUNK_ELEMENTS // z2.size)
        for start in range(0, z1.size, rows):
            sl = slice(start, start + rows)
            b0, b1 = _kernel_block(kernels, z1[sl], mu1[sl], z2, mu2)
            acc0 += f1[sl].T @ b0 @ f2
            acc1 += f1[sl].T @ b1 @ f2
        return -np.stack([acc0, acc1]) / (4.0 * math.pi**2)

    return integrate_with_doubling(rule, outer.nodes, max_nodes, label="covariance integral")


def spectral_integral(
    f: TestFunction,
    ratios: AspectRatios,
    H: SpectralMeasure,
    contour: Optional[Contour] = None,
    max_nodes: int = MAX_NODES,
) -> float:
    """
    ∫ f dF^{c1,c2,H}.

    The continuous part is −(1/2πi)∮ f(z)(m(z) + w₀/z) dz; the zero atom w₀
    contributes w₀·f(0).

    Raises:
        LogDomainError: If f is singular at 0 and F has mass there.
        ContourError: If the contour does not enclose the support.
    """
    _check_functions([f], ratios, H)
    contour = contour or default_contour(ratios, H)
    validate_contour(contour, ratios, H, singular_at_zero=f.singular_at_zero)
    atom = zero_atom(ratios, H)

    def rule(nodes: int) -> np.ndarray:
        z, weights = contour.with_nodes(nodes).quadrature(ratios)
        m, _ = stieltjes_values(z, ratios, H)
        return np.atleast_1d(-np.sum(f(z) * (m + atom / z) * weights) / (2j * math.pi))

    value, _ = integrate_with_doubling(rule, contour.nodes, max_nodes, label=f"∫{f.name} dF")
    total = _real_part(value, f"∫{f.name} dF")[0]
    if atom > 0.0:
        total += atom * float(np.real(f(np.array([0.0]))[0]))
    return float(total)


def lss_table(
    functions: Sequence[TestFunction],
    ctx: KernelContext,
    contour: Optional[Contour] = None,
    outer: Optional[Contour] = None,
    inner: Optional[Contour] = None,
    nodes: int = DEFAULT_NODES,
    with_centers: bool = False,
    max_nodes: int = MAX_NODES,
    max_double_nodes: int = MAX_DOUBLE_NODES,
) -> LssMomentTable:
    """
    Means and covariance matrix of (X_f) for several test functions.

    Args:
        functions: Test functions.
        ctx: Kernel context.
        contour: Contour for the means (default: `default_contour`).
        outer: First contour of the covariance double integral.
        inner: Second contour; must lie strictly inside `outer`.
        nodes: Starting node count for default contours.
        with_centers: Also report θ_f = (ν/√(pn)) ∫ f dF.
        max_nodes: Node cap for single integrals.
        max_double_nodes: Node cap per contour for the double integral.

    Raises:
        LogDomainError: A log-type function with mass of F at 0.
        ContourError: A contour does not enclose the support.
        ContourOverlapError: `outer` does not enclose `inner`.
        QuadratureDivergedError: Node doubling does not settle.
    """
    if not functions:
        raise InvalidInputError("at least one test function is required")
    ratios, H = ctx.ratios, ctx.H
    singular = _check_functions(functions, ratios, H)
    contour = contour or default_contour(ratios, H, nodes=nodes)
    inner = inner or default_contour(ratios, H, nodes=nodes)
    outer = outer or default_contour(ratios, H, outer=True, nodes=nodes)
    for c in (contour, inner, outer):
        validate_contour(c, ratios, H, singular_at_zero=singular)
    check_nested(outer, inner, ratios)
    if ctx.sigma_mode == SigmaMode.EXPLICIT_GAMMA:
        logger.warning("s and t are finite-p traces at p=%d, not limits", ratios.p)

    mean_coeffs, mean_nodes = _mean_integrals(functions, ctx, contour, max_nodes)
    cov_coeffs, cov_nodes = _cov_integrals(functions, ctx, outer, inner, max_double_nodes)

    alpha, delta = ctx.moments.alpha, ctx.moments.delta
    means = _real_part(alpha * mean_coeffs[0] + delta * mean_coeffs[1], "LSS mean")
    cov = _real_part((1.0 + alpha) * cov_coeffs[0] + delta * cov_coeffs[1], "LSS covariance")
    asymmetry = float(np.max(np.abs(cov - cov.T)))
    cov = (cov + cov.T) / 2.0

    centers = None
    if with_centers:
        centers = [spectral_integral(f, ratios, H, contour) / ratios.sqrt_c1c2 for f in functions]

    return LssMomentTable(
        functions=[f.name for f in functions],
        means=means.tolist(),
        cov=cov.tolist(),
        centers=centers,
        diagnostics={
            "mean_nodes": mean_nodes,
            "cov_nodes": cov_nodes,
            "cov_asymmetry": asymmetry,
            "mean_contour": contour.model_dump(mode="json"),
            "cov_contours": [outer.model_dump(mode="json"), inner.model_dump(mode="json")],
            "finite_p": ctx.sigma_mode == SigmaMode.EXPLICIT_GAMMA,
        },
    )


def lss_mean(f: TestFunction, ctx: KernelContext, contour: Optional[Contour] = None) -> float:
    """E X_f = −(1/2πi)∮ f(z)𝒜(z) dz."""
    _check_functions([f], ctx.ratios, ctx.H)
    contour = contour or default_contour(ctx.ratios, ctx.H)
    validate_contour(contour, ctx.ratios, ctx.H, singular_at_zero=f.singular_at_zero)
    coeffs, _ = _mean_integrals([f], ctx, contour, MAX_NODES)
    value = ctx.moments.alpha * coeffs[0] + ctx.moments.delta * coeffs[1]
    return float(_real_part(value, "LSS mean")[0])


def lss_cov(
    f_j: TestFunction,
    f_k: TestFunction,
    ctx: KernelContext,
    contour1: Optional[Contour] = None,
    contour2: Optional[Contour] = None,
) -> float:
    """Cov(X_{f_j}, X_{f_k}) = −(1/4π²)∮∮ f_j(z1) f_k(z2) ℬ(z1, z2) dz2 dz1."""
    functions = [f_j, f_k]
    singular = _check_functions(functions, ctx.ratios, ctx.H)
    contour1 = contour1 or default_contour(ctx.ratios, ctx.H, outer=True)
    contour2 = contour2 or default_contour(ctx.ratios, ctx.H)
    for c in (contour1, contour2):
        validate_contour(c, ctx.ratios, ctx.H, singular_at_zero=singular)
    check_nested(contour1, contour2, ctx.ratios)
    coeffs, _ = _cov_integrals(functions, ctx, contour1, contour2, MAX_DOUBLE_NODES)
    value = (1.0 + ctx.moments.alpha) * coeffs[0][0, 1] + ctx.moments.delta * coeffs[1][0, 1]
    return float(_real_part(np.atleast_1d(value), "LSS covariance")[0])


# =============================================================================
# Closed forms under H = δ₁
# =============================================================================


def identity_closed_forms(
    ratios: AspectRatios, moments: MomentProfile, include_log: bool = True
) -> LssMomentTable:
    """
    Exact means, covariances and centering values for f ∈ {x, x², log x} under Σ = I.

    Args:
        ratios: Aspect ratios.
        moments: Moment profile.
        include_log: Include the log x row and column (needs c2 > c1).

    Raises:
        LogDomainError: If include_log and c2 ≤ c1.
    """
    c1, c2 = ratios.c1, ratios.c2
    a, d = moments.alpha, moments.delta
    root = math.sqrt(c1 * c2)
    s = c1 + c2
    kappa = 1.0 + a + d

    functions = [IDENTITY.name, SQUARE.name]
    means = [0.0, root * (a + d)]
    cov = [
        [kappa, 2.0 * s * kappa],
        [2.0 * s * kappa, 4.0 * s**2 * kappa + 2.0 * c1 * c2 * (1.0 + a)],
    ]
    centers = [math.sqrt(c2 / c1), math.sqrt(c2 / c1) * s]

    if include_log:
        if c2 <= c1:
            raise LogDomainError(
                f"log entries need c2 > c1 (p < n), got p={ratios.p}, n={ratios.n}"
            )
        log_ratio = math.log1p(-c1 / c2)
        functions.append(LOG.name)
        means.append((a * log_ratio - d * c1 / c2) / (2.0 * root))
        x_log = kappa / c2
        x2_log = ((1.0 + a) * (c1 + 2.0 * c2) + 2.0 * d * s) / c2
        log_log = -(1.0 + a) / (c1 * c2) * log_ratio + d / c2**2
        cov[0].append(x_log)
        cov[1].append(x2_log)
        cov.append([x_log, x2_log, log_log])
        centers.append(
            (math.log(c2 - c1) - 1.0) / root
            + math.sqrt(c2 / c1) * (math.log(c2) - math.log(c2 - c1)) / c1
        )

    return LssMomentTable(
        functions=functions,
        means=means,
        cov=cov,
        centers=centers,
        diagnostics={"closed_form": True},
    )
