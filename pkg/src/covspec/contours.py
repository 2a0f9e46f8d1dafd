"""
Closed contours around the support of F^{c1,c2,H} and their quadrature rules.

Two shapes are supported:

- Circle: the image of |ξ| = r under z(ξ) = c1 + c2 + √(c1c2)(ξ + 1/ξ), an
  ellipse centred at c1 + c2. Integrated with the periodic trapezoid rule in
  the angle, which converges geometrically for analytic integrands.
- Rectangle: the boundary of [x_left, x_right] × [−height, height], traversed
  counterclockwise, with Gauss–Legendre nodes on each side.

Every rule returns nodes z_j and weights w_j with ∮ φ(z) dz ≈ Σ_j w_j φ(z_j).
"""

import logging
import math
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from covspec.exceptions import ContourError, ContourOverlapError, QuadratureDivergedError
from covspec.spectral_core import AspectRatios, SpectralMeasure
from covspec.types import ContourKind

logger = logging.getLogger(__name__)

DEFAULT_NODES = 2048
MAX_NODES = 16_384
STABLE_TOL = 1e-8
DIVERGED_TOL = 1e-6

DEFAULT_INNER_RADIUS = 1.05
DEFAULT_OUTER_RADIUS = 1.10
RECTANGLE_MARGIN = 0.1


class Contour(BaseModel):
    """A closed, positively oriented integration contour."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ContourKind
    radius: Optional[float] = None
    x_left: Optional[float] = None
    x_right: Optional[float] = None
    height: Optional[float] = None
    nodes: int = Field(default=DEFAULT_NODES, ge=8)

    @model_validator(mode="after")
    def _check_shape(self) -> "Contour":
        if self.kind == ContourKind.CIRCLE:
            if self.radius is None or self.radius <= 1.0:
                raise ValueError("circle contours need radius > 1")
        else:
            if self.x_left is None or self.x_right is None or self.height is None:
                raise ValueError("rectangle contours need x_left, x_right and height")
            if self.x_left >= self.x_right or self.height <= 0.0:
                raise ValueError("rectangle needs x_left < x_right and height > 0")
        if self.nodes % 8:
            raise ValueError("nodes must be a multiple of 8")
        return self

    @classmethod
    def circle(cls, radius: float, nodes: int = DEFAULT_NODES) -> "Contour":
        return cls(kind=ContourKind.CIRCLE, radius=radius, nodes=nodes)

    @classmethod
    def rectangle(
        cls, x_left: float, x_right: float, height: float, nodes: int = DEFAULT_NODES
    ) -> "Contour":
        return cls(
            kind=ContourKind.RECTANGLE, x_left=x_left, x_right=x_right, height=height, nodes=nodes
        )

    def with_nodes(self, nodes: int) -> "Contour":
        return self.model_copy(update={"nodes": nodes})

    def real_crossings(self, ratios: AspectRatios) -> tuple[float, float]:
        """Points where the contour meets the real axis."""
        if self.kind == ContourKind.CIRCLE:
            center = ratios.c1 + ratios.c2
            half = ratios.sqrt_c1c2 * (self.radius + 1.0 / self.radius)
            return center - half, center + half
        return self.x_left, self.x_right

    def quadrature(self, ratios: AspectRatios) -> tuple[np.ndarray, np.ndarray]:
        """
        Nodes and weights of the contour's quadrature rule.

        Returns:
            (z, w) with ∮ φ(z) dz ≈ Σ w_j φ(z_j). No node lies on the real axis.
        """
        if self.kind == ContourKind.CIRCLE:
            return _circle_rule(ratios, self.radius, self.nodes)
        return _rectangle_rule(self.x_left, self.x_right, self.height, self.nodes)

    def encloses(self, other: "Contour", ratios: AspectRatios) -> bool:
        """True when `other` lies strictly inside this contour."""
        if self.kind == other.kind == ContourKind.CIRCLE:
            return self.radius > other.radius
        if self.kind == other.kind == ContourKind.RECTANGLE:
            return (
                self.x_left < other.x_left
                and self.x_right > other.x_right
                and self.height > other.height
            )
        # Mixed shapes: compare the other contour's nodes against this one's outline.
        z_other, _ = other.quadrature(ratios)
        return bool(np.all(self._inside(z_other, ratios)))

    def _inside(self, z: np.ndarray, ratios: AspectRatios) -> np.ndarray:
        if self.kind == ContourKind.RECTANGLE:
            return (
                (z.real > self.x_left)
                & (z.real < self.x_right)
                & (np.abs(z.imag) < self.height)
            )
        center = ratios.c1 + ratios.c2
        a = ratios.sqrt_c1c2 * (self.radius + 1.0 / self.radius)
        b = ratios.sqrt_c1c2 * (self.radius - 1.0 / self.radius)
        return ((z.real - center) / a) ** 2 + (z.imag / b) ** 2 < 1.0


def _circle_rule(ratios: AspectRatios, radius: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    theta = 2.0 * math.pi * (np.arange(nodes) + 0.5) / nodes
    xi = radius * np.exp(1j * theta)
    scale = ratios.sqrt_c1c2
    z = ratios.c1 + ratios.c2 + scale * (xi + 1.0 / xi)
    dz_dtheta = 1j * scale * (xi - 1.0 / xi)
    return z, dz_dtheta * (2.0 * math.pi / nodes)


def _rectangle_rule(
    x_left: float, x_right: float, height: float, nodes: int
) -> tuple[np.ndarray, np.ndarray]:
    per_side = nodes // 4
    u, gw = np.polynomial.legendre.leggauss(per_side)
    corners = [
        complex(x_left, -height),
        complex(x_right, -height),
        complex(x_right, height),
        complex(x_left, height),
    ]
    zs, ws = [], []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        half = (b - a) / 2.0
        zs.append((a + b) / 2.0 + half * u)
        ws.append(half * gw)
    return np.concatenate(zs), np.concatenate(ws)


# =============================================================================
# Validation and defaults
# =============================================================================


def support_hull(ratios: AspectRatios, H: SpectralMeasure) -> tuple[float, float]:
    """
    An interval containing the continuous part of the support of F^{c1,c2,H}.

    The upper end is 1 (spectral-norm normalization); the lower end is
    (√c2 − √c1)²·min positive atom of H.
    """
    positive = [t for t in H.atoms if t > 0.0]
    lower = (math.sqrt(ratios.c2) - math.sqrt(ratios.c1)) ** 2 * min(positive)
    return lower, 1.0


def origin_is_singular(ratios: AspectRatios, H: SpectralMeasure) -> bool:
    """
    Whether m̲ has a pole at 0, so that contours must leave the origin outside.

    This is the case p < n with no null directions in Σ.
    """
    return ratios.p < ratios.n and H.zero_mass == 0.0


def validate_contour(
    contour: Contour,
    ratios: AspectRatios,
    H: SpectralMeasure,
    singular_at_zero: bool = False,
) -> None:
    """
    Check that a contour encloses the support and clears the origin when needed.

    Args:
        contour: Contour to check.
        ratios: Aspect ratios.
        H: Population spectral measure.
        singular_at_zero: The integrand's test function is singular at 0.

    Raises:
        ContourError: If the contour cuts the support or has 0 on the wrong side.
    """
    lower, upper = support_hull(ratios, H)
    left, right = contour.real_crossings(ratios)
    if right <= upper:
        raise ContourError(
            f"contour crosses the real axis at {right:.6g} ≤ sup support {upper:.6g}"
        )
    if origin_is_singular(ratios, H) or singular_at_zero:
        if not 0.0 < left < lower:
            raise ContourError(
                f"contour must cross the real axis in (0, {lower:.6g}), crosses at {left:.6g}",
                cause="the origin is a singularity and must stay outside",
            )
    elif left >= lower:
        raise ContourError(
            f"contour must cross the real axis below {lower:.6g}, crosses at {left:.6g}",
            cause="the support reaches 0" if lower <= 0.0 else "the contour cuts the support",
        )


def default_contour(
    ratios: AspectRatios,
    H: SpectralMeasure,
    outer: bool = False,
    nodes: int = DEFAULT_NODES,
) -> Contour:
    """
    Build the default contour: a circle for H = δ₁, a rectangle otherwise.

    With `outer=True` the contour strictly encloses the default inner one, for
    use as the first contour of a double integral.
    """
    if H.is_identity:
        radius = DEFAULT_OUTER_RADIUS if outer else DEFAULT_INNER_RADIUS
        if origin_is_singular(ratios, H):
            limit = math.sqrt(ratios.c2 / ratios.c1)
            fraction = 2.0 / 3.0 if outer else 1.0 / 3.0
            radius = min(radius, 1.0 + fraction * (limit - 1.0))
        return Contour.circle(radius, nodes=nodes)

    lower, upper = support_hull(ratios, H)
    width = upper - lower
    scale = 2.0 if outer else 1.0
    margin = RECTANGLE_MARGIN * width * scale
    if origin_is_singular(ratios, H):
        x_left = lower - min(margin, lower * scale / 3.0)
    else:
        x_left = min(lower, 0.0) - margin
    return Contour.rectangle(x_left, upper + margin, 2.0 * margin, nodes=nodes)


def check_nested(
    outer: Contour, inner: Contour, ratios: AspectRatios
) -> None:
    """
    Raises:
        ContourOverlapError: If `outer` does not strictly enclose `inner`.
    """
    if not outer.encloses(inner, ratios):
        raise ContourOverlapError("the first contour must strictly enclose the second")


# =============================================================================
# Node doubling
# =============================================================================


def integrate_with_doubling(
    rule: Callable[[int], np.ndarray],
    nodes: int,
    max_nodes: int = MAX_NODES,
    label: str = "contour integral",
) -> tuple[np.ndarray, int]:
    """
    Evaluate a quadrature at `nodes` and keep doubling until it is stable.

    Args:
        rule: Maps a node count to the (array-valued) quadrature result.
        nodes: Starting node count.
        max_nodes: Largest node count tried.
        label: Name used in log and error messages.

    Returns:
        The accepted result and the node count it was computed with.

    Raises:
        QuadratureDivergedError: If the last doubling still changes the result
            by more than DIVERGED_TOL.
    """
    previous = np.asarray(rule(nodes))
    while True:
        doubled = nodes * 2
        if doubled > max_nodes:
            break
        current = np.asarray(rule(doubled))
        change = float(np.max(np.abs(current - previous)))
        size = max(1.0, float(np.max(np.abs(current))))
        logger.debug("%s: %d → %d nodes, change %.3g", label, nodes, doubled, change)
        nodes, previous = doubled, current
        if change <= STABLE_TOL * size:
            return current, nodes
        if doubled * 2 > max_nodes:
            if change > DIVERGED_TOL * size:
                raise QuadratureDivergedError(
                    f"{label} not stable at {nodes} nodes (change {change:.3g})",
                    details={"nodes": nodes, "change": change},
                )
            logger.warning("%s accepted at %d nodes with change %.3g", label, nodes, change)
            return current, nodes
    logger.warning(
        "%s unchecked: %d nodes leaves no room to double under %d", label, nodes, max_nodes
    )
    return previous, nodes
