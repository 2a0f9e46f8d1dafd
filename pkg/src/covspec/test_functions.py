"""Analytic test functions for linear spectral statistics."""

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from covspec.exceptions import InvalidInputError


@dataclass(frozen=True)
class TestFunction:
    """
    A test function f, analytic on a neighbourhood of the support.

    `singularities` lists the points where f fails to be analytic; a contour
    used with f must leave them outside.
    """

    __test__ = False

    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    singularities: frozenset[complex] = frozenset()

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.fn(np.asarray(z))

    @property
    def singular_at_zero(self) -> bool:
        return 0 in self.singularities


IDENTITY = TestFunction("x", lambda z: z)
SQUARE = TestFunction("x2", lambda z: z**2)
CUBE = TestFunction("x3", lambda z: z**3)
LOG = TestFunction("log", np.log, frozenset({0}))

BUILTINS: dict[str, TestFunction] = {f.name: f for f in (IDENTITY, SQUARE, CUBE, LOG)}


def polynomial(coefficients: Sequence[float], name: str | None = None) -> TestFunction:
    """
    Build f(x) = Σ_k a_k x^k from coefficients in increasing degree.

    Raises:
        InvalidInputError: If no coefficients are given.
    """
    coeffs = [float(a) for a in coefficients]
    if not coeffs:
        raise InvalidInputError("a polynomial needs at least one coefficient")
    label = name or "poly[" + ",".join(repr(a) for a in coeffs) + "]"
    return TestFunction(label, lambda z: np.polynomial.polynomial.polyval(z, coeffs))


def resolve(spec: str | Sequence[float]) -> TestFunction:
    """
    Look up a built-in function by name or build a polynomial from coefficients.

    Raises:
        InvalidInputError: On an unknown name.
    """
    if isinstance(spec, str):
        try:
            return BUILTINS[spec]
        except KeyError:
            known = ", ".join(sorted(BUILTINS))
            raise InvalidInputError(f"unknown test function {spec!r} (known: {known})") from None
    return polynomial(spec)
