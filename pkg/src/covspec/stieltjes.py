"""
Limiting Stieltjes transform of the renormalized sample covariance matrix.

m(z) solves

    m = ∫ dH(t) / ((c2 − c1 − c1·z·m)·t − z)

uniquely in {m ∈ ℂ⁺ : −(c2−c1)/z + c1·m ∈ ℂ⁺ or c2 = 0}. The companion
transform is m̲(z) = −(c2−c1)/z + c1·m(z); the solver iterates on m̲, whose map

    m̲ = −c2 / (z − c1 ∫ t/(1+t·m̲) dH(t))

sends ℂ⁺ into itself, then polishes m with Newton steps on the first equation.
The density of F^{c1,c2,H} is recovered by Stieltjes inversion, f(x) = lim_{v↓0} Im m(x+iv)/π.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.integrate import cumulative_trapezoid

from covspec.exceptions import DomainError, InvalidInputError, NonConvergenceError
from covspec.spectral_core import AspectRatios, SpectralMeasure
from covspec.types import DegenerateLimit

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000
STALL_STEPS = 20
POLISH_STEPS = 8
DEFAULT_LADDER = (1e-2, 1e-3, 1e-4, 1e-5)
DESCENT_START = 1.0
EDGE_FLOOR = 1e-8
DEFAULT_GRID_POINTS = 2000
DEFAULT_GRID_UPPER = 1.05


@dataclass(frozen=True)
class StieltjesSolution:
    """Converged value of m at a single point of ℂ⁺."""

    z: complex
    m: complex
    m_under: complex
    residual: float
    iterations: int


@dataclass(frozen=True)
class SolutionBatch:
    """Converged values of m over an array of points."""

    z: np.ndarray
    m: np.ndarray
    m_under: np.ndarray
    residual: np.ndarray
    iterations: np.ndarray

    def __len__(self) -> int:
        return int(self.z.size)

    def solution(self, i: int) -> StieltjesSolution:
        return StieltjesSolution(
            z=complex(self.z[i]),
            m=complex(self.m[i]),
            m_under=complex(self.m_under[i]),
            residual=float(self.residual[i]),
            iterations=int(self.iterations[i]),
        )


# =============================================================================
# Fixed-point map
# =============================================================================


def _rhs(
    m: np.ndarray, z: np.ndarray, c1: float, c2: float, t: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand side of the fixed-point equation and its derivative in m."""
    denom = (c2 - c1 - c1 * z * m)[:, None] * t[None, :] - z[:, None]
    value = (w / denom).sum(axis=1)
    slope = (w * t * (c1 * z)[:, None] / denom**2).sum(axis=1)
    return value, slope


def fixed_point_rhs(m: complex, z: complex, c1: float, c2: float, H: SpectralMeasure) -> complex:
    """
    Evaluate RHS(m) = ∫ dH(t)/((c2−c1−c1·z·m)·t − z) for arbitrary c1, c2.

    Unlike `solve`, the ratios are taken literally, so the endpoint limits
    (c1, c2) = (0, 1) and (1, 0) can be evaluated.
    """
    value, _ = _rhs(np.array([m], dtype=complex), np.array([z], dtype=complex), c1, c2, H.t, H.w)
    return complex(value[0])


def _companion_map(
    mu: np.ndarray, z: np.ndarray, c1: float, c2: float, t: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Φ(m̲) = −c2 / (z − c1 ∫ t/(1+t·m̲) dH(t)) and its derivative in m̲."""
    u = 1.0 + mu[:, None] * t[None, :]
    s = (w * t / u).sum(axis=1)
    ds = -(w * t**2 / u**2).sum(axis=1)
    d = z - c1 * s
    return -c2 / d, -c1 * c2 * ds / d**2


def _m_from_companion(mu: np.ndarray, z: np.ndarray, t: np.ndarray, w: np.ndarray) -> np.ndarray:
    """m = −(1/z) ∫ dH(t)/(1+t·m̲)."""
    return -(w / (1.0 + mu[:, None] * t[None, :])).sum(axis=1) / z


def _iterate(
    z: np.ndarray,
    c1: float,
    c2: float,
    t: np.ndarray,
    w: np.ndarray,
    mu0: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Iterate the companion map m̲ ← Φ(m̲) on every point at once.

    Φ sends ℂ⁺ into itself and has a single fixed point there, so every run
    started in ℂ⁺ ends on the admissible branch whatever the ratios are.
    Each step tries a Newton update and keeps it when it lowers the residual and
    stays in ℂ⁺; otherwise a (damped) fixed-point step is taken. The damping
    factor of a point halves after STALL_STEPS steps without a new best residual.
    """
    mu = mu0.astype(complex, copy=True)
    residual = np.full(z.shape, np.inf)
    iterations = np.zeros(z.shape, dtype=int)
    best = np.full(z.shape, np.inf)
    stall = np.zeros(z.shape, dtype=int)
    lam = np.ones(z.shape)
    active = np.ones(z.shape, dtype=bool)

    for step in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        zi, mi = z[idx], mu[idx]
        value, slope = _companion_map(mi, zi, c1, c2, t, w)
        r = np.abs(mi - value)
        residual[idx] = r
        iterations[idx] = step

        done = r <= tol * np.maximum(1.0, np.abs(mi))
        active[idx[done]] = False
        if step == max_iter or done.all():
            break
        keep = ~done
        idx, zi, mi = idx[keep], zi[keep], mi[keep]
        value, slope, r = value[keep], slope[keep], r[keep]

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            candidate = mi - (mi - value) / (1.0 - slope)
            cand_value, _ = _companion_map(candidate, zi, c1, c2, t, w)
            cand_r = np.abs(candidate - cand_value)
        newton_ok = np.isfinite(cand_r) & (candidate.imag > 0.0) & (cand_r < r)

        improved = r < best[idx]
        best[idx] = np.minimum(best[idx], r)
        stall[idx] = np.where(improved | newton_ok, 0, stall[idx] + 1)
        halve = stall[idx] >= STALL_STEPS
        if halve.any():
            lam[idx[halve]] *= 0.5
            stall[idx[halve]] = 0
            logger.debug("damping %d point(s); smallest factor %.3g", halve.sum(), lam[idx].min())

        damped = (1.0 - lam[idx]) * mi + lam[idx] * value
        mu[idx] = np.where(newton_ok, candidate, damped)

    return mu, residual, iterations


def _companion(m: np.ndarray, z: np.ndarray, c1: float, c2: float) -> np.ndarray:
    return -(c2 - c1) / z + c1 * m


def _in_set(m: np.ndarray, z: np.ndarray, c1: float, c2: float, tol: float) -> np.ndarray:
    """Im m > 0 and m̲ ∈ ℂ⁺ up to tol."""
    scale = tol * np.maximum(1.0, np.abs(m))
    m_under = _companion(m, z, c1, c2)
    return np.isfinite(m) & (m.imag > 0.0) & (m_under.imag > -scale)


def _polish(
    m: np.ndarray, z: np.ndarray, c1: float, c2: float, t: np.ndarray, w: np.ndarray, tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Newton steps on m − RHS(m); a step is kept only if it stays in the uniqueness set."""
    value, slope = _rhs(m, z, c1, c2, t, w)
    r = np.abs(m - value)
    for _ in range(POLISH_STEPS):
        todo = r > tol * np.maximum(1.0, np.abs(m))
        if not todo.any():
            break
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            candidate = m - (m - value) / (1.0 - slope)
            cand_value, cand_slope = _rhs(candidate, z, c1, c2, t, w)
            cand_r = np.abs(candidate - cand_value)
        ok = todo & np.isfinite(cand_r) & (cand_r < r) & _in_set(candidate, z, c1, c2, tol)
        if not ok.any():
            break
        m = np.where(ok, candidate, m)
        value = np.where(ok, cand_value, value)
        slope = np.where(ok, cand_slope, slope)
        r = np.where(ok, cand_r, r)
    return m, r


def _admissible(
    m: np.ndarray, residual: np.ndarray, z: np.ndarray, c1: float, c2: float, tol: float
) -> np.ndarray:
    """Converged (relative to max(1, |m|)) and inside the uniqueness set."""
    scale = tol * np.maximum(1.0, np.abs(m))
    return (residual <= scale) & _in_set(m, z, c1, c2, tol)


def _solve_from(
    z: np.ndarray,
    c1: float,
    c2: float,
    t: np.ndarray,
    w: np.ndarray,
    mu0: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mu, _, iterations = _iterate(z, c1, c2, t, w, mu0, tol, max_iter)
    m, residual = _polish(_m_from_companion(mu, z, t, w), z, c1, c2, t, w, tol)
    return m, residual, iterations


def _homotopy(
    z: complex,
    c1: float,
    c2: float,
    t: np.ndarray,
    w: np.ndarray,
    tol: float,
    max_iter: int,
) -> tuple[complex, float, int]:
    """Solve far above the real axis and walk Im z down to its target value."""
    v = z.imag
    top = max(2.0 * v, 1.0)
    rungs = v * 2.0 ** np.arange(math.ceil(math.log2(top / v)), -1, -1)
    mu = np.array([-c2 / complex(z.real, rungs[0])])
    total = 0
    for height in rungs[:-1]:
        zk = np.array([complex(z.real, height)])
        mu, _, its = _iterate(zk, c1, c2, t, w, mu, tol, max_iter)
        total += int(its[0])
    zk = np.array([z])
    m, residual, its = _solve_from(zk, c1, c2, t, w, mu, tol, max_iter)
    total += int(its[0])
    if not _admissible(m, residual, zk, c1, c2, tol)[0]:
        raise NonConvergenceError(
            f"fixed-point iteration failed at z={z}",
            iterations=total,
            residual=float(residual[0]),
            z=z,
        )
    return complex(m[0]), float(residual[0]), total


def _solve_arrays(
    z: np.ndarray,
    c1: float,
    c2: float,
    t: np.ndarray,
    w: np.ndarray,
    tol: float,
    max_iter: int,
    m0: Optional[np.ndarray] = None,
) -> SolutionBatch:
    if np.any(z.imag <= 0.0):
        raise InvalidInputError("solve requires Im(z) > 0")
    # m0 = −1/z corresponds to m̲0 = −c2/z
    default = -c2 / z
    start = default
    if m0 is not None:
        with np.errstate(invalid="ignore", over="ignore"):
            mu0 = _companion(np.broadcast_to(np.asarray(m0, dtype=complex), z.shape), z, c1, c2)
        start = np.where(np.isfinite(mu0) & (mu0.imag > 0.0), mu0, default)
    m, residual, iterations = _solve_from(z, c1, c2, t, w, start, tol, max_iter)

    failed = np.flatnonzero(~_admissible(m, residual, z, c1, c2, tol))
    if failed.size and m0 is not None:
        logger.debug("restarting %d point(s) from m0 = -1/z", failed.size)
        zf = z[failed]
        mf, rf, itf = _solve_from(zf, c1, c2, t, w, default[failed], tol, max_iter)
        m[failed], residual[failed] = mf, rf
        iterations[failed] += itf
        failed = failed[~_admissible(mf, rf, zf, c1, c2, tol)]
    if failed.size:
        logger.debug("re-solving %d point(s) by homotopy in Im z", failed.size)
    for i in failed:
        m[i], residual[i], iterations[i] = _homotopy(complex(z[i]), c1, c2, t, w, tol, max_iter)
    m_under = _companion(m, z, c1, c2)
    return SolutionBatch(z=z, m=m, m_under=m_under, residual=residual, iterations=iterations)


# =============================================================================
# Public solvers
# =============================================================================


def solve_many(
    z: Sequence[complex] | np.ndarray,
    ratios: AspectRatios,
    H: SpectralMeasure,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    m0: Optional[np.ndarray] = None,
) -> SolutionBatch:
    """
    Solve the fixed-point equation at many points of ℂ⁺.

    Args:
        z: Points with positive imaginary part.
        ratios: Aspect ratios (c1, c2).
        H: Population spectral measure.
        tol: Residual tolerance |m − RHS(m)|.
        max_iter: Iteration cap per point (the homotopy fallback gets its own).
        m0: Optional starting values, e.g. solutions at neighbouring points.

    Returns:
        A SolutionBatch aligned with z.

    Raises:
        InvalidInputError: If some Im(z) ≤ 0 or tol ≤ 0.
        NonConvergenceError: If a point fails even after the homotopy fallback.
    """
    if tol <= 0.0:
        raise InvalidInputError("tol must be positive")
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    return _solve_arrays(zs, ratios.c1, ratios.c2, H.t, H.w, tol, max_iter, m0)


def solve(
    z: complex,
    ratios: AspectRatios,
    H: SpectralMeasure,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    m0: Optional[complex] = None,
) -> StieltjesSolution:
    """
    Solve for m(z) at a single point z ∈ ℂ⁺.

    Starts from m₀ = −1/z unless m0 is given.
    """
    start = None if m0 is None else np.array([m0], dtype=complex)
    return solve_many([z], ratios, H, tol=tol, max_iter=max_iter, m0=start).solution(0)


def _descend(
    w: np.ndarray,
    ratios: AspectRatios,
    H: SpectralMeasure,
    tol: float,
    max_iter: int,
) -> SolutionBatch:
    """
    Solve at points of ℂ⁺ by lowering Im z from DESCENT_START in halving steps.

    Every rung is solved for all points at once, seeded with the previous rung,
    so points close to the real axis stay on the branch selected far above it.
    """
    target = w.imag
    seed: Optional[np.ndarray] = None
    height = DESCENT_START
    while True:
        level = np.maximum(target, height)
        batch = solve_many(w.real + 1j * level, ratios, H, tol=tol, max_iter=max_iter, m0=seed)
        if np.all(level == target):
            return SolutionBatch(
                z=w, m=batch.m, m_under=batch.m_under,
                residual=batch.residual, iterations=batch.iterations,
            )
        seed = batch.m
        height *= 0.5


def stieltjes_values(
    z: Sequence[complex] | np.ndarray,
    ratios: AspectRatios,
    H: SpectralMeasure,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Return (m, m̲) at arbitrary non-real points, e.g. the nodes of a contour.

    Points below the axis use m(z̄) = conj(m(z)). Points close to the axis are
    reached by continuation in Im z.

    Raises:
        InvalidInputError: If a point lies on the real axis.
    """
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(zs.imag == 0.0):
        raise InvalidInputError("Stieltjes transform is evaluated off the real axis only")
    lower = zs.imag < 0.0
    batch = _descend(np.where(lower, zs.conj(), zs), ratios, H, tol, max_iter)
    m = np.where(lower, batch.m.conj(), batch.m)
    m_under = np.where(lower, batch.m_under.conj(), batch.m_under)
    return m, m_under


def solve_degenerate(z: complex, which: DegenerateLimit, H: SpectralMeasure) -> StieltjesSolution:
    """
    Closed-form m(z) at the endpoint limits.

    LargeN (c1, c2) = (0, 1) gives ∫ dH(t)/(t − z); LargeP (1, 0) gives −1/z.
    """
    z = complex(z)
    if z.imag <= 0.0:
        raise InvalidInputError("solve_degenerate requires Im(z) > 0")
    if which == DegenerateLimit.LARGE_N:
        m = complex(np.sum(H.w / (H.t - z)))
        m_under = -1.0 / z
    else:
        m = -1.0 / z
        m_under = 0j
    return StieltjesSolution(z=z, m=m, m_under=m_under, residual=0.0, iterations=0)


def zero_atom(ratios: AspectRatios, H: SpectralMeasure) -> float:
    """Point mass of F at 0: max(H({0}), 1 − c2/c1)."""
    return max(H.zero_mass, ratios.zero_atom)


# =============================================================================
# Density and CDF
# =============================================================================


class DensityCurve(BaseModel):
    """Density of F^{c1,c2,H} on a grid plus the point mass at 0."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    grid: list[float]
    density: list[float]
    zero_atom: float

    @model_validator(mode="after")
    def _check(self) -> "DensityCurve":
        if len(self.grid) != len(self.density) or len(self.grid) < 2:
            raise ValueError("grid and density must have equal length ≥ 2")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if any(f < 0.0 for f in self.density):
            raise ValueError("density must be nonnegative")
        return self

    def cumulative(self) -> np.ndarray:
        """F at every grid point (continuous part by cumulative trapezoid plus the atom)."""
        x = np.asarray(self.grid)
        cont = cumulative_trapezoid(np.asarray(self.density), x, initial=0.0)
        atom = np.where(x >= 0.0, self.zero_atom, 0.0)
        return np.clip(cont + atom, 0.0, 1.0)

    def total_mass(self) -> float:
        """Mass captured by the grid plus the zero atom."""
        return float(self.cumulative()[-1])

    def cdf_at(self, x: Sequence[float] | np.ndarray) -> np.ndarray:
        """
        Evaluate F at arbitrary points by linear interpolation of `cumulative`.

        Raises:
            DomainError: If a nonnegative point lies below the grid.
        """
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        inside = xs >= 0.0
        if np.any(xs[inside] < self.grid[0]):
            raise DomainError(f"x below the density grid (grid starts at {self.grid[0]:.6g})")
        values = np.interp(xs, self.grid, self.cumulative())
        return np.where(inside, values, 0.0)

    def support_intervals(self) -> list[tuple[float, float]]:
        """Grid-resolution estimates of the intervals where the density is positive."""
        positive = np.asarray(self.density) > 0.0
        x = np.asarray(self.grid)
        edges = np.flatnonzero(np.diff(positive.astype(int)))
        starts = [0] if positive[0] else []
        ends: list[int] = []
        for e in edges:
            if positive[e + 1]:
                starts.append(e + 1)
            else:
                ends.append(e)
        if positive[-1]:
            ends.append(len(x) - 1)
        return [(float(x[a]), float(x[b])) for a, b in zip(starts, ends)]

    def write_csv(self, stream: IO[str]) -> None:
        """Write columns x, f, F with round-trip precision."""
        writer = csv.writer(stream)
        writer.writerow(["x", "f", "F"])
        for x, f, cdf in zip(self.grid, self.density, self.cumulative()):
            writer.writerow([repr(float(x)), repr(float(f)), repr(float(cdf))])


def default_grid(
    points: int = DEFAULT_GRID_POINTS, upper: float = DEFAULT_GRID_UPPER
) -> np.ndarray:
    """Quadratically graded grid on [0, upper], dense near the hard edge at 0."""
    return upper * (np.arange(points + 1) / points) ** 2


def _inverted_density(
    x: np.ndarray,
    ratios: AspectRatios,
    H: SpectralMeasure,
    ladder: np.ndarray,
    atom: float,
    tol: float,
    max_iter: int,
) -> np.ndarray:
    rungs: list[np.ndarray] = []
    seed: Optional[np.ndarray] = None
    for v in ladder:
        z = x + 1j * v
        try:
            if seed is None:
                batch = _descend(z, ratios, H, tol, max_iter)
            else:
                batch = solve_many(z, ratios, H, tol=tol, max_iter=max_iter, m0=seed)
        except NonConvergenceError as exc:
            exc.details = {**(exc.details or {}), "x": None if exc.z is None else exc.z.real}
            raise
        seed = batch.m
        rungs.append((batch.m + atom / z).imag / math.pi)

    if len(rungs) == 1:
        return rungs[0]
    v1, v2 = ladder[-2], ladder[-1]
    return rungs[-1] - v2 * (rungs[-2] - rungs[-1]) / (v1 - v2)


def density_curve(
    ratios: AspectRatios,
    H: SpectralMeasure,
    grid: Optional[Sequence[float] | np.ndarray] = None,
    epsilon_ladder: Sequence[float] = DEFAULT_LADDER,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> DensityCurve:
    """
    Recover the density of F^{c1,c2,H} on a grid by Stieltjes inversion.

    Im m(x+iv)/π is evaluated down the epsilon ladder, each rung seeded with the
    previous one, and extrapolated linearly to v = 0 from the last two rungs.
    The point mass at 0 is removed from m analytically before inversion.

    Args:
        ratios: Aspect ratios.
        H: Population spectral measure.
        grid: Strictly increasing x values (default: `default_grid()`).
        epsilon_ladder: Strictly decreasing positive heights v.
        tol: Solver tolerance.
        max_iter: Solver iteration cap.
        threads: Worker threads; the grid is split into one contiguous block each.

    Returns:
        The DensityCurve; values below EDGE_FLOOR are reported as zero.

    Raises:
        InvalidInputError: On a malformed grid or ladder, or threads < 1.
        NonConvergenceError: With the offending grid point in `details["x"]`.
    """
    x = default_grid() if grid is None else np.asarray(grid, dtype=float)
    ladder = np.asarray(epsilon_ladder, dtype=float)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0.0):
        raise InvalidInputError("grid must be strictly increasing with at least two points")
    if ladder.size == 0 or np.any(ladder <= 0.0) or np.any(np.diff(ladder) >= 0.0):
        raise InvalidInputError("epsilon ladder must be strictly decreasing and positive")
    if threads < 1:
        raise InvalidInputError(f"threads must be ≥ 1, got {threads}")

    atom = zero_atom(ratios, H)

    def invert(block: np.ndarray) -> np.ndarray:
        return _inverted_density(block, ratios, H, ladder, atom, tol, max_iter)

    if threads == 1:
        values = invert(x)
    else:
        blocks = [b for b in np.array_split(x, threads) if b.size]
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            values = np.concatenate(list(pool.map(invert, blocks)))
    values = np.where(values < EDGE_FLOOR, 0.0, values)
    logger.debug("density curve on %d points, zero atom %.6g", x.size, atom)
    return DensityCurve(grid=x.tolist(), density=values.tolist(), zero_atom=atom)


def cdf(
    ratios: AspectRatios,
    H: SpectralMeasure,
    x: float,
    curve: Optional[DensityCurve] = None,
) -> float:
    """
    Evaluate F^{c1,c2,H}(x).

    Integrates `curve` (default: `density_curve` on `default_grid()`) and adds
    the zero atom for x ≥ 0. Returns 0 for x < 0.

    Raises:
        DomainError: If x ≥ 0 lies below the curve's grid.
    """
    if x < 0.0:
        return 0.0
    if curve is None:
        curve = density_curve(ratios, H)
    return float(curve.cdf_at([x])[0])
