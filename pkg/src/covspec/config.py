"""
Run configuration documents for the CLI.

Every model rejects unknown keys. The fully resolved configuration, defaults
included, is echoed in each report next to its SHA-256 hash.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from covspec import __version__
from covspec.contours import DEFAULT_NODES, MAX_NODES, Contour
from covspec.exceptions import ConfigError
from covspec.lss_moments import MAX_DOUBLE_NODES
from covspec.montecarlo import ReplicateStudy
from covspec.spectral_core import (
    AspectRatios,
    MomentProfile,
    SpectralMeasure,
    identity_measure,
    make_ratios,
)
from covspec.stieltjes import (
    DEFAULT_GRID_POINTS,
    DEFAULT_GRID_UPPER,
    DEFAULT_LADDER,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
)
from covspec.types import Alternative


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MomentsConfig(_Strict):
    alpha: float = 1.0
    delta: float = 0.0

    def profile(self) -> MomentProfile:
        return MomentProfile(alpha=self.alpha, delta=self.delta)


class SolverConfig(_Strict):
    tol: float = Field(default=DEFAULT_TOL, gt=0.0)
    max_iter: int = Field(default=DEFAULT_MAX_ITER, ge=1)
    epsilon_ladder: list[float] = Field(default_factory=lambda: list(DEFAULT_LADDER))
    grid_points: int = Field(default=DEFAULT_GRID_POINTS, ge=2)
    grid_upper: float = Field(default=DEFAULT_GRID_UPPER, gt=0.0)


class ContourConfig(_Strict):
    """Contour overrides; unset contours fall back to the defaults for (p, n, H)."""

    mean: Optional[Contour] = None
    outer: Optional[Contour] = None
    inner: Optional[Contour] = None
    nodes: int = Field(default=DEFAULT_NODES, ge=8, multiple_of=8)
    max_nodes: int = Field(default=MAX_NODES, ge=8)
    max_double_nodes: int = Field(default=MAX_DOUBLE_NODES, ge=8)


class OutputConfig(_Strict):
    out_dir: Optional[str] = None
    format: Literal["csv", "json"] = "json"


class VerifyConfig(_Strict):
    suites: list[str] = Field(default_factory=list)
    replicates: Optional[int] = Field(default=None, ge=1)


class RunConfig(_Strict):
    """Parameters shared by all subcommands."""

    p: Optional[int] = Field(default=None, ge=1)
    n: Optional[int] = Field(default=None, ge=1)
    measure: Optional[SpectralMeasure] = None
    measure_file: Optional[str] = None
    moments: MomentsConfig | Literal["estimate"] = Field(default_factory=MomentsConfig)
    functions: list[str | list[float]] = Field(default_factory=lambda: ["x", "x2"])
    closed_form: bool = True
    test: Literal["frobenius", "lrt", "both"] = "both"
    alternative: Alternative = Alternative.TWO_SIDED
    is_real: bool = True
    solver: SolverConfig = Field(default_factory=SolverConfig)
    contour: ContourConfig = Field(default_factory=ContourConfig)
    study: Optional[ReplicateStudy] = None
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    seed: int = Field(default=0, ge=0, lt=1 << 64)

    @model_validator(mode="after")
    def _check_measure(self) -> "RunConfig":
        if self.measure is not None and self.measure_file is not None:
            raise ValueError("give either measure or measure_file, not both")
        return self

    def ratios(self) -> AspectRatios:
        if self.p is None or self.n is None:
            raise ConfigError("this command needs p and n")
        return make_ratios(self.p, self.n)

    def resolve_measure(self, base: Optional[Path] = None) -> SpectralMeasure:
        """Inline measure, measure file (relative to `base`) or H = δ₁."""
        if self.measure is not None:
            return self.measure
        if self.measure_file is None:
            return identity_measure()
        path = Path(self.measure_file)
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            return SpectralMeasure.model_validate_json(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read measure file {path}", cause=str(exc)) from exc
        except ValidationError as exc:
            raise ConfigError(f"invalid measure file {path}", cause=str(exc)) from exc

    def supplied_moments(self) -> MomentProfile:
        if self.moments == "estimate":
            raise ConfigError("moment estimation is only available for the test command")
        return self.moments.profile()


def parse_config(text: str) -> RunConfig:
    """
    Parse a JSON run configuration.

    Raises:
        ConfigError: On malformed JSON, unknown keys or invalid values.
    """
    try:
        return RunConfig.model_validate(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON", cause=str(exc)) from exc
    except ValidationError as exc:
        raise ConfigError("invalid config", cause=str(exc)) from exc


def load_config(path: Optional[str | Path]) -> RunConfig:
    """Load a config file; no path gives the all-defaults config."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}", cause=str(exc)) from exc
    return parse_config(text)


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical JSON form of the resolved config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def provenance(config: RunConfig) -> dict[str, Any]:
    """Block embedded in every report."""
    return {
        "version": __version__,
        "seed": config.seed,
        "config_hash": config_hash(config),
        "config": config.model_dump(mode="json"),
    }
