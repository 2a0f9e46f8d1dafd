"""Command-line interface for covspec."""

import csv
import functools
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import click
from dotenv import load_dotenv
from pydantic import ValidationError

# Load .env.local file if it exists (before any commands run)
_env_local = Path.cwd() / ".env.local"
if _env_local.exists():
    load_dotenv(_env_local)

from covspec import __version__  # noqa: E402
from covspec.config import RunConfig, load_config, provenance  # noqa: E402
from covspec.datafile import read_matrix  # noqa: E402
from covspec.exceptions import (  # noqa: E402
    ConfigError,
    CovspecError,
    VerificationError,
    exit_code_for,
)
from covspec.identity_tests import (  # noqa: E402
    estimate_moment_profile,
    frobenius_test,
    lrt_eigenvalues,
    lrt_test,
    sample_eigenvalues,
)
from covspec.lss_moments import KernelContext, identity_closed_forms, lss_table  # noqa: E402
from covspec.montecarlo import lss_replicates  # noqa: E402
from covspec.stieltjes import default_grid, density_curve, zero_atom  # noqa: E402
from covspec.test_functions import IDENTITY, LOG, SQUARE, resolve  # noqa: E402
from covspec.verify import SUITES, SuiteOptions, run_suites  # noqa: E402

logger = logging.getLogger("covspec")

CLOSED_FORM_NAMES = {IDENTITY.name, SQUARE.name, LOG.name}


# =============================================================================
# Shared plumbing
# =============================================================================


def common_options(command: Callable) -> Callable:
    """Options every subcommand accepts."""
    decorators = [
        click.option(
            "--config", "config_path", type=click.Path(dir_okay=False), help="JSON run config"
        ),
        click.option(
            "--out", "out_dir", type=click.Path(file_okay=False), help="Output directory"
        ),
        click.option(
            "--seed", type=click.IntRange(0, (1 << 64) - 1), help="Override the config seed"
        ),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), help="Output format"),
    ]
    for decorator in reversed(decorators):
        command = decorator(command)
    return command


threads_option = click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    envvar="COVSPEC_THREADS",
    help="Worker threads (or set COVSPEC_THREADS)",
)


class Run:
    """Resolved options of one invocation."""

    def __init__(
        self,
        config_path: Optional[str],
        out_dir: Optional[str],
        seed: Optional[int],
        fmt: Optional[str],
        threads: int = 1,
    ) -> None:
        config = load_config(config_path)
        if seed is not None:
            config = config.model_copy(update={"seed": seed})
        self.config: RunConfig = config
        self.base = Path(config_path).parent if config_path else Path.cwd()
        out = out_dir or config.output.out_dir
        self.out_dir = Path(out) if out else None
        self.threads = threads
        self.fmt = fmt or config.output.format

    def write(self, name: str, text: str) -> None:
        """Write `text` to out_dir/name, or to stdout without an output directory."""
        if self.out_dir is None:
            click.echo(text, nl=not text.endswith("\n"))
            return
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / name).write_text(text, encoding="utf-8")
        logger.info("wrote %s", self.out_dir / name)

    def write_json(self, name: str, payload: dict[str, Any]) -> None:
        self.write(name, json.dumps({**payload, "provenance": provenance(self.config)}, indent=2))


def handle_errors(command: Callable) -> Callable:
    """Print covspec errors to stderr and exit with their stable exit code."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except (CovspecError, ValidationError) as exc:
            click.echo(f"Error: {exc}", err=True)
            details = getattr(exc, "details", None)
            if details:
                click.echo(f"Details: {json.dumps(details, default=str)}", err=True)
            sys.exit(exit_code_for(exc))

    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="covspec")
@click.option("-v", "--verbose", is_flag=True, help="Log debug output to stderr")
def main(verbose: bool):
    """
    covspec - spectra, LSS moments and identity tests for renormalized sample covariances.

    Examples:

        # Limiting density for p=200, n=400, Σ = I
        covspec lsd --config run.json --out results/

        # Means and covariances of linear spectral statistics
        covspec lss-moments --config run.json

        # Test H0: Σ = I on a data matrix
        covspec test --data x.csv

        # Replicate study and acceptance suites
        covspec simulate --config study.json --threads 8
        covspec verify appendix-b-oracle theorem3-null
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


# =============================================================================
# lsd
# =============================================================================


@main.command()
@common_options
@threads_option
@handle_errors
def lsd(config_path, out_dir, seed, fmt, threads):
    """Limiting density, CDF and zero atom of F^{c1,c2,H}."""
    run = Run(config_path, out_dir, seed, fmt, threads)
    cfg = run.config
    ratios = cfg.ratios()
    H = cfg.resolve_measure(run.base)
    curve = density_curve(
        ratios,
        H,
        grid=default_grid(cfg.solver.grid_points, cfg.solver.grid_upper),
        epsilon_ladder=cfg.solver.epsilon_ladder,
        tol=cfg.solver.tol,
        max_iter=cfg.solver.max_iter,
        threads=run.threads,
    )
    summary = {
        "p": ratios.p,
        "n": ratios.n,
        "c1": ratios.c1,
        "c2": ratios.c2,
        "scenario": ratios.scenario.value,
        "measure": H.model_dump(mode="json"),
        "zero_atom": zero_atom(ratios, H),
        "support_intervals": curve.support_intervals(),
        "total_mass": curve.total_mass(),
    }
    buffer = io.StringIO(newline="")
    curve.write_csv(buffer)
    if run.fmt == "csv":
        run.write("density.csv", buffer.getvalue())
        if run.out_dir is not None:
            run.write_json("lsd.json", summary)
    else:
        cumulative = curve.cumulative().tolist()
        run.write_json("lsd.json", {**summary, **curve.model_dump(), "cdf": cumulative})
        if run.out_dir is not None:
            run.write("density.csv", buffer.getvalue())


# =============================================================================
# lss-moments
# =============================================================================


@main.command("lss-moments")
@common_options
@handle_errors
def lss_moments(config_path, out_dir, seed, fmt):
    """Means and covariance matrix of X_f for the configured test functions."""
    run = Run(config_path, out_dir, seed, fmt)
    cfg = run.config
    ratios = cfg.ratios()
    H = cfg.resolve_measure(run.base)
    moments = cfg.supplied_moments()
    functions = [resolve(f) for f in cfg.functions]
    ctx = KernelContext(ratios=ratios, H=H, moments=moments)
    overrides = cfg.contour
    table = lss_table(
        functions,
        ctx,
        contour=overrides.mean,
        outer=overrides.outer,
        inner=overrides.inner,
        nodes=overrides.nodes,
        with_centers=True,
        max_nodes=overrides.max_nodes,
        max_double_nodes=overrides.max_double_nodes,
    )
    payload: dict[str, Any] = {"table": table.model_dump(mode="json")}

    names = [f.name for f in functions]
    if cfg.closed_form and H.is_identity and set(names) <= CLOSED_FORM_NAMES:
        exact = identity_closed_forms(ratios, moments, include_log=LOG.name in names)
        idx = [exact.functions.index(name) for name in names]
        closed_means = [exact.means[i] for i in idx]
        closed_cov = [[exact.cov[i][j] for j in idx] for i in idx]
        closed_centers = [exact.centers[i] for i in idx]
        deviation = max(
            max(abs(a - b) for a, b in zip(table.means, closed_means)),
            max(abs(a - b) for r1, r2 in zip(table.cov, closed_cov) for a, b in zip(r1, r2)),
            max(abs(a - b) for a, b in zip(table.centers, closed_centers)),
        )
        payload["closed_form"] = {
            "means": closed_means,
            "cov": closed_cov,
            "centers": closed_centers,
            "max_deviation": deviation,
        }

    if run.fmt == "csv":
        buffer = io.StringIO(newline="")
        writer = csv.writer(buffer)
        writer.writerow(["function", "mean", "center", *(f"cov[{name}]" for name in names)])
        for i, name in enumerate(names):
            row = [table.means[i], table.centers[i], *table.cov[i]]
            writer.writerow([name, *(repr(float(v)) for v in row)])
        run.write("lss_moments.csv", buffer.getvalue())
    else:
        run.write_json("lss_moments.json", payload)


# =============================================================================
# test
# =============================================================================


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(dir_okay=False))
@click.option(
    "--test",
    "which",
    type=click.Choice(["frobenius", "lrt", "both"]),
    help="Override config.test",
)
@common_options
@handle_errors
def test(data_path, which, config_path, out_dir, seed, fmt):
    """Test H0: Σ = I on a data matrix (rows = variables, columns = samples)."""
    run = Run(config_path, out_dir, seed, fmt)
    cfg = run.config
    which = which or cfg.test
    X = read_matrix(data_path)
    p, n = X.shape
    if cfg.moments == "estimate":
        moments = estimate_moment_profile(X, is_real=cfg.is_real)
    else:
        moments = cfg.supplied_moments()

    reports, errors = [], []
    if which in ("frobenius", "both"):
        reports.append(frobenius_test(sample_eigenvalues(X), p, n, moments, cfg.alternative))
    if which in ("lrt", "both"):
        try:
            reports.append(lrt_test(lrt_eigenvalues(X), p, n, moments, cfg.alternative))
        except CovspecError as exc:
            if which == "lrt":
                raise
            errors.append({"test": "lrt", "error": type(exc).__name__, "message": str(exc)})

    payload = {
        "reports": [r.model_dump(mode="json") for r in reports],
        "errors": errors,
        "partial": bool(errors),
    }
    lines = [
        f"{r.name.value}: statistic={r.raw_statistic:.6g} z={r.z_score:.4f} p-value={r.p_value:.4g}"
        for r in reports
    ]
    lines += [f"{e['test']}: not computed ({e['message']})" for e in errors]
    run.write_json("test_report.json", payload)
    click.echo("\n".join(lines), err=run.out_dir is None)


# =============================================================================
# simulate / verify
# =============================================================================


@main.command()
@click.option("--replicates", type=click.IntRange(min=1), help="Override study.replicates")
@common_options
@threads_option
@handle_errors
def simulate(replicates, config_path, out_dir, seed, fmt, threads):
    """Run the configured replicate study."""
    run = Run(config_path, out_dir, seed, fmt, threads)
    study = run.config.study
    if study is None:
        raise ConfigError("simulate needs a 'study' section in the config")
    updates: dict[str, Any] = {}
    if replicates is not None:
        updates["replicates"] = replicates
    if seed is None and "seed" in study.dist.model_fields_set:
        # an explicit study seed wins over the top-level one unless --seed is given
        run.config = run.config.model_copy(update={"seed": study.dist.seed})
    updates["dist"] = study.dist.with_seed(run.config.seed)
    study = study.model_copy(update=updates)
    result = lss_replicates(study, threads=run.threads)

    buffer = io.StringIO(newline="")
    result.write_csv(buffer)
    summary = {
        "columns": result.columns,
        "centers": result.centers,
        "summary": result.summary.model_dump(),
        "study": study.model_dump(mode="json"),
    }
    if run.fmt == "csv" or run.out_dir is not None:
        run.write("replicates.csv", buffer.getvalue())
    if run.fmt == "json" or run.out_dir is not None:
        run.write_json("summary.json", summary)


@main.command()
@click.argument("suites", nargs=-1)
@click.option("--replicates", type=click.IntRange(min=1), help="Replicates for Monte Carlo suites")
@click.option("--list", "list_only", is_flag=True, help="List the available suites")
@common_options
@threads_option
@handle_errors
def verify(suites, replicates, list_only, config_path, out_dir, seed, fmt, threads):
    """Run acceptance suites (all of them when none are named); exit 5 on failure."""
    if list_only:
        for name, suite in SUITES.items():
            click.echo(f"{name}: {(suite.__doc__ or '').strip().splitlines()[0]}")
        return
    run = Run(config_path, out_dir, seed, fmt, threads)
    cfg = run.config
    names = list(suites) or cfg.verify.suites
    count = replicates or cfg.verify.replicates
    options = SuiteOptions(
        seed=cfg.seed,
        threads=run.threads,
        **({"replicates": count} if count else {}),
    )
    report = run_suites(names, options)
    run.write_json("verify.json", report.model_dump(mode="json"))
    for result in report.results:
        status = "PASS" if result.passed else "FAIL"
        click.echo(f"{status} {result.name} ({result.seconds:.1f}s)", err=True)
        for check in result.checks:
            if not check.passed:
                click.echo(f"    {check.label}: {check.value:.6g} not {check.bound}", err=True)
    if not report.passed:
        raise VerificationError(f"failed suites: {', '.join(report.failures)}")


if __name__ == "__main__":
    main()
