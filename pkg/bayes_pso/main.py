"""Command-line entry point: single runs, suites, report rendering and id listing."""

import functools
import json
import logging
import os
from pathlib import Path
from typing import Any, Optional, Sequence

import click

from bayes_pso import __version__
from bayes_pso.config import Settings, load_settings, settings
from bayes_pso.core.algorithms import ALGORITHM_IDS
from bayes_pso.core.barebones import CovarianceMode
from bayes_pso.core.bench import execute_suite, run_single
from bayes_pso.core.gaussian import Prior
from bayes_pso.core.kernel import KERNEL_IDS
from bayes_pso.core.objectives import OBJECTIVE_IDS
from bayes_pso.core.swarm import PSOError
from bayes_pso.schemas import RunRecord
from bayes_pso.utils.file_utils import (
    RESULTS_FILENAME,
    copy_config_file,
    ensure_dir,
    read_results_file,
    trace_filename,
    write_results_file,
    write_run_result,
    write_trace_csv,
)
from bayes_pso.utils.report import ReportFormat, build_report, render_report

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"

FORMAT_CHOICES = ("csv", "json", "markdown", "md")

# flag name -> Settings field
FLAG_FIELDS = {
    "max_iters": "max_iterations",
    "out": "out_dir",
    "format": "report_format",
    "traces": "save_traces",
    "noise": "noise_sigma",
}


def configure_logging(level: str, log_file: Optional[str] = None) -> None:
    """
    Configure the root logger; messages go to stderr and optionally a file.

    Safe to call again once experiment settings are loaded: the level is
    updated and a file handler is added unless one already writes to log_file.
    """
    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(format=LOG_FORMAT, datefmt=LOG_DATEFMT, handlers=[logging.StreamHandler()])
    root.setLevel(getattr(logging, level.upper(), logging.INFO))

    if log_file:
        path = os.path.abspath(log_file)
        if any(isinstance(h, logging.FileHandler) and h.baseFilename == path for h in root.handlers):
            return
        handler = logging.FileHandler(path, encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT))
        root.addHandler(handler)


def _split_ids(choices: Sequence[str]):
    def callback(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> Optional[list[str]]:
        if value is None:
            return None
        ids = [part.strip() for part in value.split(",") if part.strip()]
        if not ids:
            raise click.BadParameter("expected a comma-separated list of ids")
        unknown = [i for i in ids if i not in choices]
        if unknown:
            raise click.BadParameter(f"unknown id(s): {', '.join(unknown)}. Choose from: {', '.join(choices)}")
        return ids

    return callback


def _normalize_format(fmt: Optional[str]) -> Optional[str]:
    return ReportFormat.MARKDOWN if fmt == "md" else fmt


def _settings_overrides(flags: dict[str, Any]) -> dict[str, Any]:
    """Translate parsed flags into Settings fields, dropping unset ones."""
    values = {}
    for name, value in flags.items():
        if value is None or value is False:
            continue
        field = FLAG_FIELDS.get(name, name.replace("-", "_"))
        values[field] = _normalize_format(value) if field == "report_format" else value
    return values


def reports_errors(func):
    """Turn library errors into a one-line diagnostic with exit status 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except PSOError as e:
            logger.debug(f"{type(e).__name__}: {e}")
            raise click.ClickException(str(e)) from e
        except OSError as e:
            raise click.ClickException(str(e)) from e

    return wrapper


def algorithm_options(func):
    """Shared experiment and algorithm-parameter flags."""
    options = [
        click.option("--config", type=click.Path(exists=True, dir_okay=False, path_type=Path), help="Plain-text key = value experiment file."),
        click.option("--dim", type=click.IntRange(min=1), show_default=str(settings.dim), help="Problem dimension."),
        click.option("--particles", type=click.IntRange(min=2), show_default=str(settings.particles), help="Swarm size."),
        click.option("--seed", type=click.IntRange(min=0), show_default=str(settings.seed), help="Run seed (base seed for suites)."),
        click.option("--max-iters", type=click.IntRange(min=1), show_default=str(settings.max_iterations), help="Evaluation rounds per run, initialization included."),
        click.option("--stop-threshold", type=click.FloatRange(min=0.0), show_default=str(settings.stop_threshold), help="Stop when the swarm spread falls below this."),
        click.option("--noise", type=click.FloatRange(min=0.0), show_default=str(settings.noise_sigma), help="Standard deviation of additive evaluation noise."),
        click.option("--w", type=float, show_default="0.7298 standard, 1.0 constricted", help="Inertia weight."),
        click.option("--phi", type=float, show_default="1.49618 standard, 2.05 constricted", help="Personal-best attraction."),
        click.option("--eta", type=float, show_default="1.49618 standard, 2.05 constricted", help="Global-best attraction."),
        click.option("--gamma", type=click.FloatRange(min=0.0, max=1.0, min_open=True), show_default=str(settings.gamma), help="Learning constant of the posterior updates."),
        click.option("--beta", type=click.FloatRange(min=0.0, min_open=True), show_default="0.4 dependence and kernel, 0.1 independence", help="Component precision."),
        click.option("--tau", type=click.FloatRange(min=0.0, max=1.0), show_default="0.5 discount, 0 kernel-standard momentum", help="Temporal discount or kernel-standard momentum."),
        click.option("--prior", type=click.Choice([Prior.UNIFORM, Prior.GAUSSIAN_UNIT]), show_default=settings.prior, help="Prior of the posterior updates."),
        click.option("--window", type=click.IntRange(min=1), show_default=str(settings.window), help="Retained history iterations."),
        click.option("--cov-mode", type=click.Choice([CovarianceMode.PER_DIMENSION, CovarianceMode.SCALAR]), show_default="set by the algorithm id", help="Bare bones covariance."),
        click.option("--bb-scale", type=click.FloatRange(min=0.0, min_open=True), show_default=str(settings.bb_scale), help="Bare bones covariance scale."),
        click.option("--kernel", type=click.Choice(list(KERNEL_IDS)), show_default="trig", help="Kernel of the kernel PSO variants."),
        click.option("--kernel-mu", type=click.FloatRange(min=0.0, min_open=True), show_default=str(settings.kernel_mu), help="Kernel parameter."),
        click.option("--traces", is_flag=True, default=False, help="Record global-best traces as csv files."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load(config: Optional[Path], flags: dict[str, Any]) -> Settings:
    current = load_settings(config, _settings_overrides(flags))
    ctx = click.get_current_context(silent=True)
    level_flag = ctx.find_root().params.get("log_level") if ctx is not None else None
    configure_logging(level_flag or current.log_level, current.log_file)
    logger.debug(f"Effective settings: {current.model_dump()}")
    return current


@click.group()
@click.version_option(__version__, prog_name="bayes-pso")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False), help="Logging level.")
def cli(log_level: Optional[str]) -> None:
    """Bayesian particle swarm optimization benchmarks."""
    configure_logging(log_level or settings.log_level, settings.log_file)


@cli.command("run")
@click.option("--algo", required=True, type=click.Choice(list(ALGORITHM_IDS)), help="Algorithm id.")
@click.option("--fn", required=True, type=click.Choice(list(OBJECTIVE_IDS)), help="Objective id.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Directory to save the result in.")
@algorithm_options
@reports_errors
def run_command(algo: str, fn: str, out: Optional[Path], config: Optional[Path], **flags: Any) -> None:
    """Run one seeded optimization and print its result."""
    current = _load(config, flags)
    result = run_single(current.run_config(algo, fn))

    click.echo(json.dumps(result.model_dump(exclude={"wall_time", "trace"}), indent=2))

    if out is not None:
        write_run_result(result, Path(out) / f"run_{algo}_{fn}_{result.seed}.json")
        if result.trace is not None:
            write_trace_csv(result.trace, Path(out) / trace_filename(algo, fn, result.seed))


@cli.command("suite")
@click.option("--algos", required=True, callback=_split_ids(ALGORITHM_IDS), help="Comma-separated algorithm ids.")
@click.option("--fns", required=True, callback=_split_ids(OBJECTIVE_IDS), help="Comma-separated objective ids.")
@click.option("--runs", type=click.IntRange(min=2), show_default=str(settings.runs), help="Runs per (algorithm, function) cell.")
@click.option("--workers", type=click.IntRange(min=1), show_default=str(settings.workers), help="Worker processes (PSO_WORKERS).")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), show_default=str(settings.out_dir), help="Output directory.")
@click.option("--format", type=click.Choice(FORMAT_CHOICES), show_default=settings.report_format, help="Report format.")
@algorithm_options
@reports_errors
def suite_command(algos: list[str], fns: list[str], config: Optional[Path], **flags: Any) -> None:
    """Run every algorithm on every function and write results plus a report."""
    current = _load(config, flags)
    template = current.run_config(algos[0], fns[0])

    results, report = execute_suite(
        algos,
        fns,
        current.runs,
        current.seed,
        template=template,
        workers=current.workers,
    )

    out_dir = ensure_dir(current.out_dir)
    results_path = out_dir / RESULTS_FILENAME
    write_results_file((RunRecord.from_result(r) for r in results), results_path)

    fmt = _normalize_format(current.report_format)
    report_path = out_dir / f"report.{ReportFormat.EXTENSIONS[fmt]}"
    report_path.write_text(render_report(report, fmt), encoding="utf-8")
    logger.info(f"Wrote report to {report_path}")

    if config is not None:
        copy_config_file(config, out_dir)

    if current.save_traces:
        for result in results:
            write_trace_csv(result.trace or [], out_dir / "traces" / trace_filename(result.algorithm, result.objective, result.seed))

    click.echo(f"results: {results_path}")
    click.echo(f"report: {report_path}")


@cli.command("report")
@click.argument("results_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--format", "fmt", type=click.Choice(FORMAT_CHOICES), default=ReportFormat.MARKDOWN, show_default=True, help="Report format.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Write to this file instead of stdout.")
@reports_errors
def report_command(results_file: Path, fmt: str, out: Optional[Path]) -> None:
    """Re-render a report from a results file."""
    report = build_report(read_results_file(results_file))
    text = render_report(report, _normalize_format(fmt))

    if out is None:
        click.echo(text, nl=False)
    else:
        ensure_dir(out.parent)
        out.write_text(text, encoding="utf-8")
        logger.info(f"Wrote report to {out}")


@cli.command("list")
def list_command() -> None:
    """Print the available algorithm, objective and kernel ids."""
    click.echo("algorithms:")
    for algorithm_id in ALGORITHM_IDS:
        click.echo(f"  {algorithm_id}")
    click.echo("objectives:")
    for objective_id in OBJECTIVE_IDS:
        click.echo(f"  {objective_id}")
    click.echo("kernels:")
    for kernel_id in KERNEL_IDS:
        click.echo(f"  {kernel_id}")


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run the selected command.

    Returns:
        int: 0 on success, 2 on usage errors, 1 on any other error
    """
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="bayes-pso", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return rv if isinstance(rv, int) else 0


def main() -> int:
    return parse_and_dispatch()


if __name__ == "__main__":
    raise SystemExit(main())
