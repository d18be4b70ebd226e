"""Aggregate run records into reports and render them as csv, json or markdown."""

import io
import logging
from itertools import combinations
from typing import Any, Iterable, Optional, Sequence

import pandas as pd

from bayes_pso.core.swarm import UsageError
from bayes_pso.schemas import BenchmarkReport, CellStats, Comparison, RunRecord
from bayes_pso.utils.stats import welch_t_test

logger = logging.getLogger(__name__)

SIGNIFICANCE = 0.05
CSV_COLUMNS = (
    "kind",
    "function",
    "algorithm_a",
    "algorithm_b",
    "mean",
    "std",
    "runs",
    "mean_iterations",
    "t",
    "df",
    "p",
    "degenerate",
)


class ReportFormat:
    """Supported report formats and their file extensions."""

    CSV = "csv"
    JSON = "json"
    MARKDOWN = "markdown"

    EXTENSIONS = {CSV: "csv", JSON: "json", MARKDOWN: "md"}
    ALL = (CSV, JSON, MARKDOWN)


def _ordered_unique(values: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(values))


def records_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    """Run records as a DataFrame with one row per run, in record order."""
    return pd.DataFrame([record.model_dump() for record in records], columns=list(RunRecord.model_fields))


def build_report(
    records: Sequence[RunRecord],
    pairs: Optional[Sequence[tuple[str, str]]] = None,
    metadata: Optional[dict[str, Any]] = None,
) -> BenchmarkReport:
    """
    Aggregate run records into per-cell statistics and pairwise t-tests.

    Algorithms and functions keep the order in which they first appear.
    The standard deviation is the sample one (ddof=1); a single-run cell
    reports 0.

    Args:
        records: Raw run records
        pairs: Algorithm pairs to compare on every function; all unordered
            pairs of distinct algorithms when omitted
        metadata: Extra metadata stored with the report

    Returns:
        BenchmarkReport: Cells ordered by function then algorithm

    Raises:
        UsageError: If there are no records
    """
    if not records:
        raise UsageError("Cannot build a report from zero runs")

    frame = records_frame(records)
    algorithms = _ordered_unique(frame["algorithm"])
    functions = _ordered_unique(frame["function"])

    grouped = frame.groupby(["algorithm", "function"], sort=False)
    stats = grouped.agg(
        mean=("best_value", "mean"),
        std=("best_value", "std"),
        runs=("best_value", "size"),
        mean_iterations=("iterations", "mean"),
    )
    stats["std"] = stats["std"].fillna(0.0)
    samples = {key: group.to_numpy(dtype=float) for key, group in grouped["best_value"]}

    cells = []
    for function in functions:
        for algorithm in algorithms:
            if (algorithm, function) not in stats.index:
                continue
            row = stats.loc[(algorithm, function)]
            cells.append(
                CellStats(
                    algorithm=algorithm,
                    function=function,
                    mean=float(row["mean"]),
                    std=float(row["std"]),
                    runs=int(row["runs"]),
                    mean_iterations=float(row["mean_iterations"]),
                )
            )

    pairs = list(pairs) if pairs is not None else list(combinations(algorithms, 2))
    comparisons = []
    for function in functions:
        for a, b in pairs:
            if (a, function) not in samples or (b, function) not in samples:
                continue
            if len(samples[(a, function)]) < 2 or len(samples[(b, function)]) < 2:
                logger.warning(f"Skipping t-test {a} vs {b} on {function}: fewer than 2 runs")
                continue
            result = welch_t_test(samples[(a, function)], samples[(b, function)])
            comparisons.append(
                Comparison(
                    algorithm_a=a,
                    algorithm_b=b,
                    function=function,
                    t=result.t,
                    df=result.df,
                    p=result.p,
                    degenerate=result.degenerate,
                )
            )

    meta = {"test": "welch", "tails": 2, "significance": SIGNIFICANCE}
    meta.update(metadata or {})
    return BenchmarkReport(cells=cells, comparisons=comparisons, metadata=meta)


def _render_csv(report: BenchmarkReport) -> str:
    rows = [
        {
            "kind": "cell",
            "function": cell.function,
            "algorithm_a": cell.algorithm,
            "mean": cell.mean,
            "std": cell.std,
            "runs": cell.runs,
            "mean_iterations": cell.mean_iterations,
        }
        for cell in report.cells
    ]
    rows += [
        {
            "kind": "comparison",
            "function": c.function,
            "algorithm_a": c.algorithm_a,
            "algorithm_b": c.algorithm_b,
            "t": c.t,
            "df": c.df,
            "p": c.p,
            "degenerate": str(c.degenerate).lower(),
        }
        for c in report.comparisons
    ]
    frame = pd.DataFrame(rows, columns=list(CSV_COLUMNS))
    frame["runs"] = frame["runs"].astype("Int64")
    return frame.to_csv(index=False, lineterminator="\n")


def _markdown_number(value: float) -> str:
    return f"{value:.6g}"


def _render_markdown(report: BenchmarkReport) -> str:
    algorithms = _ordered_unique(c.algorithm for c in report.cells)
    functions = _ordered_unique(c.function for c in report.cells)

    lines = ["## Mean Value (Standard Deviation)", ""]
    lines.append("| Function | " + " | ".join(algorithms) + " |")
    lines.append("|---" * (len(algorithms) + 1) + "|")
    for function in functions:
        row = [function]
        for algorithm in algorithms:
            cell = report.cell(algorithm, function)
            row.append("" if cell is None else f"{_markdown_number(cell.mean)} ({_markdown_number(cell.std)})")
        lines.append("| " + " | ".join(row) + " |")

    if report.comparisons:
        pairs = _ordered_unique(f"{c.algorithm_a} vs {c.algorithm_b}" for c in report.comparisons)
        lines += ["", "## t-test p-values (* indicates significance, below 0.05 p-value)", ""]
        lines.append("| Function | " + " | ".join(pairs) + " |")
        lines.append("|---" * (len(pairs) + 1) + "|")
        for function in functions:
            row = [function]
            for label in pairs:
                a, b = label.split(" vs ")
                c = report.comparison(a, b, function)
                if c is None:
                    row.append("")
                else:
                    row.append(f"{c.p:.4g}" + ("*" if c.p < SIGNIFICANCE else ""))
            lines.append("| " + " | ".join(row) + " |")
        lines += ["", "Two-tailed Welch t-test (unequal variances)."]

    return "\n".join(lines) + "\n"


def render_report(report: BenchmarkReport, fmt: str = ReportFormat.MARKDOWN) -> str:
    """
    Render a report. Identical reports render to identical text.

    Args:
        report: Report with at least one cell
        fmt: One of csv, json, markdown

    Returns:
        str: Rendered report

    Raises:
        UsageError: If the report has no cells or the format is unknown
    """
    if not report.cells:
        raise UsageError("Cannot render an empty report")

    if fmt == ReportFormat.CSV:
        return _render_csv(report)
    if fmt == ReportFormat.JSON:
        return report.model_dump_json(indent=2) + "\n"
    if fmt == ReportFormat.MARKDOWN:
        return _render_markdown(report)
    raise UsageError(f"Unknown report format: {fmt}")


def _optional_float(value: Any) -> Optional[float]:
    return None if pd.isna(value) else float(value)


def parse_report_csv(text: str) -> BenchmarkReport:
    """Rebuild a report (without metadata) from :func:`render_report` csv output."""
    frame = pd.read_csv(
        io.StringIO(text),
        dtype={"kind": str, "function": str, "algorithm_a": str, "algorithm_b": str, "degenerate": str},
        keep_default_na=False,
        na_values=[""],
        float_precision="round_trip",
    )
    cells, comparisons = [], []

    for row in frame.to_dict("records"):
        if row["kind"] == "cell":
            cells.append(
                CellStats(
                    algorithm=row["algorithm_a"],
                    function=row["function"],
                    mean=float(row["mean"]),
                    std=float(row["std"]),
                    runs=int(row["runs"]),
                    mean_iterations=_optional_float(row["mean_iterations"]),
                )
            )
        elif row["kind"] == "comparison":
            comparisons.append(
                Comparison(
                    algorithm_a=row["algorithm_a"],
                    algorithm_b=row["algorithm_b"],
                    function=row["function"],
                    t=float(row["t"]),
                    df=float(row["df"]),
                    p=float(row["p"]),
                    degenerate=row["degenerate"] == "true",
                )
            )
        else:
            raise UsageError(f"Unknown report row kind: {row['kind']}")

    return BenchmarkReport(cells=cells, comparisons=comparisons)
