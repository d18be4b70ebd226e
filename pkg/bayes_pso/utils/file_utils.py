"""File operation utilities for results, traces and run manifests."""

import json
import logging
import shutil
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from bayes_pso.core.swarm import ConfigurationError
from bayes_pso.schemas import RunRecord, RunResult

logger = logging.getLogger(__name__)

RESULTS_FILENAME = "results.jsonl"


def ensure_dir(directory: Path) -> Path:
    """
    Create a directory (and parents) if needed.

    Args:
        directory: Directory path

    Returns:
        Path: The same directory
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def write_results_file(records: Iterable[RunRecord], path: Path) -> int:
    """
    Write one JSON object per line, keys in RunRecord field order.

    Args:
        records: Run records in execution order
        path: Output file

    Returns:
        int: Number of lines written
    """
    path = Path(path)
    ensure_dir(path.parent)

    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(record.model_dump_json() + "\n")
            count += 1

    logger.info(f"Wrote {count} run records to {path}")
    return count


def read_results_file(path: Path) -> list[RunRecord]:
    """
    Read a results file written by :func:`write_results_file`.

    Blank lines are skipped.

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigurationError: If a line is not a valid run record
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Results file not found: {path}")

    records = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(RunRecord.model_validate_json(line))
            except ValidationError as e:
                raise ConfigurationError(f"{path}:{line_number}: invalid run record: {e.errors()[0]['msg']}")

    logger.info(f"Read {len(records)} run records from {path}")
    return records


def copy_config_file(config_file: Path, output_dir: Path) -> Path:
    """
    Copy an experiment config file verbatim into the output directory.

    Returns:
        Path: Destination path
    """
    destination = ensure_dir(output_dir) / Path(config_file).name
    shutil.copyfile(config_file, destination)
    logger.info(f"Copied config {config_file} to {destination}")
    return destination


def write_trace_csv(trace: Sequence[float], path: Path) -> None:
    """Write a global-best trace as (iteration, best_value) rows."""
    path = Path(path)
    ensure_dir(path.parent)
    frame = pd.DataFrame({"iteration": range(len(trace)), "best_value": np.asarray(trace, dtype=float)})
    frame.to_csv(path, index=False, lineterminator="\n")


def read_trace_csv(path: Path) -> list[float]:
    """Read back a trace written by :func:`write_trace_csv`."""
    frame = pd.read_csv(path, float_precision="round_trip")
    return frame.sort_values("iteration")["best_value"].astype(float).tolist()


def write_run_result(result: RunResult, path: Path) -> None:
    """
    Save a single run as JSON.

    Wall time is left out so that repeated runs produce identical files.
    """
    path = Path(path)
    ensure_dir(path.parent)
    payload = result.model_dump(exclude={"wall_time", "trace"})
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    logger.info(f"Saved run result to {path}")


def trace_filename(algorithm: str, function: str, seed: int) -> str:
    return f"trace_{algorithm}_{function}_{seed}.csv"
