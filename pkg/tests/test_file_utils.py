import numpy as np
import pandas as pd
import pytest

from bayes_pso.core.swarm import ConfigurationError
from bayes_pso.schemas import RunRecord
from bayes_pso.utils.file_utils import read_results_file, read_trace_csv, write_results_file, write_trace_csv


class TestTraceCsv:
    def test_round_trip_is_exact(self, tmp_path, np_rng):
        trace = list(np.minimum.accumulate(np_rng.uniform(0.0, 1e3, size=50)))
        path = tmp_path / "traces" / "trace.csv"
        write_trace_csv(trace, path)
        assert read_trace_csv(path) == trace

    def test_columns(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv([3.0, 1.5], path)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "iteration,best_value"
        frame = pd.read_csv(path)
        assert frame["iteration"].tolist() == [0, 1]

    def test_empty_trace(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv([], path)
        assert read_trace_csv(path) == []


class TestResultsFile:
    def test_round_trip(self, tmp_path):
        records = [
            RunRecord(algorithm="standard", function="sphere", seed=k, best_value=0.1 * k, iterations=10, stop_reason="max_iterations")
            for k in range(3)
        ]
        path = tmp_path / "results.jsonl"
        assert write_results_file(records, path) == 3
        assert read_results_file(path) == records

    def test_invalid_line(self, tmp_path):
        path = tmp_path / "results.jsonl"
        path.write_text('{"algorithm": "standard"}\n', encoding="utf-8")
        with pytest.raises(ConfigurationError):
            read_results_file(path)
