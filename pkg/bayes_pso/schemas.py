"""Pydantic schemas for run configuration, results and reports."""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field


class StopReason:
    """Why a run ended."""

    MAX_ITERATIONS = "max_iterations"
    SWARM_COLLAPSED = "swarm_collapsed"


class AlgorithmOverrides(BaseModel):
    """Algorithm parameters; None means the algorithm's own default."""

    model_config = ConfigDict(frozen=True)

    # standard / constricted
    w: Optional[float] = None
    phi: Optional[float] = None
    eta: Optional[float] = None
    chi_replaces_w: Optional[bool] = None

    # bare bones
    cov_mode: Optional[str] = None
    bb_scale: Optional[float] = None

    # gaussian and kernel
    gamma: Optional[float] = None
    beta: Optional[float] = None
    tau: Optional[float] = None
    prior: Optional[str] = None
    window: Optional[int] = None
    discounted: Optional[bool] = None
    kernel: Optional[str] = None
    kernel_mu: Optional[float] = None
    kernel_beta_g: Optional[float] = None
    kernel_beta_b: Optional[float] = None

    # fitness weighting
    direction: Optional[str] = None
    epsilon: Optional[float] = None
    transform: Optional[str] = None

    # kalman
    kalman_process_noise: Optional[float] = None
    kalman_observation_noise: Optional[float] = None
    kalman_initial_cov: Optional[float] = None
    kalman_balance: Optional[float] = None
    kalman_update_rule: Optional[str] = None
    kalman_lambda_total: Optional[float] = None

    def pick(self, **names: str) -> dict[str, Any]:
        """
        Collect the set fields under new names.

        Args:
            names: target name -> override field name

        Returns:
            dict: Only the overrides that are not None
        """
        values = {}
        for target, source in names.items():
            value = getattr(self, source)
            if value is not None:
                values[target] = value
        return values


class RunConfig(BaseModel):
    """Everything needed to reproduce one run."""

    model_config = ConfigDict(frozen=True)

    algorithm: str
    objective: str
    dim: int = Field(default=10, ge=1)
    particles: int = Field(default=100, ge=2)
    max_iterations: int = Field(default=100000, ge=1, description="Evaluation rounds, initialization included")
    stop_threshold: float = Field(default=0.001, ge=0.0)
    seed: int = Field(default=0, ge=0)
    noise_sigma: float = Field(default=0.0, ge=0.0)
    overrides: AlgorithmOverrides = Field(default_factory=AlgorithmOverrides)
    record_trace: bool = False


class RunResult(BaseModel):
    """Outcome of a single run."""

    algorithm: str
    objective: str
    seed: int
    best_value: float
    best_position: list[float]
    iterations_used: int
    stop_reason: str
    wall_time: float
    trace: Optional[list[float]] = None


class RunRecord(BaseModel):
    """One line of a results file. Field order is the file's column order."""

    algorithm: str
    function: str
    seed: int
    best_value: float
    iterations: int
    stop_reason: str

    @classmethod
    def from_result(cls, result: RunResult) -> "RunRecord":
        return cls(
            algorithm=result.algorithm,
            function=result.objective,
            seed=result.seed,
            best_value=result.best_value,
            iterations=result.iterations_used,
            stop_reason=result.stop_reason,
        )


class CellStats(BaseModel):
    """Aggregate of all runs of one algorithm on one function."""

    algorithm: str
    function: str
    mean: float
    std: float
    runs: int
    mean_iterations: Optional[float] = None


class Comparison(BaseModel):
    """Two-tailed Welch t-test between two algorithms on one function."""

    algorithm_a: str
    algorithm_b: str
    function: str
    t: float
    df: float
    p: float = Field(ge=0.0, le=1.0)
    degenerate: bool = False


class BenchmarkReport(BaseModel):
    """Per-cell statistics and pairwise comparisons."""

    cells: list[CellStats]
    comparisons: list[Comparison] = Field(default_factory=list)
    metadata: dict[str, Any] = Field(default_factory=dict)

    def cell(self, algorithm: str, function: str) -> Optional[CellStats]:
        for cell in self.cells:
            if cell.algorithm == algorithm and cell.function == function:
                return cell
        return None

    def comparison(self, algorithm_a: str, algorithm_b: str, function: str) -> Optional[Comparison]:
        for comparison in self.comparisons:
            if comparison.function != function:
                continue
            if (comparison.algorithm_a, comparison.algorithm_b) == (algorithm_a, algorithm_b):
                return comparison
        return None
