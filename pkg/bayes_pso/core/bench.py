"""Seeded benchmark runs and suites."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from bayes_pso.core.algorithms import ALGORITHMS, make_optimizer
from bayes_pso.core.objectives import OBJECTIVES, make_objective
from bayes_pso.core.swarm import (
    SEED_STRIDE,
    BenchmarkError,
    ConfigurationError,
    PSOError,
    RngStream,
    UsageError,
    derive_seed,
    init_swarm,
    stop_check,
)
from bayes_pso.schemas import (
    AlgorithmOverrides,
    BenchmarkReport,
    RunConfig,
    RunRecord,
    RunResult,
    StopReason,
)
from bayes_pso.utils.report import build_report

logger = logging.getLogger(__name__)


def run_single(config: RunConfig) -> RunResult:
    """
    Run one optimization.

    The iteration budget counts evaluation rounds including initialization,
    so ``max_iterations == 1`` returns the best initial evaluation. After
    every step the swarm is checked for collapse.

    Args:
        config: Run configuration

    Returns:
        RunResult: Global best and how the run ended

    Raises:
        ConfigurationError: If the algorithm or objective id is unknown
    """
    if config.algorithm not in ALGORITHMS:
        raise ConfigurationError(f"Unknown algorithm: {config.algorithm}")
    if config.objective not in OBJECTIVES:
        raise ConfigurationError(f"Unknown objective: {config.objective}")

    objective = make_objective(config.objective, config.dim, config.noise_sigma)
    optimizer = make_optimizer(config.algorithm, objective, config.overrides)
    rng = RngStream(config.seed)

    started = time.perf_counter()
    state = init_swarm(config.particles, objective, rng)
    optimizer.start(state)

    trace = [state.global_best_raw] if config.record_trace else None
    rounds = 1
    stop_reason = StopReason.MAX_ITERATIONS

    while rounds < config.max_iterations:
        state = optimizer.step(state, rng)
        rounds += 1
        if trace is not None:
            trace.append(state.global_best_raw)
        if stop_check(state, objective.dim, config.stop_threshold):
            stop_reason = StopReason.SWARM_COLLAPSED
            break

    wall_time = time.perf_counter() - started
    logger.info(
        f"Run {config.algorithm}/{config.objective} seed={config.seed}: "
        f"best={state.global_best_raw:.6g} after {rounds} rounds ({stop_reason})"
    )

    return RunResult(
        algorithm=config.algorithm,
        objective=config.objective,
        seed=config.seed,
        best_value=state.global_best_raw,
        best_position=state.global_best_position.tolist(),
        iterations_used=rounds,
        stop_reason=stop_reason,
        wall_time=wall_time,
        trace=trace,
    )


def suite_configs(
    algorithms: Sequence[str],
    objectives: Sequence[str],
    runs_per_cell: int,
    base_seed: int,
    template: RunConfig,
) -> list[RunConfig]:
    """
    Expand a suite into run configurations.

    Run k of every cell uses derive_seed(base_seed, k), so algorithms see the
    same initial swarms and a cell's seeds do not depend on execution order.
    """
    configs = []
    for algorithm in algorithms:
        for objective in objectives:
            for k in range(runs_per_cell):
                configs.append(
                    template.model_copy(
                        update={"algorithm": algorithm, "objective": objective, "seed": derive_seed(base_seed, k)}
                    )
                )
    return configs


class SuiteRunner:
    """
    Runs batches of independent configurations.

    With more than one worker the runs are spread over a process pool; results
    always come back in submission order.
    """

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))

    def run(self, configs: Sequence[RunConfig]) -> list[RunResult]:
        """
        Execute every configuration.

        Raises:
            BenchmarkError: If any run fails
        """
        logger.info(f"Running {len(configs)} runs with {self.workers} worker(s)")

        if self.workers == 1:
            results = []
            for index, config in enumerate(configs, start=1):
                results.append(self._run_one(config))
                logger.debug(f"Completed {index}/{len(configs)}")
            return results

        try:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                return list(executor.map(run_single, configs))
        except PSOError as e:
            logger.exception(f"Suite run failed: {e}")
            raise BenchmarkError(str(e)) from e

    def _run_one(self, config: RunConfig) -> RunResult:
        try:
            return run_single(config)
        except PSOError as e:
            logger.exception(f"Run {config.algorithm}/{config.objective} seed={config.seed} failed: {e}")
            raise BenchmarkError(f"{config.algorithm}/{config.objective} seed={config.seed}: {e}") from e


def suite_metadata(
    algorithms: Sequence[str],
    objectives: Sequence[str],
    runs_per_cell: int,
    base_seed: int,
    template: RunConfig,
) -> dict:
    return {
        "algorithms": list(algorithms),
        "functions": list(objectives),
        "runs_per_cell": runs_per_cell,
        "base_seed": base_seed,
        "seed_stride": hex(SEED_STRIDE),
        "dim": template.dim,
        "particles": template.particles,
        "max_iterations": template.max_iterations,
        "stop_threshold": template.stop_threshold,
        "noise_sigma": template.noise_sigma,
    }


def execute_suite(
    algorithms: Sequence[str],
    objectives: Sequence[str],
    runs_per_cell: int,
    base_seed: int,
    overrides: Optional[AlgorithmOverrides] = None,
    template: Optional[RunConfig] = None,
    workers: int = 1,
    pairs: Optional[Sequence[tuple[str, str]]] = None,
) -> tuple[list[RunResult], BenchmarkReport]:
    """
    Run a full suite and aggregate it.

    Args:
        algorithms: Algorithm ids (duplicates are dropped)
        objectives: Function ids (duplicates are dropped)
        runs_per_cell: Runs per (algorithm, function), at least 2
        base_seed: Suite seed
        overrides: Algorithm parameter overrides
        template: Shared run settings (dim, particles, budget, threshold)
        workers: Process count
        pairs: Algorithm pairs to compare; all distinct pairs when omitted

    Returns:
        tuple: (run results in execution order, report)

    Raises:
        UsageError: If runs_per_cell < 2
        ConfigurationError: On unknown ids
    """
    if runs_per_cell < 2:
        raise UsageError(f"A suite needs at least 2 runs per cell, got {runs_per_cell}")

    algorithms = list(dict.fromkeys(algorithms))
    objectives = list(dict.fromkeys(objectives))
    for algorithm in algorithms:
        if algorithm not in ALGORITHMS:
            raise ConfigurationError(f"Unknown algorithm: {algorithm}")
    for objective in objectives:
        if objective not in OBJECTIVES:
            raise ConfigurationError(f"Unknown objective: {objective}")

    template = template or RunConfig(algorithm=algorithms[0], objective=objectives[0])
    if overrides is not None:
        template = template.model_copy(update={"overrides": overrides})

    configs = suite_configs(algorithms, objectives, runs_per_cell, base_seed, template)
    results = SuiteRunner(workers).run(configs)

    records = [RunRecord.from_result(result) for result in results]
    report = build_report(
        records,
        pairs=pairs,
        metadata=suite_metadata(algorithms, objectives, runs_per_cell, base_seed, template),
    )
    logger.info(f"Suite finished: {len(report.cells)} cells, {len(report.comparisons)} comparisons")
    return results, report


def run_suite(
    algorithms: Sequence[str],
    objectives: Sequence[str],
    runs_per_cell: int,
    base_seed: int,
    overrides: Optional[AlgorithmOverrides] = None,
    template: Optional[RunConfig] = None,
    workers: int = 1,
    pairs: Optional[Sequence[tuple[str, str]]] = None,
) -> BenchmarkReport:
    """Run a suite and return only its report. See :func:`execute_suite`."""
    return execute_suite(algorithms, objectives, runs_per_cell, base_seed, overrides, template, workers, pairs)[1]
