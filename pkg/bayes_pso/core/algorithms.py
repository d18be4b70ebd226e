"""Algorithm registry: maps algorithm ids to per-run optimizers."""

import logging
from abc import ABC, abstractmethod
from collections import deque
from typing import Callable, Optional

import numpy as np
from pydantic import ValidationError

from bayes_pso.core.barebones import BareBonesParams, CovarianceMode, step_barebones
from bayes_pso.core.classic import ClassicParams, step_constricted, step_standard
from bayes_pso.core.gaussian import (
    Assumption,
    GaussianParams,
    PosteriorHistory,
    step_bayes_standard,
    step_current_only,
    step_discounted_gbest,
    step_gaussian,
)
from bayes_pso.core.kalman import (
    KalmanParams,
    KalmanParticleState,
    KalmanSettings,
    UpdateRule,
    kalman_step,
    product_step,
)
from bayes_pso.core.kernel import KernelParams, step_kernel, step_kernel_standard
from bayes_pso.core.swarm import (
    ConfigurationError,
    Evaluator,
    FitnessWeightSpec,
    RngStream,
    SwarmState,
    advance,
    fitness_weight,
)
from bayes_pso.schemas import AlgorithmOverrides

logger = logging.getLogger(__name__)

ALGORITHMS: dict[str, type["Optimizer"]] = {}


def register(algorithm_id: str) -> Callable[[type["Optimizer"]], type["Optimizer"]]:
    """Class decorator adding an optimizer to the registry under ``algorithm_id``."""

    def decorator(cls: type["Optimizer"]) -> type["Optimizer"]:
        cls.id = algorithm_id
        ALGORITHMS[algorithm_id] = cls
        return cls

    return decorator


def _build(model: type, **values):
    try:
        return model(**values)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid {model.__name__}: {e.errors()[0]['msg']}")


def _weight_spec(overrides: AlgorithmOverrides) -> FitnessWeightSpec:
    return _build(FitnessWeightSpec, **overrides.pick(direction="direction", epsilon="epsilon", transform="transform"))


class Optimizer(ABC):
    """
    One run's update rule plus whatever state it carries between steps.

    ``start`` sees the initialized swarm once; ``step`` returns the next state.
    """

    id: str = ""

    def __init__(self, overrides: AlgorithmOverrides, objective: Evaluator):
        self.overrides = overrides
        self.objective = objective

    def start(self, state: SwarmState) -> None:
        pass

    @abstractmethod
    def step(self, state: SwarmState, rng: RngStream) -> SwarmState: ...


@register("standard")
class StandardPSO(Optimizer):
    def __init__(self, overrides, objective):
        super().__init__(overrides, objective)
        self.params = _build(ClassicParams, **overrides.pick(w="w", phi="phi", eta="eta"))

    def step(self, state, rng):
        return step_standard(state, self.params, self.objective, rng)


@register("constricted")
class ConstrictedPSO(Optimizer):
    def __init__(self, overrides, objective):
        super().__init__(overrides, objective)
        values = {"w": 1.0, "phi": 2.05, "eta": 2.05, "use_constriction": True}
        values.update(overrides.pick(w="w", phi="phi", eta="eta", chi_replaces_w="chi_replaces_w"))
        self.params = _build(ClassicParams, **values)

    def step(self, state, rng):
        return step_constricted(state, self.params, self.objective, rng)


class _BareBones(Optimizer):
    cov_mode = CovarianceMode.PER_DIMENSION

    def __init__(self, overrides, objective):
        super().__init__(overrides, objective)
        values = {"cov_mode": self.cov_mode}
        values.update(overrides.pick(cov_mode="cov_mode", scale="bb_scale"))
        self.params = _build(BareBonesParams, **values)

    def step(self, state, rng):
        return step_barebones(state, self.params, self.objective, rng)


@register("barebones")
class BareBonesPSO(_BareBones):
    cov_mode = CovarianceMode.PER_DIMENSION


@register("barebones-scalar")
class ScalarBareBonesPSO(_BareBones):
    cov_mode = CovarianceMode.SCALAR


class _GaussianBase(Optimizer):
    assumption = Assumption.DEPENDENCE

    def __init__(self, overrides, objective):
        super().__init__(overrides, objective)
        values = {"assumption": self.assumption, "weight_spec": _weight_spec(overrides)}
        values.update(
            overrides.pick(
                gamma="gamma",
                beta="beta",
                tau="tau",
                prior="prior",
                window="window",
                discounted="discounted",
            )
        )
        self.params = _build(GaussianParams, **values)
        self.history: Optional[PosteriorHistory] = None

    def start(self, state):
        self.history = PosteriorHistory(self.params)
        self.history.append_state(state)


@register("gaussian-dep")
class GaussianDependencePSO(_GaussianBase):
    assumption = Assumption.DEPENDENCE

    def step(self, state, rng):
        return step_gaussian(state, self.history, self.params, self.objective, rng)


@register("gaussian-indep")
class GaussianIndependencePSO(_GaussianBase):
    assumption = Assumption.INDEPENDENCE

    def step(self, state, rng):
        return step_gaussian(state, self.history, self.params, self.objective, rng)


@register("gaussian-current-dep")
class CurrentDependencePSO(_GaussianBase):
    assumption = Assumption.DEPENDENCE

    def start(self, state):
        pass

    def step(self, state, rng):
        return step_current_only(state, self.params, self.objective, rng)


@register("gaussian-current-indep")
class CurrentIndependencePSO(CurrentDependencePSO):
    assumption = Assumption.INDEPENDENCE


@register("gaussian-gbest-trace")
class GbestTracePSO(_GaussianBase):
    def start(self, state):
        self.trace: deque[np.ndarray] = deque(maxlen=self.params.window)
        self.trace.append(state.global_best_position.copy())

    def step(self, state, rng):
        new_state = step_discounted_gbest(state, np.array(self.trace), self.params, self.objective, rng)
        self.trace.append(new_state.global_best_position.copy())
        return new_state


@register("bayes-standard")
class BayesStandardPSO(_GaussianBase):
    def step(self, state, rng):
        return step_bayes_standard(state, self.history, self.params, self.objective, rng)


@register("kalman")
class KalmanPSO(Optimizer):
    def __init__(self, overrides, objective):
        super().__init__(overrides, objective)
        self.settings = _build(
            KalmanSettings,
            **overrides.pick(
                process_noise="kalman_process_noise",
                observation_noise="kalman_observation_noise",
                initial_cov="kalman_initial_cov",
                balance="kalman_balance",
                update_rule="kalman_update_rule",
                lambda_total="kalman_lambda_total",
            ),
        )
        self.weight_spec = _weight_spec(overrides)
        self.params = KalmanParams.from_settings(self.settings, objective.bounds.dim)

    def start(self, state):
        if self.settings.update_rule == UpdateRule.FILTER:
            self.states = [KalmanParticleState.initial(x, self.settings.initial_cov) for x in state.positions]
        else:
            precision = np.eye(state.dim) / self.settings.initial_cov
            self.means = state.positions.copy()
            self.precisions = [precision.copy() for _ in range(state.n)]

    def step(self, state, rng):
        positions = np.empty_like(state.positions)

        if self.settings.update_rule == UpdateRule.FILTER:
            for i in range(state.n):
                self.states[i], positions[i] = kalman_step(
                    self.states[i], state.global_best_position, state.best_positions[i], self.params, rng
                )
        else:
            weight_g = fitness_weight(state.global_best_raw, self.weight_spec)
            weights_b = fitness_weight(state.best_raw, self.weight_spec)
            for i in range(state.n):
                self.means[i], self.precisions[i], positions[i] = product_step(
                    self.means[i],
                    self.precisions[i],
                    state.global_best_position,
                    state.best_positions[i],
                    weight_g,
                    float(weights_b[i]),
                    self.params,
                    rng,
                )

        return advance(state, positions, positions - state.positions, self.objective, rng)


class _KernelBase(Optimizer):
    assumption = Assumption.DEPENDENCE

    def __init__(self, overrides, objective):
        super().__init__(overrides, objective)
        values = {"assumption": self.assumption, "weight_spec": _weight_spec(overrides)}
        values.update(
            overrides.pick(
                kernel="kernel",
                mu="kernel_mu",
                gamma="gamma",
                beta="beta",
                prior="prior",
                window="window",
                beta_g="kernel_beta_g",
                beta_b="kernel_beta_b",
            )
        )
        values.update(self._tau(overrides))
        self.params = _build(KernelParams, **values)
        self.kernel = self.params.build_kernel()

    def _tau(self, overrides: AlgorithmOverrides) -> dict:
        return {}


@register("kernel-standard")
class KernelStandardPSO(_KernelBase):
    def _tau(self, overrides):
        # the discount tau of the posterior variants doubles as the momentum share here
        return overrides.pick(tau="tau")

    def step(self, state, rng):
        return step_kernel_standard(state, self.params, self.objective, rng, self.kernel)


@register("kernel-dep")
class KernelDependencePSO(_KernelBase):
    assumption = Assumption.DEPENDENCE

    def start(self, state):
        self.history = PosteriorHistory(self.params.gaussian_view())
        self.history.append_state(state)

    def step(self, state, rng):
        return step_kernel(state, self.history, self.params, self.objective, rng, self.kernel)


@register("kernel-indep")
class KernelIndependencePSO(KernelDependencePSO):
    assumption = Assumption.INDEPENDENCE


ALGORITHM_IDS = tuple(ALGORITHMS)


def make_optimizer(algorithm_id: str, objective: Evaluator, overrides: Optional[AlgorithmOverrides] = None) -> Optimizer:
    """
    Build the optimizer registered under ``algorithm_id``.

    Raises:
        ConfigurationError: If the id is unknown or a parameter is invalid
    """
    if algorithm_id not in ALGORITHMS:
        raise ConfigurationError(f"Unknown algorithm: {algorithm_id}")
    return ALGORITHMS[algorithm_id](overrides or AlgorithmOverrides(), objective)
