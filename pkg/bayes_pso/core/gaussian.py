"""
Gaussian PSO.

The swarm keeps a windowed history of evaluated positions. Each record is a
Gaussian component centred at its position and weighted by its fitness; the
components are combined either as a mixture per iteration (dependence) or as a
fitness-exponentiated product (independence). Particles move by gradient
ascent on the log of that posterior.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial.distance import cdist

from bayes_pso.core.swarm import (
    Evaluator,
    FitnessWeightSpec,
    RngStream,
    SwarmState,
    UsageError,
    advance,
    fitness_weight,
)

logger = logging.getLogger(__name__)


class Assumption:
    """How per-record components are combined."""

    DEPENDENCE = "dependence"
    INDEPENDENCE = "independence"


class Prior:
    """Initial belief about the optimum's location."""

    GAUSSIAN_UNIT = "gaussian_unit"
    UNIFORM = "uniform"


DEFAULT_BETA = {Assumption.DEPENDENCE: 0.4, Assumption.INDEPENDENCE: 0.1}


class GaussianParams(BaseModel):
    """Learning rate, component width, prior and history settings."""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(default=0.8, gt=0.0, le=1.0, description="Gradient ascent learning constant")
    beta: Optional[float] = Field(default=None, gt=0.0, description="Component precision; per-assumption default when unset")
    prior: str = Field(default=Prior.UNIFORM, pattern="^(gaussian_unit|uniform)$")
    assumption: str = Field(default=Assumption.DEPENDENCE, pattern="^(dependence|independence)$")
    window: int = Field(default=100, ge=1, description="Iteration groups retained")
    tau: float = Field(default=0.5, gt=0.0, lt=1.0, description="Temporal discount")
    discounted: bool = Field(default=False, description="Flatten older components by beta * tau^(t-j)")
    weight_spec: FitnessWeightSpec = Field(default_factory=FitnessWeightSpec)

    @property
    def effective_beta(self) -> float:
        return self.beta if self.beta is not None else DEFAULT_BETA[self.assumption]


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated position in the history."""

    iteration: int
    particle: int
    position: np.ndarray
    raw: float
    weight: float


@dataclass(frozen=True)
class _Group:
    iteration: int
    positions: np.ndarray
    raws: np.ndarray
    weights: np.ndarray
    particles: np.ndarray
    improved: np.ndarray
    gbest_index: Optional[int]


class PosteriorHistory:
    """
    Windowed history of evaluation rounds.

    Keeps the last ``window`` iteration groups. Flattened arrays over all
    retained records are cached between appends so that gradient evaluations
    are pure array work.
    """

    def __init__(self, params: GaussianParams, window: Optional[int] = None):
        self.params = params
        self.window = window or params.window
        self._groups: deque[_Group] = deque(maxlen=self.window)
        self._cache: Optional[dict[str, np.ndarray]] = None

    def __len__(self) -> int:
        return len(self._groups)

    @property
    def groups(self) -> tuple[_Group, ...]:
        return tuple(self._groups)

    @property
    def latest_iteration(self) -> int:
        if not self._groups:
            raise UsageError("History is empty")
        return self._groups[-1].iteration

    def append(
        self,
        iteration: int,
        positions: np.ndarray,
        raws: np.ndarray,
        weights: Optional[np.ndarray] = None,
        improved: Optional[np.ndarray] = None,
        gbest_index: Optional[int] = None,
        particles: Optional[np.ndarray] = None,
    ) -> None:
        """
        Add one iteration group.

        Args:
            iteration: Iteration number j of the group
            positions: (k, m) evaluated positions
            raws: (k,) raw fitness values
            weights: Explicit positive weights; derived from ``raws`` when omitted
            improved: (k,) flags marking records that became personal bests
            gbest_index: Row that became the global best in this round, if any
            particles: Particle ids of the rows; 0..k-1 when omitted

        Raises:
            UsageError: If shapes disagree or the group has no positive weight
        """
        positions = np.array(positions, dtype=float, ndmin=2)
        raws = np.asarray(raws, dtype=float).reshape(-1)
        k = positions.shape[0]

        if raws.shape != (k,):
            raise UsageError(f"Expected {k} raw values, got {raws.shape}")

        if weights is None:
            weights = np.asarray(fitness_weight(raws, self.params.weight_spec), dtype=float).reshape(-1)
        else:
            weights = np.asarray(weights, dtype=float).reshape(-1)
            if weights.shape != (k,) or np.any(weights <= 0) or not np.all(np.isfinite(weights)):
                raise UsageError("Weights must be positive, finite and one per record")

        if not weights.sum() > 0:
            raise UsageError("Iteration group has no positive total weight")

        self._groups.append(
            _Group(
                iteration=int(iteration),
                positions=positions,
                raws=raws,
                weights=weights,
                particles=np.arange(k) if particles is None else np.asarray(particles, dtype=int),
                improved=np.ones(k, dtype=bool) if improved is None else np.asarray(improved, dtype=bool),
                gbest_index=gbest_index,
            )
        )
        self._cache = None

    def append_state(self, state: SwarmState, selected_only: bool = False) -> None:
        """Record the latest evaluation round of a swarm."""
        improved = state.improved if state.improved is not None else np.ones(state.n, dtype=bool)
        gbest_index = state.global_best_index if state.global_improved else None

        if selected_only and not improved.any() and gbest_index is None:
            return

        self.append(
            state.iteration,
            state.positions.copy(),
            state.current_raw.copy(),
            improved=improved.copy(),
            gbest_index=gbest_index,
        )

    def records(self) -> Iterator[EvalRecord]:
        for group in self._groups:
            for row in range(group.positions.shape[0]):
                yield EvalRecord(
                    iteration=group.iteration,
                    particle=int(group.particles[row]),
                    position=group.positions[row],
                    raw=float(group.raws[row]),
                    weight=float(group.weights[row]),
                )

    @classmethod
    def from_records(cls, records: Iterable[EvalRecord], params: GaussianParams) -> "PosteriorHistory":
        """Group records by iteration, in ascending iteration order."""
        by_iteration: dict[int, list[EvalRecord]] = {}
        for record in records:
            by_iteration.setdefault(record.iteration, []).append(record)

        history = cls(params)
        for iteration in sorted(by_iteration):
            group = by_iteration[iteration]
            history.append(
                iteration,
                np.array([r.position for r in group], dtype=float),
                np.array([r.raw for r in group], dtype=float),
                weights=np.array([r.weight for r in group], dtype=float),
                particles=np.array([r.particle for r in group], dtype=int),
            )
        return history

    def flattened(self) -> dict[str, np.ndarray]:
        """
        Flattened view of all retained records.

        Keys: positions (N, m), log_weights (N,) normalized per group,
        norm_weights (N,), offsets (G,) group starts, counts (G,),
        iterations (G,).
        """
        if not self._groups:
            raise UsageError("History is empty")
        if self._cache is not None:
            return self._cache

        counts = np.array([g.positions.shape[0] for g in self._groups])
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
        weights = np.concatenate([g.weights for g in self._groups])
        totals = np.repeat(np.array([g.weights.sum() for g in self._groups]), counts)
        norm_weights = weights / totals

        self._cache = {
            "positions": np.concatenate([g.positions for g in self._groups], axis=0),
            "norm_weights": norm_weights,
            "log_weights": np.log(norm_weights),
            "offsets": offsets,
            "counts": counts,
            "iterations": np.array([g.iteration for g in self._groups]),
        }
        return self._cache

    def record_betas(self, params: Optional[GaussianParams] = None, now: Optional[int] = None) -> np.ndarray:
        """Per-record beta, discounted as beta * tau^(now - j) when enabled."""
        params = params or self.params
        flat = self.flattened()
        beta = params.effective_beta
        if not params.discounted:
            return np.full(flat["positions"].shape[0], beta)
        now = self.latest_iteration if now is None else now
        group_betas = beta * params.tau ** (now - flat["iterations"])
        return np.repeat(group_betas, flat["counts"])


def _as_queries(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x), single


def _prior_log(x: np.ndarray, prior: str) -> np.ndarray:
    if prior == Prior.GAUSSIAN_UNIT:
        return -0.5 * np.sum(x * x, axis=1)
    return np.zeros(x.shape[0])


def _prior_grad(x: np.ndarray, prior: str) -> np.ndarray:
    if prior == Prior.GAUSSIAN_UNIT:
        return -x
    return np.zeros_like(x)


def _mixture_terms(log_terms: np.ndarray, flat: dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """
    Per-group log-sum-exp of ``log_terms`` (q, N) and the within-group responsibilities.

    Returns:
        tuple: (log mixture per group (q, G), responsibilities (q, N))
    """
    offsets, counts = flat["offsets"], flat["counts"]
    peak = np.maximum.reduceat(log_terms, offsets, axis=1)
    shifted = np.exp(log_terms - np.repeat(peak, counts, axis=1))
    total = np.add.reduceat(shifted, offsets, axis=1)
    resp = shifted / np.repeat(total, counts, axis=1)
    return peak + np.log(total), resp


def _check_dims(queries: np.ndarray, flat: dict[str, np.ndarray]) -> None:
    if queries.shape[1] != flat["positions"].shape[1]:
        raise UsageError(
            f"Query dimension {queries.shape[1]} does not match history dimension {flat['positions'].shape[1]}"
        )


def log_posterior(x, history: PosteriorHistory, params: Optional[GaussianParams] = None):
    """
    Log posterior at x, up to an additive constant.

    Args:
        x: (m,) point or (q, m) batch
        history: Evaluation history
        params: Overrides the history's parameters when given

    Returns:
        float for a single point, (q,) array for a batch

    Raises:
        UsageError: If the history is empty
    """
    params = params or history.params
    flat = history.flattened()
    queries, single = _as_queries(x)
    _check_dims(queries, flat)

    sq = cdist(queries, flat["positions"], "sqeuclidean")
    betas = history.record_betas(params)

    if params.assumption == Assumption.DEPENDENCE:
        log_mix, _ = _mixture_terms(flat["log_weights"] - 0.5 * betas * sq, flat)
        value = log_mix.sum(axis=1)
    else:
        value = -0.5 * (sq * (flat["norm_weights"] * betas)).sum(axis=1)

    value = value + _prior_log(queries, params.prior)
    return float(value[0]) if single else value


def log_posterior_grad(x, history: PosteriorHistory, params: Optional[GaussianParams] = None) -> np.ndarray:
    """
    Analytic gradient of :func:`log_posterior` with respect to x.

    Returns:
        (m,) for a single point, (q, m) for a batch
    """
    params = params or history.params
    flat = history.flattened()
    queries, single = _as_queries(x)
    _check_dims(queries, flat)

    positions = flat["positions"]
    betas = history.record_betas(params)

    if params.assumption == Assumption.DEPENDENCE:
        sq = cdist(queries, positions, "sqeuclidean")
        _, resp = _mixture_terms(flat["log_weights"] - 0.5 * betas * sq, flat)
        coef = resp * betas
    else:
        coef = np.broadcast_to(flat["norm_weights"] * betas, (queries.shape[0], positions.shape[0]))

    grad = coef @ positions - queries * coef.sum(axis=1, keepdims=True)
    grad = grad + _prior_grad(queries, params.prior)
    return grad[0] if single else grad


def component_log_density(x, center, beta: float) -> float:
    """Unnormalized Gaussian component: -beta/2 * ||x - center||^2."""
    d = np.asarray(x, dtype=float) - np.asarray(center, dtype=float)
    return float(-0.5 * beta * (d @ d))


def step_gaussian(
    state: SwarmState,
    history: PosteriorHistory,
    params: GaussianParams,
    objective: Evaluator,
    rng: RngStream,
) -> SwarmState:
    """
    Gradient-ascent step on the full windowed posterior.

    x' = x + gamma * grad ln P(x). The new evaluations are appended to
    ``history``.

    Returns:
        SwarmState: Next state
    """
    grad = log_posterior_grad(state.positions, history, params)
    target = state.positions + params.gamma * grad
    new_state = advance(state, target, target - state.positions, objective, rng)
    history.append_state(new_state)
    return new_state


def current_only_update(positions: np.ndarray, weights: np.ndarray, params: GaussianParams) -> np.ndarray:
    """
    Positions after one step that uses only the current round of evaluations.

    Args:
        positions: (n, m) current positions, also the history centres
        weights: (n,) positive fitness weights of those positions
        params: gamma, beta, prior and assumption

    Returns:
        np.ndarray: (n, m) updated positions, unclamped
    """
    history = PosteriorHistory(params.model_copy(update={"discounted": False}), window=1)
    history.append(0, positions, np.zeros(len(positions)), weights=weights)
    return positions + params.gamma * log_posterior_grad(positions, history)


def step_current_only(state: SwarmState, params: GaussianParams, objective: Evaluator, rng: RngStream) -> SwarmState:
    """Gaussian PSO step that fully discounts the past."""
    weights = fitness_weight(state.current_raw, params.weight_spec)
    target = current_only_update(state.positions, weights, params)
    return advance(state, target, target - state.positions, objective, rng)


def discounted_gbest_update(positions: np.ndarray, gbest_trace: np.ndarray, params: GaussianParams) -> np.ndarray:
    """
    Pull every particle toward all past global bests, discounted by age.

    x' = x + gamma * beta * sum_j tau^(t-j) (g_j - x), plus -gamma * x under
    the unit Gaussian prior.

    Args:
        positions: (n, m)
        gbest_trace: (t, m) global bests, oldest first

    Returns:
        np.ndarray: (n, m) updated positions, unclamped
    """
    trace = np.array(gbest_trace, dtype=float, ndmin=2)
    if trace.shape[0] == 0:
        raise UsageError("Global best trace is empty")

    t = trace.shape[0]
    discount = params.tau ** np.arange(t - 1, -1, -1)
    pull = discount @ trace - discount.sum() * positions

    target = positions + params.gamma * params.effective_beta * pull
    if params.prior == Prior.GAUSSIAN_UNIT:
        target = target - params.gamma * positions
    return target


def step_discounted_gbest(
    state: SwarmState,
    gbest_trace: np.ndarray,
    params: GaussianParams,
    objective: Evaluator,
    rng: RngStream,
) -> SwarmState:
    """Gaussian PSO step driven by the discounted trace of global bests."""
    target = discounted_gbest_update(state.positions, gbest_trace, params)
    return advance(state, target, target - state.positions, objective, rng)


def bayes_standard_direction(
    positions: np.ndarray,
    best_positions: np.ndarray,
    global_best: np.ndarray,
    history: PosteriorHistory,
    params: GaussianParams,
    now: int,
) -> np.ndarray:
    """
    Attraction of every particle toward the selected best records.

    For particle r and group j only two records can contribute: r's own record
    if it became r's personal best at j, and the record that became the global
    best at j. Within a group the selected records are normalized by fitness
    weight (independence) or by fitness-weighted Gaussian responsibilities
    (dependence). Records that are still the current pbest or gbest keep the
    full beta; older ones use beta * tau^(now - j). Current bests that have left
    the window contribute beta * (best - x) on their own.

    Returns:
        np.ndarray: (n, m) sum of beta-weighted displacements
    """
    n = positions.shape[0]
    beta = params.effective_beta
    groups = history.groups

    last_own = np.full(n, -1)
    last_global = -1
    for index, group in enumerate(groups):
        last_own[group.particles[group.improved]] = index
        if group.gbest_index is not None:
            last_global = index

    direction = np.zeros_like(positions)
    rows = np.arange(n)

    for index, group in enumerate(groups):
        slot = np.full(n, -1)
        slot[group.particles] = np.arange(len(group.particles))
        has_own = (slot >= 0) & group.improved[np.maximum(slot, 0)]
        has_global = group.gbest_index is not None
        gparticle = int(group.particles[group.gbest_index]) if has_global else -1
        # a particle that is itself the new global best is counted once
        has_global_r = np.full(n, has_global) & (rows != gparticle)

        if not (has_own.any() or has_global_r.any()):
            continue

        aged = beta * params.tau ** (now - group.iteration)
        is_global_row = (index == last_global) & (rows == gparticle)
        beta_own = np.where((last_own == index) | is_global_row, beta, aged)
        beta_global = beta if index == last_global else aged

        own_pos = group.positions[np.maximum(slot, 0)]
        own_w = group.weights[np.maximum(slot, 0)]
        if has_global:
            g_pos = group.positions[group.gbest_index]
            g_w = group.weights[group.gbest_index]
        else:
            g_pos = np.zeros(positions.shape[1])
            g_w = 1.0

        if params.assumption == Assumption.DEPENDENCE:
            own_log = np.log(own_w) - 0.5 * beta_own * np.sum((positions - own_pos) ** 2, axis=1)
            g_log = np.log(g_w) - 0.5 * beta_global * np.sum((positions - g_pos) ** 2, axis=1)
            own_log = np.where(has_own, own_log, -np.inf)
            g_log = np.where(has_global_r, g_log, -np.inf)
            peak = np.maximum(own_log, g_log)
            peak = np.where(np.isfinite(peak), peak, 0.0)
            own_c = np.exp(own_log - peak)
            g_c = np.exp(g_log - peak)
        else:
            own_c = np.where(has_own, own_w, 0.0)
            g_c = np.where(has_global_r, g_w, 0.0)

        total = own_c + g_c
        safe = np.where(total > 0, total, 1.0)
        own_c = own_c / safe
        g_c = g_c / safe

        direction += (own_c * beta_own)[:, None] * (own_pos - positions)
        direction += (g_c * beta_global)[:, None] * (g_pos - positions)

    missing_own = last_own < 0
    if missing_own.any():
        direction[missing_own] += beta * (best_positions[missing_own] - positions[missing_own])
    if last_global < 0:
        direction += beta * (global_best - positions)

    return direction


def step_bayes_standard(
    state: SwarmState,
    history: PosteriorHistory,
    params: GaussianParams,
    objective: Evaluator,
    rng: RngStream,
) -> SwarmState:
    """
    Bayesian reading of the standard PSO update.

    Only records that became personal or global bests carry information, and
    older ones are flattened by temporal discounting; their accumulated pull
    plays the role of the velocity momentum. ``history`` should hold only
    selected rounds (see :meth:`PosteriorHistory.append_state`).

    Returns:
        SwarmState: Next state
    """
    direction = bayes_standard_direction(
        state.positions,
        state.best_positions,
        state.global_best_position,
        history,
        params,
        state.iteration,
    )
    target = state.positions + params.gamma * direction
    if params.prior == Prior.GAUSSIAN_UNIT:
        target = target - params.gamma * state.positions

    new_state = advance(state, target, target - state.positions, objective, rng)
    history.append_state(new_state, selected_only=True)
    return new_state
