"""Shared swarm state, bounds handling, randomness and best-vector bookkeeping."""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Protocol

import numpy as np
from numpy.random import Generator, Philox
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

# Odd 64-bit stride used to derive per-run seeds in suites
SEED_STRIDE = 0x9E3779B97F4A7C15
SEED_MASK = (1 << 64) - 1


class PSOError(Exception):
    """Base exception for swarm optimization errors."""

    pass


class ConfigurationError(PSOError):
    """Invalid bounds, identifiers or parameters."""

    pass


class EvaluationError(PSOError):
    """Objective evaluation produced an unusable value."""

    pass


class UsageError(PSOError):
    """An operation was called with arguments it does not accept."""

    pass


class DomainError(PSOError):
    """A formula was evaluated outside its mathematical domain."""

    pass


class NumericalError(PSOError):
    """Linear algebra failed even after regularization."""

    pass


class DegeneratePrecisionError(NumericalError):
    """A combined precision matrix is singular."""

    pass


class BenchmarkError(PSOError):
    """A run inside a suite failed."""

    pass


@dataclass(frozen=True, eq=False)
class Bounds:
    """
    Axis-aligned search domain.

    A zero-width dimension (lower == upper) is accepted so that point domains
    can be expressed; lower > upper is rejected.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))

        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ConfigurationError(
                f"Bounds shape mismatch: lower {lower.shape}, upper {upper.shape}"
            )
        if lower.size == 0:
            raise ConfigurationError("Bounds must have at least one dimension")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigurationError("Bounds must be finite")
        if np.any(lower > upper):
            raise ConfigurationError("Bounds lower limit exceeds upper limit")

        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, low: float, high: float, dim: int) -> "Bounds":
        """Build [low, high]^dim."""
        if dim < 1:
            raise ConfigurationError(f"Dimension must be positive, got {dim}")
        return cls(np.full(dim, low, dtype=float), np.full(dim, high, dtype=float))

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def contains(self, positions: np.ndarray) -> bool:
        """Check that every row lies within the closed box."""
        positions = np.asarray(positions, dtype=float)
        return bool(np.all(positions >= self.lower) and np.all(positions <= self.upper))


class RngStream:
    """
    Seeded, counter-based random stream.

    Backed by numpy's Philox bit generator so that identical seeds produce
    identical uniform and Gaussian sequences on every platform.

    ``forced_uniform`` replaces every uniform draw by a constant. It exists for
    tests that need hand-computable updates.
    """

    def __init__(self, seed: int, forced_uniform: Optional[float] = None):
        self.seed = int(seed) & SEED_MASK
        self.forced_uniform = forced_uniform
        self._generator = Generator(Philox(self.seed))

    def uniform(self, size=None) -> np.ndarray:
        """Draw from U[0, 1)."""
        if self.forced_uniform is not None:
            return np.full(size if size is not None else (), self.forced_uniform, dtype=float)
        return self._generator.random(size)

    def normal(self, size=None) -> np.ndarray:
        """Draw from N(0, 1)."""
        return self._generator.standard_normal(size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"


def derive_seed(base_seed: int, run_index: int) -> int:
    """
    Derive the seed of run ``run_index`` from the suite's base seed.

    Args:
        base_seed: Suite seed
        run_index: Zero-based run number within a cell

    Returns:
        int: base_seed XOR (run_index * SEED_STRIDE), reduced to 64 bits
    """
    return (int(base_seed) ^ ((int(run_index) * SEED_STRIDE) & SEED_MASK)) & SEED_MASK


class Direction:
    """Optimization direction constants."""

    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Transform:
    """Monotone fitness transform identifiers."""

    IDENTITY = "identity"
    SQRT = "sqrt"
    LOG1P = "log1p"


class FitnessWeightSpec(BaseModel):
    """How raw fitness values turn into positive record weights."""

    model_config = ConfigDict(frozen=True)

    direction: str = Field(default=Direction.MINIMIZE, pattern="^(minimize|maximize)$")
    epsilon: float = Field(default=1e-12, gt=0.0, description="Floor applied before weighting")
    transform: str = Field(default=Transform.IDENTITY, pattern="^(identity|sqrt|log1p)$")


def _apply_transform(raw: np.ndarray, transform: str) -> np.ndarray:
    if transform == Transform.SQRT:
        return np.sqrt(np.maximum(raw, 0.0))
    if transform == Transform.LOG1P:
        return np.log1p(np.maximum(raw, 0.0))
    return raw


def fitness_weight(raw, spec: Optional[FitnessWeightSpec] = None):
    """
    Convert raw fitness into a strictly positive weight.

    Maximization keeps the (floored) value; minimization takes its reciprocal.
    Works on scalars and arrays alike.

    Args:
        raw: Raw fitness value(s)
        spec: Weighting rules; minimization with epsilon 1e-12 when omitted

    Returns:
        Positive weight(s), same shape as ``raw``

    Raises:
        EvaluationError: If any value is NaN or infinite
    """
    spec = spec or FitnessWeightSpec()
    values = np.asarray(raw, dtype=float)

    if np.isnan(values).any():
        raise EvaluationError("Fitness value is NaN")
    if not np.all(np.isfinite(values)):
        raise EvaluationError("Fitness value is not finite")

    floored = np.maximum(_apply_transform(values, spec.transform), spec.epsilon)
    weights = floored if spec.direction == Direction.MAXIMIZE else 1.0 / floored

    if np.ndim(raw) == 0:
        return float(weights)
    return weights


class Evaluator(Protocol):
    """Anything with bounds that can evaluate a batch of positions."""

    @property
    def bounds(self) -> Bounds: ...

    def evaluate(self, positions: np.ndarray, rng: Optional[RngStream] = None) -> np.ndarray: ...


@dataclass(frozen=True)
class Particle:
    """Read-only view of one particle."""

    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_raw: float


@dataclass
class SwarmState:
    """
    Array-backed swarm snapshot.

    Row i of every (n, m) array belongs to particle i. ``improved`` marks
    particles whose personal best changed in the latest evaluation round and
    ``global_improved`` whether the global best changed in that round.
    """

    positions: np.ndarray
    velocities: np.ndarray
    best_positions: np.ndarray
    best_raw: np.ndarray
    current_raw: np.ndarray
    global_best_position: np.ndarray
    global_best_raw: float
    global_best_index: int
    iteration: int = 0
    improved: Optional[np.ndarray] = None
    global_improved: bool = True

    @property
    def n(self) -> int:
        return int(self.positions.shape[0])

    @property
    def dim(self) -> int:
        return int(self.positions.shape[1])

    def particle(self, i: int) -> Particle:
        return Particle(
            position=self.positions[i].copy(),
            velocity=self.velocities[i].copy(),
            best_position=self.best_positions[i].copy(),
            best_raw=float(self.best_raw[i]),
        )

    def copy(self) -> "SwarmState":
        return replace(
            self,
            positions=self.positions.copy(),
            velocities=self.velocities.copy(),
            best_positions=self.best_positions.copy(),
            best_raw=self.best_raw.copy(),
            current_raw=self.current_raw.copy(),
            global_best_position=self.global_best_position.copy(),
            improved=None if self.improved is None else self.improved.copy(),
        )


def _checked_raws(raws, n: int) -> np.ndarray:
    raws = np.asarray(raws, dtype=float)
    if raws.shape != (n,):
        raise UsageError(f"Expected {n} evaluations, got shape {raws.shape}")
    if np.isnan(raws).any():
        raise EvaluationError("Objective returned NaN")
    return raws


def init_swarm(n: int, objective: Evaluator, rng: RngStream) -> SwarmState:
    """
    Initialize a swarm uniformly inside the objective's bounds.

    Velocities start at zero and each particle's best is its first position.

    Args:
        n: Particle count
        objective: Evaluator with valid bounds
        rng: Random stream owned by the run

    Returns:
        SwarmState: Iteration-0 state with bests computed

    Raises:
        ConfigurationError: If n < 1 or the bounds are invalid
    """
    if n < 1:
        raise ConfigurationError(f"Particle count must be at least 1, got {n}")

    bounds = objective.bounds
    if not isinstance(bounds, Bounds):
        raise ConfigurationError("Objective has no valid bounds")

    width = bounds.upper - bounds.lower
    positions = bounds.lower + rng.uniform((n, bounds.dim)) * width
    positions = np.clip(positions, bounds.lower, bounds.upper)

    raws = _checked_raws(objective.evaluate(positions, rng), n)
    gidx = int(np.argmin(raws))

    return SwarmState(
        positions=positions,
        velocities=np.zeros_like(positions),
        best_positions=positions.copy(),
        best_raw=raws.copy(),
        current_raw=raws,
        global_best_position=positions[gidx].copy(),
        global_best_raw=float(raws[gidx]),
        global_best_index=gidx,
        iteration=0,
        improved=np.ones(n, dtype=bool),
        global_improved=True,
    )


def update_bests(state: SwarmState, raws) -> SwarmState:
    """
    Fold one evaluation per particle (at its current position) into the bests.

    A personal best moves only on strict improvement; the global best moves
    only when some personal best is strictly below it, and on ties the lowest
    particle index wins.

    Args:
        state: State whose ``positions`` were just evaluated
        raws: Raw fitness per particle, in particle order

    Returns:
        SwarmState: New state; the input is not modified

    Raises:
        EvaluationError: If any value is NaN
    """
    raws = _checked_raws(raws, state.n)

    improved = raws < state.best_raw
    best_positions = np.where(improved[:, None], state.positions, state.best_positions)
    best_raw = np.where(improved, raws, state.best_raw)

    candidate = int(np.argmin(best_raw))
    if best_raw[candidate] < state.global_best_raw:
        gidx = candidate
        gpos = best_positions[candidate].copy()
        graw = float(best_raw[candidate])
        gimproved = True
    else:
        gidx = state.global_best_index
        gpos = state.global_best_position.copy()
        graw = state.global_best_raw
        gimproved = False

    return replace(
        state,
        best_positions=best_positions,
        best_raw=best_raw,
        current_raw=raws,
        global_best_position=gpos,
        global_best_raw=graw,
        global_best_index=gidx,
        improved=improved,
        global_improved=gimproved,
    )


def swarm_spread(state: SwarmState, dim: Optional[int] = None) -> float:
    """Mean squared distance to the global best, normalized by dim * n."""
    dim = dim or state.dim
    diff = state.positions - state.global_best_position
    return float(np.sum(diff * diff) / (dim * state.n))


def stop_check(state: SwarmState, dim: int, threshold: float) -> bool:
    """
    Check whether the swarm has collapsed around the global best.

    Args:
        state: Current swarm state
        dim: Problem dimension used in the normalization
        threshold: Collapse threshold

    Returns:
        bool: True when the normalized spread is below ``threshold``
    """
    return swarm_spread(state, dim) < threshold


def clamp_to_bounds(position: np.ndarray, bounds: Bounds) -> np.ndarray:
    """
    Clip positions into the closed bounds box.

    Accepts a single vector or an (n, m) batch.

    Raises:
        UsageError: If the trailing dimension does not match the bounds
    """
    position = np.asarray(position, dtype=float)
    if position.shape[-1] != bounds.dim:
        raise UsageError(f"Position dimension {position.shape[-1]} does not match bounds {bounds.dim}")
    return np.clip(position, bounds.lower, bounds.upper)


def advance(
    state: SwarmState,
    positions: np.ndarray,
    velocities: np.ndarray,
    objective: Evaluator,
    rng: RngStream,
) -> SwarmState:
    """
    Move the swarm to new positions and run one evaluation round.

    Positions are clamped to the objective's bounds; velocities are stored as given.

    Returns:
        SwarmState: Evaluated state with bests updated and iteration incremented
    """
    positions = clamp_to_bounds(positions, objective.bounds)
    raws = objective.evaluate(positions, rng)
    moved = replace(state, positions=positions, velocities=velocities, iteration=state.iteration + 1)
    new_state = update_bests(moved, raws)

    if new_state.global_improved:
        logger.debug(f"Iteration {new_state.iteration}: global best {new_state.global_best_raw:.6g}")

    return new_state
