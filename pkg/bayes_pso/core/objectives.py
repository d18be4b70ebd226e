"""Benchmark objective functions and their search domains."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from bayes_pso.core.swarm import Bounds, ConfigurationError, RngStream, UsageError

logger = logging.getLogger(__name__)


def hyper_ellipsoid(u: np.ndarray) -> np.ndarray:
    k = np.arange(1, u.shape[-1] + 1)
    return np.sum((k * u) ** 2, axis=-1)


def griewank(u: np.ndarray) -> np.ndarray:
    k = np.arange(1, u.shape[-1] + 1)
    return np.sum(u * u, axis=-1) / 4000.0 - np.prod(np.cos(u / np.sqrt(k)), axis=-1) + 1.0


def rastrigin(u: np.ndarray) -> np.ndarray:
    m = u.shape[-1]
    return 10.0 * m + np.sum(u * u - 10.0 * np.cos(2.0 * np.pi * u), axis=-1)


def rosenbrock(u: np.ndarray) -> np.ndarray:
    head, tail = u[..., :-1], u[..., 1:]
    return np.sum(100.0 * (tail - head * head) ** 2 + (head - 1.0) ** 2, axis=-1)


def salomon(u: np.ndarray) -> np.ndarray:
    norm = np.sqrt(np.sum(u * u, axis=-1))
    return 1.0 - np.cos(2.0 * np.pi * norm) + 0.1 * norm


def schwefel(u: np.ndarray) -> np.ndarray:
    m = u.shape[-1]
    return 500.0 * m - np.sum(u * np.sin(np.sqrt(np.abs(u))), axis=-1)


def sphere(u: np.ndarray) -> np.ndarray:
    return np.sum(u * u, axis=-1)


def step(u: np.ndarray) -> np.ndarray:
    m = u.shape[-1]
    return 6.0 * m + np.sum(np.floor(u), axis=-1)


def modulus_sum(u: np.ndarray) -> np.ndarray:
    m = u.shape[-1]
    return 6.0 * m + np.sum(np.abs(u), axis=-1)


# id -> (function, per-dimension half-width of the search box)
OBJECTIVES: dict[str, tuple[Callable[[np.ndarray], np.ndarray], float]] = {
    "hyper_ellipsoid": (hyper_ellipsoid, 100.0),
    "griewank": (griewank, 600.0),
    "rastrigin": (rastrigin, 5.12),
    "rosenbrock": (rosenbrock, 30.0),
    "salomon": (salomon, 100.0),
    "schwefel": (schwefel, 500.0),
    "sphere": (sphere, 100.0),
    "step": (step, 5.12),
    "modulus_sum": (modulus_sum, 5.12),
}

OBJECTIVE_IDS = tuple(OBJECTIVES)


def bounds_of(objective_id: str, dim: int = 10) -> Bounds:
    """
    Get the search domain of a benchmark function.

    Args:
        objective_id: Function id
        dim: Problem dimension

    Returns:
        Bounds: The symmetric box [-h, h]^dim for that function

    Raises:
        ConfigurationError: If the id is unknown
    """
    if objective_id not in OBJECTIVES:
        raise ConfigurationError(f"Unknown objective: {objective_id}")
    half_width = OBJECTIVES[objective_id][1]
    return Bounds.cube(-half_width, half_width, dim)


@dataclass(frozen=True)
class Objective:
    """
    A benchmark function at a given dimension, with optional Gaussian noise.

    The constant offsets of Rastrigin (10m), Schwefel (500m), Step and Modulus
    sum (6m) scale with the dimension and equal the usual values at m = 10.
    """

    id: str
    dim: int = 10
    noise_sigma: float = 0.0
    bounds: Bounds = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConfigurationError(f"Dimension must be positive, got {self.dim}")
        if self.id == "rosenbrock" and self.dim < 2:
            raise ConfigurationError("Rosenbrock needs at least two dimensions")
        if self.noise_sigma < 0:
            raise ConfigurationError(f"Noise sigma must be non-negative, got {self.noise_sigma}")
        object.__setattr__(self, "bounds", bounds_of(self.id, self.dim))

    @property
    def function(self) -> Callable[[np.ndarray], np.ndarray]:
        return OBJECTIVES[self.id][0]

    def eval(self, u) -> float:
        """
        Evaluate the noise-free function at one point.

        Raises:
            UsageError: On dimension mismatch
        """
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise UsageError(f"{self.id} expects a vector of length {self.dim}, got shape {u.shape}")
        return float(self.function(u))

    def noisy_eval(self, u, rng: RngStream) -> float:
        """Evaluate with additive N(0, noise_sigma) noise; no draw is taken when sigma is 0."""
        value = self.eval(u)
        if self.noise_sigma > 0:
            value += self.noise_sigma * float(rng.normal())
        return value

    def evaluate(self, positions: np.ndarray, rng: Optional[RngStream] = None) -> np.ndarray:
        """
        Evaluate a batch of positions, one per row.

        Noise is added per row when ``noise_sigma`` > 0, drawn from ``rng``.
        """
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != self.dim:
            raise UsageError(f"{self.id} expects rows of length {self.dim}, got shape {positions.shape}")

        values = np.asarray(self.function(positions), dtype=float)
        if self.noise_sigma > 0:
            if rng is None:
                raise UsageError("Noisy evaluation needs a random stream")
            values = values + self.noise_sigma * rng.normal(values.shape)
        return values


def make_objective(objective_id: str, dim: int = 10, noise_sigma: float = 0.0) -> Objective:
    """Build an objective, raising ConfigurationError for unknown ids."""
    if objective_id not in OBJECTIVES:
        raise ConfigurationError(f"Unknown objective: {objective_id}")
    return Objective(id=objective_id, dim=dim, noise_sigma=noise_sigma)
