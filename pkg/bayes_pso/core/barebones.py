"""Bare bones PSO: positions sampled around the midpoint of pbest and gbest."""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from bayes_pso.core.swarm import Evaluator, Particle, RngStream, SwarmState, advance

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


class CovarianceMode:
    """Covariance choices for the sampling distribution."""

    PER_DIMENSION = "per_dimension"
    SCALAR = "scalar"


class BareBonesParams(BaseModel):
    """Sampling distribution settings."""

    model_config = ConfigDict(frozen=True)

    cov_mode: str = Field(default=CovarianceMode.SCALAR, pattern="^(per_dimension|scalar)$")
    scale: float = Field(default=1.0, gt=0.0, description="Multiplier applied to the covariance")


def _distribution(best: np.ndarray, gbest: np.ndarray, params: BareBonesParams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized over leading axes of ``best``."""
    mean = 0.5 * (best + gbest)
    diff = best - gbest
    if params.cov_mode == CovarianceMode.PER_DIMENSION:
        var = params.scale * np.abs(diff)
    else:
        half_norm = 0.5 * np.linalg.norm(diff, axis=-1, keepdims=True)
        var = np.broadcast_to(params.scale * half_norm, diff.shape).copy()
    return mean, var


def barebones_distribution(particle: Particle, gbest: np.ndarray, params: BareBonesParams) -> tuple[np.ndarray, np.ndarray]:
    """
    Mean and diagonal covariance of a particle's sampling distribution.

    Args:
        particle: Particle whose personal best is used
        gbest: Global best position
        params: Covariance mode and scale

    Returns:
        tuple: (mean vector, covariance diagonal)
    """
    return _distribution(np.asarray(particle.best_position, dtype=float), np.asarray(gbest, dtype=float), params)


def barebones_log_density(x, mean, variance) -> float:
    """
    Log density of the diagonal Gaussian N(mean, diag(variance)) at x.

    Zero-variance dimensions act as point masses: they contribute nothing when
    x matches the mean there and make the density zero otherwise.
    """
    x = np.asarray(x, dtype=float)
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)

    point = variance == 0.0
    if np.any(point & (x != mean)):
        return float("-inf")

    v = variance[~point]
    d = (x - mean)[~point]
    return float(-0.5 * np.sum(LOG_2PI + np.log(v) + d * d / v))


def posterior_product_log_density(x, best, gbest) -> float:
    """
    Normalized product of two Gaussian components centred on pbest and gbest.

    Each component has precision beta = 1 / ||best - gbest||, so the product
    is the scalar-mode sampling density with scale 1.

    Raises:
        ValueError: If best == gbest (the product degenerates to a point mass)
    """
    x = np.asarray(x, dtype=float)
    best = np.asarray(best, dtype=float)
    gbest = np.asarray(gbest, dtype=float)

    distance = float(np.linalg.norm(best - gbest))
    if distance == 0.0:
        raise ValueError("pbest and gbest coincide; the posterior is a point mass")

    beta = 1.0 / distance
    m = x.shape[-1]

    def component(center: np.ndarray) -> float:
        d = x - center
        return 0.5 * m * (np.log(beta) - LOG_2PI) - 0.5 * beta * float(d @ d)

    # integral of the unnormalized product: N(best; gbest, 2/beta) per dimension
    gap = best - gbest
    log_norm = 0.5 * m * (np.log(0.5 * beta) - LOG_2PI) - 0.25 * beta * float(gap @ gap)
    return component(best) + component(gbest) - log_norm


def step_barebones(state: SwarmState, params: BareBonesParams, objective: Evaluator, rng: RngStream) -> SwarmState:
    """
    Sample every particle's next position from its bare bones distribution.

    Dimensions with zero variance are copied from the mean exactly.

    Returns:
        SwarmState: Next state
    """
    mean, var = _distribution(state.best_positions, state.global_best_position, params)
    noise = rng.normal(mean.shape)
    sample = np.where(var > 0.0, mean + np.sqrt(var) * noise, mean)
    return advance(state, sample, np.zeros_like(sample), objective, rng)
