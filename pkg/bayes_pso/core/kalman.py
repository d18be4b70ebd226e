"""Kalman filter PSO and its product-of-Gaussians counterpart."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from bayes_pso.core.swarm import (
    DegeneratePrecisionError,
    NumericalError,
    RngStream,
    UsageError,
)

logger = logging.getLogger(__name__)

REGULARIZATION = 1e-10


class UpdateRule:
    """How each particle's belief is refreshed."""

    FILTER = "filter"
    PRODUCT = "product"


class KalmanSettings(BaseModel):
    """Scalar settings from which the filter matrices are built."""

    model_config = ConfigDict(frozen=True)

    process_noise: float = Field(default=0.1, ge=0.0, description="Scale of W_y")
    observation_noise: float = Field(default=0.1, ge=0.0, description="Scale of the V_gg block of W_z")
    initial_cov: float = Field(default=1.0, gt=0.0, description="Scale of W_r(0)")
    balance: float = Field(default=0.5, ge=0.0, le=1.0, description="Diagonal of Q_x")
    update_rule: str = Field(default=UpdateRule.FILTER, pattern="^(filter|product)$")
    lambda_total: float = Field(default=0.5, gt=0.0, le=1.0, description="lambda_g + lambda_b for the product rule")


@dataclass(frozen=True, eq=False)
class KalmanParams:
    """
    Filter matrices for an m-dimensional problem.

    W_y and W_z are 2m x 2m; only the V_gg (top-left m x m) block of W_z is
    used because observations cover positions only. lambda_g and lambda_b are
    the base shares of the product rule and must sum to at most 1; the filter
    update does not read them.
    """

    W_y: np.ndarray
    W_z: np.ndarray
    Q_x: np.ndarray
    lambda_g: float = 0.25
    lambda_b: float = 0.25

    def __post_init__(self):
        if self.lambda_g < 0 or self.lambda_b < 0 or self.lambda_g + self.lambda_b > 1:
            raise UsageError(f"Invalid shares lambda_g={self.lambda_g}, lambda_b={self.lambda_b}")

    @property
    def m(self) -> int:
        return int(self.Q_x.shape[0])

    @property
    def V_gg(self) -> np.ndarray:
        return self.W_z[: self.m, : self.m]

    @property
    def F(self) -> np.ndarray:
        m = self.m
        eye = np.eye(m)
        return np.block([[eye, eye], [np.zeros((m, m)), eye]])

    @property
    def H(self) -> np.ndarray:
        m = self.m
        return np.hstack([np.eye(m), np.zeros((m, m))])

    @classmethod
    def from_settings(cls, settings: KalmanSettings, m: int) -> "KalmanParams":
        W_z = np.zeros((2 * m, 2 * m))
        W_z[:m, :m] = settings.observation_noise * np.eye(m)
        half = 0.5 * settings.lambda_total
        return cls(
            W_y=settings.process_noise * np.eye(2 * m),
            W_z=W_z,
            Q_x=settings.balance * np.eye(m),
            lambda_g=half,
            lambda_b=half,
        )


@dataclass
class KalmanParticleState:
    """Stacked (position, velocity) estimate and its covariance."""

    y_bar: np.ndarray
    W: np.ndarray

    @classmethod
    def initial(cls, position: np.ndarray, initial_cov: float = 1.0) -> "KalmanParticleState":
        position = np.asarray(position, dtype=float)
        m = position.shape[0]
        return cls(
            y_bar=np.concatenate([position, np.zeros(m)]),
            W=initial_cov * np.eye(2 * m),
        )


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + np.swapaxes(matrix, -1, -2))


def _solve(a: np.ndarray, b: np.ndarray, what: str) -> np.ndarray:
    """Solve a x = b, retrying once with a ridge on the diagonal."""
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        logger.warning(f"Singular {what}; regularizing with {REGULARIZATION:g} * I")
        eye = np.eye(a.shape[-1])
        try:
            return np.linalg.solve(a + REGULARIZATION * eye, b)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"Singular {what} after regularization: {e}")


def sample_gaussian(mean: np.ndarray, cov: np.ndarray, rng: RngStream) -> np.ndarray:
    """Draw from N(mean, cov); small negative eigenvalues are clipped to zero."""
    values, vectors = np.linalg.eigh(_symmetrize(cov))
    scale = np.sqrt(np.clip(values, 0.0, None))
    noise = rng.normal(mean.shape)
    return mean + vectors @ (scale * noise)


def filter_update(kstate: KalmanParticleState, gbest, pbest, params: KalmanParams) -> KalmanParticleState:
    """
    Gain, estimate and covariance update for one particle.

    The observation is (I - Q_x) pbest + Q_x gbest on the position block.
    """
    gbest = np.asarray(gbest, dtype=float)
    pbest = np.asarray(pbest, dtype=float)
    m = params.m
    if gbest.shape != (m,) or pbest.shape != (m,) or kstate.y_bar.shape != (2 * m,):
        raise UsageError(f"Kalman state and observations must match dimension {m}")

    F, H = params.F, params.H
    predicted_cov = F @ kstate.W @ F.T + params.W_y
    innovation_cov = H @ predicted_cov @ H.T + params.V_gg
    # K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric
    gain = _solve(innovation_cov, H @ predicted_cov, "innovation matrix").T

    eye_m = np.eye(m)
    observation = (eye_m - params.Q_x) @ pbest + params.Q_x @ gbest
    predicted = F @ kstate.y_bar
    y_bar = predicted + gain @ (observation - H @ predicted)

    W = (np.eye(2 * m) - gain @ H) @ predicted_cov
    return KalmanParticleState(y_bar=y_bar, W=_symmetrize(W))


def kalman_step(
    kstate: KalmanParticleState,
    gbest,
    pbest,
    params: KalmanParams,
    rng: RngStream,
) -> tuple[KalmanParticleState, np.ndarray]:
    """
    One Kalman filter PSO move for a single particle.

    After the filter update the next position is sampled from N(F y', W') and
    the velocity half of the sample is dropped.

    Args:
        kstate: The particle's filter state
        gbest: Global best position
        pbest: The particle's best position
        params: Filter matrices
        rng: Random stream

    Returns:
        tuple: (updated filter state, new position)

    Raises:
        NumericalError: If the innovation matrix stays singular after regularization
    """
    updated = filter_update(kstate, gbest, pbest, params)
    sample = sample_gaussian(params.F @ updated.y_bar, updated.W, rng)
    return updated, sample[: params.m]


def product_gaussian_update(
    x_bar,
    V_bar,
    gbest,
    V_g,
    pbest,
    V_b,
    lambda_g: float,
    lambda_b: float,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Combine the current belief with the gbest and pbest components.

    All V matrices are precisions. The current belief keeps the share
    1 - lambda_g - lambda_b.

    Returns:
        tuple: (x_bar', V_bar')

    Raises:
        UsageError: If the lambdas are outside [0, 1] or sum above 1
        DegeneratePrecisionError: If V_bar' is singular
    """
    if lambda_g < 0 or lambda_b < 0 or lambda_g + lambda_b > 1:
        raise UsageError(f"Invalid shares lambda_g={lambda_g}, lambda_b={lambda_b}")

    x_bar = np.asarray(x_bar, dtype=float)
    V_bar = np.asarray(V_bar, dtype=float)
    V_g = np.asarray(V_g, dtype=float)
    V_b = np.asarray(V_b, dtype=float)
    keep = 1.0 - lambda_g - lambda_b

    V_new = keep * V_bar + lambda_g * V_g + lambda_b * V_b
    rhs = keep * V_bar @ x_bar + lambda_g * V_g @ np.asarray(gbest, dtype=float) + lambda_b * V_b @ np.asarray(pbest, dtype=float)

    try:
        x_new = np.linalg.solve(V_new, rhs)
    except np.linalg.LinAlgError as e:
        raise DegeneratePrecisionError(f"Combined precision is singular: {e}")
    return x_new, V_new


def _reduced_gain(V_bar: np.ndarray, V_xx: np.ndarray, V_gg: np.ndarray) -> np.ndarray:
    """A = (V_bar + V_gg)^-1 (V_bar + V_xx)."""
    try:
        return np.linalg.solve(V_bar + V_gg, V_bar + V_xx)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"V_bar + V_gg is singular: {e}")


def reduced_kalman_update(x_bar, V_bar, gbest, pbest, V_xx, V_gg, Q_x) -> tuple[np.ndarray, np.ndarray]:
    """
    Position-block form of the Kalman PSO update.

    V' = V + V_xx - (V + V_xx) A
    x' = (I - A) x + A Q_x gbest + A (I - Q_x) pbest
    with A = (V + V_gg)^-1 (V + V_xx).

    Raises:
        NumericalError: If V_bar + V_gg is singular
    """
    x_bar = np.asarray(x_bar, dtype=float)
    V_bar = np.asarray(V_bar, dtype=float)
    V_xx = np.asarray(V_xx, dtype=float)
    Q_x = np.asarray(Q_x, dtype=float)
    eye = np.eye(x_bar.shape[0])

    A = _reduced_gain(V_bar, V_xx, np.asarray(V_gg, dtype=float))
    V_new = V_bar + V_xx - (V_bar + V_xx) @ A
    x_new = (eye - A) @ x_bar + A @ Q_x @ np.asarray(gbest, dtype=float) + A @ (eye - Q_x) @ np.asarray(pbest, dtype=float)
    return x_new, V_new


def kalman_product_mapping(
    V_bar,
    V_xx,
    V_gg,
    Q_x,
    lambda_g: float,
    lambda_b: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Product-of-Gaussians parameters that reproduce the reduced Kalman update.

    With T the reduced update's V' and A its gain, the product update with
    shares (lambda_g, lambda_b) matches when

        (1 - lambda_g - lambda_b) V_eff = T (I - A)
        lambda_g V_g = T A Q_x
        lambda_b V_b = T A (I - Q_x)

    For general scalar shares the first condition cannot hold for the
    original V_bar, so an effective V_eff is returned in its place.

    Returns:
        tuple: (V_eff, V_g, V_b)

    Raises:
        UsageError: If a share is not positive or they sum to 1 or more
    """
    if lambda_g <= 0 or lambda_b <= 0 or lambda_g + lambda_b >= 1:
        raise UsageError("Mapping needs lambda_g, lambda_b > 0 with lambda_g + lambda_b < 1")

    V_bar = np.asarray(V_bar, dtype=float)
    V_xx = np.asarray(V_xx, dtype=float)
    Q_x = np.asarray(Q_x, dtype=float)
    eye = np.eye(V_bar.shape[0])

    A = _reduced_gain(V_bar, V_xx, np.asarray(V_gg, dtype=float))
    T = V_bar + V_xx - (V_bar + V_xx) @ A

    V_eff = T @ (eye - A) / (1.0 - lambda_g - lambda_b)
    V_g = T @ A @ Q_x / lambda_g
    V_b = T @ A @ (eye - Q_x) / lambda_b
    return V_eff, V_g, V_b


def fitness_shares(weight_g: float, weight_b: float, lambda_g: float, lambda_b: float) -> tuple[float, float]:
    """
    Reweight the base shares by the fitness weights of the gbest and pbest records.

    The total lambda_g + lambda_b is kept; equal weights return the base shares.
    """
    total = lambda_g + lambda_b
    scaled_g = lambda_g * weight_g
    scaled_b = lambda_b * weight_b
    if not scaled_g + scaled_b > 0:
        return lambda_g, lambda_b
    return total * scaled_g / (scaled_g + scaled_b), total * scaled_b / (scaled_g + scaled_b)


def product_step(
    x_bar: np.ndarray,
    V_bar: np.ndarray,
    gbest: np.ndarray,
    pbest: np.ndarray,
    weight_g: float,
    weight_b: float,
    params: KalmanParams,
    rng: RngStream,
    component_precision: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    One product-rule move for a single particle.

    The gbest and pbest components share the precision V_gg^-1 unless
    ``component_precision`` is given; their shares come from
    :func:`fitness_shares` applied to ``params.lambda_g`` and ``params.lambda_b``.

    Returns:
        tuple: (x_bar', V_bar', sampled position)
    """
    if component_precision is None:
        component_precision = _solve(params.V_gg + REGULARIZATION * np.eye(params.m), np.eye(params.m), "observation covariance")

    lambda_g, lambda_b = fitness_shares(weight_g, weight_b, params.lambda_g, params.lambda_b)
    x_new, V_new = product_gaussian_update(
        x_bar, V_bar, gbest, component_precision, pbest, component_precision, lambda_g, lambda_b
    )
    try:
        cov = np.linalg.inv(V_new)
    except np.linalg.LinAlgError as e:
        raise DegeneratePrecisionError(f"Cannot invert combined precision: {e}")
    return x_new, V_new, sample_gaussian(x_new, cov, rng)
