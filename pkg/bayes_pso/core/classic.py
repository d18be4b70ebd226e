"""Standard and constricted particle swarm updates."""

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from bayes_pso.core.swarm import DomainError, Evaluator, RngStream, SwarmState, advance

logger = logging.getLogger(__name__)


class ClassicParams(BaseModel):
    """Inertia and attraction coefficients of the velocity update."""

    model_config = ConfigDict(frozen=True)

    w: float = Field(default=0.7298, ge=0.0, description="Inertia weight")
    phi: float = Field(default=1.49618, ge=0.0, description="Personal-best attraction")
    eta: float = Field(default=1.49618, ge=0.0, description="Global-best attraction")
    use_constriction: bool = False
    chi_replaces_w: bool = Field(
        default=False,
        description="Use chi as the inertia factor instead of scaling the whole update",
    )

    @model_validator(mode="after")
    def _check_constriction(self) -> "ClassicParams":
        if self.use_constriction and self.phi + self.eta <= 4.0:
            raise ValueError(f"Constriction requires phi + eta > 4, got {self.phi + self.eta}")
        return self


def constriction_coefficient(phi: float, eta: float) -> float:
    """
    Clerc-Kennedy constriction factor.

    Args:
        phi: Personal-best attraction
        eta: Global-best attraction

    Returns:
        float: 2 / |2 - s - sqrt(s^2 - 4s)| with s = phi + eta

    Raises:
        DomainError: If phi + eta <= 4
    """
    s = phi + eta
    if s <= 4.0:
        raise DomainError(f"Constriction coefficient needs phi + eta > 4, got {s}")
    return 2.0 / abs(2.0 - s - math.sqrt(s * s - 4.0 * s))


def velocity_update(state: SwarmState, params: ClassicParams, rng: RngStream, inertia: Optional[float] = None) -> np.ndarray:
    """
    w*v + phi*r_phi*(x^b - x) + eta*r_eta*(x^g - x), with per-dimension draws.

    ``inertia`` overrides ``params.w`` when given.
    """
    w = params.w if inertia is None else inertia
    shape = state.positions.shape
    r_phi = rng.uniform(shape)
    r_eta = rng.uniform(shape)

    return (
        w * state.velocities
        + params.phi * r_phi * (state.best_positions - state.positions)
        + params.eta * r_eta * (state.global_best_position - state.positions)
    )


def step_standard(state: SwarmState, params: ClassicParams, objective: Evaluator, rng: RngStream) -> SwarmState:
    """
    One standard PSO iteration: update velocities, move, clamp, evaluate.

    Returns:
        SwarmState: Next state
    """
    velocities = velocity_update(state, params, rng)
    return advance(state, state.positions + velocities, velocities, objective, rng)


def step_constricted(
    state: SwarmState,
    params: ClassicParams,
    objective: Evaluator,
    rng: RngStream,
    chi: Optional[float] = None,
) -> SwarmState:
    """
    One constricted PSO iteration.

    The velocity expression of the standard update is multiplied by chi, or
    with ``chi_replaces_w`` chi takes the place of the inertia weight.
    ``chi`` may be passed explicitly to bypass the coefficient formula.

    Raises:
        DomainError: If phi + eta <= 4 and no chi is given
    """
    if chi is None:
        chi = constriction_coefficient(params.phi, params.eta)

    if params.chi_replaces_w:
        velocities = velocity_update(state, params, rng, inertia=chi)
    else:
        velocities = chi * velocity_update(state, params, rng)

    return advance(state, state.positions + velocities, velocities, objective, rng)
