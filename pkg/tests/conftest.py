"""Shared fixtures."""

from typing import Optional

import numpy as np
import pytest

from bayes_pso.core.objectives import make_objective
from bayes_pso.core.swarm import Bounds, RngStream, SwarmState


class BoxObjective:
    """Sphere on an arbitrary box, for hand-built states."""

    def __init__(self, bounds: Bounds):
        self.bounds = bounds

    def evaluate(self, positions, rng=None):
        positions = np.asarray(positions, dtype=float)
        return np.sum(positions * positions, axis=1)


def build_state(
    positions,
    best_positions=None,
    global_best=None,
    velocities=None,
    raws=None,
    iteration: int = 0,
    global_index: int = 0,
    global_raw: Optional[float] = None,
) -> SwarmState:
    positions = np.array(positions, dtype=float, ndmin=2)
    n = positions.shape[0]
    best_positions = positions.copy() if best_positions is None else np.array(best_positions, dtype=float, ndmin=2)
    raws = np.sum(best_positions**2, axis=1) if raws is None else np.asarray(raws, dtype=float)
    global_best = best_positions[global_index] if global_best is None else np.asarray(global_best, dtype=float)
    return SwarmState(
        positions=positions,
        velocities=np.zeros_like(positions) if velocities is None else np.array(velocities, dtype=float, ndmin=2),
        best_positions=best_positions,
        best_raw=raws.copy(),
        current_raw=raws.copy(),
        global_best_position=global_best.copy(),
        global_best_raw=float(raws[global_index]) if global_raw is None else global_raw,
        global_best_index=global_index,
        iteration=iteration,
        improved=np.ones(n, dtype=bool),
    )


@pytest.fixture
def rng():
    return RngStream(42)


@pytest.fixture
def np_rng():
    return np.random.default_rng(42)


@pytest.fixture
def sphere():
    return make_objective("sphere", dim=10)


@pytest.fixture
def sphere_2d():
    return make_objective("sphere", dim=2)


@pytest.fixture
def wide_box():
    """Sphere on [-1e6, 1e6]^m, wide enough that clamping never interferes."""

    def factory(dim: int) -> BoxObjective:
        return BoxObjective(Bounds.cube(-1e6, 1e6, dim))

    return factory


@pytest.fixture
def make_state():
    return build_state
