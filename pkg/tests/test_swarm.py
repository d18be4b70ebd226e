import numpy as np
import pytest

from bayes_pso.core.swarm import (
    SEED_STRIDE,
    Bounds,
    ConfigurationError,
    Direction,
    EvaluationError,
    FitnessWeightSpec,
    RngStream,
    Transform,
    UsageError,
    clamp_to_bounds,
    derive_seed,
    fitness_weight,
    init_swarm,
    stop_check,
    swarm_spread,
    update_bests,
)
from tests.conftest import BoxObjective


class TestBounds:
    def test_cube(self):
        bounds = Bounds.cube(-5.0, 5.0, 3)
        assert bounds.dim == 3
        np.testing.assert_array_equal(bounds.lower, [-5.0, -5.0, -5.0])
        np.testing.assert_array_equal(bounds.upper, [5.0, 5.0, 5.0])

    def test_point_domain_is_allowed(self):
        bounds = Bounds.cube(0.0, 0.0, 4)
        assert bounds.contains(np.zeros(4))

    def test_lower_above_upper_rejected(self):
        with pytest.raises(ConfigurationError):
            Bounds(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            Bounds(np.zeros(2), np.ones(3))

    def test_non_finite_rejected(self):
        with pytest.raises(ConfigurationError):
            Bounds(np.array([-np.inf]), np.array([1.0]))

    def test_arrays_are_read_only(self):
        bounds = Bounds.cube(-1.0, 1.0, 2)
        with pytest.raises(ValueError):
            bounds.lower[0] = 3.0


class TestRngStream:
    def test_same_seed_same_sequence(self):
        a, b = RngStream(7), RngStream(7)
        np.testing.assert_array_equal(a.uniform(100), b.uniform(100))
        np.testing.assert_array_equal(a.normal((5, 3)), b.normal((5, 3)))

    def test_different_seeds_differ(self):
        assert not np.array_equal(RngStream(1).uniform(10), RngStream(2).uniform(10))

    def test_forced_uniform(self):
        stream = RngStream(0, forced_uniform=0.5)
        np.testing.assert_array_equal(stream.uniform((2, 3)), np.full((2, 3), 0.5))

    def test_uniform_range(self):
        draws = RngStream(3).uniform(10000)
        assert draws.min() >= 0.0
        assert draws.max() < 1.0


class TestDeriveSeed:
    def test_first_run_uses_base_seed(self):
        assert derive_seed(123, 0) == 123

    def test_stride(self):
        assert derive_seed(0, 1) == SEED_STRIDE
        assert derive_seed(5, 1) == 5 ^ SEED_STRIDE

    def test_seeds_are_distinct_and_64_bit(self):
        seeds = [derive_seed(7, k) for k in range(1000)]
        assert len(set(seeds)) == 1000
        assert all(0 <= s < 2**64 for s in seeds)


class TestFitnessWeight:
    def test_maximize_identity(self):
        assert fitness_weight(2.0, FitnessWeightSpec(direction=Direction.MAXIMIZE)) == 2.0

    def test_minimize_reciprocal(self):
        assert fitness_weight(4.0) == 0.25

    def test_zero_is_floored(self):
        assert fitness_weight(0.0, FitnessWeightSpec(epsilon=1e-12)) == pytest.approx(1e12)

    def test_small_values_stay_finite(self):
        raws = np.concatenate([np.zeros(10), np.logspace(-300, 0, 200), -np.logspace(-5, 5, 50)])
        weights = fitness_weight(raws)
        assert np.all(np.isfinite(weights))
        assert np.all(weights > 0)

    def test_nan_raises(self):
        with pytest.raises(EvaluationError):
            fitness_weight(float("nan"))

    def test_inf_raises(self):
        with pytest.raises(EvaluationError):
            fitness_weight(np.array([1.0, np.inf]))

    def test_monotone(self):
        grid = np.linspace(1e-3, 1e3, 1000)
        minimize = fitness_weight(grid)
        maximize = fitness_weight(grid, FitnessWeightSpec(direction=Direction.MAXIMIZE))
        assert np.all(np.diff(minimize) < 0)
        assert np.all(np.diff(maximize) > 0)

    def test_transforms(self):
        sqrt_spec = FitnessWeightSpec(transform=Transform.SQRT)
        log_spec = FitnessWeightSpec(transform=Transform.LOG1P)
        assert fitness_weight(16.0, sqrt_spec) == pytest.approx(0.25)
        assert fitness_weight(np.e - 1.0, log_spec) == pytest.approx(1.0)

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ValueError):
            FitnessWeightSpec(epsilon=0.0)


class TestInitSwarm:
    def test_point_domain(self, rng):
        objective = BoxObjective(Bounds.cube(0.0, 0.0, 3))
        state = init_swarm(1, objective, rng)
        np.testing.assert_array_equal(state.positions, np.zeros((1, 3)))
        np.testing.assert_array_equal(state.global_best_position, np.zeros(3))

    def test_positions_inside_bounds(self, sphere, rng):
        state = init_swarm(100, sphere, rng)
        assert state.positions.shape == (100, 10)
        assert np.all(state.positions >= -100.0)
        assert np.all(state.positions <= 100.0)

    def test_initial_bookkeeping(self, sphere, rng):
        state = init_swarm(20, sphere, rng)
        np.testing.assert_array_equal(state.velocities, 0.0)
        np.testing.assert_array_equal(state.best_positions, state.positions)
        assert state.iteration == 0
        assert state.global_best_raw == state.best_raw.min()
        np.testing.assert_array_equal(state.global_best_position, state.positions[np.argmin(state.best_raw)])

    def test_deterministic(self, sphere):
        a = init_swarm(30, sphere, RngStream(9))
        b = init_swarm(30, sphere, RngStream(9))
        np.testing.assert_array_equal(a.positions, b.positions)
        np.testing.assert_array_equal(a.best_raw, b.best_raw)

    def test_needs_a_particle(self, sphere, rng):
        with pytest.raises(ConfigurationError):
            init_swarm(0, sphere, rng)


class TestUpdateBests:
    def test_tie_keeps_earlier(self, make_state):
        state = make_state([[1.0, 0.0]], best_positions=[[0.0, 1.0]], raws=[1.0])
        updated = update_bests(state, [1.0])
        np.testing.assert_array_equal(updated.best_positions, [[0.0, 1.0]])
        assert not updated.improved[0]
        assert not updated.global_improved

    def test_improvement_moves_both_bests(self, make_state):
        state = make_state([[0.5, 0.0]], best_positions=[[0.0, 1.0]], raws=[1.0])
        updated = update_bests(state, [0.25])
        np.testing.assert_array_equal(updated.best_positions, [[0.5, 0.0]])
        np.testing.assert_array_equal(updated.global_best_position, [0.5, 0.0])
        assert updated.global_best_raw == 0.25

    def test_argmin_from_fresh_state(self, make_state):
        positions = [[1.0], [2.0], [3.0]]
        state = make_state(positions, raws=[np.inf, np.inf, np.inf], global_raw=np.inf)
        updated = update_bests(state, [5.0, 2.0, 7.0])
        assert updated.global_best_index == 1
        np.testing.assert_array_equal(updated.global_best_position, [2.0])

    def test_equal_candidates_lowest_index_wins(self, make_state):
        state = make_state([[1.0], [2.0], [3.0]], raws=[np.inf] * 3, global_raw=np.inf)
        updated = update_bests(state, [4.0, 1.0, 1.0])
        assert updated.global_best_index == 1

    def test_input_not_modified(self, make_state):
        state = make_state([[0.5, 0.0]], best_positions=[[0.0, 1.0]], raws=[1.0])
        before = state.copy()
        update_bests(state, [0.25])
        np.testing.assert_array_equal(state.best_positions, before.best_positions)
        assert state.global_best_raw == before.global_best_raw

    def test_nan_raises(self, make_state):
        state = make_state([[0.0]])
        with pytest.raises(EvaluationError):
            update_bests(state, [np.nan])

    def test_wrong_count(self, make_state):
        state = make_state([[0.0], [1.0]])
        with pytest.raises(UsageError):
            update_bests(state, [1.0])


class TestStopCheck:
    def test_collapsed(self, make_state):
        state = make_state(np.ones((5, 3)), global_best=np.ones(3))
        assert stop_check(state, 3, 0.001)

    def test_two_particles(self, make_state):
        state = make_state([[1.0], [0.0]], global_best=[0.0])
        assert swarm_spread(state, 1) == 0.5
        assert not stop_check(state, 1, 0.001)

    def test_huge_threshold(self, make_state, np_rng):
        state = make_state(np_rng.uniform(-100, 100, (10, 4)))
        assert stop_check(state, 4, 1e300)

    def test_translation_invariant(self, make_state, np_rng):
        positions = np_rng.normal(size=(8, 3))
        gbest = np_rng.normal(size=3)
        shift = np_rng.normal(size=3) * 50
        a = make_state(positions, global_best=gbest)
        b = make_state(positions + shift, global_best=gbest + shift)
        assert swarm_spread(a, 3) == pytest.approx(swarm_spread(b, 3), rel=1e-10)


class TestClampToBounds:
    bounds = Bounds.cube(-100.0, 100.0, 2)

    def test_clips(self):
        np.testing.assert_array_equal(clamp_to_bounds([150.0, -150.0], self.bounds), [100.0, -100.0])

    def test_inside_unchanged(self):
        np.testing.assert_array_equal(clamp_to_bounds([0.0, 0.0], self.bounds), [0.0, 0.0])

    def test_boundary_unchanged(self):
        np.testing.assert_array_equal(clamp_to_bounds([-100.0, 100.0], self.bounds), [-100.0, 100.0])

    def test_batch(self):
        out = clamp_to_bounds([[150.0, 0.0], [0.0, -150.0]], self.bounds)
        np.testing.assert_array_equal(out, [[100.0, 0.0], [0.0, -100.0]])

    def test_dimension_mismatch(self):
        with pytest.raises(UsageError):
            clamp_to_bounds([1.0, 2.0, 3.0], self.bounds)
