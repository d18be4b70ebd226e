import numpy as np
import pytest

from bayes_pso.core.barebones import (
    BareBonesParams,
    CovarianceMode,
    barebones_distribution,
    barebones_log_density,
    posterior_product_log_density,
    step_barebones,
)
from bayes_pso.core.gaussian import component_log_density
from bayes_pso.core.swarm import Bounds, Particle, RngStream
from tests.conftest import BoxObjective, build_state

PER_DIM = BareBonesParams(cov_mode=CovarianceMode.PER_DIMENSION)
SCALAR = BareBonesParams(cov_mode=CovarianceMode.SCALAR)


def _particle(best) -> Particle:
    best = np.asarray(best, dtype=float)
    return Particle(position=best, velocity=np.zeros_like(best), best_position=best, best_raw=0.0)


class TestDistribution:
    def test_dirac_when_bests_coincide(self):
        p = np.array([1.5, -2.0, 3.0])
        mean, var = barebones_distribution(_particle(p), p, PER_DIM)
        np.testing.assert_array_equal(mean, p)
        np.testing.assert_array_equal(var, 0.0)

    def test_per_dimension(self):
        mean, var = barebones_distribution(_particle([0.0, 0.0]), np.array([2.0, 0.0]), PER_DIM)
        np.testing.assert_array_equal(mean, [1.0, 0.0])
        np.testing.assert_array_equal(var, [2.0, 0.0])

    def test_scalar(self):
        mean, var = barebones_distribution(_particle([0.0, 0.0]), np.array([2.0, 0.0]), SCALAR)
        np.testing.assert_array_equal(mean, [1.0, 0.0])
        np.testing.assert_array_equal(var, [1.0, 1.0])

    def test_scale(self):
        params = BareBonesParams(cov_mode=CovarianceMode.PER_DIMENSION, scale=0.2)
        _, var = barebones_distribution(_particle([0.0, 0.0]), np.array([2.0, 1.0]), params)
        np.testing.assert_allclose(var, [0.4, 0.2])

    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError):
            BareBonesParams(scale=0.0)


class TestStep:
    def test_dirac_particle_copied_exactly(self, make_state, wide_box, rng):
        best = np.array([[0.1, 0.2, 0.3], [1.0, 1.0, 1.0]])
        state = make_state(best + 5.0, best_positions=best, global_best=best[0])
        new_state = step_barebones(state, PER_DIM, wide_box(3), rng)
        np.testing.assert_array_equal(new_state.positions[0], best[0])
        np.testing.assert_array_equal(new_state.velocities, 0.0)

    def test_zero_variance_dimension_copied(self, make_state, wide_box, rng):
        state = make_state([[9.0, 9.0]], best_positions=[[0.0, 0.7]], global_best=[2.0, 0.7])
        new_state = step_barebones(state, PER_DIM, wide_box(2), rng)
        assert new_state.positions[0, 1] == 0.7

    def _sample(self, params, draws):
        best = np.tile([0.0, 0.0], (draws, 1))
        gbest = np.array([2.0, 1.0])
        state = build_state(best, best_positions=best, global_best=gbest, raws=np.ones(draws), global_raw=0.5)
        return step_barebones(state, params, BoxObjective(Bounds.cube(-1e6, 1e6, 2)), RngStream(17)).positions

    def test_sample_mean(self):
        samples = self._sample(PER_DIM, 100000)
        mean, var = np.array([1.0, 0.5]), np.array([2.0, 1.0])
        stderr = np.sqrt(var / samples.shape[0])
        assert np.all(np.abs(samples.mean(axis=0) - mean) < 5 * stderr)

    def test_scaled_variance(self):
        params = BareBonesParams(cov_mode=CovarianceMode.PER_DIMENSION, scale=0.2)
        samples = self._sample(params, 100000)
        expected = np.array([2.0, 1.0]) / 5.0
        # variance of a sample variance is about 2 sigma^4 / n
        tolerance = 5 * np.sqrt(2.0 / samples.shape[0]) * expected
        assert np.all(np.abs(samples.var(axis=0, ddof=1) - expected) < tolerance)


class TestDensity:
    def test_point_mass(self):
        assert barebones_log_density([1.0, 2.0], [1.0, 2.0], [0.0, 0.0]) == 0.0
        assert barebones_log_density([1.0, 2.5], [1.0, 2.0], [0.0, 0.0]) == float("-inf")

    def test_matches_closed_form(self):
        x, mean, var = np.array([0.3]), np.array([0.0]), np.array([2.0])
        expected = -0.5 * (np.log(2 * np.pi * 2.0) + 0.09 / 2.0)
        assert barebones_log_density(x, mean, var) == pytest.approx(expected, rel=1e-12)

    def test_scalar_density_equals_gaussian_product(self):
        best, gbest = np.array([-0.4]), np.array([1.1])
        mean, var = barebones_distribution(_particle(best), gbest, SCALAR)
        beta = 1.0 / np.linalg.norm(best - gbest)

        def components(point):
            return component_log_density(point, best, beta) + component_log_density(point, gbest, beta)

        # the unnormalized product of two beta-components differs by a constant
        reference = posterior_product_log_density(mean, best, gbest) - components(mean)

        for x in np.linspace(-3.0, 3.0, 100):
            point = np.array([x])
            sampled = barebones_log_density(point, mean, var)
            product = posterior_product_log_density(point, best, gbest)
            assert product == pytest.approx(sampled, rel=1e-10, abs=1e-12)
            assert product - components(point) == pytest.approx(reference, rel=1e-10)

    def test_product_needs_distinct_bests(self):
        with pytest.raises(ValueError):
            posterior_product_log_density([0.0], [1.0], [1.0])
