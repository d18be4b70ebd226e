import logging

import numpy as np
import pytest

from bayes_pso.core.kalman import (
    KalmanParams,
    KalmanParticleState,
    KalmanSettings,
    filter_update,
    fitness_shares,
    kalman_product_mapping,
    kalman_step,
    product_gaussian_update,
    product_step,
    reduced_kalman_update,
    sample_gaussian,
)
from bayes_pso.core.swarm import DegeneratePrecisionError, NumericalError, RngStream, UsageError


def _params(m, process=0.1, observation=0.1, balance=0.5):
    W_z = np.zeros((2 * m, 2 * m))
    W_z[:m, :m] = observation * np.eye(m)
    return KalmanParams(W_y=process * np.eye(2 * m), W_z=W_z, Q_x=balance * np.eye(m))


def _random_spd(np_rng, m, floor=0.1):
    a = np_rng.normal(size=(m, m))
    return a @ a.T + floor * np.eye(m)


class TestParams:
    def test_from_settings(self):
        params = KalmanParams.from_settings(KalmanSettings(process_noise=0.2, observation_noise=0.3, lambda_total=0.6), 3)
        assert params.m == 3
        np.testing.assert_allclose(params.W_y, 0.2 * np.eye(6))
        np.testing.assert_allclose(params.V_gg, 0.3 * np.eye(3))
        np.testing.assert_allclose(params.W_z[3:, 3:], 0.0)
        assert params.lambda_g == pytest.approx(0.3)
        assert params.lambda_b == pytest.approx(0.3)

    def test_transition_and_observation(self):
        params = _params(2)
        y = np.array([1.0, 2.0, 0.5, -0.5])
        np.testing.assert_allclose(params.F @ y, [1.5, 1.5, 0.5, -0.5])
        np.testing.assert_allclose(params.H @ y, [1.0, 2.0])

    def test_initial_state(self):
        kstate = KalmanParticleState.initial(np.array([3.0, 4.0]), initial_cov=2.0)
        np.testing.assert_array_equal(kstate.y_bar, [3.0, 4.0, 0.0, 0.0])
        np.testing.assert_array_equal(kstate.W, 2.0 * np.eye(4))

    @pytest.mark.parametrize("kwargs", [{"balance": 1.5}, {"initial_cov": 0.0}, {"lambda_total": 0.0}, {"update_rule": "other"}])
    def test_invalid_settings(self, kwargs):
        with pytest.raises(ValueError):
            KalmanSettings(**kwargs)


class TestFilterUpdate:
    def test_noiseless_observation_of_gbest(self):
        params = _params(3, observation=0.0, balance=1.0)
        gbest = np.array([1.0, -2.0, 0.5])
        kstate = KalmanParticleState.initial(np.array([5.0, 5.0, 5.0]))
        updated = filter_update(kstate, gbest, np.zeros(3), params)
        np.testing.assert_allclose(updated.y_bar[:3], gbest, atol=1e-8)

    def test_noisy_observation_keeps_prediction(self):
        params = _params(2, observation=1e10, balance=1.0)
        kstate = KalmanParticleState(y_bar=np.array([1.0, 1.0, 0.5, -1.0]), W=np.eye(4))
        updated = filter_update(kstate, np.array([100.0, 100.0]), np.zeros(2), params)
        np.testing.assert_allclose(updated.y_bar, params.F @ kstate.y_bar, atol=1e-6)

    def test_dense_oracle(self, np_rng):
        m = 3
        W_z = np.zeros((2 * m, 2 * m))
        W_z[:m, :m] = _random_spd(np_rng, m)
        params = KalmanParams(W_y=_random_spd(np_rng, 2 * m), W_z=W_z, Q_x=np.diag(np_rng.uniform(0, 1, m)))
        kstate = KalmanParticleState(y_bar=np_rng.normal(size=2 * m), W=_random_spd(np_rng, 2 * m))
        gbest, pbest = np_rng.normal(size=m), np_rng.normal(size=m)

        F, H = params.F, params.H
        P = F @ kstate.W @ F.T + params.W_y
        K = P @ H.T @ np.linalg.inv(H @ P @ H.T + params.V_gg)
        z = (np.eye(m) - params.Q_x) @ pbest + params.Q_x @ gbest
        y_pred = F @ kstate.y_bar
        expected_y = y_pred + K @ (z - H @ y_pred)
        expected_W = (np.eye(2 * m) - K @ H) @ P

        updated = filter_update(kstate, gbest, pbest, params)
        np.testing.assert_allclose(updated.y_bar, expected_y, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(updated.W, expected_W, rtol=1e-9, atol=1e-10)

    def test_covariance_stays_symmetric(self, np_rng):
        params = _params(4)
        kstate = KalmanParticleState.initial(np_rng.normal(size=4))
        for _ in range(50):
            kstate = filter_update(kstate, np_rng.normal(size=4), np_rng.normal(size=4), params)
            np.testing.assert_array_equal(kstate.W, kstate.W.T)
            assert np.linalg.eigvalsh(kstate.W).min() > -1e-10

    def test_dimension_mismatch(self):
        params = _params(2)
        with pytest.raises(UsageError):
            filter_update(KalmanParticleState.initial(np.zeros(2)), np.zeros(3), np.zeros(2), params)

    def test_singular_innovation_is_regularized(self, caplog):
        m = 2
        params = KalmanParams(W_y=np.zeros((4, 4)), W_z=np.zeros((4, 4)), Q_x=np.eye(m))
        kstate = KalmanParticleState(y_bar=np.array([1.0, 2.0, 0.0, 0.0]), W=np.zeros((4, 4)))
        with caplog.at_level(logging.WARNING, logger="bayes_pso.core.kalman"):
            updated = filter_update(kstate, np.zeros(m), np.zeros(m), params)
        assert "regularizing" in caplog.text
        np.testing.assert_allclose(updated.y_bar, kstate.y_bar)


class TestKalmanStep:
    def test_returns_position(self):
        params = _params(3)
        kstate = KalmanParticleState.initial(np.ones(3))
        updated, position = kalman_step(kstate, np.zeros(3), np.zeros(3), params, RngStream(3))
        assert position.shape == (3,)
        assert updated.y_bar.shape == (6,)

    def test_deterministic(self):
        params = _params(3)
        kstate = KalmanParticleState.initial(np.ones(3))
        _, a = kalman_step(kstate, np.zeros(3), np.ones(3), params, RngStream(8))
        _, b = kalman_step(kstate, np.zeros(3), np.ones(3), params, RngStream(8))
        np.testing.assert_array_equal(a, b)

    def test_zero_covariance_sample_is_mean(self, rng):
        mean = np.array([1.0, 2.0])
        np.testing.assert_array_equal(sample_gaussian(mean, np.zeros((2, 2)), rng), mean)


class TestProductUpdate:
    def test_zero_shares_keep_belief(self):
        x, V = np.array([1.0, 2.0]), np.diag([2.0, 3.0])
        x_new, V_new = product_gaussian_update(x, V, np.zeros(2), np.eye(2), np.ones(2), np.eye(2), 0.0, 0.0)
        np.testing.assert_allclose(x_new, x)
        np.testing.assert_allclose(V_new, V)

    def test_full_gbest_share(self):
        g, V_g = np.array([-1.0, 4.0]), np.diag([5.0, 0.5])
        x_new, V_new = product_gaussian_update(np.zeros(2), np.eye(2), g, V_g, np.ones(2), np.eye(2), 1.0, 0.0)
        np.testing.assert_allclose(x_new, g)
        np.testing.assert_allclose(V_new, V_g)

    def test_equal_thirds_give_mean(self):
        eye = np.eye(2)
        x, g, b = np.array([0.0, 0.0]), np.array([3.0, 0.0]), np.array([0.0, 6.0])
        x_new, V_new = product_gaussian_update(x, eye, g, eye, b, eye, 1 / 3, 1 / 3)
        np.testing.assert_allclose(x_new, [1.0, 2.0])
        np.testing.assert_allclose(V_new, eye)

    @pytest.mark.parametrize("shares", [(-0.1, 0.2), (0.6, 0.6), (0.2, -0.01)])
    def test_invalid_shares(self, shares):
        eye = np.eye(1)
        with pytest.raises(UsageError):
            product_gaussian_update([0.0], eye, [1.0], eye, [2.0], eye, *shares)

    def test_singular_precision(self):
        zero = np.zeros((2, 2))
        with pytest.raises(DegeneratePrecisionError):
            product_gaussian_update(np.zeros(2), zero, np.ones(2), zero, np.ones(2), zero, 0.3, 0.3)


class TestReducedUpdate:
    def test_scalar_example(self):
        x_new, V_new = reduced_kalman_update([0.0], [[2.0]], [1.0], [5.0], [[1.0]], [[3.0]], [[1.0]])
        np.testing.assert_allclose(x_new, [0.6])
        np.testing.assert_allclose(V_new, [[1.2]])

    def test_unit_balance_moves_to_gbest(self, np_rng):
        V = _random_spd(np_rng, 3)
        gbest = np_rng.normal(size=3)
        x_new, _ = reduced_kalman_update(np_rng.normal(size=3), V, gbest, np_rng.normal(size=3), np.zeros((3, 3)), np.zeros((3, 3)), np.eye(3))
        np.testing.assert_allclose(x_new, gbest, rtol=1e-10, atol=1e-12)

    def test_singular_gain(self):
        with pytest.raises(NumericalError):
            reduced_kalman_update(np.zeros(2), np.zeros((2, 2)), np.ones(2), np.ones(2), np.eye(2), np.zeros((2, 2)), np.eye(2))


class TestMapping:
    def test_product_reproduces_reduced_update(self, np_rng):
        for _ in range(100):
            m = int(np_rng.integers(1, 5))
            V_bar = _random_spd(np_rng, m)
            V_xx = _random_spd(np_rng, m)
            V_gg = V_xx + _random_spd(np_rng, m, floor=1.0)
            Q_x = np.diag(np_rng.uniform(0.05, 0.95, size=m))
            lambda_g, lambda_b = np_rng.uniform(0.05, 0.45, size=2)
            x, g, b = np_rng.normal(size=(3, m))

            expected_x, expected_V = reduced_kalman_update(x, V_bar, g, b, V_xx, V_gg, Q_x)
            V_eff, V_g, V_b = kalman_product_mapping(V_bar, V_xx, V_gg, Q_x, lambda_g, lambda_b)
            x_new, V_new = product_gaussian_update(x, V_eff, g, V_g, b, V_b, lambda_g, lambda_b)

            np.testing.assert_allclose(V_new, expected_V, rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose(x_new, expected_x, rtol=1e-10, atol=1e-10)

    def test_components_match_explicit_product(self, np_rng):
        m = 3
        V_bar = _random_spd(np_rng, m)
        V_xx = _random_spd(np_rng, m)
        V_gg = V_xx + _random_spd(np_rng, m, floor=1.0)
        Q_x = np.diag([0.2, 0.5, 0.9])
        lambda_g, lambda_b = 0.3, 0.2
        x, g, b = np_rng.normal(size=(3, m))

        A = np.linalg.inv(V_bar + V_gg) @ (V_bar + V_xx)
        T = V_bar + V_xx - (V_bar + V_xx) @ A
        V_eff, V_g, V_b = kalman_product_mapping(V_bar, V_xx, V_gg, Q_x, lambda_g, lambda_b)

        np.testing.assert_allclose(0.5 * V_eff, T @ (np.eye(m) - A), rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(lambda_g * V_g, T @ A @ Q_x, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(lambda_b * V_b, T @ A @ (np.eye(m) - Q_x), rtol=1e-10, atol=1e-10)

        precision = 0.5 * V_eff + lambda_g * V_g + lambda_b * V_b
        mean = np.linalg.inv(precision) @ (0.5 * V_eff @ x + lambda_g * V_g @ g + lambda_b * V_b @ b)
        expected_x, expected_V = reduced_kalman_update(x, V_bar, g, b, V_xx, V_gg, Q_x)
        np.testing.assert_allclose(precision, expected_V, rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(mean, expected_x, rtol=1e-10, atol=1e-10)

    @pytest.mark.parametrize("shares", [(0.0, 0.5), (0.5, 0.5), (0.7, 0.4)])
    def test_invalid_shares(self, shares):
        eye = np.eye(2)
        with pytest.raises(UsageError):
            kalman_product_mapping(eye, eye, 2 * eye, 0.5 * eye, *shares)


class TestProductStep:
    def test_shares_follow_fitness(self):
        assert fitness_shares(3.0, 1.0, 0.2, 0.2) == pytest.approx((0.3, 0.1))
        assert fitness_shares(0.0, 0.0, 0.2, 0.2) == (0.2, 0.2)

    def test_equal_weights_keep_base_shares(self):
        assert fitness_shares(2.0, 2.0, 0.3, 0.1) == pytest.approx((0.3, 0.1))

    def test_step_matches_update(self):
        params = KalmanParams.from_settings(KalmanSettings(observation_noise=0.5, lambda_total=0.5), 2)
        x, V = np.zeros(2), np.eye(2)
        g, b = np.array([2.0, 0.0]), np.array([0.0, 2.0])
        x_new, V_new, sample = product_step(x, V, g, b, 1.0, 1.0, params, RngStream(4))

        expected_x, expected_V = product_gaussian_update(x, V, g, 2.0 * np.eye(2), b, 2.0 * np.eye(2), 0.25, 0.25)
        np.testing.assert_allclose(x_new, expected_x)
        np.testing.assert_allclose(V_new, expected_V)
        assert sample.shape == (2,)

    def test_step_reads_base_shares(self):
        m = 2
        W_z = np.zeros((2 * m, 2 * m))
        W_z[:m, :m] = np.eye(m)
        params = KalmanParams(W_y=np.eye(2 * m), W_z=W_z, Q_x=0.5 * np.eye(m), lambda_g=0.6, lambda_b=0.0)
        x_new, _, _ = product_step(np.zeros(m), np.eye(m), np.array([5.0, 5.0]), np.array([-5.0, -5.0]), 1.0, 1.0, params, RngStream(0))
        np.testing.assert_allclose(x_new, [3.0, 3.0], rtol=1e-8)

    def test_invalid_base_shares(self):
        with pytest.raises(UsageError):
            KalmanParams(W_y=np.eye(2), W_z=np.zeros((2, 2)), Q_x=np.eye(1), lambda_g=0.7, lambda_b=0.6)
