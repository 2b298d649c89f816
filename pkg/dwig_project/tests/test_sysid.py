"""
Unit tests for the ARX model and recursive least squares
"""

import unittest

import numpy as np
from numpy.testing import assert_allclose

from dwig_engine.engine_models import ArxModel, RegressorWindow, RlsState
from dwig_engine.errors import ConfigError, DimensionMismatch, DivergedState, NonFiniteUpdate
from dwig_engine.sysid import (
    RlsEstimator, arx_predict, arx_simulate, is_positive_definite, new_rls_state, rls_update,
    stability_check,
)

from tests.fixtures import TRUTH, prbs


def identify(model, u, noise, lam, p0=1e3, observer=None):
    """Drive an estimator with data simulated from ``model``."""
    y = arx_simulate(model, u, noise)
    estimator = RlsEstimator(order=model.order, lam=lam, p0=p0)
    for t in range(u.size):
        if t > 0:
            estimator.update(y[t])
            if observer is not None:
                observer(t, estimator.state)
        estimator.shift(y[t], u[t])
    return estimator


class TestArxModel(unittest.TestCase):

    def test_coefficient_counts(self):
        with self.assertRaises(DimensionMismatch):
            ArxModel(order=5, a=(0.0,) * 3, b=(1.0,) * 5)
        with self.assertRaises(DimensionMismatch):
            ArxModel(order=2, a=(float('nan'),), b=(1.0, 0.0))

    def test_theta_ordering(self):
        model = ArxModel.from_theta([0.1, 0.2, 1.0, 2.0, 3.0], order=3)
        self.assertEqual(model.a, (0.1, 0.2))
        self.assertEqual(model.b, (1.0, 2.0, 3.0))
        self.assertEqual(ArxModel.parameter_names(3), ("a1", "a2", "b0", "b1", "b2"))

    def test_prediction_examples(self):
        window = RegressorWindow.zeros(5)
        self.assertEqual(arx_predict(ArxModel.from_coefficients((0, 0, 0, 0), (0, 0, 0, 0, 0)), window), 0.0)

        window.push(0.0, 2.5)
        unit_delay = ArxModel.from_coefficients((0, 0, 0, 0), (1, 0, 0, 0, 0))
        self.assertEqual(arx_predict(unit_delay, window), 2.5)

        window = RegressorWindow.zeros(5)
        window.push(1.0, 0.0)
        self.assertAlmostEqual(arx_predict(ArxModel.from_coefficients((-0.5, 0, 0, 0), (1, 0, 0, 0, 0)), window), 0.5)

    def test_prediction_matches_theta_regressor_product(self):
        rng = np.random.default_rng(11)
        window = RegressorWindow.zeros(5)
        for _ in range(7):
            window.push(rng.normal(), rng.normal())
        self.assertAlmostEqual(arx_predict(TRUTH, window), float(TRUTH.theta @ window.regressor()), places=14)

    def test_window_length_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            arx_predict(TRUTH, RegressorWindow.zeros(4))

    def test_simulation_examples(self):
        assert_allclose(arx_simulate(TRUTH, np.zeros(20), np.zeros(20)), np.zeros(20))

        impulse = np.zeros(6)
        impulse[0] = 1.0
        unit_delay = ArxModel.from_coefficients((0, 0, 0, 0), (1, 0, 0, 0, 0))
        assert_allclose(arx_simulate(unit_delay, impulse, np.zeros(6)), [0, 1, 0, 0, 0, 0])

    def test_step_response_reaches_static_gain(self):
        y = arx_simulate(TRUTH, np.ones(300), np.zeros(300))
        self.assertAlmostEqual(y[-1], TRUTH.static_gain, delta=1e-6)

    def test_unstable_simulation_diverges(self):
        growing = ArxModel.from_coefficients((-2.0,), (1.0, 0.0))
        with self.assertRaises(DivergedState):
            arx_simulate(growing, np.ones(100), np.zeros(100))


class TestRlsUpdate(unittest.TestCase):

    def test_scalar_hand_evaluation(self):
        state = RlsState(theta=np.zeros(1), p=np.eye(1), lam=1.0, p0=1.0)
        new, error = rls_update(state, [1.0], 1.0)
        self.assertEqual(error, 1.0)
        self.assertAlmostEqual(new.theta[0], 0.5)
        self.assertAlmostEqual(new.p[0, 0], 0.5)
        self.assertEqual(state.theta[0], 0.0)   # input untouched

    def test_zero_regressor_only_forgets(self):
        state = new_rls_state(5, lam=0.99)
        new, _ = rls_update(state, np.zeros(9), 3.0)
        assert_allclose(new.theta, state.theta)
        assert_allclose(new.p, state.p / 0.99)

    def test_trace_grows_with_forgetting(self):
        traces = {}
        for lam in (0.990, 0.995, 1.0):
            state = new_rls_state(5, lam=lam)
            for _ in range(50):
                state, _ = rls_update(state, np.zeros(9), 0.0)
            traces[lam] = np.trace(state.p)
            self.assertAlmostEqual(traces[lam], 9e3 / lam ** 50, delta=1e-6 * traces[lam])
        self.assertGreater(traces[0.990], traces[0.995])
        self.assertGreater(traces[0.995], traces[1.0])

    def test_covariance_reset(self):
        state = RlsState(theta=np.zeros(9), p=2e7 * np.eye(9), lam=0.995, p0=1e3)
        new, _ = rls_update(state, np.zeros(9), 0.0)
        assert_allclose(new.p, 1e3 * np.eye(9))
        self.assertEqual(new.resets, 1)

    def test_non_finite_update(self):
        with self.assertRaises(NonFiniteUpdate):
            rls_update(new_rls_state(2, lam=1.0), [1.0, 1.0, 1.0], float('nan'))

    def test_regressor_length(self):
        with self.assertRaises(DimensionMismatch):
            rls_update(new_rls_state(5, lam=1.0), np.zeros(8), 0.0)

    def test_construction_limits(self):
        for lam in (0.9, 0.5, 1.01):
            with self.assertRaises(ConfigError):
                new_rls_state(5, lam=lam)
        for order in (0, 1, 9):
            with self.assertRaises(ConfigError):
                new_rls_state(order, lam=1.0)
        with self.assertRaises(ConfigError):
            new_rls_state(5, lam=1.0, p0=0.0)
        with self.assertRaises(ConfigError):
            RlsEstimator(order=1)


class TestIdentification(unittest.TestCase):
    """Convergence on data from a known plant"""

    def test_exact_recovery_without_noise(self):
        rng = np.random.default_rng(2024)
        u = prbs(rng, 2000)
        estimator = identify(TRUTH, u, np.zeros(u.size), lam=1.0, p0=1e6)
        self.assertLess(np.max(np.abs(estimator.theta - TRUTH.theta)), 1e-6)

    def test_tracking_with_output_noise(self):
        # Max error over 200 seeds measured at 0.0285
        for seed in range(20):
            rng = np.random.default_rng(seed)
            u = prbs(rng, 5000)
            noise = rng.normal(0.0, np.sqrt(0.01), size=u.size)
            estimator = identify(TRUTH, u, noise, lam=0.995)
            with self.subTest(seed=seed):
                self.assertLess(np.max(np.abs(estimator.theta - TRUTH.theta)), 0.05)

    def test_covariance_stays_positive_definite(self):
        rng = np.random.default_rng(5)
        u = prbs(rng, 10000)
        noise = rng.normal(0.0, 0.1, size=u.size)
        failures = []

        def check(t, state):
            if t % 100 == 0 and not is_positive_definite(state.p):
                failures.append(t)

        estimator = identify(TRUTH, u, noise, lam=0.995, observer=check)
        self.assertEqual(failures, [])
        self.assertEqual(estimator.updates, 9999)

    def test_reduced_order_fit(self):
        rng = np.random.default_rng(8)
        u = prbs(rng, 3000)
        y = arx_simulate(TRUTH, u, np.zeros(u.size))
        residual = {}
        for order in (4, 5):
            estimator = RlsEstimator(order=order, lam=1.0, p0=1e6)
            errors = []
            for t in range(u.size):
                if t > 0:
                    errors.append(estimator.update(y[t]))
                estimator.shift(y[t], u[t])
            self.assertEqual(estimator.theta.size, 2 * order - 1)
            residual[order] = float(np.var(errors[len(errors) // 2:]))
        self.assertLess(residual[5], 1e-12)
        self.assertGreater(residual[4], residual[5])


class TestStabilityCheck(unittest.TestCase):

    def test_zero_polynomial(self):
        stable, magnitudes = stability_check(ArxModel.from_coefficients((0, 0, 0, 0), (1, 0, 0, 0, 0)))
        self.assertTrue(stable)
        assert_allclose(magnitudes, np.zeros(4), atol=1e-12)

    def test_root_on_unit_circle(self):
        stable, magnitudes = stability_check(ArxModel.from_coefficients((-1.0, 0, 0, 0), (1, 0, 0, 0, 0)))
        self.assertFalse(stable)
        self.assertAlmostEqual(magnitudes[0], 1.0, places=12)

    def test_factored_quadratic(self):
        stable, magnitudes = stability_check(ArxModel.from_coefficients((-1.5, 0.56, 0, 0), (1, 0, 0, 0, 0)))
        self.assertTrue(stable)
        assert_allclose(magnitudes[:2], [0.8, 0.7], atol=1e-9)
        self.assertLess(np.max(magnitudes[2:]), 1e-6)

    def test_truth_plant_poles(self):
        stable, magnitudes = stability_check(TRUTH)
        self.assertTrue(stable)
        assert_allclose(magnitudes, [0.5, 0.4, 0.3, 0.2], atol=1e-9)

    def test_positive_definite_helper(self):
        self.assertTrue(is_positive_definite(np.eye(3)))
        self.assertFalse(is_positive_definite(np.diag([1.0, -1.0, 1.0])))
        self.assertFalse(is_positive_definite(np.array([[1.0, 0.5], [0.0, 1.0]])))


if __name__ == '__main__':
    unittest.main()
