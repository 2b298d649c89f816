"""
Unit tests for step-response metrics
"""

import unittest

import numpy as np
import pandas as pd

from dwig_engine.engine_models import LoopMode, TimeSeriesLog
from dwig_engine.errors import ConfigError
from dwig_engine.metrics import compute_metrics


def open_loop_frame(t, vt_v, u_exc_v=440.0):
    return pd.DataFrame({"time_s": t, "vt_v": vt_v, "u_exc_v": np.broadcast_to(u_exc_v, t.shape)})


class TestComputeMetrics(unittest.TestCase):

    def setUp(self):
        self.t = np.round(np.arange(0, 1001) * 0.01, 10)

    def test_constant_log(self):
        metrics = compute_metrics(open_loop_frame(self.t, np.full(self.t.size, 209.0)))
        self.assertEqual(metrics.overshoot_v, 0.0)
        self.assertEqual(metrics.settling_time_s, 0.0)
        self.assertTrue(metrics.settled)
        self.assertEqual(metrics.final_value_v, 209.0)
        self.assertEqual(metrics.control_spike_v, 440.0)
        self.assertEqual(metrics.steady_control_v, 440.0)

    def test_damped_sinusoid_envelope(self):
        y = 1.0 + 0.1 * np.exp(-self.t) * np.cos(10.0 * self.t)
        metrics = compute_metrics(open_loop_frame(self.t, y), band_fraction=0.01, event_time=0.0)
        # envelope 0.1 e^-t reaches 0.01 at ln(10)
        self.assertAlmostEqual(metrics.settling_time_s, np.log(10.0), delta=0.1)
        self.assertAlmostEqual(metrics.overshoot_v, 0.1, delta=1e-3)
        self.assertTrue(metrics.settled)

    def test_single_excursion(self):
        y = np.full(self.t.size, 200.0)
        y[600] = 213.0
        metrics = compute_metrics(open_loop_frame(self.t, y), event_time=5.0)
        self.assertAlmostEqual(metrics.overshoot_v, 13.0)
        self.assertAlmostEqual(metrics.settling_time_s, 1.0)

    def test_samples_before_event_are_ignored(self):
        y = np.full(self.t.size, 200.0)
        y[100] = 260.0
        metrics = compute_metrics(open_loop_frame(self.t, y), event_time=5.0)
        self.assertEqual(metrics.overshoot_v, 0.0)

    def test_band_violated_in_final_window(self):
        y = 200.0 + 5.0 * np.sin(3.0 * self.t)
        metrics = compute_metrics(open_loop_frame(self.t, y), event_time=2.0)
        self.assertFalse(metrics.settled)

    def test_closed_loop_spike_uses_unclamped_control(self):
        frame = pd.DataFrame({
            "time_s": self.t,
            "vt_v": np.full(self.t.size, 209.0),
            "u_applied_v": np.full(self.t.size, 440.0),
            "u_unclamped_v": np.where(self.t == 5.5, -1500.0, 440.0),
        })
        log = TimeSeriesLog(frame=frame, mode=LoopMode.CLOSED_LOOP, event_time=5.0)
        metrics = compute_metrics(log, event_time=5.0)
        self.assertEqual(metrics.control_spike_v, 1500.0)
        self.assertEqual(metrics.steady_control_v, 440.0)

    def test_invalid_input(self):
        with self.assertRaises(ConfigError):
            compute_metrics(open_loop_frame(self.t, np.ones(self.t.size)), event_time=11.0)
        with self.assertRaises(ConfigError):
            compute_metrics(pd.DataFrame())

    def test_row_layout(self):
        row = compute_metrics(open_loop_frame(self.t, np.full(self.t.size, 1.0))).as_row()
        self.assertEqual(list(row), ["overshoot_v", "settling_time_s", "control_spike_v",
                                     "steady_control_v", "final_value_v", "settled"])


if __name__ == '__main__':
    unittest.main()
