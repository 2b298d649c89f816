"""
Step-response metrics for logged runs.

All values are in volts (or seconds). The final value is the mean of the
terminal voltage over the last ``final_window`` seconds of the log.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .engine_models import PerfMetrics, TimeSeriesLog
from .errors import ConfigError


def compute_metrics(log, band_fraction: float = 0.01, event_time: float = 0.0,
                    final_window: float = 1.0) -> PerfMetrics:
    """
    Overshoot, settling time, control spike and steady control after ``event_time``.

    Args:
        log: TimeSeriesLog or a DataFrame with time_s and vt_v columns
        band_fraction: Settling band as a fraction of the final value
        event_time: Start of the evaluated window, seconds
        final_window: Averaging window for the final values, seconds

    Returns:
        PerfMetrics; ``settled`` is False when the band is still violated
        inside the final window
    """
    frame = log.frame if isinstance(log, TimeSeriesLog) else log
    if not isinstance(frame, pd.DataFrame) or frame.empty:
        raise ConfigError("metrics need a non-empty log")
    t = frame["time_s"].to_numpy()
    y = frame["vt_v"].to_numpy()
    if not t[0] - 1e-12 <= event_time <= t[-1] + 1e-12:
        raise ConfigError(f"event time {event_time} outside the log span [{t[0]}, {t[-1]}]")

    if "u_unclamped_v" in frame:
        u_peak = frame["u_unclamped_v"].to_numpy()
        u_applied = frame["u_applied_v"].to_numpy()
    else:
        u_peak = u_applied = frame["u_exc_v"].to_numpy()

    tail = t >= t[-1] - final_window - 1e-12
    y_final = float(np.mean(y[tail]))
    steady_control = float(abs(np.mean(u_applied[tail])))

    after = t >= event_time - 1e-12
    deviation = np.abs(y[after] - y_final)
    overshoot = float(np.max(deviation))
    control_spike = float(np.max(np.abs(u_peak[after])))

    outside = np.nonzero(deviation > band_fraction * abs(y_final))[0]
    if outside.size == 0:
        settling, settled = 0.0, True
    else:
        last = t[after][outside[-1]]
        settling = float(last - event_time)
        settled = bool(last < t[-1] - final_window - 1e-12)

    return PerfMetrics(
        overshoot_v=overshoot,
        settling_time_s=max(settling, 0.0),
        control_spike_v=control_spike,
        steady_control_v=steady_control,
        final_value_v=y_final,
        settled=settled,
    )
