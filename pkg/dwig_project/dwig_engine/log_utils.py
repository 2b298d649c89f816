"""
Logging helpers for per-step simulation events.

A control loop can hit the same condition thousands of times (covariance
reset, clamped control, unrealizable law). This module provides a logger
wrapper that reports the first few occurrences of each event key and
counts the rest, so a run log stays readable.
"""

import logging
from collections import Counter

_throttled = {}


def get_throttled_logger(name, limit=5):
    """
    Get a logger that throttles repeated per-step events.

    Args:
        name: The name of the logger (typically __name__)
        limit: Occurrences of each event key logged before going quiet

    Returns:
        ThrottledLogger: A logger wrapper with per-key occurrence limits
    """
    if name not in _throttled:
        _throttled[name] = ThrottledLogger(logging.getLogger(name), limit)
    return _throttled[name]


def reset_event_counts():
    """Clear the event counters of every throttled logger (start of a run)."""
    for throttled in _throttled.values():
        throttled.reset()


def event_summary():
    """
    Report suppressed events of every throttled logger (end of a run).

    Returns:
        dict: event key -> occurrences since the last reset
    """
    counts = Counter()
    for throttled in _throttled.values():
        counts.update(throttled.summary())
    return dict(sorted(counts.items()))


class ThrottledLogger:
    """
    A logger wrapper for events that repeat every sample period.
    Plain info/warning/error/debug calls pass straight through.
    """

    def __init__(self, logger, limit=5):
        self.logger = logger
        self.limit = limit
        self.counts = Counter()

    def event(self, key, message, *args, level=logging.WARNING):
        """
        Log ``message`` for event ``key`` unless the key already hit its limit.

        Args:
            key: Event identifier used for counting (e.g. "covariance_reset")
            message: %-style message template
            *args: Template arguments
            level: Logging level for the emitted record
        """
        self.counts[key] += 1
        n = self.counts[key]
        if n <= self.limit:
            self.logger.log(level, message, *args)
            if n == self.limit:
                self.logger.log(level, "further '%s' events are counted, not logged", key)

    def summary(self):
        """Log one line per throttled key and return the counts."""
        for key, n in sorted(self.counts.items()):
            if n > self.limit:
                self.logger.info("%s occurred %d times (%d suppressed)", key, n, n - self.limit)
        return dict(self.counts)

    def reset(self):
        self.counts.clear()

    # Standard logging methods
    def info(self, message, *args, **kwargs):
        self.logger.info(message, *args, **kwargs)

    def error(self, message, *args, **kwargs):
        self.logger.error(message, *args, **kwargs)

    def warning(self, message, *args, **kwargs):
        self.logger.warning(message, *args, **kwargs)

    def debug(self, message, *args, **kwargs):
        self.logger.debug(message, *args, **kwargs)
