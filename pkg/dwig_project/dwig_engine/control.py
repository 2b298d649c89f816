"""
Penalized minimum-variance control and the dither source.

The one-step delay minimum-variance law with rho added to the leading
control coefficient, which pulls u(t) toward u* as rho grows. Cleared of
its common denominator it reads

    (b0 + rho) u(t) = w + sum_i a_i y(t-i+1) - sum_{j>=1} b_j u(t-j) + rho u*
"""

from __future__ import annotations

import logging
import math
from dataclasses import replace

import numpy as np

from .engine_models import ArxModel, ControlHistory, ControlOutput, MvConfig, UStarMode
from .errors import ConfigError, DimensionMismatch, UnrealizableLaw
from .log_utils import get_throttled_logger

logger = get_throttled_logger(__name__)

REALIZABILITY_TOL = 1e-9


def mv_control(config: MvConfig, estimates: ArxModel, history: ControlHistory) -> ControlOutput:
    """
    Control value for the current sample.

    Raises:
        UnrealizableLaw: |b0 + rho| <= 1e-9
        DimensionMismatch: history does not match the model order
    """
    n = estimates.order
    if history.past_y.size != n - 1 or history.past_u.size != n - 1:
        raise DimensionMismatch(
            f"order {n} needs {n - 1} past outputs and {n - 1} past controls"
        )
    denominator = estimates.b[0] + config.rho
    if not abs(denominator) > REALIZABILITY_TOL:
        raise UnrealizableLaw(f"b0 + rho = {denominator:.3g} is numerically zero")
    numerator = (config.w
                 + float(np.dot(estimates.a, history.past_y))
                 - float(np.dot(estimates.b[1:], history.past_u))
                 + config.rho * config.u_star)
    unclamped = numerator / denominator
    applied = min(config.u_max, max(config.u_min, unclamped))
    return ControlOutput(applied=applied, unclamped=unclamped, realizable=True)


def dither(rng: np.random.Generator, variance: float) -> float:
    """Zero-mean Gaussian sample with the given variance."""
    if variance < 0:
        raise ConfigError("dither variance must be >= 0")
    if variance == 0:
        return 0.0
    return float(rng.normal(0.0, math.sqrt(variance)))


class DitherSource:
    """Seeded measurement-noise generator owned by one scenario."""

    def __init__(self, seed: int, variance: float):
        if variance < 0:
            raise ConfigError("dither variance must be >= 0")
        self.rng = np.random.default_rng(seed)
        self.variance = variance

    def sample(self) -> float:
        return dither(self.rng, self.variance)


class MvController:
    """
    Minimum-variance regulator with the loop-level guards.

    Until the estimator has processed ``warmup`` samples, or whenever the
    law is unrealizable, the controller holds u*. With
    ``UStarMode.AVERAGED`` u* follows an exponential average of the
    applied control with time constant ``tau`` seconds.
    """

    def __init__(self, config: MvConfig, order: int, warmup: int = 50,
                 u_star_mode: UStarMode = UStarMode.CONSTANT,
                 tau: float = 10.0, ts: float = 0.01):
        self.config = config
        self.order = order
        self.warmup = warmup
        self.u_star_mode = u_star_mode
        self.alpha = 1.0 - math.exp(-ts / tau) if u_star_mode is UStarMode.AVERAGED else 0.0
        self.history = ControlHistory.zeros(order)
        self.clamped = 0
        self.held = 0

    @property
    def u_star(self) -> float:
        return self.config.u_star

    def set_reference(self, w: float) -> None:
        self.config = replace(self.config, w=w)

    def compute(self, y: float, estimates: ArxModel, estimator_updates: int) -> ControlOutput:
        """Control for the current sample, given the measured output y(t)."""
        self.history.record_output(y)
        if estimator_updates < self.warmup:
            output = ControlOutput(self.u_star, self.u_star, realizable=True)
        else:
            try:
                output = mv_control(self.config, estimates, self.history)
            except UnrealizableLaw as e:
                logger.event("unrealizable_law", "control law unrealizable (%s), holding u*", e)
                self.held += 1
                output = ControlOutput(self.u_star, self.u_star, realizable=False)
        if output.applied != output.unclamped:
            self.clamped += 1
            logger.event("control_clamped", "control %.6g clamped to %.6g",
                         output.unclamped, output.applied, level=logging.DEBUG)
        self.history.record_control(output.applied)
        if self.alpha:
            u_star = self.u_star + self.alpha * (output.applied - self.u_star)
            self.config = replace(self.config, u_star=u_star)
        return output
