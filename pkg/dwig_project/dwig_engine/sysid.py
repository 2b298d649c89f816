"""
Reduced discrete model and its online estimator.

The design model is the one-step-delay ARX structure

    y(t) = -a1 y(t-1) - ... - a_{n-1} y(t-n+1) + b0 u(t-1) + ... + b_{n-1} u(t-n)

tracked by exponentially weighted recursive least squares. Parameter
vectors are ordered (a1..a_{n-1}, b0..b_{n-1}) everywhere.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Sequence, Tuple

import numpy as np

from .engine_models import ArxModel, RegressorWindow, RlsState
from .errors import ConfigError, DimensionMismatch, DivergedState, NonFiniteUpdate
from .log_utils import get_throttled_logger

logger = get_throttled_logger(__name__)

MIN_ORDER = 2
MAX_ORDER = 8
COVARIANCE_TRACE_LIMIT = 1e8
ARX_OUTPUT_BOUND = 1e9


def arx_predict(model: ArxModel, window: RegressorWindow) -> float:
    """One-step-ahead prediction from the past outputs and inputs in ``window``."""
    if window.past_y.size != model.order - 1 or window.past_u.size != model.order:
        raise DimensionMismatch(
            f"order {model.order} needs windows of {model.order - 1} outputs and "
            f"{model.order} inputs, got {window.past_y.size} and {window.past_u.size}"
        )
    return float(-np.dot(model.a, window.past_y) + np.dot(model.b, window.past_u))


def arx_simulate(model: ArxModel, inputs: Sequence[float], noise: Sequence[float]) -> np.ndarray:
    """
    Iterate the difference equation from a zero window.

    ``noise[t]`` is added to output t (equation-error disturbance), so it
    also feeds back through the autoregressive part.
    """
    inputs = np.asarray(inputs, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if inputs.shape != noise.shape:
        raise DimensionMismatch("inputs and noise must have equal length")
    window = RegressorWindow.zeros(model.order)
    y = np.empty(inputs.size)
    for t in range(inputs.size):
        y[t] = arx_predict(model, window) + noise[t]
        if not abs(y[t]) <= ARX_OUTPUT_BOUND:
            raise DivergedState(f"ARX output left the finite range at sample {t}")
        window.push(y[t], inputs[t])
    return y


def new_rls_state(order: int, lam: float, p0: float = 1e3) -> RlsState:
    """theta = 0, P = p0 I for an order-``order`` model."""
    if not MIN_ORDER <= order <= MAX_ORDER:
        raise ConfigError(f"model order must be in {MIN_ORDER}..{MAX_ORDER}, got {order}")
    if not 0.9 < lam <= 1.0:
        raise ConfigError(f"forgetting factor must be in (0.9, 1.0], got {lam}")
    if not p0 > 0:
        raise ConfigError(f"initial covariance must be > 0, got {p0}")
    n_params = 2 * order - 1
    return RlsState(theta=np.zeros(n_params), p=p0 * np.eye(n_params), lam=lam, p0=p0)


def rls_update(state: RlsState, regressor, measured: float) -> Tuple[RlsState, float]:
    """
    One exponentially weighted RLS step.

    Returns the updated state (the input state is left untouched) and the
    a-priori prediction error. P is symmetrized after every update and
    reset to p0 I when its trace exceeds 1e8.
    """
    phi = np.asarray(regressor, dtype=float)
    if phi.shape != state.theta.shape:
        raise DimensionMismatch(
            f"regressor needs {state.theta.size} entries, got {phi.size}"
        )
    lam = state.lam
    error = float(measured - state.theta @ phi)
    p_phi = state.p @ phi
    gain = p_phi / (lam + phi @ p_phi)
    theta = state.theta + gain * error
    p = (state.p - np.outer(gain, phi @ state.p)) / lam
    p = 0.5 * (p + p.T)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(p)) and np.isfinite(error)):
        raise NonFiniteUpdate(f"RLS update {state.updates + 1} produced non-finite values")

    resets = state.resets
    trace = float(np.trace(p))
    if trace > COVARIANCE_TRACE_LIMIT:
        logger.event("covariance_reset",
                     "⚠️ covariance trace %.3g exceeded %.0e at update %d, resetting P",
                     trace, COVARIANCE_TRACE_LIMIT, state.updates + 1)
        p = state.p0 * np.eye(theta.size)
        resets += 1
    return replace(state, theta=theta, p=p, updates=state.updates + 1, resets=resets), error


def stability_check(model: ArxModel) -> Tuple[bool, np.ndarray]:
    """
    Roots of the monic A(z) = z^{n-1} + a1 z^{n-2} + ... + a_{n-1}.

    Returns (all roots strictly inside the unit circle, root magnitudes
    in descending order).
    """
    a = np.asarray(model.a, dtype=float)
    # trailing zero coefficients are exact roots at the origin
    zeros = 0
    while zeros < a.size and a[a.size - 1 - zeros] == 0.0:
        zeros += 1
    degree = a.size - zeros
    roots = np.zeros(0)
    if degree:
        companion = np.zeros((degree, degree))
        companion[0, :] = -a[:degree]
        companion[1:, :-1] = np.eye(degree - 1)
        roots = np.abs(np.linalg.eigvals(companion))
    magnitudes = np.sort(np.concatenate((roots, np.zeros(zeros))))[::-1]
    return bool(np.all(magnitudes < 1.0 - 1e-12)), magnitudes


def is_positive_definite(p: np.ndarray) -> bool:
    """Symmetric to 1e-10 with a positive smallest eigenvalue."""
    if not np.allclose(p, p.T, rtol=0.0, atol=1e-10 * max(1.0, float(np.max(np.abs(p))))):
        return False
    return bool(np.linalg.eigvalsh(p)[0] > 0.0)


class RlsEstimator:
    """
    Stateful wrapper used by the control loop and the offline replay.

    Keeps the regressor window next to the estimator state so callers
    only feed (measured output, previous input) pairs.
    """

    def __init__(self, order: int = 5, lam: float = 0.995, p0: float = 1e3):
        self.state = new_rls_state(order, lam, p0)
        self.order = order
        self.window = RegressorWindow.zeros(order)

    @property
    def theta(self) -> np.ndarray:
        return self.state.theta

    @property
    def updates(self) -> int:
        return self.state.updates

    def model(self) -> ArxModel:
        return self.state.model()

    def update(self, measured: float) -> float:
        """Update with y(t) against the current window; returns the prediction error."""
        self.state, error = rls_update(self.state, self.window.regressor(), measured)
        return error

    def shift(self, y: float, u: float) -> None:
        """Record y(t) and the input u(t) applied after it."""
        self.window.push(y, u)
