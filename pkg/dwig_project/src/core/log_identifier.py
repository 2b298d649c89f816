"""
Offline identification of logged runs.

Replays recursive least squares over the (u, y) columns of a CSV log and
reports the final model, its prediction-error variance and stability.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from dwig_engine.engine_models import ArxModel
from dwig_engine.errors import ConfigError
from dwig_engine.sysid import RlsEstimator, stability_check

logger = logging.getLogger(__name__)


@dataclass
class IdentificationReport:
    model: ArxModel
    error_variance: float
    stable: bool
    root_magnitudes: np.ndarray
    samples: int
    covariance_resets: int

    def as_row(self) -> dict:
        row = {"samples": self.samples, "order": self.model.order,
               "error_variance": self.error_variance, "stable": self.stable,
               "max_root_magnitude": float(self.root_magnitudes[0]) if self.root_magnitudes.size else 0.0,
               "covariance_resets": self.covariance_resets}
        row.update(zip(ArxModel.parameter_names(self.model.order), self.model.theta.tolist()))
        return row


def identify_from_log(frame: pd.DataFrame, order: int = 5, lam: float = 1.0, p0: float = 1e6,
                      u_column: str = "u_applied_v", y_column: str = "y_measured_v") -> IdentificationReport:
    """
    Fit an order-``order`` ARX model to a logged run.

    Row t holds the output y(t) and the input u(t) applied after it. The
    error variance is taken over the second half of the a-priori
    prediction errors, after the initial transient of the estimator.
    """
    missing = [c for c in (u_column, y_column) if c not in frame.columns]
    if missing:
        raise ConfigError(f"log is missing column(s): {', '.join(missing)}")
    try:
        u = frame[u_column].to_numpy(dtype=float)
        y = frame[y_column].to_numpy(dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"non-numeric data in the u/y columns: {e}") from e
    if u.size < 2 * order:
        raise ConfigError(f"log has {u.size} rows, need at least {2 * order} for order {order}")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
        raise ConfigError("u/y columns contain non-finite values")

    estimator = RlsEstimator(order=order, lam=lam, p0=p0)
    errors = np.zeros(u.size)
    for t in range(u.size):
        if t > 0:
            errors[t] = estimator.update(y[t])
        estimator.shift(y[t], u[t])

    model = estimator.model()
    stable, magnitudes = stability_check(model)
    variance = float(np.var(errors[u.size // 2:]))
    logger.info("🔍 identified order-%d model from %d samples: error variance %.4g, %s",
                order, u.size, variance, "stable" if stable else "NOT stable")
    return IdentificationReport(model=model, error_variance=variance, stable=stable,
                                root_magnitudes=magnitudes, samples=int(u.size),
                                covariance_resets=estimator.state.resets)
