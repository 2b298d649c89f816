"""
Data models for the generator engine.

Plant values (parameters, states, inputs, currents) are immutable
dataclasses so they can be shared freely between threads and sweep
workers. Estimator and controller state is mutable and owned by a
single loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError, DimensionMismatch


class Coupling(Enum):
    """How the flux/current map is assembled"""
    LITERAL = "literal"
    SYMMETRIC = "symmetric"


class LoopMode(Enum):
    OPEN_LOOP = "open_loop"
    CLOSED_LOOP = "closed_loop"


class EventTarget(Enum):
    """Quantity changed by a scheduled perturbation"""
    MECHANICAL_TORQUE = "mechanical_torque"
    LOAD_RESISTANCE = "load_resistance"
    EXCITATION_VOLTAGE = "excitation_voltage"
    REFERENCE = "reference"


class EventKind(Enum):
    RELATIVE_STEP = "relative_step"
    ABSOLUTE_SET = "absolute_set"


class UStarMode(Enum):
    """Source of the steady-state controller output u*"""
    CONSTANT = "constant"
    AVERAGED = "averaged"


DIVERGENCE_BOUND = 1e6


@dataclass(frozen=True)
class MachineParams:
    """Per-unit constants of the double-wound induction generator"""
    r1: float                       # load winding resistance
    r2: float                       # excitation winding resistance
    r3: float                       # rotor resistance
    l1: float
    l2: float
    l3: float
    m_d12: float
    m_q12: float
    m_d1r: float
    m_q1r: float
    m_d2r: float
    m_q2r: float
    inertia_h: float                # seconds
    base_voltage_v: float = 220.0   # volts per 1.0 p.u., reporting and loop signals
    omega1: float = 1.0             # synchronous electrical speed, p.u.
    base_torque: float = 1.0        # torque base of the prime-mover input tm
    omega_base: float = 2.0 * math.pi * 50.0  # rad/s, scales flux derivatives to seconds
    coupling: Coupling = Coupling.SYMMETRIC

    def __post_init__(self):
        for name in ("r1", "r2", "r3"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("l1", "l2", "l3"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if not self.inertia_h > 0:
            raise ConfigError("inertia_h must be > 0")
        if not self.base_torque > 0:
            raise ConfigError("base_torque must be > 0")
        if not self.omega_base > 0:
            raise ConfigError("omega_base must be > 0")
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"{f.name} must be finite")


@dataclass(frozen=True)
class MachineState:
    """Seven integrated states: six flux linkages and the rotor speed"""
    psi_d1: float = 0.0
    psi_q1: float = 0.0
    psi_d2: float = 0.0
    psi_q2: float = 0.0
    psi_dr: float = 0.0
    psi_qr: float = 0.0
    omega: float = 0.0

    @property
    def psi(self) -> np.ndarray:
        return np.array([self.psi_d1, self.psi_q1, self.psi_d2,
                         self.psi_q2, self.psi_dr, self.psi_qr])

    def to_array(self) -> np.ndarray:
        return np.array([self.psi_d1, self.psi_q1, self.psi_d2, self.psi_q2,
                         self.psi_dr, self.psi_qr, self.omega])

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "MachineState":
        if len(x) != 7:
            raise DimensionMismatch(f"state vector needs 7 entries, got {len(x)}")
        return cls(*(float(v) for v in x))

    @classmethod
    def from_fluxes(cls, psi: Sequence[float], omega: float) -> "MachineState":
        return cls.from_array(list(psi) + [omega])


@dataclass(frozen=True)
class MachineInputs:
    """Externally imposed quantities, held constant across an integration step"""
    u_d2: float = 0.0
    u_q2: float = 0.0
    tm: float = 0.0
    r_load: float = 1.0
    u_dr: float = 0.0   # short-circuited rotor cage
    u_qr: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ConfigError(f"input {f.name} must be finite")
        if not self.r_load > 0:
            raise ConfigError("r_load must be > 0")

    @property
    def excitation_magnitude(self) -> float:
        return math.hypot(self.u_d2, self.u_q2)

    def with_excitation(self, magnitude: float, direction: Tuple[float, float]) -> "MachineInputs":
        """Apply a scalar excitation along a fixed (d, q) unit direction."""
        return replace(self, u_d2=magnitude * direction[0], u_q2=magnitude * direction[1])


@dataclass(frozen=True)
class Currents6:
    i_d1: float
    i_q1: float
    i_d2: float
    i_q2: float
    i_dr: float
    i_qr: float

    def to_array(self) -> np.ndarray:
        return np.array([self.i_d1, self.i_q1, self.i_d2, self.i_q2, self.i_dr, self.i_qr])

    @classmethod
    def from_array(cls, i: Sequence[float]) -> "Currents6":
        if len(i) != 6:
            raise DimensionMismatch(f"current vector needs 6 entries, got {len(i)}")
        return cls(*(float(v) for v in i))


# ========== Reduced discrete model ==========

@dataclass(frozen=True)
class ArxModel:
    """
    A(q^-1) y(t) = q^-1 B(q^-1) u(t) with monic A.

    For order n, ``a`` holds a1..a_{n-1} and ``b`` holds b0..b_{n-1}.
    Parameter vectors always use the ordering (a1..a_{n-1}, b0..b_{n-1}).
    """
    order: int
    a: Tuple[float, ...]
    b: Tuple[float, ...]

    def __post_init__(self):
        if self.order < 1:
            raise DimensionMismatch("order must be a positive integer")
        if len(self.a) != self.order - 1 or len(self.b) != self.order:
            raise DimensionMismatch(
                f"order {self.order} needs {self.order - 1} a-coefficients and "
                f"{self.order} b-coefficients, got {len(self.a)} and {len(self.b)}"
            )
        if not all(math.isfinite(v) for v in self.a + self.b):
            raise DimensionMismatch("ARX coefficients must be finite")

    @classmethod
    def from_coefficients(cls, a: Sequence[float], b: Sequence[float]) -> "ArxModel":
        return cls(order=len(b), a=tuple(float(v) for v in a), b=tuple(float(v) for v in b))

    @classmethod
    def from_theta(cls, theta: Sequence[float], order: int) -> "ArxModel":
        if len(theta) != 2 * order - 1:
            raise DimensionMismatch(f"theta for order {order} needs {2 * order - 1} entries")
        return cls(order=order,
                   a=tuple(float(v) for v in theta[:order - 1]),
                   b=tuple(float(v) for v in theta[order - 1:]))

    @property
    def theta(self) -> np.ndarray:
        return np.array(self.a + self.b, dtype=float)

    @property
    def static_gain(self) -> float:
        """B(1)/A(1)"""
        return sum(self.b) / (1.0 + sum(self.a))

    @staticmethod
    def parameter_names(order: int) -> Tuple[str, ...]:
        return (tuple(f"a{i}" for i in range(1, order))
                + tuple(f"b{j}" for j in range(order)))


@dataclass
class RegressorWindow:
    """Past outputs y(t-1).. and inputs u(t-1).., most recent first"""
    past_y: np.ndarray
    past_u: np.ndarray

    @classmethod
    def zeros(cls, order: int) -> "RegressorWindow":
        return cls(past_y=np.zeros(order - 1), past_u=np.zeros(order))

    def push(self, y: float, u: float) -> None:
        """Shift in y(t) and u(t) once a sample period has elapsed."""
        if self.past_y.size:
            self.past_y = np.concatenate(([y], self.past_y[:-1]))
        self.past_u = np.concatenate(([u], self.past_u[:-1]))

    def regressor(self) -> np.ndarray:
        """(-y(t-1)..-y(t-n+1), u(t-1)..u(t-n)) so that prediction = theta . phi"""
        return np.concatenate((-self.past_y, self.past_u))


@dataclass
class RlsState:
    theta: np.ndarray
    p: np.ndarray
    lam: float
    p0: float = 1e3
    updates: int = 0
    resets: int = 0

    @property
    def order(self) -> int:
        return (self.theta.size + 1) // 2

    def model(self) -> ArxModel:
        return ArxModel.from_theta(self.theta, self.order)


# ========== Controller ==========

@dataclass(frozen=True)
class MvConfig:
    """Penalized minimum-variance settings; units follow the signals fed to the law."""
    rho: float
    w: float
    u_star: float
    u_min: float
    u_max: float
    dither_variance: float = 0.01

    def __post_init__(self):
        if self.rho < 0:
            raise ConfigError("rho must be >= 0")
        if not self.u_min < self.u_max:
            raise ConfigError("u_min must be < u_max")
        if self.dither_variance < 0:
            raise ConfigError("dither_variance must be >= 0")


@dataclass
class ControlHistory:
    """y(t)..y(t-n+2) and u(t-1)..u(t-n+1), most recent first"""
    past_y: np.ndarray
    past_u: np.ndarray

    @classmethod
    def zeros(cls, order: int) -> "ControlHistory":
        return cls(past_y=np.zeros(order - 1), past_u=np.zeros(order - 1))

    def record_output(self, y: float) -> None:
        if self.past_y.size:
            self.past_y = np.concatenate(([y], self.past_y[:-1]))

    def record_control(self, u: float) -> None:
        if self.past_u.size:
            self.past_u = np.concatenate(([u], self.past_u[:-1]))


@dataclass(frozen=True)
class ControlOutput:
    applied: float
    unclamped: float
    realizable: bool


# ========== Experiments ==========

@dataclass(frozen=True)
class PerturbationEvent:
    time: float
    target: EventTarget
    kind: EventKind
    value: float

    def __post_init__(self):
        if self.time < 0:
            raise ConfigError("event time must be >= 0")
        if self.kind is EventKind.RELATIVE_STEP and not self.value > -1:
            raise ConfigError("relative step fraction must be > -1")

    def apply(self, current: float) -> float:
        if self.kind is EventKind.RELATIVE_STEP:
            return current * (1.0 + self.value)
        return self.value


@dataclass(frozen=True)
class PerfMetrics:
    overshoot_v: float
    settling_time_s: float
    control_spike_v: float
    steady_control_v: float
    final_value_v: float
    settled: bool = True

    def as_row(self) -> dict:
        return {
            "overshoot_v": self.overshoot_v,
            "settling_time_s": self.settling_time_s,
            "control_spike_v": self.control_spike_v,
            "steady_control_v": self.steady_control_v,
            "final_value_v": self.final_value_v,
            "settled": self.settled,
        }


@dataclass
class TimeSeriesLog:
    """Trajectory sampled on the uniform ts grid, one row per control step."""
    frame: pd.DataFrame
    mode: LoopMode
    event_time: Optional[float] = None
    operating_point: Optional[MachineState] = None
    diagnostics: dict = field(default_factory=dict)
