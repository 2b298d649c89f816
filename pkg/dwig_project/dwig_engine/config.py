"""
Scenario and machine configuration.

Files are YAML, validated with pydantic models that reject unknown keys.
Machine parameter blocks have no defaults: every field must be present.
A scenario may reference its machine file by a path relative to itself.
"""

from __future__ import annotations

import itertools
import logging
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .engine_models import (
    Coupling, EventKind, EventTarget, LoopMode, MachineInputs, MachineParams,
    PerturbationEvent, UStarMode,
)
from .errors import ConfigError

logger = logging.getLogger(__name__)

GRID_TOL = 1e-9


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)


class MachineConfig(StrictModel):
    """Per-unit machine constants (all required)"""
    r1: float = Field(gt=0)
    r2: float = Field(gt=0)
    r3: float = Field(gt=0)
    l1: float = Field(gt=0)
    l2: float = Field(gt=0)
    l3: float = Field(gt=0)
    m_d12: float
    m_q12: float
    m_d1r: float
    m_q1r: float
    m_d2r: float
    m_q2r: float
    omega1: float = Field(gt=0)
    inertia_h: float = Field(gt=0)
    base_voltage_v: float = Field(gt=0)
    base_torque: float = Field(gt=0)
    omega_base: float = Field(gt=0)
    coupling: Literal["literal", "symmetric"]

    def to_params(self) -> MachineParams:
        values = self.model_dump()
        values["coupling"] = Coupling(values["coupling"])
        return MachineParams(**values)


class OperatingPointConfig(StrictModel):
    u_d2: float = 0.0
    u_q2: float = 2.0
    tm: float = 2.0
    r_load: float = Field(default=1.0, gt=0)
    u_dr: float = 0.0
    u_qr: float = 0.0
    trim: bool = True
    omega: Optional[float] = None          # fixed start speed when trim is off
    omega_range: Tuple[float, float] = (0.5, 1.5)
    presim: float = Field(default=2.0, ge=0)

    @model_validator(mode="after")
    def _check_speed(self):
        if not self.trim and self.omega is None:
            raise ValueError("omega is required when trim is false")
        if math.hypot(self.u_d2, self.u_q2) == 0:
            raise ValueError("nominal excitation must be non-zero")
        return self

    def to_inputs(self) -> MachineInputs:
        return MachineInputs(u_d2=self.u_d2, u_q2=self.u_q2, tm=self.tm,
                             r_load=self.r_load, u_dr=self.u_dr, u_qr=self.u_qr)


class EstimatorConfig(StrictModel):
    order: int = Field(default=5, ge=2, le=8)
    lam: float = Field(default=0.995, alias="lambda", gt=0.9, le=1.0)
    p0: float = Field(default=1e3, gt=0)
    warmup: int = Field(default=50, ge=0)


class ControllerConfig(StrictModel):
    """Reference, u* and limits in p.u.; dither variance in V^2 (the loop runs in volts)."""
    rho: float = Field(default=0.0725, ge=0)
    reference: Optional[float] = None      # None holds the operating-point voltage
    u_star: Optional[float] = None         # None uses the nominal excitation magnitude
    u_star_mode: Literal["constant", "averaged"] = "constant"
    u_star_tau: float = Field(default=10.0, gt=0)
    u_min: float = -6.0
    u_max: float = 6.0
    dither_variance: float = Field(default=0.01, ge=0)

    @model_validator(mode="after")
    def _check_limits(self):
        if not self.u_min < self.u_max:
            raise ValueError("u_min must be < u_max")
        return self

    @property
    def u_star_source(self) -> UStarMode:
        return UStarMode(self.u_star_mode)


class EventConfig(StrictModel):
    time: float = Field(ge=0)
    target: Literal["mechanical_torque", "load_resistance", "excitation_voltage", "reference"]
    kind: Literal["relative_step", "absolute_set"] = "relative_step"
    value: float

    @model_validator(mode="after")
    def _check_fraction(self):
        if self.kind == "relative_step" and not self.value > -1:
            raise ValueError("relative step fraction must be > -1")
        return self

    def to_event(self) -> PerturbationEvent:
        return PerturbationEvent(time=self.time, target=EventTarget(self.target),
                                 kind=EventKind(self.kind), value=self.value)


class MetricsConfig(StrictModel):
    band_fraction: float = Field(default=0.01, gt=0)
    final_window: float = Field(default=1.0, gt=0)
    event_time: Optional[float] = None     # None uses the last scheduled event


class SweepConfig(StrictModel):
    lambdas: List[float] = []
    rhos: List[float] = []
    cells: List[Tuple[float, float]] = []
    seed_mode: Literal["xor", "shared"] = "xor"
    workers: int = Field(default=1, ge=1)

    def grid(self) -> List[Tuple[float, float]]:
        """Cartesian product of lambdas x rhos, then the explicit cells."""
        pairs = list(itertools.product(self.lambdas, self.rhos)) + list(self.cells)
        return [(float(lam), float(rho)) for lam, rho in pairs]


class ScenarioSpec(StrictModel):
    name: str
    mode: Literal["open_loop", "closed_loop"]
    duration: float = Field(gt=0)
    ts: float = Field(default=0.01, gt=0)
    h: float = Field(default=0.001, gt=0, le=0.01)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    machine: MachineConfig
    operating_point: OperatingPointConfig = OperatingPointConfig()
    estimator: EstimatorConfig = EstimatorConfig()
    controller: ControllerConfig = ControllerConfig()
    events: List[EventConfig] = []
    metrics: MetricsConfig = MetricsConfig()
    sweep: Optional[SweepConfig] = None

    @model_validator(mode="after")
    def _check_grid(self):
        substeps = self.ts / self.h
        if abs(substeps - round(substeps)) > GRID_TOL * substeps:
            raise ValueError(f"h = {self.h} must divide ts = {self.ts} exactly")
        samples = self.duration / self.ts
        if abs(samples - round(samples)) > GRID_TOL * samples:
            raise ValueError(f"ts = {self.ts} must divide duration = {self.duration} exactly")
        times = [e.time for e in self.events]
        if times != sorted(times):
            raise ValueError("events must be sorted by time")
        if any(t > self.duration for t in times):
            raise ValueError("event times must lie within [0, duration]")
        if self.mode == "closed_loop" and any(e.target == "excitation_voltage" for e in self.events):
            raise ValueError("closed-loop scenarios cannot schedule excitation_voltage events")
        return self

    # ------------------------------------------------------------------
    # Convenience views
    # ------------------------------------------------------------------

    @property
    def loop_mode(self) -> LoopMode:
        return LoopMode(self.mode)

    @property
    def lam(self) -> float:
        return self.estimator.lam

    @property
    def rho(self) -> float:
        return self.controller.rho

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.ts))

    @property
    def substeps(self) -> int:
        return int(round(self.ts / self.h))

    def perturbations(self) -> List[PerturbationEvent]:
        return [e.to_event() for e in self.events]

    def metrics_event_time(self) -> float:
        if self.metrics.event_time is not None:
            return self.metrics.event_time
        return self.events[-1].time if self.events else 0.0

    def with_overrides(self, **changes) -> "ScenarioSpec":
        """
        Copy with top-level or dotted-path overrides, re-validated.

        ``spec.with_overrides(seed=3, **{"estimator.lambda": 0.99})``
        """
        data = self.model_dump(by_alias=True)
        for key, value in changes.items():
            if value is None:
                continue
            target = data
            *parents, leaf = key.split(".")
            for part in parents:
                target = target[part]
            target[leaf] = value
        return validate_scenario(data)


def _format_validation_error(err: ValidationError, source: str) -> str:
    first = err.errors()[0]
    location = ".".join(str(p) for p in first["loc"]) or "<root>"
    more = f" (+{err.error_count() - 1} more)" if err.error_count() > 1 else ""
    return f"{source}: {location}: {first['msg']}{more}"


def _read_yaml(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: malformed YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return data


def validate_scenario(data: dict, source: str = "scenario") -> ScenarioSpec:
    try:
        return ScenarioSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e, source)) from e


def load_machine_params(path) -> MachineParams:
    """Load and validate a machine parameter file."""
    path = Path(path)
    try:
        config = MachineConfig.model_validate(_read_yaml(path))
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e, str(path))) from e
    return config.to_params()


def load_scenario(path) -> ScenarioSpec:
    """Load a scenario file, resolving a machine file reference relative to it."""
    path = Path(path)
    data = _read_yaml(path)
    machine = data.get("machine")
    if isinstance(machine, str):
        machine_path = (path.parent / machine).resolve()
        logger.debug("scenario %s uses machine file %s", path.name, machine_path)
        data["machine"] = _read_yaml(machine_path)
    spec = validate_scenario(data, str(path))
    logger.info("📄 loaded scenario '%s' (%s, %.6g s)", spec.name, spec.mode, spec.duration)
    return spec
