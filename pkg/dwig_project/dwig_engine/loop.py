"""
Open- and closed-loop experiment engine.

The plant is integrated with fixed RK4 substeps of length h; the log and
(in closed loop) the estimator and controller run once per sample
period ts. Perturbation events are snapped to the h grid and applied at
the start of the substep they fall on, before the plant is sampled.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from .config import ScenarioSpec
from .control import DitherSource, MvController
from .engine_models import (
    ArxModel, EventTarget, LoopMode, MachineInputs, MachineState, MvConfig,
    PerturbationEvent, RlsState, TimeSeriesLog,
)
from .errors import ConfigError, DivergedState, DwigError
from .log_utils import event_summary, reset_event_counts
from .machine import GeneratorModel
from .metrics import compute_metrics
from .sysid import RlsEstimator

logger = logging.getLogger(__name__)

OPEN_LOOP_COLUMNS = [
    "time_s", "vt_pu", "vt_v", "vt_rel", "u_exc_v", "omega_pu", "tm_pu", "r_load_pu", "te_pu",
]
CLOSED_LOOP_COLUMNS = [
    "time_s", "vt_pu", "vt_v", "vt_rel", "y_measured_v", "u_applied_v", "u_unclamped_v",
    "realizable", "omega_pu", "tm_pu", "r_load_pu", "te_pu", "reference_v", "prediction_error_v",
]

Observer = Callable[[int, RlsState], None]


def theta_columns(order: int) -> List[str]:
    return [f"theta_{name}" for name in ArxModel.parameter_names(order)]


@dataclass
class OperatingPoint:
    x0: np.ndarray
    omega0: float
    inputs: MachineInputs
    vt0: float
    excitation: float
    direction: Tuple[float, float]


def prepare_operating_point(spec: ScenarioSpec, model: GeneratorModel) -> OperatingPoint:
    """Steady state at the nominal inputs, speed trim, then a discarded pre-simulation."""
    op = spec.operating_point
    inputs = op.to_inputs()
    if op.trim:
        state, omega0 = model.trim(inputs, *op.omega_range)
    else:
        omega0 = op.omega
        state = model.steady_state(inputs, omega0)
    x = state.to_array()
    try:
        for _ in range(int(round(op.presim / spec.h))):
            x = model.step(x, inputs, spec.h)
    except DivergedState as e:
        raise DivergedState(f"pre-simulation diverged: {e}") from e
    vt0, _ = model.outputs(x, inputs)
    excitation = inputs.excitation_magnitude
    direction = (inputs.u_d2 / excitation, inputs.u_q2 / excitation)
    logger.info("⚙️ operating point: omega0 = %.6f p.u., Vt = %.6f p.u. (%.3f V)",
                omega0, vt0, vt0 * model.params.base_voltage_v)
    return OperatingPoint(x, omega0, inputs, vt0, excitation, direction)


class _EventQueue:
    """Events keyed by their snapped substep index."""

    def __init__(self, events: List[PerturbationEvent], h: float):
        self.pending = sorted(((int(round(e.time / h)), n, e) for n, e in enumerate(events)),
                              key=lambda item: (item[0], item[1]))

    def due(self, index: int) -> List[PerturbationEvent]:
        fired = []
        while self.pending and self.pending[0][0] <= index:
            fired.append(self.pending.pop(0)[2])
        return fired


class _Simulation:
    """Shared plant/event bookkeeping for both loop modes."""

    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.params = spec.machine.to_params()
        self.model = GeneratorModel(self.params)
        self.op = prepare_operating_point(spec, self.model)
        self.x = self.op.x0.copy()
        self.inputs = self.op.inputs
        self.excitation = self.op.excitation
        self.reference_pu: Optional[float] = None
        self.events = _EventQueue(spec.perturbations(), spec.h)
        self.base = self.params.base_voltage_v

    def apply_due(self, index: int) -> None:
        for event in self.events.due(index):
            t = index * self.spec.h
            if event.target is EventTarget.MECHANICAL_TORQUE:
                self.inputs = replace(self.inputs, tm=event.apply(self.inputs.tm))
            elif event.target is EventTarget.LOAD_RESISTANCE:
                self.inputs = replace(self.inputs, r_load=event.apply(self.inputs.r_load))
            elif event.target is EventTarget.EXCITATION_VOLTAGE:
                self.excitation = event.apply(self.excitation)
                self.inputs = self.inputs.with_excitation(self.excitation, self.op.direction)
            elif event.target is EventTarget.REFERENCE:
                if self.reference_pu is None:
                    logger.warning("reference event at t = %.6g s ignored in open loop", t)
                    continue
                self.reference_pu = event.apply(self.reference_pu)
            logger.info("⚡ t = %.6g s: %s %s %+g", t, event.target.value, event.kind.value, event.value)

    def advance(self, k: int) -> None:
        """Integrate one sample period, applying events that fall inside it."""
        sub = self.spec.substeps
        h = self.spec.h
        for j in range(sub):
            if j:
                self.apply_due(k * sub + j)
            try:
                self.x = self.model.step(self.x, self.inputs, h)
            except DivergedState as e:
                raise DivergedState("plant diverged", time=(k * sub + j + 1) * h) from e

    def plant_row(self, k: int) -> dict:
        vt, te = self.model.outputs(self.x, self.inputs)
        return {
            "time_s": k * self.spec.ts,
            "vt_pu": vt,
            "vt_v": vt * self.base,
            "vt_rel": (vt - self.op.vt0) / self.op.vt0,
            "omega_pu": float(self.x[6]),
            "tm_pu": self.inputs.tm,
            "r_load_pu": self.inputs.r_load,
            "te_pu": te,
        }


def run_open_loop(spec: ScenarioSpec) -> TimeSeriesLog:
    """Plant only, excitation held at nominal apart from scheduled events."""
    if spec.loop_mode is not LoopMode.OPEN_LOOP:
        raise ConfigError(f"scenario '{spec.name}' is not an open-loop scenario")
    sim = _Simulation(spec)
    rows = []
    for k in range(spec.steps + 1):
        sim.apply_due(k * spec.substeps)
        row = sim.plant_row(k)
        row["u_exc_v"] = sim.excitation * sim.base
        rows.append(row)
        if k < spec.steps:
            sim.advance(k)
    frame = pd.DataFrame(rows, columns=OPEN_LOOP_COLUMNS)
    logger.info("✅ open loop '%s' finished: %d samples", spec.name, len(frame))
    return TimeSeriesLog(frame=frame, mode=LoopMode.OPEN_LOOP,
                         event_time=spec.metrics_event_time(),
                         operating_point=MachineState.from_array(sim.op.x0),
                         diagnostics={"omega0": sim.op.omega0, "vt0_pu": sim.op.vt0})


def run_closed_loop(spec: ScenarioSpec, observer: Optional[Observer] = None) -> TimeSeriesLog:
    """
    Plant with online RLS identification and minimum-variance excitation control.

    The estimator and controller see volt-denominated signals: the
    measured terminal voltage (plus dither) and the excitation magnitude.
    ``observer(k, rls_state)`` is called after every control step.
    """
    if spec.loop_mode is not LoopMode.CLOSED_LOOP:
        raise ConfigError(f"scenario '{spec.name}' is not a closed-loop scenario")
    reset_event_counts()
    sim = _Simulation(spec)
    base = sim.base
    ctrl = spec.controller
    est = spec.estimator
    sim.reference_pu = ctrl.reference if ctrl.reference is not None else sim.op.vt0
    u_star_pu = ctrl.u_star if ctrl.u_star is not None else sim.op.excitation

    mv = MvConfig(rho=ctrl.rho, w=sim.reference_pu * base, u_star=u_star_pu * base,
                  u_min=ctrl.u_min * base, u_max=ctrl.u_max * base,
                  dither_variance=ctrl.dither_variance)
    estimator = RlsEstimator(order=est.order, lam=est.lam, p0=est.p0)
    controller = MvController(mv, order=est.order, warmup=est.warmup,
                              u_star_mode=ctrl.u_star_source, tau=ctrl.u_star_tau, ts=spec.ts)
    noise = DitherSource(spec.seed, ctrl.dither_variance)
    names = theta_columns(est.order)

    logger.info("🚀 closed loop '%s': lambda = %g, rho = %g, seed = %d",
                spec.name, est.lam, ctrl.rho, spec.seed)
    rows = []
    for k in range(spec.steps + 1):
        sim.apply_due(k * spec.substeps)
        controller.set_reference(sim.reference_pu * base)
        row = sim.plant_row(k)
        y = row["vt_v"] + noise.sample()
        error = estimator.update(y) if k > 0 else 0.0
        out = controller.compute(y, estimator.model(), estimator.updates)
        estimator.shift(y, out.applied)
        sim.inputs = sim.inputs.with_excitation(out.applied / base, sim.op.direction)

        row.update({
            "y_measured_v": y,
            "u_applied_v": out.applied,
            "u_unclamped_v": out.unclamped,
            "realizable": int(out.realizable),
            "reference_v": sim.reference_pu * base,
            "prediction_error_v": error,
        })
        row.update(zip(names, estimator.theta.tolist()))
        rows.append(row)
        if observer is not None:
            observer(k, estimator.state)
        if k < spec.steps:
            sim.advance(k)

    frame = pd.DataFrame(rows, columns=CLOSED_LOOP_COLUMNS + names)
    diagnostics = {
        "omega0": sim.op.omega0,
        "vt0_pu": sim.op.vt0,
        "covariance_resets": estimator.state.resets,
        "clamped_steps": controller.clamped,
        "unrealizable_steps": controller.held,
        "event_counts": event_summary(),
    }
    logger.info("✅ closed loop '%s' finished: %d samples, %d covariance resets, %d clamped",
                spec.name, len(frame), estimator.state.resets, controller.clamped)
    return TimeSeriesLog(frame=frame, mode=LoopMode.CLOSED_LOOP,
                         event_time=spec.metrics_event_time(),
                         operating_point=MachineState.from_array(sim.op.x0),
                         diagnostics=diagnostics)


def run_scenario(spec: ScenarioSpec, observer: Optional[Observer] = None) -> TimeSeriesLog:
    if spec.loop_mode is LoopMode.OPEN_LOOP:
        return run_open_loop(spec)
    return run_closed_loop(spec, observer)


# ========== Tuning sweep ==========

def cell_seed(seed: int, index: int, seed_mode: str = "xor") -> int:
    """Per-cell generator seed: seed XOR cell index, or the shared base seed."""
    return seed ^ index if seed_mode == "xor" else seed


def cell_spec(base: ScenarioSpec, index: int, lam: float, rho: float,
              seed_mode: str = "xor") -> ScenarioSpec:
    return base.with_overrides(**{
        "estimator.lambda": lam,
        "controller.rho": rho,
        "seed": cell_seed(base.seed, index, seed_mode),
    })


def _run_cell(task) -> dict:
    base, index, lam, rho, seed_mode = task
    row = {"cell": index, "lambda": lam, "rho": rho,
           "seed": cell_seed(base.seed, index, seed_mode), "status": "ok", "error": ""}
    try:
        spec = cell_spec(base, index, lam, rho, seed_mode)
        log = run_closed_loop(spec)
        metrics = compute_metrics(log, spec.metrics.band_fraction, spec.metrics_event_time(),
                                  spec.metrics.final_window)
        row.update(metrics.as_row())
    except DwigError as e:
        logger.error("❌ sweep cell %d (lambda = %g, rho = %g) failed: %s", index, lam, rho, e)
        row.update({"status": "failed", "error": str(e), "settled": False})
    return row


def rank_cells(table: pd.DataFrame) -> pd.DataFrame:
    """
    Order by (unsettled or failed, settling time, overshoot) and label the
    cells: first "Best", other settled cells "Good", the rest "Poor".
    """
    table = table.copy()
    unsettled = (table["status"] != "ok") | ~table["settled"].astype(bool)
    order = sorted(range(len(table)), key=lambda i: (
        bool(unsettled.iloc[i]),
        _sort_value(table["settling_time_s"].iloc[i]),
        _sort_value(table["overshoot_v"].iloc[i]),
        int(table["cell"].iloc[i]),
    ))
    ranks = np.empty(len(table), dtype=int)
    ranks[order] = np.arange(1, len(table) + 1)
    table["rank"] = ranks
    table["label"] = [
        "Poor" if unsettled.iloc[i] else ("Best" if ranks[i] == 1 else "Good")
        for i in range(len(table))
    ]
    return table.sort_values("rank", kind="stable").reset_index(drop=True)


def _sort_value(value) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        return math.inf
    return value if math.isfinite(value) else math.inf


def sweep(base: ScenarioSpec, lambdas: List[float], rhos: List[float],
          cells: Optional[List[Tuple[float, float]]] = None,
          seed_mode: str = "xor", workers: int = 1) -> pd.DataFrame:
    """
    Closed-loop run and metrics for every (lambda, rho) pair.

    Pairs are the cartesian product lambdas x rhos followed by the explicit
    ``cells``. Failed cells are recorded with status "failed" and the sweep
    continues. Returns the ranked metrics table.
    """
    grid = [(float(lam), float(rho)) for lam in lambdas for rho in rhos]
    grid += [(float(lam), float(rho)) for lam, rho in (cells or [])]
    if not grid:
        raise ConfigError("sweep needs at least one (lambda, rho) cell")
    if base.loop_mode is not LoopMode.CLOSED_LOOP:
        raise ConfigError("sweeps run closed-loop scenarios only")

    tasks = [(base, i, lam, rho, seed_mode) for i, (lam, rho) in enumerate(grid)]
    logger.info("🔁 sweep over %d cells with %d worker(s)", len(tasks), workers)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_cell, tasks))
    else:
        rows = [_run_cell(task) for task in tasks]

    columns = ["cell", "lambda", "rho", "seed", "status", "error", "overshoot_v",
               "settling_time_s", "control_spike_v", "steady_control_v", "final_value_v", "settled"]
    table = pd.DataFrame(rows).reindex(columns=columns)
    return rank_cells(table)
