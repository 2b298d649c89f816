"""Shared builders for the test suites."""

from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from dwig_engine.config import load_machine_params, validate_scenario
from dwig_engine.engine_models import ArxModel, MachineInputs

PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = PROJECT_ROOT / "config"
SCENARIO_DIR = PROJECT_ROOT / "scenarios"

# Stable (poles 0.5, -0.4, 0.3, 0.2) and minimum-phase 5th-order plant
TRUTH = ArxModel.from_coefficients(a=(-0.6, -0.09, 0.094, -0.012), b=(1.0, 0.8, 0.6, 0.4, 0.3))


def default_params(**changes):
    params = load_machine_params(CONFIG_DIR / "machine_default.yaml")
    return replace(params, **changes) if changes else params


def nominal_inputs(**changes):
    values = dict(u_d2=0.0, u_q2=2.0, tm=2.0, r_load=1.0)
    values.update(changes)
    return MachineInputs(**values)


def machine_dict(name="machine_default.yaml"):
    with open(CONFIG_DIR / name, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def make_scenario(mode="closed_loop", duration=10.0, events=None, **sections):
    data = {
        "name": f"test_{mode}",
        "mode": mode,
        "duration": duration,
        "ts": 0.01,
        "h": 0.001,
        "seed": 7,
        "machine": machine_dict(),
        "events": events or [],
    }
    data.update(sections)
    return validate_scenario(data)


def torque_step(time=5.0, value=0.10):
    return [{"time": time, "target": "mechanical_torque", "kind": "relative_step", "value": value}]


def prbs(rng, samples, amplitude=5.0):
    """Random binary sequence of +/- amplitude."""
    return amplitude * rng.choice([-1.0, 1.0], size=samples)


def gaussian_elimination(a, b):
    """Partial-pivot elimination, kept independent of numpy.linalg."""
    m = np.hstack([np.array(a, dtype=float), np.array(b, dtype=float).reshape(-1, 1)])
    n = m.shape[0]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(m[col:, col])))
        m[[col, pivot]] = m[[pivot, col]]
        for row in range(n):
            if row != col:
                m[row] -= m[row, col] / m[col, col] * m[col]
    return m[:, n] / np.diag(m[:, :n])
