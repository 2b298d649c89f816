"""
Nonlinear dq0 model of the double-wound induction generator.

Winding 1 feeds a resistive load, winding 2 carries the excitation and
the rotor is a short-circuited cage unless rotor voltages are given.
Vector ordering everywhere is (d1, q1, d2, q2, dr, qr) for fluxes and
currents, with the rotor speed appended as the seventh state.

Voltage equations, per winding k and synchronous speed w1:

    U_dk = R_k I_dk + dPsi_dk/dt - w Psi_qk
    U_qk = R_k I_qk + dPsi_qk/dt + w Psi_dk

with w = w1 on the stator windings and the slip speed w1 - omega on the
rotor. The motion equation is d(omega)/dt = (tm Tb - Te) / (2 H), with the
prime-mover torque tm given in units of the torque base Tb.
"""

from __future__ import annotations

import logging
import math
from typing import Tuple

import numpy as np

from .engine_models import (
    Coupling, Currents6, DIVERGENCE_BOUND, MachineInputs, MachineParams, MachineState,
)
from .errors import ConfigError, DivergedState, SingularInductanceMatrix, SingularSystem

logger = logging.getLogger(__name__)

# Reciprocal condition number below which a matrix counts as singular
SINGULAR_RCOND = 1e-10


def build_inductance_matrix(params: MachineParams) -> np.ndarray:
    """
    Assemble L such that Psi = L . I.

    ``Coupling.LITERAL`` places every coefficient exactly as the printed
    flux equations do, reading the compound rotor currents I_dr1, I_dr2
    as I_dr and I_qr1, I_qr2 as I_qr. The result is generally not
    symmetric. ``Coupling.SYMMETRIC`` is the conventional same-axis
    coupling (d with d, q with q) with a symmetric matrix.

    Raises:
        SingularInductanceMatrix: reciprocal condition number < 1e-10
    """
    p = params
    if p.coupling is Coupling.LITERAL:
        lmat = np.array([
            # Psi_d1 = L1 I_d1 + M_d12 I_q2 + M_d1r (I_dr - I_qr)
            [p.l1, 0.0, 0.0, p.m_d12, p.m_d1r, -p.m_d1r],
            # Psi_q1 = L1 I_q1 + M_q12 I_d2 + M_q1r (I_qr + I_dr)
            [0.0, p.l1, p.m_q12, 0.0, p.m_q1r, p.m_q1r],
            # Psi_d2 = L2 I_d2 + M_q12 I_q1 + M_q2r (I_qr + I_dr)
            [0.0, p.m_q12, p.l2, 0.0, p.m_q2r, p.m_q2r],
            # Psi_q2 = L2 I_q2 + M_d12 I_d1 + M_d2r (I_dr - I_qr)
            [p.m_d12, 0.0, 0.0, p.l2, p.m_d2r, -p.m_d2r],
            # Psi_dr = L3 (I_dr - I_qr) + M_d1r I_d1 - M_d2r I_q2
            [p.m_d1r, 0.0, 0.0, -p.m_d2r, p.l3, -p.l3],
            # Psi_qr = L3 (I_qr - I_dr) + M_q1r I_q1 - M_q2r I_d2
            [0.0, p.m_q1r, -p.m_q2r, 0.0, -p.l3, p.l3],
        ])
    else:
        lmat = np.array([
            [p.l1, 0.0, p.m_d12, 0.0, p.m_d1r, 0.0],
            [0.0, p.l1, 0.0, p.m_q12, 0.0, p.m_q1r],
            [p.m_d12, 0.0, p.l2, 0.0, p.m_d2r, 0.0],
            [0.0, p.m_q12, 0.0, p.l2, 0.0, p.m_q2r],
            [p.m_d1r, 0.0, p.m_d2r, 0.0, p.l3, 0.0],
            [0.0, p.m_q1r, 0.0, p.m_q2r, 0.0, p.l3],
        ])

    rcond = 1.0 / np.linalg.cond(lmat)
    if not rcond >= SINGULAR_RCOND:
        raise SingularInductanceMatrix(
            f"inductance matrix ({p.coupling.value} coupling) is numerically singular, "
            f"rcond = {rcond:.3g}"
        )
    return lmat


def currents_from_fluxes(lmat: np.ndarray, psi) -> Currents6:
    """I = L^-1 . Psi"""
    try:
        return Currents6.from_array(np.linalg.solve(lmat, np.asarray(psi, dtype=float)))
    except np.linalg.LinAlgError as e:
        raise SingularInductanceMatrix(str(e)) from e


def electromagnetic_torque(state: MachineState, currents: Currents6) -> float:
    """Te = (psi_d1 i_q1 - psi_q1 i_d1) + (psi_d2 i_q2 - psi_q2 i_d2); positive Te opposes acceleration."""
    return ((state.psi_d1 * currents.i_q1 - state.psi_q1 * currents.i_d1)
            + (state.psi_d2 * currents.i_q2 - state.psi_q2 * currents.i_d2))


def terminal_voltage(currents: Currents6, r_load: float) -> float:
    """Magnitude of the voltage across the load on winding 1."""
    return r_load * math.hypot(currents.i_d1, currents.i_q1)


def state_derivative(params: MachineParams, state: MachineState, inputs: MachineInputs) -> np.ndarray:
    """Seven-component derivative (six fluxes, then rotor speed)."""
    return GeneratorModel(params).derivative(state.to_array(), inputs)


def step_rk4(params: MachineParams, state: MachineState, inputs: MachineInputs, h: float) -> MachineState:
    """One classical Runge-Kutta step with the inputs held over the step."""
    return MachineState.from_array(GeneratorModel(params).step(state.to_array(), inputs, h))


def steady_state(params: MachineParams, inputs: MachineInputs, omega_fixed: float) -> MachineState:
    """Electrical equilibrium at a fixed rotor speed (the mechanical equation is not enforced)."""
    return GeneratorModel(params).steady_state(inputs, omega_fixed)


def trim_operating_point(params: MachineParams, inputs: MachineInputs,
                         omega_lo: float = 0.5, omega_hi: float = 1.5,
                         grid_points: int = 201) -> Tuple[MachineState, float]:
    """Stable mechanical equilibrium nearest the synchronous speed."""
    return GeneratorModel(params).trim(inputs, omega_lo, omega_hi, grid_points)


class GeneratorModel:
    """
    Array-level plant used inside the simulation loops.

    The inductance matrix is constant, so L and its inverse are built
    once per parameter set.
    """

    def __init__(self, params: MachineParams):
        self.params = params
        self.lmat = build_inductance_matrix(params)
        self.lmat_inv = np.linalg.inv(self.lmat)
        p = params
        self._resistance = np.array([p.r1, p.r1, p.r2, p.r2, p.r3, p.r3])

    # ------------------------------------------------------------------
    # Algebraic outputs
    # ------------------------------------------------------------------

    def currents(self, x: np.ndarray) -> np.ndarray:
        return self.lmat_inv @ x[:6]

    @staticmethod
    def torque(psi: np.ndarray, i: np.ndarray) -> float:
        return float((psi[0] * i[1] - psi[1] * i[0]) + (psi[2] * i[3] - psi[3] * i[2]))

    def outputs(self, x: np.ndarray, inputs: MachineInputs) -> Tuple[float, float]:
        """(terminal voltage, electromagnetic torque), both per unit"""
        i = self.currents(x)
        return inputs.r_load * math.hypot(i[0], i[1]), self.torque(x[:6], i)

    # ------------------------------------------------------------------
    # Dynamics
    # ------------------------------------------------------------------

    def derivative(self, x: np.ndarray, inputs: MachineInputs) -> np.ndarray:
        p = self.params
        psi = x[:6]
        i = self.lmat_inv @ psi
        w1 = p.omega1
        slip = w1 - x[6]
        u_d1 = -inputs.r_load * i[0]
        u_q1 = -inputs.r_load * i[1]
        drop = self._resistance * i
        dx = np.empty(7)
        dx[0] = u_d1 - drop[0] + w1 * psi[1]
        dx[1] = u_q1 - drop[1] - w1 * psi[0]
        dx[2] = inputs.u_d2 - drop[2] + w1 * psi[3]
        dx[3] = inputs.u_q2 - drop[3] - w1 * psi[2]
        dx[4] = inputs.u_dr - drop[4] + slip * psi[5]
        dx[5] = inputs.u_qr - drop[5] - slip * psi[4]
        dx[:6] *= p.omega_base
        dx[6] = (inputs.tm * p.base_torque - self.torque(psi, i)) / (2.0 * p.inertia_h)
        if not np.all(np.abs(dx) <= DIVERGENCE_BOUND):
            raise DivergedState("state derivative left the finite range")
        return dx

    def step(self, x: np.ndarray, inputs: MachineInputs, h: float) -> np.ndarray:
        if not 0 < h <= 0.01:
            raise ConfigError(f"integration step must satisfy 0 < h <= 0.01 s, got {h}")
        k1 = self.derivative(x, inputs)
        k2 = self.derivative(x + 0.5 * h * k1, inputs)
        k3 = self.derivative(x + 0.5 * h * k2, inputs)
        k4 = self.derivative(x + h * k3, inputs)
        x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.abs(x_next) <= DIVERGENCE_BOUND):
            raise DivergedState("machine state left the finite range")
        return x_next

    # ------------------------------------------------------------------
    # Steady state
    # ------------------------------------------------------------------

    def steady_state_matrix(self, r_load: float, omega_fixed: float) -> np.ndarray:
        """
        Rows of 0 = U - R I + W Psi_pair rewritten as A . I = U with Psi = L . I.

        d rows:  R_k I_dk - w_k (L I)_qk = U_dk
        q rows:  R_k I_qk + w_k (L I)_dk = U_qk
        """
        p = self.params
        slip = p.omega1 - omega_fixed
        resistance = self._resistance.copy()
        resistance[:2] += r_load
        speeds = np.array([p.omega1, p.omega1, p.omega1, p.omega1, slip, slip])
        a = np.diag(resistance)
        for r in range(6):
            if r % 2 == 0:
                a[r] -= speeds[r] * self.lmat[r + 1]
            else:
                a[r] += speeds[r] * self.lmat[r - 1]
        return a

    def steady_currents(self, inputs: MachineInputs, omega_fixed: float) -> np.ndarray:
        a = self.steady_state_matrix(inputs.r_load, omega_fixed)
        if not 1.0 / np.linalg.cond(a) >= SINGULAR_RCOND:
            raise SingularSystem(f"steady-state system is singular at omega = {omega_fixed}")
        u = np.array([0.0, 0.0, inputs.u_d2, inputs.u_q2, inputs.u_dr, inputs.u_qr])
        return np.linalg.solve(a, u)

    def steady_state(self, inputs: MachineInputs, omega_fixed: float) -> MachineState:
        i = self.steady_currents(inputs, omega_fixed)
        return MachineState.from_fluxes(self.lmat @ i, omega_fixed)

    def steady_torque(self, inputs: MachineInputs, omega_fixed: float) -> float:
        i = self.steady_currents(inputs, omega_fixed)
        return self.torque(self.lmat @ i, i)

    def trim(self, inputs: MachineInputs, omega_lo: float = 0.5, omega_hi: float = 1.5,
             grid_points: int = 201) -> Tuple[MachineState, float]:
        """
        Speed where Te = tm with Te rising through tm (a stable crossing),
        choosing the crossing nearest omega1 and refining it by bisection.
        """
        def mismatch(w):
            return self.steady_torque(inputs, w) - inputs.tm * self.params.base_torque

        grid = np.linspace(omega_lo, omega_hi, grid_points)
        values = [mismatch(w) for w in grid]
        brackets = [(grid[k], grid[k + 1]) for k in range(grid_points - 1)
                    if values[k] < 0.0 <= values[k + 1]]
        if not brackets:
            raise SingularSystem(
                f"no stable torque balance for tm = {inputs.tm} in [{omega_lo}, {omega_hi}]"
            )
        lo, hi = min(brackets, key=lambda b: abs(0.5 * (b[0] + b[1]) - self.params.omega1))
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mismatch(mid) < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-14:
                break
        omega0 = 0.5 * (lo + hi)
        logger.debug("trimmed operating speed omega0 = %.9f p.u.", omega0)
        return self.steady_state(inputs, omega0), omega0
