"""Rigid-body attitude-error plant: reference motion, disturbance and RK4 stepping."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import _pykernel, kernels
from .attitude import IDENTITY, InertiaModel, gamma_matrix, kinematics_rhs, normalize, rotation_matrix

DEG = math.pi / 180.0


class IntegrationError(RuntimeError):
    """A plant step produced a non-finite state."""

    def __init__(self, t: float, message: str = "non-finite state"):
        super().__init__(f"{message} at t = {t:.6g} s")
        self.t = t


@dataclass(frozen=True)
class ReferenceTrajectory:
    """Desired attitude motion.

    The desired body rate, expressed in the target frame, is
    ``amplitude * [cos(t/Tx), sin(t/Tyz), -cos(t/Tyz)]`` with the amplitude
    given in deg/s.
    """

    q_d0: tuple = tuple(IDENTITY)
    amplitude_deg_s: float = 0.3
    period_x_s: float = 80.0
    period_yz_s: float = 100.0

    @property
    def params(self) -> tuple[float, float, float]:
        return (self.amplitude_deg_s * DEG, self.period_x_s, self.period_yz_s)

    def rates(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """``(omega_d, omega_d_dot)`` in rad/s and rad/s^2."""
        return _pykernel.reference_rates(t, self.params)


@dataclass(frozen=True)
class DisturbanceModel:
    """Periodic external torque with base frequency ``omega_dis`` and scale ``scale_Nm``."""

    omega_dis: float = 0.01
    scale_Nm: float = 1e-4

    @property
    def params(self) -> tuple[float, float]:
        return (self.omega_dis, self.scale_Nm)

    def torque(self, t: float) -> np.ndarray:
        return _pykernel.disturbance(t, self.params)

    def max_norm(self, t_end: float, n: int = 200_001) -> float:
        """Dense grid estimate of ``max |d(t)|`` on ``[0, t_end]``."""
        if self.scale_Nm == 0.0:
            return 0.0
        w, s = self.params
        t = np.linspace(0.0, t_end, n)
        d = s * np.stack(
            [
                4 * np.sin(3 * w * t) + 2 * np.cos(10 * w * t) - 2,
                -1.5 * np.sin(2 * w * t) + 3 * np.cos(5 * w * t) + 2,
                3 * np.sin(10 * w * t) - 8 * np.cos(4 * w * t) + 2,
            ]
        )
        return float(np.max(np.linalg.norm(d, axis=0)))


@dataclass(frozen=True)
class RigidBodyState:
    q_e: np.ndarray
    omega_e: np.ndarray
    q_d: np.ndarray
    xi: np.ndarray

    @classmethod
    def initial(cls, q_s0, omega_s0, reference: ReferenceTrajectory) -> "RigidBodyState":
        """Build the error state from the absolute initial attitude and rate."""
        from .attitude import quat_error

        q_d0 = normalize(reference.q_d0)
        q_e = quat_error(q_d0, normalize(q_s0))
        omega_d, _ = reference.rates(0.0)
        omega_e = np.asarray(omega_s0, dtype=float) - rotation_matrix(q_e) @ omega_d
        return cls(q_e=q_e, omega_e=omega_e, q_d=q_d0, xi=np.zeros(3))

    def packed(self) -> np.ndarray:
        return np.concatenate([self.q_e, self.omega_e, self.q_d])

    def with_packed(self, y) -> "RigidBodyState":
        return replace(self, q_e=y[0:4].copy(), omega_e=y[4:7].copy(), q_d=y[7:11].copy())

    def omega_s(self, reference: ReferenceTrajectory, t: float) -> np.ndarray:
        omega_d, _ = reference.rates(t)
        return self.omega_e + rotation_matrix(self.q_e) @ omega_d


def reference_signals(
    t: float, reference: ReferenceTrajectory | None = None, disturbance: DisturbanceModel | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(omega_d, omega_d_dot, d)`` at time ``t``; defaults are the demo scenario."""
    reference = reference or ReferenceTrajectory()
    disturbance = disturbance or DisturbanceModel()
    omega_d, omega_d_dot = reference.rates(t)
    return omega_d, omega_d_dot, disturbance.torque(t)


def lumped_omega_term(J: InertiaModel, omega_e, omega_s, C_e, omega_d, omega_d_dot) -> np.ndarray:
    """``J w_e^x C_e w_d - J C_e w_d_dot - w_s^x J w_s``."""
    return _pykernel.lumped_omega(J.J, omega_e, omega_s, C_e, omega_d, omega_d_dot)


def dynamics_rhs(
    state: RigidBodyState,
    u,
    t: float,
    J: InertiaModel,
    reference: ReferenceTrajectory,
    disturbance: DisturbanceModel,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Time derivatives ``(q_e_dot, omega_e_dot, q_d_dot)``.

    ``omega_s`` is reconstructed as ``omega_e + C_e omega_d`` and never stored.
    """
    qv_dot, q0_dot = kinematics_rhs(state.q_e, state.omega_e)
    C_e = rotation_matrix(state.q_e)
    omega_d, omega_d_dot = reference.rates(t)
    omega_s = state.omega_e + C_e @ omega_d
    Omega_e = lumped_omega_term(J, state.omega_e, omega_s, C_e, omega_d, omega_d_dot)
    omega_e_dot = J.J_inv @ (Omega_e + np.asarray(u, dtype=float) + disturbance.torque(t))
    q_d_dot = np.append(gamma_matrix(state.q_d) @ omega_d, -0.5 * state.q_d[:3] @ omega_d)
    return np.append(qv_dot, q0_dot), omega_e_dot, q_d_dot


def rk4_step(
    state: RigidBodyState,
    u,
    t: float,
    dt: float,
    J: InertiaModel,
    reference: ReferenceTrajectory,
    disturbance: DisturbanceModel,
) -> RigidBodyState:
    """Advance the plant by ``dt`` with the actuator torque ``u`` zero-order held.

    Raises
    ------
    IntegrationError
        If the step produces a non-finite state.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    y = kernels.rk4_plant_step(state.packed(), u, t, dt, J.J, J.J_inv, reference.params, disturbance.params)
    if not np.all(np.isfinite(y)):
        raise IntegrationError(t)
    return state.with_packed(y)


def rk4(f, t: float, y, dt: float):
    """Generic classical RK4 step for ``y' = f(t, y)``."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def propagate_reference(q_d, omega_d, dt: float) -> np.ndarray:
    """Propagate ``q_d`` under a constant body rate ``omega_d`` with one RK4 step."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    omega_d = np.asarray(omega_d, dtype=float)

    def f(_t, q):
        return np.append(gamma_matrix(q) @ omega_d, -0.5 * q[:3] @ omega_d)

    return normalize(rk4(f, 0.0, np.asarray(q_d, dtype=float), dt))
