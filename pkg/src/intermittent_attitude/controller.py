"""Constrained backstepping attitude controller.

Outer layer: a norm-bounded virtual rate ``omega_v`` shaped by the ``psat``
gain. Inner layer: the torque law acting on ``z2 = omega_e - omega_v`` with a
tanh disturbance compensator and an auxiliary anti-saturation state ``xi``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .attitude import InertiaModel, gamma_inverse

log = logging.getLogger(__name__)

FF_MODES = ("inertia-weighted", "bare")


class SingularAttitudeError(ValueError):
    """``|q_e0|`` is too small for the virtual rate law to be defined."""


@dataclass(frozen=True)
class PsatCoefficients:
    """Coefficients of the piecewise linear-quadratic shaping function.

    ``K_m`` is the slope that makes the linear and quadratic branches meet
    with matching value and slope at ``+-P_b``. ``K_m_printed`` is the
    alternative closed form ``-a_p (P_b - 1)^2 / P_b``, kept for comparison;
    it does not satisfy the continuity conditions.
    """

    P_b: float
    a_p: float = field(init=False)
    K_m: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.P_b < 1.0:
            raise ValueError(f"P_b must lie in (0, 1), got {self.P_b}")
        object.__setattr__(self, "a_p", 1.0 / (self.P_b**2 - 1.0))
        object.__setattr__(self, "K_m", 2.0 / (self.P_b + 1.0))

    @property
    def K_m_printed(self) -> float:
        return -self.a_p * (self.P_b - 1.0) ** 2 / self.P_b


def psat_scalar(x: float, coeffs: PsatCoefficients) -> float:
    if abs(x) > 1.0:
        log.warning("psat argument %g outside [-1, 1]; clamped", x)
        x = max(-1.0, min(1.0, x))
    if x > coeffs.P_b:
        return coeffs.a_p * (x - 1.0) ** 2 + 1.0
    if x < -coeffs.P_b:
        return -coeffs.a_p * (x + 1.0) ** 2 - 1.0
    return coeffs.K_m * x


def psat(x, coeffs: PsatCoefficients) -> np.ndarray:
    """Componentwise :func:`psat_scalar` (vectorized)."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        log.warning("psat argument outside [-1, 1]; clamped")
        x = np.clip(x, -1.0, 1.0)
    return np.where(
        x > coeffs.P_b,
        coeffs.a_p * (x - 1.0) ** 2 + 1.0,
        np.where(x < -coeffs.P_b, -coeffs.a_p * (x + 1.0) ** 2 - 1.0, coeffs.K_m * x),
    )


@dataclass(frozen=True)
class ControllerGains:
    """Gains of the torque law, the compensators and the analysis coefficients.

    ``K_omega`` is the diagonal of the rate-error gain matrix. ``b1`` and
    ``b2`` are not used by the control law; they are the Young-inequality
    weights entering the stability constants.
    """

    M_omega: float = 0.0175
    P_b: float = 0.6
    K_omega: tuple = (14.0, 13.0, 9.5)
    K_u: float = 0.5
    K_tau: float = 1.0
    p1: float = 2.0
    p2: float = 2.0
    D_m: float = 2e-3
    mu: tuple = (0.01, 0.01, 0.01)
    b1: float = 1.0
    b2: float = 0.002
    U_max: float = 0.05
    eps_xi: float = 1e-6
    ff_mode: str = "inertia-weighted"

    def __post_init__(self):
        object.__setattr__(self, "K_omega", tuple(float(k) for k in self.K_omega))
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        if len(self.K_omega) != 3 or len(self.mu) != 3:
            raise ValueError("K_omega and mu need three entries")
        if self.ff_mode not in FF_MODES:
            raise ValueError(f"ff_mode must be one of {FF_MODES}")
        for name in ("M_omega", "U_max", "eps_xi"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if min(self.mu) <= 0.0:
            raise ValueError("mu entries must be positive")
        PsatCoefficients(self.P_b)

    @property
    def psat_coeffs(self) -> PsatCoefficients:
        return PsatCoefficients(self.P_b)

    @property
    def K_omega_matrix(self) -> np.ndarray:
        return np.diag(self.K_omega)

    @property
    def C1(self) -> float:
        return min(self.K_omega) - (self.b1 + self.K_u + 1.0) / 2.0

    @property
    def C2(self) -> float:
        return self.p1 - (self.K_u + self.K_tau) / 2.0

    @property
    def C3(self) -> float:
        return self.p2 - (self.K_tau + 1.0) / 2.0


def virtual_rate(q_e, gains: ControllerGains, coeffs: PsatCoefficients | None = None) -> np.ndarray:
    """Bounded virtual rate ``-(|q0| M / (2 sqrt 3)) Gamma^{-1} psat(q_ev)``; ``|omega_v| <= M_omega``."""
    q0 = float(q_e[3])
    if abs(q0) <= 1e-6:
        raise SingularAttitudeError(f"|q_e0| = {abs(q0):.3g} too small for the virtual rate law")
    coeffs = coeffs or gains.psat_coeffs
    scale = abs(q0) * gains.M_omega / (2.0 * math.sqrt(3.0))
    return -scale * (gamma_inverse(q_e) @ psat(q_e[:3], coeffs))


def virtual_rate_derivative(previous, current, dt: float) -> np.ndarray:
    """Backward difference of the virtual rate; zero when there is no previous sample."""
    if previous is None:
        return np.zeros(3)
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return (np.asarray(current, dtype=float) - np.asarray(previous, dtype=float)) / dt


def disturbance_compensator(z2, gains: ControllerGains) -> np.ndarray:
    return gains.D_m * np.tanh(np.asarray(z2, dtype=float) / np.asarray(gains.mu))


@dataclass(frozen=True)
class AuxState:
    xi: np.ndarray = field(default_factory=lambda: np.zeros(3))
    last_delta_tau: np.ndarray = field(default_factory=lambda: np.zeros(3))


def aux_rhs(xi, delta_tau, gains: ControllerGains) -> np.ndarray:
    """Right-hand side of the anti-saturation system with ``|xi|^2`` floored at ``eps_xi^2``."""
    xi = np.asarray(xi, dtype=float)
    dtau = np.asarray(delta_tau, dtype=float)
    nxi2 = max(float(xi @ xi), gains.eps_xi**2)
    return -(gains.p1 + gains.p2 * float(dtau @ dtau) / nxi2) * xi + gains.K_tau * np.tanh(dtau)


def _decay_flow(xi: np.ndarray, dtau2: float, h: float, gains: ControllerGains) -> np.ndarray:
    # exact flow of xi' = -(p1 + p2 |dtau|^2 / |xi|^2) xi: direction kept,
    # r^2(h) = (r0^2 + c) exp(-2 p1 h) - c with c = p2 |dtau|^2 / p1, floored at 0
    r2 = float(xi @ xi)
    if r2 == 0.0:
        return xi
    c = gains.p2 * dtau2 / gains.p1
    r2_new = (r2 + c) * math.exp(-2.0 * gains.p1 * h) - c
    if r2_new <= 0.0:
        return np.zeros(3)
    return xi * math.sqrt(r2_new / r2)


def aux_step(aux: AuxState, delta_tau, dt: float, gains: ControllerGains) -> AuxState:
    """Advance ``xi`` by ``dt`` with ``delta_tau`` held.

    Strang splitting: exact half-step of the norm-decay term, full step of
    the constant ``K_tau tanh(delta_tau)`` forcing, exact half-step of decay.
    The decay term is stiff near ``xi = 0`` (its gain grows like
    ``|delta_tau|^2 / |xi|^2``), where an explicit RK4 step diverges.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    dtau = np.asarray(delta_tau, dtype=float)
    dtau2 = float(dtau @ dtau)
    xi = _decay_flow(np.asarray(aux.xi, dtype=float), dtau2, 0.5 * dt, gains)
    xi = xi + dt * gains.K_tau * np.tanh(dtau)
    xi = _decay_flow(xi, dtau2, 0.5 * dt, gains)
    return AuxState(xi=xi, last_delta_tau=dtau.copy())


def torque_command(
    q_e,
    z2,
    Omega_e,
    omega_v_dot,
    xi,
    gains: ControllerGains,
    J: InertiaModel,
) -> np.ndarray:
    """Unsaturated control torque.

    ``tau = -Omega_e - K_omega z2 - d_hat + ff - K_u xi - P_q`` with
    ``P_q = Gamma_e q_ev = (q_e0 / 2) q_ev`` and ``ff = J omega_v_dot``
    (``ff = omega_v_dot`` when ``gains.ff_mode == "bare"``).
    """
    z2 = np.asarray(z2, dtype=float)
    omega_v_dot = np.asarray(omega_v_dot, dtype=float)
    ff = J.J @ omega_v_dot if gains.ff_mode == "inertia-weighted" else omega_v_dot
    P_q = 0.5 * float(q_e[3]) * np.asarray(q_e[:3], dtype=float)
    return (
        -np.asarray(Omega_e, dtype=float)
        - np.asarray(gains.K_omega) * z2
        - disturbance_compensator(z2, gains)
        + ff
        - gains.K_u * np.asarray(xi, dtype=float)
        - P_q
    )


def saturate(tau_e, U_max: float) -> np.ndarray:
    """Per-axis clamp of the commanded torque to ``[-U_max, U_max]``."""
    if U_max <= 0.0:
        raise ValueError("U_max must be positive")
    return np.clip(np.asarray(tau_e, dtype=float), -U_max, U_max)
