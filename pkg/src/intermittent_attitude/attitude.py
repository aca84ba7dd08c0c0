"""Quaternion algebra and attitude-error kinematics.

Convention
----------
Quaternions are stored scalar-last, ``q = [qv1, qv2, qv3, q0]``, and composed
with the Hamilton product. The attitude error between the desired attitude
``q_d`` and the current attitude ``q_s`` is

    q_e = q_d^{-1} (x) q_s

so ``q_e`` is the identity at perfect tracking. ``rotation_matrix(q_e)`` maps
vectors expressed in the target frame into the current body frame, which is
consistent with the body-rate kinematics ``q_dot = 1/2 q (x) [w; 0]``.

No sign-flip (shortest rotation) logic is applied; ``q`` and ``-q`` are both
left as they come.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])


class InvalidInputError(ValueError):
    """Raised for non-finite or structurally invalid inputs."""


def _as_quat(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise InvalidInputError(f"quaternion must have shape (4,), got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise InvalidInputError(f"non-finite quaternion {q}")
    return q


def skew(v) -> np.ndarray:
    """Cross-product matrix ``v^x`` such that ``skew(v) @ b == cross(v, b)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = math.sqrt(float(q @ q))
    if n == 0.0 or not math.isfinite(n):
        raise InvalidInputError(f"cannot normalize quaternion {q}")
    return q / n


def conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([-q[0], -q[1], -q[2], q[3]])


def multiply(p, q) -> np.ndarray:
    """Hamilton product ``p (x) q`` of scalar-last quaternions."""
    pv, p0 = np.asarray(p[:3], dtype=float), float(p[3])
    qv, q0 = np.asarray(q[:3], dtype=float), float(q[3])
    vec = p0 * qv + q0 * pv + np.cross(pv, qv)
    return np.array([vec[0], vec[1], vec[2], p0 * q0 - pv @ qv])


def from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    s = math.sin(0.5 * angle)
    return np.array([axis[0] * s, axis[1] * s, axis[2] * s, math.cos(0.5 * angle)])


def quat_error(q_d, q_s) -> np.ndarray:
    """Error quaternion ``q_d^{-1} (x) q_s``, renormalized.

    Both inputs must be unit quaternions to within 1e-6.
    """
    q_d = _as_quat(q_d)
    q_s = _as_quat(q_s)
    for name, q in (("q_d", q_d), ("q_s", q_s)):
        if abs(float(q @ q) - 1.0) > 2e-6:
            raise InvalidInputError(f"{name} is not unit-norm: |q| = {np.linalg.norm(q)}")
    return normalize(multiply(conjugate(q_d), q_s))


def gamma_matrix(q_e) -> np.ndarray:
    """Kinematics Jacobian ``1/2 (q_e0 I + q_ev^x)``."""
    qv, q0 = q_e[:3], q_e[3]
    return 0.5 * (q0 * np.eye(3) + skew(qv))


def gamma_inverse(q_e) -> np.ndarray:
    """Closed-form inverse of :func:`gamma_matrix` for a unit ``q_e`` with ``q_e0 != 0``.

    Uses ``(q0 I + v^x)^{-1} = (q0^2 I - q0 v^x + v v^T) / q0``, valid when
    ``q0^2 + |v|^2 = 1``.
    """
    qv, q0 = np.asarray(q_e[:3], dtype=float), float(q_e[3])
    if q0 == 0.0:
        raise ZeroDivisionError("gamma_matrix is singular at q_e0 = 0")
    return 2.0 * (q0 * q0 * np.eye(3) - q0 * skew(qv) + np.outer(qv, qv)) / q0


def rotation_matrix(q_e) -> np.ndarray:
    """Target-to-body transformation ``C_e``.

    ``C_e = (q0^2 - |qv|^2) I + 2 qv qv^T - 2 q0 qv^x``
    """
    qv, q0 = np.asarray(q_e[:3], dtype=float), float(q_e[3])
    return (q0 * q0 - qv @ qv) * np.eye(3) + 2.0 * np.outer(qv, qv) - 2.0 * q0 * skew(qv)


def kinematics_rhs(q_e, omega_e) -> tuple[np.ndarray, float]:
    """Error-quaternion rates ``(q_ev_dot, q_e0_dot)`` driven by ``omega_e``."""
    omega_e = np.asarray(omega_e, dtype=float)
    qv_dot = gamma_matrix(q_e) @ omega_e
    q0_dot = -0.5 * float(np.asarray(q_e[:3]) @ omega_e)
    return qv_dot, q0_dot


def sym_eig_bounds(J, tol: float = 1e-9) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric 3x3 matrix.

    Closed-form trigonometric solution of the characteristic cubic.

    Raises
    ------
    InvalidInputError
        If ``J`` is not finite, not 3x3, or asymmetric beyond ``tol``.
    """
    J = np.asarray(J, dtype=float)
    if J.shape != (3, 3) or not np.all(np.isfinite(J)):
        raise InvalidInputError("J must be a finite 3x3 matrix")
    if np.max(np.abs(J - J.T)) > tol:
        raise InvalidInputError("J must be symmetric")
    J = 0.5 * (J + J.T)

    p1 = J[0, 1] ** 2 + J[0, 2] ** 2 + J[1, 2] ** 2
    q = np.trace(J) / 3.0
    if p1 == 0.0:
        d = np.diag(J)
        return float(d.min()), float(d.max())
    p2 = (J[0, 0] - q) ** 2 + (J[1, 1] - q) ** 2 + (J[2, 2] - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    B = (J - q * np.eye(3)) / p
    r = float(np.linalg.det(B)) / 2.0
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    lam_max = q + 2.0 * p * math.cos(phi)
    lam_min = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    return lam_min, lam_max


@dataclass(frozen=True)
class InertiaModel:
    """Known, symmetric positive-definite inertia matrix with its eigenbounds."""

    J: np.ndarray
    lambda_min: float = field(init=False)
    lambda_max: float = field(init=False)
    J_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        lo, hi = sym_eig_bounds(J, tol=1e-12)
        if lo <= 0.0:
            raise InvalidInputError(f"inertia matrix is not positive definite (lambda_min={lo})")
        J.setflags(write=False)
        J_inv = np.linalg.inv(J)
        J_inv.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "lambda_min", lo)
        object.__setattr__(self, "lambda_max", hi)
        object.__setattr__(self, "J_inv", J_inv)
