"""Pure-Python (numpy) plant kernel.

Fallback for the compiled ``_ckernel`` extension; both expose the same
functions with identical semantics. The plant state is packed into one
length-11 vector ``y = [q_e (4), omega_e (3), q_d (4)]``.
"""

import math

import numpy as np

from .attitude import gamma_matrix, rotation_matrix, skew

DEG = math.pi / 180.0


def reference_rates(t, ref):
    """Desired rate and its analytic derivative, ``ref = (amp_rad_s, period_x_s, period_yz_s)``."""
    amp, px, pyz = ref
    w = amp * np.array([math.cos(t / px), math.sin(t / pyz), -math.cos(t / pyz)])
    w_dot = amp * np.array([-math.sin(t / px) / px, math.cos(t / pyz) / pyz, math.sin(t / pyz) / pyz])
    return w, w_dot


def disturbance(t, dist):
    """Periodic disturbance torque, ``dist = (omega_dis_rad_s, scale_Nm)``."""
    w, s = dist
    return s * np.array(
        [
            4.0 * math.sin(3.0 * w * t) + 2.0 * math.cos(10.0 * w * t) - 2.0,
            -1.5 * math.sin(2.0 * w * t) + 3.0 * math.cos(5.0 * w * t) + 2.0,
            3.0 * math.sin(10.0 * w * t) - 8.0 * math.cos(4.0 * w * t) + 2.0,
        ]
    )


def lumped_omega(J, omega_e, omega_s, C_e, omega_d, omega_d_dot):
    return J @ np.cross(omega_e, C_e @ omega_d) - J @ (C_e @ omega_d_dot) - np.cross(omega_s, J @ omega_s)


def plant_rhs(y, u, t, J, J_inv, ref, dist):
    q_e, omega_e, q_d = y[0:4], y[4:7], y[7:11]
    C_e = rotation_matrix(q_e)
    omega_d, omega_d_dot = reference_rates(t, ref)
    omega_s = omega_e + C_e @ omega_d
    Omega_e = lumped_omega(J, omega_e, omega_s, C_e, omega_d, omega_d_dot)

    dy = np.empty(11)
    dy[0:3] = gamma_matrix(q_e) @ omega_e
    dy[3] = -0.5 * (q_e[0:3] @ omega_e)
    dy[4:7] = J_inv @ (Omega_e + u + disturbance(t, dist))
    dy[7:10] = 0.5 * (q_d[3] * omega_d + skew(q_d[0:3]) @ omega_d)
    dy[10] = -0.5 * (q_d[0:3] @ omega_d)
    return dy


def rk4_plant_step(y, u, t, dt, J, J_inv, ref, dist):
    """One classical RK4 step with ``u`` held; both quaternions renormalized."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    k1 = plant_rhs(y, u, t, J, J_inv, ref, dist)
    k2 = plant_rhs(y + 0.5 * dt * k1, u, t + 0.5 * dt, J, J_inv, ref, dist)
    k3 = plant_rhs(y + 0.5 * dt * k2, u, t + 0.5 * dt, J, J_inv, ref, dist)
    k4 = plant_rhs(y + dt * k3, u, t + dt, J, J_inv, ref, dist)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[0:4] /= math.sqrt(out[0:4] @ out[0:4])
    out[7:11] /= math.sqrt(out[7:11] @ out[7:11])
    return out
