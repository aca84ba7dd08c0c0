# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled plant kernel; same interface and semantics as ``_pykernel``."""

import numpy as np

from libc.math cimport cos, sin, sqrt


cdef inline void _cross(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline void _matvec(const double* M, const double* v, double* out) noexcept nogil:
    cdef int i
    for i in range(3):
        out[i] = M[3 * i] * v[0] + M[3 * i + 1] * v[1] + M[3 * i + 2] * v[2]


cdef void _rhs(const double* y, const double* u, double t, const double* J, const double* Ji,
               double amp, double px, double pyz, double wdis, double dscale,
               double* dy) noexcept nogil:
    cdef double v0 = y[0], v1 = y[1], v2 = y[2], q0 = y[3]
    cdef double C[9]
    cdef double wd[3]
    cdef double wdd[3]
    cdef double cwd[3]
    cdef double cwdd[3]
    cdef double ws[3]
    cdef double tmp[3]
    cdef double tmp2[3]
    cdef double Om[3]
    cdef double rhs[3]
    cdef double d[3]
    cdef double s = q0 * q0 - (v0 * v0 + v1 * v1 + v2 * v2)
    cdef int i

    # C_e = (q0^2 - |v|^2) I + 2 v v^T - 2 q0 v^x
    C[0] = s + 2.0 * v0 * v0
    C[1] = 2.0 * v0 * v1 + 2.0 * q0 * v2
    C[2] = 2.0 * v0 * v2 - 2.0 * q0 * v1
    C[3] = 2.0 * v1 * v0 - 2.0 * q0 * v2
    C[4] = s + 2.0 * v1 * v1
    C[5] = 2.0 * v1 * v2 + 2.0 * q0 * v0
    C[6] = 2.0 * v2 * v0 + 2.0 * q0 * v1
    C[7] = 2.0 * v2 * v1 - 2.0 * q0 * v0
    C[8] = s + 2.0 * v2 * v2

    wd[0] = amp * cos(t / px)
    wd[1] = amp * sin(t / pyz)
    wd[2] = -amp * cos(t / pyz)
    wdd[0] = -amp * sin(t / px) / px
    wdd[1] = amp * cos(t / pyz) / pyz
    wdd[2] = amp * sin(t / pyz) / pyz

    d[0] = dscale * (4.0 * sin(3.0 * wdis * t) + 2.0 * cos(10.0 * wdis * t) - 2.0)
    d[1] = dscale * (-1.5 * sin(2.0 * wdis * t) + 3.0 * cos(5.0 * wdis * t) + 2.0)
    d[2] = dscale * (3.0 * sin(10.0 * wdis * t) - 8.0 * cos(4.0 * wdis * t) + 2.0)

    _matvec(C, wd, cwd)
    _matvec(C, wdd, cwdd)
    for i in range(3):
        ws[i] = y[4 + i] + cwd[i]

    # Omega_e = J (w_e x C w_d) - J C w_d_dot - w_s x J w_s
    _cross(&y[4], cwd, tmp)
    for i in range(3):
        tmp[i] -= cwdd[i]
    _matvec(J, tmp, Om)
    _matvec(J, ws, tmp)
    _cross(ws, tmp, tmp2)
    for i in range(3):
        rhs[i] = Om[i] - tmp2[i] + u[i] + d[i]
    _matvec(Ji, rhs, &dy[4])

    # error kinematics
    _cross(y, &y[4], tmp)
    for i in range(3):
        dy[i] = 0.5 * (q0 * y[4 + i] + tmp[i])
    dy[3] = -0.5 * (v0 * y[4] + v1 * y[5] + v2 * y[6])

    # reference kinematics
    _cross(&y[7], wd, tmp)
    for i in range(3):
        dy[7 + i] = 0.5 * (y[10] * wd[i] + tmp[i])
    dy[10] = -0.5 * (y[7] * wd[0] + y[8] * wd[1] + y[9] * wd[2])


def rk4_plant_step(y, u, double t, double dt, J, J_inv, ref, dist):
    """One classical RK4 step with ``u`` held; both quaternions renormalized."""
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef const double[::1] Jv = np.ascontiguousarray(J, dtype=np.float64).ravel()
    cdef const double[::1] Jiv = np.ascontiguousarray(J_inv, dtype=np.float64).ravel()
    cdef double amp = ref[0], px = ref[1], pyz = ref[2]
    cdef double wdis = dist[0], dscale = dist[1]
    out = np.empty(11)
    cdef double[::1] ov = out
    cdef double k1[11]
    cdef double k2[11]
    cdef double k3[11]
    cdef double k4[11]
    cdef double ys[11]
    cdef double n
    cdef int i
    with nogil:
        _rhs(&yv[0], &uv[0], t, &Jv[0], &Jiv[0], amp, px, pyz, wdis, dscale, k1)
        for i in range(11):
            ys[i] = yv[i] + 0.5 * dt * k1[i]
        _rhs(ys, &uv[0], t + 0.5 * dt, &Jv[0], &Jiv[0], amp, px, pyz, wdis, dscale, k2)
        for i in range(11):
            ys[i] = yv[i] + 0.5 * dt * k2[i]
        _rhs(ys, &uv[0], t + 0.5 * dt, &Jv[0], &Jiv[0], amp, px, pyz, wdis, dscale, k3)
        for i in range(11):
            ys[i] = yv[i] + dt * k3[i]
        _rhs(ys, &uv[0], t + dt, &Jv[0], &Jiv[0], amp, px, pyz, wdis, dscale, k4)
        for i in range(11):
            ov[i] = yv[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        n = sqrt(ov[0] * ov[0] + ov[1] * ov[1] + ov[2] * ov[2] + ov[3] * ov[3])
        for i in range(4):
            ov[i] /= n
        n = sqrt(ov[7] * ov[7] + ov[8] * ov[8] + ov[9] * ov[9] + ov[10] * ov[10])
        for i in range(7, 11):
            ov[i] /= n
    return out
