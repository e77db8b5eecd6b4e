# cython: language_level=3
"""Compiled quadratic-phase quadrature used by the Kijowski amplitudes."""
from libc.math cimport cos, sin

import numpy as np


def quadratic_phase_sum(k, weights, taus, double sign):
    """out[i] = sum_j weights[j] * exp(-1j * sign * k[j]**2 * taus[i] / 2)."""
    cdef const double[::1] hk2 = np.ascontiguousarray(0.5 * np.asarray(k, dtype=np.float64) ** 2)
    w = np.asarray(weights, dtype=np.complex128)
    cdef const double[::1] wr = np.ascontiguousarray(w.real)
    cdef const double[::1] wi = np.ascontiguousarray(w.imag)
    cdef const double[::1] tv = np.ascontiguousarray(taus, dtype=np.float64)
    cdef Py_ssize_t nt = tv.shape[0], nk = hk2.shape[0], i, j
    if wr.shape[0] != nk:
        raise ValueError("k and weights must have equal length")
    out_re = np.empty(nt)
    out_im = np.empty(nt)
    cdef double[::1] ore = out_re
    cdef double[::1] oim = out_im
    cdef double re, im, th, c, s, tau
    with nogil:
        for i in range(nt):
            tau = sign * tv[i]
            re = 0.0
            im = 0.0
            for j in range(nk):
                th = hk2[j] * tau
                c = cos(th)
                s = sin(th)
                re = re + wr[j] * c + wi[j] * s
                im = im + wi[j] * c - wr[j] * s
            ore[i] = re
            oim[i] = im
    return out_re + 1j * out_im


cdef double complex _rank1_moments(
    double complex[:, ::1] rho,
    const double complex[::1] u,
    double complex[::1] w,
    double complex[::1] v,
) noexcept nogil:
    # w = u^dag rho, v = rho u; returns u^dag rho u
    cdef Py_ssize_t n = u.shape[0], i, j
    cdef double complex s = 0.0, ui, acc
    for j in range(n):
        w[j] = 0.0
    for i in range(n):
        ui = u[i].conjugate()
        acc = 0.0
        for j in range(n):
            w[j] = w[j] + ui * rho[i, j]
            acc = acc + rho[i, j] * u[j]
        v[i] = acc
        s = s + ui * acc
    return s


cdef void _rank1_stage(
    double complex[:, ::1] src,
    double complex[:, ::1] rho,
    double complex[:, ::1] tmp,
    double complex[:, ::1] acc,
    const double[::1] energies,
    const double complex[::1] u,
    double c,
    bint jumps,
    double complex[::1] w,
    double complex[::1] v,
    int stage,
    double dt,
) noexcept nogil:
    # k = L(src); fold k into the RK4 accumulators for the given stage (0..3)
    cdef Py_ssize_t n = energies.shape[0], i, j
    cdef double complex s = _rank1_moments(src, u, w, v)
    cdef double complex k, cu, cv
    cdef double hc = 0.5 * c
    if not jumps:
        s = 0.0
    for i in range(n):
        cu = u[i]
        cv = v[i]
        for j in range(n):
            k = (
                -1j * (energies[i] - energies[j]) * src[i, j]
                - hc * (cu * w[j] + cv * u[j].conjugate())
                + c * s * cu * u[j].conjugate()
            )
            if stage == 0:
                acc[i, j] = k
                tmp[i, j] = rho[i, j] + 0.5 * dt * k
            elif stage == 1:
                acc[i, j] = acc[i, j] + 2.0 * k
                tmp[i, j] = rho[i, j] + 0.5 * dt * k
            elif stage == 2:
                acc[i, j] = acc[i, j] + 2.0 * k
                tmp[i, j] = rho[i, j] + dt * k
            else:
                rho[i, j] = rho[i, j] + (dt / 6.0) * (acc[i, j] + k)


def rk4_diag_rank1(rho0, energies, u, double c, double dt, Py_ssize_t steps, bint jumps):
    """RK4 for d rho/dt = -i[diag(E), rho] with a rank-one detector ``sqrt(c) u u^dag``.

    Returns the final matrix and the trace after every step (index 0 = start).
    """
    rho_arr = np.array(rho0, dtype=np.complex128, order="C")
    cdef double complex[:, ::1] rho = rho_arr
    cdef const double[::1] E = np.ascontiguousarray(energies, dtype=np.float64)
    cdef const double complex[::1] uu = np.ascontiguousarray(u, dtype=np.complex128)
    cdef Py_ssize_t n = rho.shape[0], i, step
    if rho.shape[1] != n or E.shape[0] != n or uu.shape[0] != n:
        raise ValueError("shape mismatch")
    cdef double complex[:, ::1] tmp = np.empty((n, n), dtype=np.complex128)
    cdef double complex[:, ::1] acc = np.empty((n, n), dtype=np.complex128)
    cdef double complex[::1] w = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] v = np.empty(n, dtype=np.complex128)
    traces = np.empty(steps + 1)
    cdef double[::1] tr = traces
    cdef double t = 0.0
    for i in range(n):
        t += rho[i, i].real
    tr[0] = t
    with nogil:
        for step in range(steps):
            _rank1_stage(rho, rho, tmp, acc, E, uu, c, jumps, w, v, 0, dt)
            _rank1_stage(tmp, rho, tmp, acc, E, uu, c, jumps, w, v, 1, dt)
            _rank1_stage(tmp, rho, tmp, acc, E, uu, c, jumps, w, v, 2, dt)
            _rank1_stage(tmp, rho, tmp, acc, E, uu, c, jumps, w, v, 3, dt)
            t = 0.0
            for i in range(n):
                t += rho[i, i].real
            tr[step + 1] = t
    return rho_arr, traces
