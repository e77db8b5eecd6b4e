"""Pure numpy twin of the compiled kernels in ``_kernels.pyx``."""
import numpy as np

# complex128 entries per temporary phase block
_BLOCK = 1 << 21


def quadratic_phase_sum(k, weights, taus, sign):
    """out[i] = sum_j weights[j] * exp(-1j * sign * k[j]**2 * taus[i] / 2)."""
    hk2 = 0.5 * np.asarray(k, dtype=np.float64) ** 2
    w = np.asarray(weights, dtype=np.complex128)
    taus = np.asarray(taus, dtype=np.float64)
    if w.shape != hk2.shape:
        raise ValueError("k and weights must have equal length")
    out = np.empty(taus.shape[0], dtype=np.complex128)
    rows = max(1, _BLOCK // max(1, hk2.size))
    for start in range(0, taus.shape[0], rows):
        tb = taus[start:start + rows]
        phase = np.exp(-1j * sign * np.outer(tb, hk2))
        out[start:start + rows] = phase @ w
    return out


def _rank1_rhs(rho, gen, u, c, jumps):
    w = u.conj() @ rho
    v = rho @ u
    out = gen * rho - 0.5 * c * (np.outer(u, w) + np.outer(v, u.conj()))
    if jumps:
        out += c * (u.conj() @ v) * np.outer(u, u.conj())
    return out


def rk4_diag_rank1(rho0, energies, u, c, dt, steps, jumps):
    """RK4 for d rho/dt = -i[diag(E), rho] with a rank-one detector ``sqrt(c) u u^dag``.

    Returns the final matrix and the trace after every step (index 0 = start).
    """
    rho = np.array(rho0, dtype=np.complex128)
    e = np.asarray(energies, dtype=np.float64)
    u = np.asarray(u, dtype=np.complex128)
    if rho.shape != (e.size, e.size) or u.shape != e.shape:
        raise ValueError("shape mismatch")
    gen = -1j * (e[:, None] - e[None, :])
    traces = np.empty(steps + 1)
    traces[0] = np.trace(rho).real
    for step in range(steps):
        k1 = _rank1_rhs(rho, gen, u, c, jumps)
        k2 = _rank1_rhs(rho + 0.5 * dt * k1, gen, u, c, jumps)
        k3 = _rank1_rhs(rho + 0.5 * dt * k2, gen, u, c, jumps)
        k4 = _rank1_rhs(rho + dt * k3, gen, u, c, jumps)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traces[step + 1] = np.trace(rho).real
    return rho, traces
