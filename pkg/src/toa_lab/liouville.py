"""Density matrices and the dissipative Liouville equation with one detector.

    d rho/dt = -i [H, rho] + F rho F^dag - 1/2 {F^dag F, rho}

For a multiplication-operator detector ``(F psi)(x) = f(x) psi(x)`` the jump
term equals ``F^dag rho F``; the ``F rho F^dag`` ordering keeps the trace
conserved for any ``F``. Dropping the jump term gives the detection-removed
channel whose trace loss is the probability of having been detected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh

from . import _backend
from .errors import GridError, ResourceError, StepSizeError
from .propagators import DetectorSpec, damped_evolve
from .wavepacket import Grid1D, WaveFunction

#: Stability heuristic for the RK4 step: ``dt * ||generator part|| < STABILITY``.
STABILITY = 0.1
#: Largest grid handled by :func:`eeqt_crosscheck`.
MAX_KERNEL_POINTS = 256


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Matrix in an orthonormal basis, optionally tied to a position grid.

    With a grid, the basis is ``e_j / sqrt(dx)`` and :attr:`kernel` gives
    ``rho(x_i, x_j) = matrix / dx``.
    """

    matrix: np.ndarray
    grid: Grid1D | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if self.grid is not None and m.shape[0] != self.grid.n:
            raise GridError("density matrix does not match its grid")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def kernel(self) -> np.ndarray:
        if self.grid is None:
            raise GridError("density matrix has no grid")
        return self.matrix / self.grid.dx

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def purity_error(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix - self.matrix)))

    def diagnostics(self, herm_tol=1e-10, trace_tol=1e-8, pos_tol=1e-8) -> list[str]:
        out = []
        if self.hermiticity_error() > herm_tol:
            out.append(f"not Hermitian (error {self.hermiticity_error():.3g})")
        if abs(self.trace - 1.0) > trace_tol:
            out.append(f"trace {self.trace!r} differs from 1")
        if self.min_eigenvalue() < -pos_tol:
            out.append(f"negative eigenvalue {self.min_eigenvalue():.3g}")
        return out


def pure_state(psi) -> DensityMatrix:
    """Projector onto ``psi`` (a vector or a :class:`WaveFunction`)."""
    grid = None
    if isinstance(psi, WaveFunction):
        grid = psi.grid
        psi = psi.amplitudes
    v = np.asarray(psi, dtype=np.complex128).ravel()
    nrm2 = float(np.vdot(v, v).real)
    if nrm2 == 0.0:
        raise ValueError("cannot build a pure state from the zero vector")
    return DensityMatrix(np.outer(v, v.conj()) / nrm2, grid)


class KineticOperator(LinearOperator):
    """``-1/2 d^2/dx^2`` on a periodic grid, applied spectrally column by column."""

    def __init__(self, grid: Grid1D):
        self.grid = grid
        k = 2.0 * math.pi * np.fft.fftfreq(grid.n, grid.dx)
        self.energies = 0.5 * k**2
        self.spectral_radius = float(self.energies.max())
        super().__init__(dtype=np.complex128, shape=(grid.n, grid.n))

    def _matmat(self, X):
        return np.fft.ifft(self.energies[:, None] * np.fft.fft(X, axis=0), axis=0)

    def _matvec(self, x):
        return self._matmat(np.asarray(x).reshape(-1, 1)).ravel()

    def _adjoint(self):
        return self

    def todense(self) -> np.ndarray:
        return self._matmat(np.eye(self.grid.n, dtype=np.complex128))


class RankOneOperator(LinearOperator):
    """``scale * u u^dag`` for a unit vector ``u``."""

    def __init__(self, u, scale: float):
        self.u = np.asarray(u, dtype=np.complex128).ravel()
        self.scale = float(scale)
        n = self.u.size
        super().__init__(dtype=np.complex128, shape=(n, n))

    def _matmat(self, X):
        return self.scale * np.outer(self.u, self.u.conj() @ X)

    def _matvec(self, x):
        return self._matmat(np.asarray(x).reshape(-1, 1)).ravel()

    def _adjoint(self):
        return self

    @property
    def spectral_norm(self) -> float:
        return abs(self.scale) * float(np.vdot(self.u, self.u).real)


@dataclass(frozen=True, eq=False)
class LindbladModel:
    """Hamiltonian ``H`` and detector operator ``F``.

    ``H`` is a dense Hermitian matrix, a 1-D array of eigenvalues (diagonal
    ``H``), or a Hermitian :class:`LinearOperator`. ``F`` is a dense matrix,
    a 1-D array ``f`` meaning multiplication by ``f``, a
    :class:`LinearOperator`, or ``None``. ``F_t``, if given, overrides ``F``
    with ``F_t(t)`` evaluated at the RK stage times.
    """

    H: object
    F: object = None
    F_t: Callable[[float], object] | None = None

    def __post_init__(self):
        if isinstance(self.H, np.ndarray):
            h = np.asarray(self.H)
            if h.ndim == 1:
                if np.iscomplexobj(h) and np.any(h.imag != 0):
                    raise ValueError("diagonal H must be real")
                h = h.real.astype(float)
            elif h.ndim != 2 or h.shape[0] != h.shape[1]:
                raise ValueError("H must be square")
            else:
                h = h.astype(np.complex128)
                if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-10:
                    raise ValueError("H must be Hermitian")
            object.__setattr__(self, "H", h)
        if isinstance(self.F, (np.ndarray, list, tuple)):
            f = np.asarray(self.F, dtype=np.complex128)
            if f.ndim not in (1, 2) or f.shape[0] != self.dim or (f.ndim == 2 and f.shape[1] != self.dim):
                raise ValueError("F does not match the dimension of H")
            object.__setattr__(self, "F", f)
        elif self.F is not None and self.F.shape != (self.dim, self.dim):
            raise ValueError("F does not match the dimension of H")

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def detector(self, t: float = 0.0):
        return self.F_t(t) if self.F_t is not None else self.F

    def h_norm(self) -> float:
        if isinstance(self.H, np.ndarray):
            if self.H.ndim == 1:
                return float(np.max(np.abs(self.H), initial=0.0))
            return float(np.linalg.norm(self.H, 2))
        radius = getattr(self.H, "spectral_radius", None)
        if radius is not None:
            return float(radius)
        return float(abs(eigsh(self.H, k=1, which="LM", return_eigenvectors=False)[0]))

    def f_norm(self, t: float = 0.0) -> float:
        """Spectral norm of ``F^dag F``."""
        f = self.detector(t)
        if f is None:
            return 0.0
        if isinstance(f, np.ndarray):
            f = np.asarray(f)
            if f.ndim == 1:
                return float(np.max(np.abs(f) ** 2, initial=0.0))
            return float(np.linalg.norm(f, 2) ** 2)
        if hasattr(f, "spectral_norm"):
            return float(f.spectral_norm) ** 2
        return float(eigsh(f.H @ f, k=1, which="LM", return_eigenvectors=False)[0])


def _check_shape(rho: np.ndarray, model: LindbladModel) -> None:
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"rho of shape {rho.shape} does not match model dimension {model.dim}")


def liouville_rhs(
    rho,
    model: LindbladModel,
    t: float = 0.0,
    jumps: bool = True,
    assume_hermitian: bool = False,
) -> np.ndarray:
    """Right-hand side of the Liouville equation.

    ``jumps=False`` drops ``F rho F^dag``. ``assume_hermitian`` lets the
    commutator reuse ``(H rho)^dag = rho H``.
    """
    rho = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    _check_shape(rho, model)
    H = model.H
    if isinstance(H, np.ndarray) and H.ndim == 1:
        out = -1j * (H[:, None] - H[None, :]) * rho
    else:
        h_rho = H @ rho
        rho_h = h_rho.conj().T if assume_hermitian else (H @ rho.conj().T).conj().T
        out = -1j * (h_rho - rho_h)
    f = model.detector(t)
    if f is None:
        return out
    if isinstance(f, np.ndarray) and f.ndim == 1:
        ff = np.abs(f) ** 2
        out -= 0.5 * (ff[:, None] * rho + rho * ff[None, :])
        if jumps:
            out += f[:, None] * rho * f.conj()[None, :]
    elif isinstance(f, np.ndarray):
        fd = f.conj().T
        ff = fd @ f
        out -= 0.5 * (ff @ rho + rho @ ff)
        if jumps:
            out += f @ rho @ fd
    else:
        ff_rho = f.H @ (f @ rho)
        rho_ff = ff_rho.conj().T if assume_hermitian else (f.H @ (f @ rho.conj().T)).conj().T
        out -= 0.5 * (ff_rho + rho_ff)
        if jumps:
            out += f @ (f @ rho.conj().T).conj().T
    return out


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step_times: np.ndarray
    traces: np.ndarray
    min_eigenvalues: np.ndarray | None = field(default=None)
    grid: Grid1D | None = None

    def state(self, i: int) -> DensityMatrix:
        return DensityMatrix(self.states[i], self.grid)

    @property
    def final(self) -> DensityMatrix:
        return self.state(-1)


def check_stability(model: LindbladModel, dt: float, t: float = 0.0) -> None:
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    if dt * model.h_norm() >= STABILITY:
        raise StepSizeError(f"dt*||H|| = {dt * model.h_norm():.3g} exceeds {STABILITY}")
    if dt * model.f_norm(t) >= STABILITY:
        raise StepSizeError(f"dt*||F^dag F|| = {dt * model.f_norm(t):.3g} exceeds {STABILITY}")


def integrate(
    rho0,
    model: LindbladModel,
    dt: float,
    steps: int,
    jumps: bool = True,
    record_every: int = 1,
    check_positivity: bool = False,
) -> Trajectory:
    """Classical fourth-order Runge-Kutta integration of the Liouville equation.

    States are stored every ``record_every`` steps (and at the end); the trace
    is stored at every step. With ``check_positivity`` the smallest eigenvalue
    is monitored at every step.
    """
    grid = rho0.grid if isinstance(rho0, DensityMatrix) else None
    rho = np.array(rho0.matrix if isinstance(rho0, DensityMatrix) else rho0, dtype=np.complex128)
    _check_shape(rho, model)
    if steps < 0:
        raise ValueError("steps must be non-negative")
    check_stability(model, dt)
    if model.F_t is not None:
        for tt in (0.0, 0.5 * dt * steps, dt * steps):
            check_stability(model, dt, tt)
    herm = bool(np.max(np.abs(rho - rho.conj().T), initial=0.0) <= 1e-12)
    if _is_diag_rank1(model) and not check_positivity:
        return _integrate_diag_rank1(rho, model, dt, steps, jumps, record_every, grid)

    def rhs(r, t):
        return liouville_rhs(r, model, t, jumps, assume_hermitian=herm)

    rec_times, rec_states = [0.0], [rho.copy()]
    traces = np.empty(steps + 1)
    traces[0] = np.trace(rho).real
    mins = np.empty(steps + 1) if check_positivity else None
    if mins is not None:
        mins[0] = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    for j in range(1, steps + 1):
        t = (j - 1) * dt
        k1 = rhs(rho, t)
        k2 = rhs(rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = rhs(rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = rhs(rho + dt * k3, t + dt)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        traces[j] = np.trace(rho).real
        if mins is not None:
            mins[j] = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
        if j % record_every == 0 or j == steps:
            rec_times.append(j * dt)
            rec_states.append(rho.copy())
    return Trajectory(
        times=np.array(rec_times),
        states=np.array(rec_states),
        step_times=dt * np.arange(steps + 1),
        traces=traces,
        min_eigenvalues=mins,
        grid=grid,
    )


def _is_diag_rank1(model: LindbladModel) -> bool:
    H, F = model.H, model.F
    return (
        isinstance(H, np.ndarray)
        and H.ndim == 1
        and model.F_t is None
        and (F is None or isinstance(F, RankOneOperator))
    )


def _integrate_diag_rank1(rho, model, dt, steps, jumps, record_every, grid) -> Trajectory:
    """Structured path: diagonal ``H`` and rank-one ``F``, run by the compiled kernel."""
    F = model.F
    if F is None:
        u, c = np.zeros(model.dim, dtype=np.complex128), 0.0
    else:
        nu = math.sqrt(float(np.vdot(F.u, F.u).real))
        u, c = F.u / nu, (F.scale * nu**2) ** 2
    rec_times, rec_states = [0.0], [rho.copy()]
    traces = [np.array([np.trace(rho).real])]
    done = 0
    while done < steps:
        chunk = min(record_every, steps - done)
        rho, tr = _backend.rk4_diag_rank1(rho, model.H, u, c, dt, chunk, jumps)
        traces.append(tr[1:])
        done += chunk
        rec_times.append(done * dt)
        rec_states.append(rho.copy())
    return Trajectory(
        times=np.array(rec_times),
        states=np.array(rec_states),
        step_times=dt * np.arange(steps + 1),
        traces=np.concatenate(traces),
        grid=grid,
    )


def kernel_apply(rho, wf: WaveFunction) -> WaveFunction:
    """``(rho psi)(x_i) = sum_j rho(x_i, x_j) psi(x_j) dx``.

    ``rho`` is a gridded :class:`DensityMatrix` or a ``(kernel, grid)`` pair.
    """
    if isinstance(rho, DensityMatrix):
        if rho.grid is None:
            raise GridError("density matrix has no grid")
        kernel, grid = rho.kernel, rho.grid
    else:
        kernel, grid = rho
        kernel = np.asarray(kernel)
    if grid != wf.grid:
        raise GridError("kernel and wave function live on different grids")
    return WaveFunction(grid, kernel @ wf.amplitudes * grid.dx)


def unitary_dft(n: int) -> np.ndarray:
    """Matrix ``U`` with ``U @ v == numpy.fft.fft(v, norm="ortho")``."""
    return np.fft.fft(np.eye(n), axis=0, norm="ortho")


def grid_model(grid: Grid1D, detector: DetectorSpec, basis: str = "position") -> LindbladModel:
    """Free particle on ``grid`` with the regularised detector ``f = sqrt(kappa delta)``.

    In the ``"momentum"`` basis (unitary DFT order) ``H`` is diagonal and a
    grid-point detector is a rank-one operator, so each right-hand side
    evaluation costs ``O(n^2)``.
    """
    f = np.sqrt(detector.kappa * detector.delta(grid)).astype(np.complex128)
    if basis == "position":
        return LindbladModel(KineticOperator(grid), f)
    if basis != "momentum":
        raise ValueError(f"unknown basis {basis!r}")
    energies = KineticOperator(grid).energies
    idx = np.flatnonzero(f)
    if detector.regularization == "grid-point" and idx.size == 1:
        u = np.exp(-2j * math.pi * np.arange(grid.n) * idx[0] / grid.n) / math.sqrt(grid.n)
        F = RankOneOperator(u, abs(f[idx[0]]))
    else:
        U = unitary_dft(grid.n)
        F = U @ (f[:, None] * U.conj().T)
    return LindbladModel(energies, F)


def to_basis(rho: DensityMatrix, basis: str) -> DensityMatrix:
    """Express a gridded density matrix in the given basis (DFT order for momentum)."""
    if basis == "position":
        return rho
    m = np.fft.fft(np.fft.ifft(rho.matrix, axis=1, norm="ortho"), axis=0, norm="ortho")
    return DensityMatrix(m)


@dataclass(frozen=True, eq=False)
class CrosscheckReport:
    times: np.ndarray
    traces: np.ndarray
    norms: np.ndarray

    @property
    def max_difference(self) -> float:
        return float(np.max(np.abs(self.traces - self.norms)))

    @property
    def final_trace(self) -> float:
        return float(self.traces[-1])

    @property
    def final_norm(self) -> float:
        return float(self.norms[-1])


def eeqt_crosscheck(wf: WaveFunction, detector: DetectorSpec, dt: float, steps: int) -> CrosscheckReport:
    """Trace of the detection-removed Liouville evolution vs. damped-evolution norm.

    Both start from the pure state of ``wf``; the Liouville side evolves the
    full ``n x n`` density matrix, in the momentum basis where the kinetic
    generator is diagonal (the trace does not depend on the basis).
    """
    n = wf.grid.n
    if n > MAX_KERNEL_POINTS:
        raise ResourceError(f"grid of {n} points exceeds the kernel limit of {MAX_KERNEL_POINTS}")
    model = grid_model(wf.grid, detector, basis="momentum")
    rho0 = to_basis(pure_state(wf), "momentum")
    traj = integrate(rho0, model, dt, steps, jumps=False, record_every=max(steps, 1))
    rec = damped_evolve(wf, detector, dt, steps)
    return CrosscheckReport(times=traj.step_times, traces=traj.traces, norms=rec.norms)
