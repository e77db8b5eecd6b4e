"""Grids, wave functions and Fourier transforms on a uniform 1-D grid.

Atomic units throughout (hbar = m = 1). The Fourier convention is the
unitary one,

    psi_tilde(k) = (2 pi)^(-1/2) * integral psi(x) exp(-i k x) dx,

realised with a DFT plus the ``exp(-i k x_min)`` offset phase, so the
sampled spectrum approximates the continuum transform of a band-limited
packet rather than a raw DFT.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridError, LeakageError

#: Edge amplitude above which :func:`gaussian_packet` warns.
LEAKAGE_WARN = 1e-12
#: Edge amplitude above which :func:`gaussian_packet` refuses the grid.
LEAKAGE_FAIL = 1e-6


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid ``x_j = x_min + j*dx``, ``j = 0..n-1``."""

    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)):
            raise GridError(f"grid size must be a power of two >= 2, got {self.n!r}")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)) or self.x_max <= self.x_min:
            raise GridError(f"degenerate interval [{self.x_min}, {self.x_max}]")

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / (self.n * self.dx)

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_min + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Momentum nodes in ascending order, spanning ``[-pi/dx, pi/dx)``."""
        k = self.dk * (np.arange(self.n) - self.n // 2)
        k.flags.writeable = False
        return k

    def index_of(self, position: float) -> int:
        """Index of the grid point nearest to ``position``."""
        j = int(round((position - self.x_min) / self.dx))
        if not 0 <= j < self.n:
            raise GridError(f"position {position} lies outside the grid")
        return j

    def padded(self, factor: int) -> "Grid1D":
        """Same spacing and origin, ``factor`` times as many points."""
        if factor != 1 and not _is_power_of_two(factor):
            raise GridError(f"padding factor must be a power of two, got {factor}")
        return Grid1D(self.x_min, self.x_min + self.length * factor, self.n * factor)


def make_grid(x_min: float, x_max: float, n: int) -> Grid1D:
    return Grid1D(float(x_min), float(x_max), n)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid1D
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.grid.n,):
            raise GridError(f"amplitudes of shape {amps.shape} do not fit a grid of {self.grid.n} points")
        object.__setattr__(self, "amplitudes", amps)

    def conj(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class SpectralWaveFunction:
    """Spectrum on the ascending momentum grid of ``grid``."""

    grid: Grid1D
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.grid.n,):
            raise GridError("spectral amplitudes do not match the grid")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def k(self) -> np.ndarray:
        return self.grid.k

    @property
    def dk(self) -> float:
        return self.grid.dk


@dataclass(frozen=True)
class GaussianPacketSpec:
    """``psi(0, x) = (2 alpha/pi)^(1/4) exp(-alpha (x-x0)^2 + i k0 x + i phase)``."""

    x0: float
    alpha: float
    k0: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"width exponent alpha must be positive, got {self.alpha}")

    @classmethod
    def reference(cls) -> "GaussianPacketSpec":
        """The worked example: centred at -4, unit width exponent, velocity 4."""
        return cls(x0=-4.0, alpha=1.0, k0=4.0, phase=16.0)

    @property
    def velocity(self) -> float:
        return self.k0

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pref = (2.0 * self.alpha / math.pi) ** 0.25
        return pref * np.exp(-self.alpha * (x - self.x0) ** 2 + 1j * (self.k0 * x + self.phase))


def check_leakage(amplitudes: np.ndarray, what: str = "wave function") -> float:
    """Return the edge amplitude; warn or raise if it is too large."""
    edge = float(max(abs(amplitudes[0]), abs(amplitudes[-1])))
    if edge > LEAKAGE_FAIL:
        raise LeakageError(f"{what} has amplitude {edge:.3g} at the grid edge")
    if edge > LEAKAGE_WARN:
        warnings.warn(f"{what} has amplitude {edge:.3g} at the grid edge", RuntimeWarning, stacklevel=3)
    return edge


def gaussian_packet(spec: GaussianPacketSpec, grid: Grid1D) -> WaveFunction:
    amps = spec.evaluate(grid.x)
    check_leakage(amps, "Gaussian packet")
    return WaveFunction(grid, amps)


def to_momentum(wf: WaveFunction, pad: int = 1) -> SpectralWaveFunction:
    """Unitary Fourier transform onto the (optionally refined) momentum grid.

    ``pad`` zero-extends the position samples to ``pad * n`` points, which
    refines ``dk`` by the same factor. This is exact for packets that vanish
    at the grid edge.
    """
    grid = wf.grid if pad == 1 else wf.grid.padded(pad)
    psi = wf.amplitudes
    if pad != 1:
        psi = np.concatenate([psi, np.zeros(grid.n - wf.grid.n, dtype=np.complex128)])
    k_fft = 2.0 * math.pi * np.fft.fftfreq(grid.n, grid.dx)
    spec = grid.dx / math.sqrt(2.0 * math.pi) * np.exp(-1j * k_fft * grid.x_min) * np.fft.fft(psi)
    return SpectralWaveFunction(grid, np.fft.fftshift(spec))


def from_momentum(spectral: SpectralWaveFunction) -> WaveFunction:
    grid = spectral.grid
    k_fft = 2.0 * math.pi * np.fft.fftfreq(grid.n, grid.dx)
    spec = np.fft.ifftshift(spectral.amplitudes) * np.exp(1j * k_fft * grid.x_min)
    psi = math.sqrt(2.0 * math.pi) / grid.dx * np.fft.ifft(spec)
    return WaveFunction(grid, psi)


def density(wf: WaveFunction) -> np.ndarray:
    return np.abs(wf.amplitudes) ** 2


def norm_squared(wf: WaveFunction) -> float:
    return float(np.sum(density(wf)) * wf.grid.dx)


def norm(wf: WaveFunction) -> float:
    return math.sqrt(norm_squared(wf))


def expectation_position(wf: WaveFunction) -> float:
    rho = density(wf)
    return float(np.sum(wf.grid.x * rho) / np.sum(rho))


def expectation_momentum(wf: WaveFunction) -> float:
    spec = to_momentum(wf)
    w = np.abs(spec.amplitudes) ** 2
    return float(np.sum(spec.k * w) / np.sum(w))


def spectral_norm_squared(spectral: SpectralWaveFunction) -> float:
    return float(np.sum(np.abs(spectral.amplitudes) ** 2) * spectral.dk)


def bandwidth(wf: WaveFunction, rel_tol: float = 1e-12) -> float:
    """Largest |k| carrying spectral density above ``rel_tol`` of the peak."""
    spec = to_momentum(wf)
    w = np.abs(spec.amplitudes) ** 2
    if not np.any(w > 0):
        return 0.0
    mask = w > rel_tol * w.max()
    return float(np.max(np.abs(spec.k[mask])))
