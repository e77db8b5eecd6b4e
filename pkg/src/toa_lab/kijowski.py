"""Kijowski's arrival-time distribution at x = 0 for a free particle.

    psi_plus(tau)  = (2 pi)^(-1/2) int_0^inf   sqrt(k)  psi~(k) exp(-i k^2 tau/2) dk
    psi_minus(tau) = (2 pi)^(-1/2) int_-inf^0  sqrt(-k) psi~(k) exp(+i k^2 tau/2) dk
    p(tau) = |psi_plus|^2 + |psi_minus|^2

``convention="standard"`` uses ``exp(-i k^2 tau/2)`` in both amplitudes, so
left movers are counted at their forward arrival time; the default
``"conjugate"`` keeps the sign shown above. The two differ only by
``tau -> -tau`` in the left-mover term.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DistributionError
from .wavepacket import SpectralWaveFunction, WaveFunction, to_momentum

DEFAULT_TAU = (0.0, 3.0, 600)
CONVENTIONS = ("conjugate", "standard")

# weights below this fraction of the largest quadrature weight are dropped
_TRIM = 1e-15
# nodes below this fraction count as unoccupied for the phase-resolution check
_OCCUPIED = 1e-8


def default_taus() -> np.ndarray:
    start, stop, num = DEFAULT_TAU
    return np.linspace(start, stop, num)


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


@dataclass(frozen=True, eq=False)
class ArrivalDistribution:
    """Arrival density on a time grid with its trapezoidal cumulative."""

    times: np.ndarray
    density: np.ndarray
    cumulative: np.ndarray = field(default=None)
    total: float = field(default=None)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.density, dtype=float)
        if t.shape != p.shape or t.ndim != 1:
            raise DistributionError("times and density must be 1-D arrays of equal length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "density", p)
        if self.cumulative is None:
            object.__setattr__(self, "cumulative", _cumtrapz(p, t))
        if self.total is None:
            object.__setattr__(self, "total", float(self.cumulative[-1]) if len(t) else 0.0)

    @property
    def argmax(self) -> float:
        return float(self.times[np.argmax(self.density)])


def normalized(dist: ArrivalDistribution) -> ArrivalDistribution:
    if not dist.total > 0:
        raise DistributionError("cannot normalise a distribution with zero total")
    return ArrivalDistribution(
        dist.times,
        dist.density / dist.total,
        dist.cumulative / dist.total,
        1.0,
        {**dist.metadata, "normalized_from_total": dist.total},
    )


def _half_line_weights(spectral: SpectralWaveFunction, side: int):
    """Trapezoid weights ``sqrt|k| psi~(k) dk / sqrt(2 pi)`` on one half-line."""
    k = spectral.k
    mask = k > 0 if side > 0 else k < 0
    kk = k[mask]
    w = np.sqrt(np.abs(kk)) * spectral.amplitudes[mask] * spectral.dk / math.sqrt(2.0 * math.pi)
    if side < 0 and kk.size:
        # k = -pi/dx is the closed end of the half grid
        w[np.argmin(kk)] *= 0.5
    return kk, w


def phase_advance(spectral: SpectralWaveFunction, taus) -> float:
    """Largest phase step ``|k| dk |tau|`` between adjacent occupied nodes."""
    w = np.abs(spectral.amplitudes)
    if not np.any(w > 0):
        return 0.0
    occ = w > _OCCUPIED * w.max()
    kmax = float(np.max(np.abs(spectral.k[occ])))
    tmax = float(np.max(np.abs(taus))) if len(taus) else 0.0
    return (kmax + 0.5 * spectral.dk) * spectral.dk * tmax


def choose_padding(wf: WaveFunction, taus, max_pad: int = 64) -> int:
    """Smallest power-of-two zero padding that keeps the phase advance below pi."""
    pad = 1
    while pad < max_pad and phase_advance(to_momentum(wf, pad), taus) >= math.pi:
        pad *= 2
    return pad


def kijowski_amplitudes(
    spectral: SpectralWaveFunction,
    taus,
    convention: str = "conjugate",
    kernel=None,
):
    """Right- and left-mover amplitudes on the time grid ``taus``.

    Trapezoidal quadrature over the positive (negative) half of the momentum
    grid; the k = 0 node carries zero weight because of the sqrt(|k|) factor.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    kernel = kernel or _backend.quadratic_phase_sum
    taus = np.asarray(taus, dtype=float)
    if phase_advance(spectral, taus) >= math.pi:
        warnings.warn(
            "momentum grid too coarse for the requested tau range; refine with padding",
            RuntimeWarning,
            stacklevel=2,
        )
    kp, wp = _half_line_weights(spectral, +1)
    km, wm = _half_line_weights(spectral, -1)
    scale = max(np.abs(wp).max(initial=0.0), np.abs(wm).max(initial=0.0))
    if scale == 0.0:
        zeros = np.zeros(taus.shape, dtype=np.complex128)
        return zeros, zeros.copy()
    keep_p = np.abs(wp) > _TRIM * scale
    keep_m = np.abs(wm) > _TRIM * scale
    psi_plus = kernel(kp[keep_p], wp[keep_p], taus, 1.0)
    minus_sign = -1.0 if convention == "conjugate" else 1.0
    psi_minus = kernel(km[keep_m], wm[keep_m], taus, minus_sign)
    return psi_plus, psi_minus


def kijowski_density(taus, psi_plus, psi_minus) -> ArrivalDistribution:
    taus = np.asarray(taus, dtype=float)
    p = np.abs(psi_plus) ** 2 + np.abs(psi_minus) ** 2
    return ArrivalDistribution(taus, p)


def kijowski_distribution(
    wf: WaveFunction,
    taus=None,
    pad: int | None = None,
    convention: str = "conjugate",
) -> ArrivalDistribution:
    """Kijowski density of ``wf`` with an automatically refined momentum grid."""
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    if pad is None:
        pad = choose_padding(wf, taus)
    spectral = to_momentum(wf, pad)
    plus, minus = kijowski_amplitudes(spectral, taus, convention)
    dist = kijowski_density(taus, plus, minus)
    meta = {
        "tau_range": [float(taus[0]), float(taus[-1])],
        "tau_points": int(len(taus)),
        "tau_range_is_default": bool(
            len(taus) == DEFAULT_TAU[2] and taus[0] == DEFAULT_TAU[0] and taus[-1] == DEFAULT_TAU[1]
        ),
        "momentum_padding": int(pad),
        "convention": convention,
    }
    return ArrivalDistribution(dist.times, dist.density, dist.cumulative, dist.total, meta)
