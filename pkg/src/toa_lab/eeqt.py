"""EEQT arrival times: detection density, total detection probability, kappa sweeps.

For a detector ``F = sqrt(kappa) delta(x - a)`` the ensemble evolution without
the jump term is the damped Schroedinger equation; the arrival density is
``kappa |psi_t(a)|^2`` and its integral is the norm lost to the detector.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DistributionError
from .kijowski import ArrivalDistribution, kijowski_distribution, normalized
from .propagators import DetectorSpec, EvolutionRecord, damped_evolve
from .wavepacket import WaveFunction, to_momentum

DEFAULT_DT = 1e-3
DEFAULT_HORIZON = 3.0


def _steps(horizon: float, dt: float) -> int:
    steps = int(round(horizon / dt))
    if steps < 1 or abs(steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError(f"horizon {horizon} is not a whole number of steps of {dt}")
    return steps


def detection_distribution(record: EvolutionRecord, detector: DetectorSpec) -> ArrivalDistribution:
    """Unnormalised arrival density from the recorded detector-site signal."""
    if record.detector != detector:
        raise DistributionError(f"record was produced with {record.detector}, not {detector}")
    meta = {
        "kappa": detector.kappa,
        "detector_position": detector.position,
        "regularization": detector.regularization,
        "dt": record.dt,
        "substeps": record.substeps,
        "norm_loss_final": float(record.norm_loss[-1]),
    }
    return ArrivalDistribution(record.times, record.detection_rate, metadata=meta)


def consistency_residual(record: EvolutionRecord, corrected: bool = True) -> float:
    """Sup-norm gap between the integrated detection density and ``1 - norm^2``.

    ``corrected=False`` uses the bare ``kappa * site_density``, whose gap
    shrinks as the damping exponent per step goes to zero.
    """
    if corrected:
        rate = record.detection_rate
    else:
        rate = record.detector.kappa * record.site_density
    cum = ArrivalDistribution(record.times, rate).cumulative
    return float(np.max(np.abs(cum - record.norm_loss)))


def tail_estimate(wf: WaveFunction, detector: DetectorSpec) -> float:
    """Probability still heading for the detector: k > 0 left of it, k < 0 right of it."""
    x = wf.grid.x
    total = 0.0
    for side, sign in ((x < detector.position, 1), (x > detector.position, -1)):
        part = WaveFunction(wf.grid, np.where(side, wf.amplitudes, 0.0))
        spec = to_momentum(part)
        w = np.abs(spec.amplitudes) ** 2
        total += float(np.sum(w[sign * spec.k > 0]) * spec.dk)
    return total


@dataclass(frozen=True, eq=False)
class KappaSweepResult:
    kappas: np.ndarray
    p_infinity: np.ndarray
    tails: np.ndarray

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.p_infinity))

    @property
    def best_kappa(self) -> float:
        return float(self.kappas[self.best_index])

    @property
    def best_p(self) -> float:
        return float(self.p_infinity[self.best_index])

    def is_unimodal(self) -> bool:
        """Strict rise to a single interior maximum, then strict fall."""
        p = self.p_infinity
        b = self.best_index
        if b == 0 or b == len(p) - 1:
            return False
        return bool(np.all(np.diff(p[: b + 1]) > 0) and np.all(np.diff(p[b:]) < 0))


def p_infinity(
    wf: WaveFunction,
    detector: DetectorSpec,
    dt: float = DEFAULT_DT,
    horizon: float = DEFAULT_HORIZON,
) -> tuple[float, float]:
    """``(P(horizon), tail)``: detection probability by the horizon and the
    probability still approaching the detector at that time."""
    if detector.kappa == 0:
        return 0.0, tail_estimate(wf, detector)
    rec = damped_evolve(wf, detector, dt, _steps(horizon, dt))
    return float(rec.norm_loss[-1]), tail_estimate(rec.final, detector)


def _sweep_point(args):
    wf, detector, dt, horizon = args
    return p_infinity(wf, detector, dt, horizon)


def kappa_sweep(
    wf: WaveFunction,
    detector: DetectorSpec,
    kappas,
    dt: float = DEFAULT_DT,
    horizon: float = DEFAULT_HORIZON,
    workers: int = 1,
) -> KappaSweepResult:
    """Total detection probability for each sensitivity in ``kappas``."""
    kappas = np.asarray(sorted(float(k) for k in kappas))
    if kappas.size == 0:
        raise ValueError("kappa list is empty")
    if np.any(kappas < 0):
        raise ValueError("kappa values must be non-negative")
    jobs = [(wf, detector.with_kappa(k), dt, horizon) for k in kappas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    p = np.array([r[0] for r in results])
    tails = np.array([r[1] for r in results])
    return KappaSweepResult(kappas, p, tails)


def geometric_kappas(start: float = 0.5, stop: float = 128.0, factor: float = 2.0) -> np.ndarray:
    n = int(round(math.log(stop / start) / math.log(factor))) + 1
    return start * factor ** np.arange(n)


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    times: np.ndarray
    eeqt: np.ndarray
    kijowski: np.ndarray
    kappa: float
    eeqt_raw_total: float
    kijowski_raw_total: float

    @property
    def difference(self) -> np.ndarray:
        return self.eeqt - self.kijowski

    @property
    def sup_difference(self) -> float:
        return float(np.max(np.abs(self.difference)))

    @property
    def l1_difference(self) -> float:
        return float(ArrivalDistribution(self.times, np.abs(self.difference)).total)

    @property
    def eeqt_total(self) -> float:
        return float(ArrivalDistribution(self.times, self.eeqt).total)

    @property
    def kijowski_total(self) -> float:
        return float(ArrivalDistribution(self.times, self.kijowski).total)


def compare_with_kijowski(
    wf: WaveFunction,
    kappa: float,
    detector: DetectorSpec | None = None,
    dt: float = DEFAULT_DT,
    horizon: float = DEFAULT_HORIZON,
) -> ComparisonReport:
    """Normalised EEQT and Kijowski densities on the EEQT time grid."""
    if not kappa > 0:
        raise ValueError("kappa must be positive for a comparison")
    det = (detector or DetectorSpec()).with_kappa(kappa)
    if det.position != 0.0:
        raise ValueError("the Kijowski density is defined for arrival at x = 0 only")
    rec = damped_evolve(wf, det, dt, _steps(horizon, dt))
    eeqt = detection_distribution(rec, det)
    if not eeqt.total > 0:
        raise DistributionError("EEQT distribution has zero total")
    kij = kijowski_distribution(wf, rec.times)
    return ComparisonReport(
        times=rec.times,
        eeqt=normalized(eeqt).density,
        kijowski=normalized(kij).density,
        kappa=float(kappa),
        eeqt_raw_total=eeqt.total,
        kijowski_raw_total=kij.total,
    )
