"""Experiment runners: one function per experiment, each returning bundles."""
from __future__ import annotations

import logging
import math

import numpy as np

from . import __version__, _backend
from .bundle import Column, FigureBundle
from .config import RunConfig, require_valid
from .eeqt import compare_with_kijowski, detection_distribution, kappa_sweep
from .geometry import (
    build_connection,
    check_closedness,
    sample_model,
    verify_compatibility,
)
from .kijowski import choose_padding, kijowski_amplitudes
from .kijowski import normalized as normalized_dist
from .liouville import eeqt_crosscheck
from .propagators import DetectorSpec, damped_evolve, split_step_evolve
from .wavepacket import (
    GaussianPacketSpec,
    WaveFunction,
    density,
    gaussian_packet,
    make_grid,
    to_momentum,
)

log = logging.getLogger(__name__)

T = "atomic_time"
L = "atomic_length"


def _packet(cfg: RunConfig, grid=None) -> WaveFunction:
    p = cfg.packet
    spec = GaussianPacketSpec(p.x0, p.alpha, p.k0, p.phase)
    grid = grid or make_grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n)
    return gaussian_packet(spec, grid)


def _detector(cfg: RunConfig, kappa: float | None = None) -> DetectorSpec:
    d = cfg.detector
    return DetectorSpec(d.position, d.kappa if kappa is None else kappa, d.regularization, d.sigma)


def _steps(span: float, dt: float) -> int:
    steps = int(round(span / dt))
    if abs(steps * dt - span) > 1e-9 * max(1.0, span):
        raise ValueError(f"time {span} is not a whole number of dt={dt} steps")
    return steps


def _base_meta(cfg: RunConfig) -> dict:
    return {
        "code_version": __version__,
        "backend": _backend.BACKEND,
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
    }


def _grid_meta(cfg: RunConfig) -> dict:
    return {"grid": {"x_min": cfg.grid.x_min, "x_max": cfg.grid.x_max, "n": cfg.grid.n}, "dt": cfg.dt}


def _snapshots(cfg: RunConfig):
    wf = _packet(cfg)
    t_prev = 0.0
    out = []
    for t in sorted(set(float(t) for t in cfg.times)):
        wf = split_step_evolve(wf, None, cfg.dt, _steps(t - t_prev, cfg.dt))
        t_prev = t
        out.append((t, wf))
    return out


def run_evolve(cfg: RunConfig) -> list[FigureBundle]:
    snaps = _snapshots(cfg)
    grid = snaps[0][1].grid
    cols = [Column("x", L, "position")]
    arrays = [grid.x]
    for t, wf in snaps:
        cols.append(Column(f"rho_t{t:g}", f"1/{L}", f"position density at t={t:g}"))
        arrays.append(density(wf))
    meta = {**_base_meta(cfg), **_grid_meta(cfg), "times": [t for t, _ in snaps]}
    return [FigureBundle.from_columns("fig1", cols, arrays, meta)]


def run_momentum(cfg: RunConfig) -> list[FigureBundle]:
    snaps = _snapshots(cfg)
    cols = [Column("k", f"1/{L}", "momentum")]
    arrays = None
    for t, wf in snaps:
        spec = to_momentum(wf)
        if arrays is None:
            arrays = [spec.k]
        cols.append(Column(f"spectral_t{t:g}", L, f"momentum density at t={t:g}"))
        arrays.append(np.abs(spec.amplitudes) ** 2)
    meta = {**_base_meta(cfg), **_grid_meta(cfg), "times": [t for t, _ in snaps]}
    return [FigureBundle.from_columns("fig2", cols, arrays, meta)]


def run_kijowski(cfg: RunConfig) -> list[FigureBundle]:
    wf = _packet(cfg)
    taus = np.linspace(cfg.tau.start, cfg.tau.stop, cfg.tau.points)
    pad = choose_padding(wf, taus)
    plus, minus = kijowski_amplitudes(to_momentum(wf, pad), taus)
    p_plus, p_minus = np.abs(plus) ** 2, np.abs(minus) ** 2
    total = p_plus + p_minus
    meta = {
        **_base_meta(cfg),
        **_grid_meta(cfg),
        "tau_range": [cfg.tau.start, cfg.tau.stop],
        "tau_points": cfg.tau.points,
        "momentum_padding": pad,
        "argmax": float(taus[np.argmax(total)]),
        "left_right_sup_ratio": float(p_minus.max() / p_plus.max()) if p_plus.max() > 0 else math.inf,
    }
    cols = [
        Column("tau", T, "arrival time"),
        Column("p_plus", f"1/{T}", "right-mover density |psi+|^2"),
        Column("p_minus", f"1/{T}", "left-mover density |psi-|^2"),
        Column("p", f"1/{T}", "total arrival density"),
    ]
    return [FigureBundle.from_columns("fig3-fig4", cols, [taus, p_plus, p_minus, total], meta)]


def run_eeqt(cfg: RunConfig) -> list[FigureBundle]:
    wf = _packet(cfg)
    steps = _steps(cfg.horizon, cfg.dt)
    raw_cols = [Column("t", T, "time")]
    norm_cols = [Column("t", T, "time")]
    raw, nrm = [], []
    totals = {}
    times = None
    for kappa in sorted(float(k) for k in cfg.eeqt_kappas):
        det = _detector(cfg, kappa)
        rec = damped_evolve(wf, det, cfg.dt, steps)
        dist = detection_distribution(rec, det)
        times = rec.times
        label = f"{kappa:g}"
        raw_cols.append(Column(f"density_kappa{label}", f"1/{T}", f"unnormalised arrival density, kappa={label}"))
        norm_cols.append(Column(f"normalized_kappa{label}", f"1/{T}", f"normalised arrival density, kappa={label}"))
        raw.append(dist.density)
        nrm.append(normalized_dist(dist).density)
        totals[label] = float(rec.norm_loss[-1])
        log.info("kappa=%s detected fraction %.6f", label, totals[label])
    meta = {
        **_base_meta(cfg),
        **_grid_meta(cfg),
        "horizon": cfg.horizon,
        "detector_position": cfg.detector.position,
        "detected_fraction": totals,
    }
    return [
        FigureBundle.from_columns("fig5", raw_cols, [times, *raw], meta),
        FigureBundle.from_columns("fig7", norm_cols, [times, *nrm], meta),
    ]


def run_sweep(cfg: RunConfig) -> list[FigureBundle]:
    wf = _packet(cfg)
    res = kappa_sweep(wf, _detector(cfg), cfg.kappas, cfg.dt, cfg.horizon, workers=cfg.workers)
    meta = {
        **_base_meta(cfg),
        **_grid_meta(cfg),
        "horizon": cfg.horizon,
        "best_kappa": res.best_kappa,
        "best_p": res.best_p,
        "unimodal": res.is_unimodal(),
    }
    cols = [
        Column("kappa", f"1/{T}", "detector sensitivity"),
        Column("P_inf", "probability", "detection probability by the horizon"),
        Column("tail", "probability", "probability still approaching the detector at the horizon"),
    ]
    return [FigureBundle.from_columns("fig6", cols, [res.kappas, res.p_infinity, res.tails], meta)]


def run_compare(cfg: RunConfig) -> list[FigureBundle]:
    wf = _packet(cfg)
    rep = compare_with_kijowski(wf, cfg.detector.kappa, _detector(cfg), cfg.dt, cfg.horizon)
    meta = {
        **_base_meta(cfg),
        **_grid_meta(cfg),
        "kappa": rep.kappa,
        "sup_difference": rep.sup_difference,
        "l1_difference": rep.l1_difference,
        "eeqt_raw_total": rep.eeqt_raw_total,
        "kijowski_raw_total": rep.kijowski_raw_total,
    }
    cols = [
        Column("tau", T, "arrival time"),
        Column("eeqt", f"1/{T}", "normalised EEQT arrival density"),
        Column("kijowski", f"1/{T}", "normalised Kijowski arrival density"),
        Column("difference", f"1/{T}", "EEQT minus Kijowski"),
    ]
    return [FigureBundle.from_columns("fig8", cols, [rep.times, rep.eeqt, rep.kijowski, rep.difference], meta)]


def run_lindblad(cfg: RunConfig) -> list[FigureBundle]:
    lc = cfg.lindblad
    grid = make_grid(lc.x_min, lc.x_max, lc.n)
    wf = _packet(cfg, grid)
    dt = cfg.horizon / lc.steps
    rep = eeqt_crosscheck(wf, _detector(cfg), dt, lc.steps)
    meta = {
        **_base_meta(cfg),
        "grid": {"x_min": lc.x_min, "x_max": lc.x_max, "n": lc.n},
        "dt": dt,
        "kappa": cfg.detector.kappa,
        "max_difference": rep.max_difference,
        "final_trace": rep.final_trace,
        "final_norm": rep.final_norm,
    }
    cols = [
        Column("t", T, "time"),
        Column("trace", "probability", "trace of the detection-removed density matrix"),
        Column("norm2", "probability", "squared norm of the damped wave function"),
        Column("difference", "probability", "trace minus norm2"),
    ]
    return [
        FigureBundle.from_columns("lindblad", cols, [rep.times, rep.traces, rep.norms, rep.traces - rep.norms], meta)
    ]


def demo_metric(t, x, y, z):
    """Smooth, positive-definite, time-dependent spatial metric."""
    g = np.zeros((3, 3) + t.shape)
    g[0, 0] = 1 + 0.2 * np.sin(x + t)
    g[1, 1] = 1 + 0.2 * np.cos(y - 0.5 * z)
    g[2, 2] = 1.2 + 0.1 * np.sin(x * y + t)
    g[0, 1] = g[1, 0] = 0.1 * np.sin(z + t)
    g[1, 2] = g[2, 1] = 0.05 * np.cos(x)
    return g


def demo_potential(t, x, y, z):
    return np.stack(
        [
            np.sin(2 * x + y) * np.cos(t),
            np.cos(t + 3 * z) * np.sin(y),
            np.sin(y) * np.cos(2 * t + x),
            np.cos(x + 2 * z) * np.sin(t),
        ]
    )


def demo_field(t, x, y, z):
    """Exact ``Phi = dA`` for :func:`demo_potential`."""
    zero = np.zeros_like(t)
    dA = np.stack(
        [
            np.stack([-np.sin(2 * x + y) * np.sin(t), 2 * np.cos(2 * x + y) * np.cos(t),
                      np.cos(2 * x + y) * np.cos(t), zero]),
            np.stack([-np.sin(t + 3 * z) * np.sin(y), zero,
                      np.cos(t + 3 * z) * np.cos(y), -3 * np.sin(t + 3 * z) * np.sin(y)]),
            np.stack([-2 * np.sin(y) * np.sin(2 * t + x), -np.sin(y) * np.sin(2 * t + x),
                      np.cos(y) * np.cos(2 * t + x), zero]),
            np.stack([np.cos(x + 2 * z) * np.cos(t), -np.sin(x + 2 * z) * np.sin(t),
                      zero, -2 * np.sin(x + 2 * z) * np.sin(t)]),
        ]
    )  # dA[nu, mu] = d_mu A_nu
    return dA - dA.swapaxes(0, 1)


def _slope(h, r) -> float:
    h, r = np.asarray(h), np.asarray(r)
    if np.any(r <= 0):
        return math.nan
    return float(np.polyfit(np.log(h), np.log(r), 1)[0])


def run_geometry(cfg: RunConfig) -> list[FigureBundle]:
    rows = []
    for n in sorted(cfg.geometry.points):
        axes = [np.linspace(0.0, 1.0, n)] * 4
        model = sample_model(axes, demo_metric, demo_field, demo_potential)
        report = verify_compatibility(build_connection(model), model)
        closed = check_closedness(model)
        rows.append((1.0 / (n - 1), report.metric.interior_max, report.metric.boundary_max,
                     report.lowered.max, closed.interior_max))
    h, compat, compat_b, lowered, closed = map(np.array, zip(*rows))
    meta = {
        **_base_meta(cfg),
        "domain": [0.0, 1.0],
        "compatibility_slope": _slope(h, compat),
        "closedness_slope": _slope(h, closed),
    }
    cols = [
        Column("h", "coordinate", "grid spacing"),
        Column("compatibility_interior", "1", "max interior residual of the metric compatibility"),
        Column("compatibility_boundary", "1", "max boundary residual of the metric compatibility"),
        Column("lowered", "1", "max residual of the lowered compatibility identity"),
        Column("closedness_interior", "1", "max interior residual of dPhi = 0"),
    ]
    return [FigureBundle.from_columns("geometry", cols, [h, compat, compat_b, lowered, closed], meta)]


RUNNERS = {
    "evolve": run_evolve,
    "momentum": run_momentum,
    "kijowski": run_kijowski,
    "eeqt": run_eeqt,
    "sweep": run_sweep,
    "compare": run_compare,
    "lindblad": run_lindblad,
    "geometry": run_geometry,
}


def run(cfg: RunConfig) -> list[FigureBundle]:
    require_valid(cfg)
    return RUNNERS[cfg.experiment](cfg)
