"""Run configuration for the command-line harness.

A config is a JSON object. Any subset of the keys in ``paper_defaults.json``
may be given; missing keys take the default value and unknown keys are
rejected. :func:`validate` lists every violated precondition without running
anything.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError

EXPERIMENTS = ("evolve", "momentum", "kijowski", "eeqt", "sweep", "compare", "lindblad", "geometry")
FORMATS = ("csv", "json")


@dataclass
class PacketConfig:
    x0: float = -4.0
    alpha: float = 1.0
    k0: float = 4.0
    phase: float = 16.0


@dataclass
class GridConfig:
    x_min: float = -20.0
    x_max: float = 20.0
    n: int = 4096


@dataclass
class DetectorConfig:
    position: float = 0.0
    kappa: float = 8.0
    regularization: str = "grid-point"
    sigma: float | None = None


@dataclass
class TauConfig:
    start: float = 0.0
    stop: float = 3.0
    points: int = 600


@dataclass
class LindbladConfig:
    x_min: float = -20.0
    x_max: float = 20.0
    n: int = 256
    steps: int = 6250


@dataclass
class GeometryConfig:
    points: list = field(default_factory=lambda: [7, 9, 13, 17])


@dataclass
class OutputConfig:
    path: str = "toa-lab-output"
    format: str = "csv"


@dataclass
class RunConfig:
    experiment: str = "kijowski"
    packet: PacketConfig = field(default_factory=PacketConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    kappas: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0])
    eeqt_kappas: list = field(default_factory=lambda: [2.0, 4.0, 8.0, 16.0, 32.0])
    horizon: float = 3.0
    dt: float = 1e-3
    tau: TauConfig = field(default_factory=TauConfig)
    times: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0])
    lindblad: LindbladConfig = field(default_factory=LindbladConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    workers: int = 1
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "packet": PacketConfig,
    "grid": GridConfig,
    "detector": DetectorConfig,
    "tau": TauConfig,
    "lindblad": LindbladConfig,
    "geometry": GeometryConfig,
    "output": OutputConfig,
}


def _merge(base: dict, update: dict, path: str, problems: list) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            problems.append(f"{where}: unknown key")
        elif isinstance(base[key], dict):
            if not isinstance(value, dict):
                problems.append(f"{where}: expected an object")
            else:
                out[key] = _merge(base[key], value, where + ".", problems)
        else:
            out[key] = value
    return out


def from_dict(data: dict, base: RunConfig | None = None) -> RunConfig:
    """Overlay ``data`` on ``base`` (the built-in defaults if omitted)."""
    if not isinstance(data, dict):
        raise ConfigError(["config must be a JSON object"])
    problems: list[str] = []
    merged = _merge((base or RunConfig()).to_dict(), data, "", problems)
    if problems:
        raise ConfigError(problems)
    kwargs = {k: (_SECTIONS[k](**v) if k in _SECTIONS else v) for k, v in merged.items()}
    return RunConfig(**kwargs)


def paper_defaults() -> RunConfig:
    text = resources.files("toa_lab").joinpath("paper_defaults.json").read_text()
    return from_dict(json.loads(text))


def load(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from exc
    return from_dict(data, base)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _power_of_two(n) -> bool:
    return _is_int(n) and n >= 2 and n & (n - 1) == 0


def _number_fields(cfg: RunConfig, out: list) -> bool:
    checks = {
        "packet.x0": cfg.packet.x0,
        "packet.alpha": cfg.packet.alpha,
        "packet.k0": cfg.packet.k0,
        "packet.phase": cfg.packet.phase,
        "grid.x_min": cfg.grid.x_min,
        "grid.x_max": cfg.grid.x_max,
        "detector.position": cfg.detector.position,
        "detector.kappa": cfg.detector.kappa,
        "horizon": cfg.horizon,
        "dt": cfg.dt,
        "tau.start": cfg.tau.start,
        "tau.stop": cfg.tau.stop,
        "lindblad.x_min": cfg.lindblad.x_min,
        "lindblad.x_max": cfg.lindblad.x_max,
    }
    ok = True
    for name, value in checks.items():
        if not _is_number(value):
            out.append(f"{name} must be a finite number")
            ok = False
    return ok


def validate(cfg: RunConfig) -> list[str]:
    """Human-readable list of violated preconditions; empty means runnable."""
    out: list[str] = []
    if cfg.experiment not in EXPERIMENTS:
        out.append(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    if cfg.output.format not in FORMATS:
        out.append("output.format must be 'csv' or 'json'")
    if not isinstance(cfg.output.path, str) or not cfg.output.path:
        out.append("output.path must be a non-empty string")
    numbers_ok = _number_fields(cfg, out)

    if not _power_of_two(cfg.grid.n):
        out.append(f"grid.n must be a power of two >= 2 (got {cfg.grid.n!r})")
    if not _power_of_two(cfg.lindblad.n):
        out.append(f"lindblad.n must be a power of two >= 2 (got {cfg.lindblad.n!r})")
    if not (_is_int(cfg.lindblad.steps) and cfg.lindblad.steps >= 1):
        out.append("lindblad.steps must be a positive integer")
    if not (_is_int(cfg.tau.points) and cfg.tau.points >= 2):
        out.append("tau.points must be an integer >= 2")
    if not (_is_int(cfg.workers) and cfg.workers >= 1):
        out.append("workers must be a positive integer")
    if cfg.detector.regularization not in ("grid-point", "gaussian"):
        out.append("detector.regularization must be 'grid-point' or 'gaussian'")
    if cfg.detector.regularization == "gaussian" and not (
        _is_number(cfg.detector.sigma) and cfg.detector.sigma > 0
    ):
        out.append("detector.sigma must be positive for gaussian regularization")
    for name in ("kappas", "eeqt_kappas"):
        values = getattr(cfg, name)
        if not isinstance(values, list) or not values:
            out.append(f"{name} must be a non-empty list")
        elif not all(_is_number(k) and k >= 0 for k in values):
            out.append(f"{name} entries must be non-negative numbers")
    if not isinstance(cfg.times, list) or not cfg.times:
        out.append("times must be a non-empty list")
    elif not all(_is_number(t) and t >= 0 for t in cfg.times):
        out.append("times entries must be non-negative numbers")
    pts = cfg.geometry.points
    if not isinstance(pts, list) or len(pts) < 2 or not all(_is_int(p) and p >= 3 for p in pts):
        out.append("geometry.points must list at least two integers >= 3")

    if not numbers_ok:
        return out
    if cfg.packet.alpha <= 0:
        out.append("packet.alpha must be positive")
    if cfg.grid.x_min >= cfg.grid.x_max:
        out.append("grid.x_min must be less than grid.x_max")
    if cfg.lindblad.x_min >= cfg.lindblad.x_max:
        out.append("lindblad.x_min must be less than lindblad.x_max")
    if cfg.dt <= 0:
        out.append("dt must be positive")
    if cfg.horizon <= 0:
        out.append("horizon must be positive")
    elif cfg.dt > 0 and abs(round(cfg.horizon / cfg.dt) * cfg.dt - cfg.horizon) > 1e-9 * cfg.horizon:
        out.append("horizon must be a whole number of dt steps")
    if cfg.dt > 0 and isinstance(cfg.times, list) and all(_is_number(t) for t in cfg.times):
        if any(abs(round(t / cfg.dt) * cfg.dt - t) > 1e-9 * max(1.0, t) for t in cfg.times):
            out.append("times entries must be whole multiples of dt")
    if cfg.detector.kappa < 0:
        out.append("detector.kappa must be non-negative")
    if cfg.tau.stop <= cfg.tau.start:
        out.append("tau.stop must exceed tau.start")
    if cfg.grid.x_min < cfg.grid.x_max and not (cfg.grid.x_min <= cfg.detector.position < cfg.grid.x_max):
        out.append("detector.position must lie on the grid")
    if not out:
        out.extend(_physics_checks(cfg))
    return out


def _physics_checks(cfg: RunConfig) -> list[str]:
    """Checks that need the sampled packet: boundary leakage and step size."""
    import numpy as np

    from .wavepacket import LEAKAGE_FAIL, GaussianPacketSpec, WaveFunction, bandwidth, make_grid

    spec = GaussianPacketSpec(cfg.packet.x0, cfg.packet.alpha, cfg.packet.k0, cfg.packet.phase)
    grid = make_grid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n)
    amps = spec.evaluate(grid.x)
    out = []
    edge = float(max(abs(amps[0]), abs(amps[-1])))
    if edge > LEAKAGE_FAIL or not np.isfinite(edge):
        out.append(f"packet does not fit the grid (edge amplitude {edge:.3g})")
        return out
    kb = bandwidth(WaveFunction(grid, amps))
    if cfg.dt * kb**2 / 2 >= math.pi:
        out.append(f"dt too large: kinetic phase step at |k|={kb:.3g} exceeds pi")
    return out


def require_valid(cfg: RunConfig) -> RunConfig:
    problems = validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg
