"""``toa-lab`` command line entry point.

Exit status: 0 on success, 1 if the configuration is invalid, 2 if the run
itself fails (resource guard, numerical precondition, I/O).
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from . import __version__, config
from .bundle import emit, write
from .errors import ConfigError, ToaLabError

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("toa_lab")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="toa-lab",
        description="Compute arrival-time distributions and related figure data.",
    )
    p.add_argument("experiment", choices=config.EXPERIMENTS)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="FILE", help="JSON config overlaid on the built-in defaults")
    src.add_argument("--paper-defaults", action="store_true", help="use the shipped default config (the default)")
    p.add_argument("--out", metavar="PATH", help="output directory, or '-' for stdout")
    p.add_argument("--format", choices=config.FORMATS)
    p.add_argument("--kappa", metavar="K", type=float, nargs="+", help="detector sensitivity value(s)")
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", metavar="T", type=float)
    p.add_argument("--workers", type=int, help="processes for kappa sweeps")
    p.add_argument("--validate", action="store_true", help="only check the config and print diagnostics")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def resolve_config(args: argparse.Namespace) -> config.RunConfig:
    base = config.paper_defaults()
    cfg = config.load(args.config, base) if args.config else base
    cfg = dataclasses.replace(cfg, experiment=args.experiment)
    if args.dt is not None:
        cfg.dt = args.dt
    if args.horizon is not None:
        cfg.horizon = args.horizon
    if args.workers is not None:
        cfg.workers = args.workers
    if args.kappa:
        if args.experiment == "compare" and len(args.kappa) != 1:
            raise ConfigError(["compare takes exactly one --kappa value"])
        cfg.kappas = list(args.kappa)
        cfg.eeqt_kappas = list(args.kappa)
        cfg.detector.kappa = args.kappa[0]
    if args.out is not None:
        cfg.output.path = args.out
    if args.format is not None:
        cfg.output.format = args.format
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve_config(args)
        diagnostics = config.validate(cfg)
    except ConfigError as exc:
        diagnostics = exc.diagnostics
    except OSError as exc:
        diagnostics = [f"cannot read config: {exc}"]
    if diagnostics:
        for d in diagnostics:
            print(f"invalid config: {d}", file=sys.stderr)
        return EXIT_INVALID
    if args.validate:
        print("config OK")
        return EXIT_OK

    from .experiments import run

    try:
        bundles = run(cfg)
        fmt = cfg.output.format
        if cfg.output.path == "-":
            for b in bundles:
                sys.stdout.write(emit(b, fmt))
        else:
            for b in bundles:
                print(write(b, cfg.output.path, fmt))
    except (ToaLabError, ValueError, OSError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
