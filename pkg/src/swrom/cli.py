"""Command-line entry point ``swrom``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import kernels
from .config import ConfigError, ExperimentConfig, load_config
from .pipeline import StageError, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML experiment configuration")
    common.add_argument("--scenario", metavar="NAME", help="geostrophic_adjustment (ex1) or shear_instability (ex2)")
    common.add_argument("--modes", metavar="N", type=int, help="number of POD modes per component")
    common.add_argument("--deim-modes", metavar="M", type=int, help="number of DEIM points per block")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--grid", metavar=("NX", "NY"), type=int, nargs=2, help="grid points in x and y")
    common.add_argument("--steps", metavar="K", type=int, help="number of time steps (overrides T)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="swrom", description="Full- and reduced-order shallow water runs.")
    p.add_argument("--backend", action="version", version=f"kernel backend: {kernels.BACKEND}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="full pipeline: fom, pod, deim, report")
    sub.add_parser("fom", parents=[common], help="full-order run and snapshots only")
    rom = sub.add_parser("rom", parents=[common], help="reduced run from existing snapshots")
    rom.add_argument("--method", choices=("pod", "deim"), required=True)
    sub.add_parser("report", parents=[common], help="collect errors and timings into report/")
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.scenario:
        over["scenario"] = args.scenario
    if args.modes is not None:
        over["n"] = args.modes
    if args.deim_modes is not None:
        over["m"] = args.deim_modes
    if args.out:
        over["out"] = args.out
    if args.grid:
        over["Nx"], over["Ny"] = args.grid
    if args.steps is not None:
        over["steps"] = args.steps
        over["T"] = None
    return replace(cfg, **over)


def stages_for(args, cfg: ExperimentConfig) -> tuple[str, ...]:
    if args.command == "run":
        return cfg.stages
    if args.command == "rom":
        return (args.method,)
    return (args.command,)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        result = run_pipeline(cfg, stages_for(args, cfg), echo=print)
    except (ConfigError, OSError) as exc:
        print(f"swrom: configuration error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"swrom: {exc}", file=sys.stderr)
        return 1
    print(f"artifacts in {result.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
