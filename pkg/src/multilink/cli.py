"""Command-line entry point.

Subcommands:
  simulate <config.json>        run the configured scenario, write artifacts
  fixed-points <config.json>    classify all straight-line equilibria
  fit <trajectory.csv>          power-law fit of a CSV column vs time
"""

from __future__ import annotations

import argparse
import sys

from . import analysis, scenarios
from .config import ConfigError, parse_config
from .integrator import IntegrationError
from .model import DegenerateShapeError, InvalidParameterError


def _load_config(path: str):
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_config(text)


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    result = scenarios.run_scenario(cfg, output_dir=args.output_dir)
    print(result.summary)
    for f in result.files:
        print(f"wrote {f}")
    return 0


def _cmd_fixed_points(args) -> int:
    cfg = _load_config(args.config)
    if cfg.scenario != "fixed_points":
        raise ConfigError(
            f"config declares scenario {cfg.scenario!r}; expected 'fixed_points'")
    result = scenarios.run_scenario(cfg, output_dir=args.output_dir,
                                    seed=args.seed, draws=args.draws)
    print(result.summary, end="")
    for f in result.files:
        print(f"wrote {f}")
    return 0


def _cmd_fit(args) -> int:
    data = scenarios.read_trajectory_csv(args.trajectory)
    if args.column not in data:
        raise ConfigError(f"column {args.column!r} not in "
                          f"{sorted(data)} of {args.trajectory}")
    lo, hi = args.window.split(":")
    fit = analysis.fit_power_law(data["t"], data[args.column],
                                 (float(lo), float(hi)), mode=args.mode,
                                 period=args.period)
    print(f"{args.column} ~ {fit.prefactor:.6g} * t^{fit.exponent:+.5f} "
          f"(r^2 {fit.r_squared:.6f}, {fit.n_points} points, mode {args.mode})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="multilink",
        description="Simulate and analyze an (N+1)-link nonholonomic "
                    "wheeled vehicle.")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario from a JSON config")
    sim.add_argument("config")
    sim.add_argument("--output-dir", default=None,
                     help="override output directory (also: "
                          f"{scenarios.OUTPUT_DIR_ENV} env var)")
    sim.set_defaults(func=_cmd_simulate)

    fp = sub.add_parser("fixed-points",
                        help="enumerate and classify straight-line equilibria")
    fp.add_argument("config")
    fp.add_argument("--output-dir", default=None)
    fp.add_argument("--draws", type=int, default=0,
                    help="additionally classify this many random parameter "
                         "draws")
    fp.add_argument("--seed", type=int, default=None,
                    help="seed for the random-parameter suite")
    fp.set_defaults(func=_cmd_fixed_points)

    fit = sub.add_parser("fit", help="fit a power law to a CSV column")
    fit.add_argument("trajectory")
    fit.add_argument("--column", default="v1")
    fit.add_argument("--window", default="1e3:1e5",
                     help="time window 'lo:hi' (default 1e3:1e5)")
    fit.add_argument("--mode", choices=("raw", "envelope"), default="raw")
    fit.add_argument("--period", type=float, default=None,
                     help="rotor period (required for envelope mode)")
    fit.set_defaults(func=_cmd_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (IntegrationError, DegenerateShapeError, InvalidParameterError,
            ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
