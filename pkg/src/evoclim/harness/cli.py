"""Command-line interface.

Subcommands:

    evoclim run <config> [--out DIR]
    evoclim preset <name> [--out DIR] [--seed N]
    evoclim sweep <config> --axis <path> --values v1,v2,... [--out DIR]
    evoclim validate <config>

Exit codes: 0 success, 2 config error, 3 engine error.  The environment
variable EVOCLIM_THREADS caps the worker count used for IBM replicates.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, parse_config
from .presets import PRESET_NAMES, preset
from .runner import EngineError, run_scenario
from .sweep import sweep, write_sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ENGINE = 3


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="evoclim",
        description="Adaptation dynamics of an asexual population tracking a moving optimum",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config across its engines")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (default: <config>_out)")

    p_pre = sub.add_parser("preset", help="run a named figure preset")
    p_pre.add_argument("name", choices=PRESET_NAMES)
    p_pre.add_argument("--out", default=None)
    p_pre.add_argument("--seed", type=int, default=20200527)

    p_sw = sub.add_parser("sweep", help="sweep one parameter over the analytic asymptotics")
    p_sw.add_argument("config")
    p_sw.add_argument("--axis", required=True, help="dotted field, e.g. params.mu or trajectory.c")
    p_sw.add_argument("--values", required=True, help="comma-separated list of values")
    p_sw.add_argument("--out", default=None)

    p_val = sub.add_parser("validate", help="parse and validate a config, reporting problems")
    p_val.add_argument("config")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            parse_config(args.config)
            print(f"{args.config}: ok")
            return EXIT_OK

        if args.command == "run":
            scenario = parse_config(args.config)
            outdir = args.out or os.path.splitext(args.config)[0] + "_out"
            report = run_scenario(scenario, outdir)
            print(json.dumps(report.summary(), indent=2, sort_keys=True))
            print(f"artifacts written to {outdir}")
            return EXIT_OK

        if args.command == "preset":
            scenario = preset(args.name, seed=args.seed)
            outdir = args.out or f"{args.name}_out"
            report = run_scenario(scenario, outdir)
            print(json.dumps(report.summary(), indent=2, sort_keys=True))
            print(f"artifacts written to {outdir}")
            return EXIT_OK

        if args.command == "sweep":
            scenario = parse_config(args.config)
            try:
                values = [float(v) for v in args.values.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigError(f"--values: {exc}") from exc
            result = sweep(scenario, args.axis, values)
            outdir = args.out or os.path.splitext(args.config)[0] + "_sweep"
            os.makedirs(outdir, exist_ok=True)
            write_sweep_csv(result, os.path.join(outdir, "sweep.csv"))
            printable = {k: v for k, v in result.items() if k != "rows"}
            print(json.dumps(printable, indent=2, sort_keys=True))
            print(f"sweep table written to {outdir}/sweep.csv")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EngineError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
