"""Command-line entry point: evolve | sweep | ensemble | oracle.

Exit codes: 0 success, 2 drift alarm, 3 configuration error,
4 correctness alarm (two-path identity mismatch), 5 oracle failure.
"""

from __future__ import annotations

import argparse
import sys

from .harness import ConfigError, RunConfig, run_ensemble, run_evolve, run_oracle, run_sweep

_COMMANDS = {
    "evolve": run_evolve,
    "sweep": run_sweep,
    "ensemble": run_ensemble,
    "oracle": run_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schf",
        description="Semiclassical Hartree-Fock spectral simulator and "
        "inequality verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=None, help="override config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.from_json(args.config)
        if args.seed is not None:
            config.seed = args.seed
        return _COMMANDS[args.command](config, args.out, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
