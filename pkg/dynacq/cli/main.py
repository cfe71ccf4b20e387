"""
Command-line entry point: ``dynacq <command> [flags]``.

Commands: fit, acquire, learn-bn, ts, gen-data, interactive.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure, 1 anything else.
"""

import argparse
import sys
from typing import Dict, List, Optional, TextIO

from ..config import ExperimentConfig, load_config
from ..core.errors import DynAcqError
from ..logging_config import setup_logging
from . import commands
from .run_logging import command_context

COMMANDS = ("fit", "acquire", "learn-bn", "ts", "gen-data", "interactive")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynacq", description="Dynamic feature acquisition experiments")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="TOML configuration file")

    data = parser.add_argument_group("data")
    data.add_argument("--data", help="CSV dataset (input, or output for gen-data)")
    data.add_argument("--label-column")
    data.add_argument("--target-column")
    data.add_argument("--task", choices=("classification", "regression"))
    data.add_argument("--no-normalize", dest="normalize", action="store_const", const=False, default=None)
    data.add_argument("--no-header", dest="header", action="store_const", const=False, default=None,
                      help="CSV has no header row; columns are x0..x{d-1} and y")
    data.add_argument("--generator", choices=("hierarchical", "bn", "chain"))
    data.add_argument("--fixture", help="DAG fixture for the bn generator (asia, sachs, small)")
    data.add_argument("--n", type=int, help="Rows to generate")

    model = parser.add_argument_group("model")
    model.add_argument("--engine", help="gaussian | class_conditional(m) | mixture(m)")
    model.add_argument("--model", help="Model JSON path")

    acq = parser.add_argument_group("acquisition")
    acq.add_argument("--policy", choices=("dfa", "sfa", "both"))
    acq.add_argument("--budget", type=int)
    acq.add_argument("--confidence", type=float)
    acq.add_argument("--prune-bn", help="Edge-list file or 'learn'")
    acq.add_argument("--n-samples", type=int)
    acq.add_argument("--static-on-test", action="store_const", const=True, default=None)

    bn = parser.add_argument_group("structure learning")
    bn.add_argument("--oracle", choices=("exact", "mc"))
    bn.add_argument("--epsilon", type=float)
    bn.add_argument("--ci-null", choices=("fixed", "permutation"))

    ts = parser.add_argument_group("time series")
    ts.add_argument("--time-steps", type=int)
    ts.add_argument("--step-width", type=int)
    ts.add_argument("--alpha", type=float)
    ts.add_argument("--ts-mode", choices=("dirichlet", "uniform", "consecutive"))
    ts.add_argument("--tau", type=float)
    ts.add_argument("--calibration-bins", type=int)
    ts.add_argument("--posterior-draws", type=int)

    run = parser.add_argument_group("run")
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out", help="Output directory")
    run.add_argument("--log-level")
    run.add_argument("--log-file")
    return parser


def overrides_from(args: argparse.Namespace) -> Dict[str, object]:
    values = vars(args).copy()
    values.pop("command")
    values.pop("config")
    return {k: v for k, v in values.items() if v is not None}


def run_command(cfg: ExperimentConfig, command: str, stdin: TextIO, stdout: TextIO) -> None:
    if command == "fit":
        path = commands.cmd_fit(cfg)
        stdout.write(f"Model written to {path}\n")
    elif command == "acquire":
        outputs = commands.cmd_acquire(cfg)
        stdout.write("".join(f"{name}: {path}\n" for name, path in outputs.items()))
    elif command == "learn-bn":
        commands.cmd_learn_bn(cfg, stdout)
    elif command == "ts":
        outputs = commands.cmd_ts(cfg)
        stdout.write("".join(f"{name}: {path}\n" for name, path in outputs.items()))
    elif command == "gen-data":
        outputs = commands.cmd_gen_data(cfg)
        stdout.write("".join(f"{name}: {path}\n" for name, path in outputs.items()))
    else:
        commands.cmd_interactive(cfg, stdin, stdout)


def main(argv: Optional[List[str]] = None, stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, **overrides_from(args))
    except DynAcqError as e:
        sys.stderr.write(f"error: {e.detail}\n")
        return e.exit_code

    setup_logging(cfg.log_level, cfg.log_file)
    try:
        with command_context(args.command):
            run_command(cfg, args.command, stdin, stdout)
    except DynAcqError as e:
        sys.stderr.write(f"error: {e.detail}\n")
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
