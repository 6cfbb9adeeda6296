from __future__ import annotations

import argparse
import logging
import sys

from fdisac.errors import ConfigInvalid
from fdisac.harness import run_scenario
from fdisac.output import emit_csv, emit_curve
from fdisac.scenario import RunMode, Scenario, builtin_scenarios, load_scenario

logger = logging.getLogger("fdisac")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class ProgramArgumentParser:
    def __init__(self, argv: list[str] | None = None):
        self._parser = argparse.ArgumentParser(
            prog="fdisac", description="Run full-duplex ISAC scenarios."
        )
        verbosity = self._parser.add_mutually_exclusive_group()
        verbosity.add_argument(
            "-v", "--verbose", action="store_true", help="Log debug output."
        )
        verbosity.add_argument(
            "-q", "--quiet", action="store_true", help="Log warnings only."
        )
        commands = self._parser.add_subparsers(dest="command", required=True)

        run = commands.add_parser("run", help="Evaluate a scenario.")
        run.add_argument(
            "scenario", help="Scenario JSON file or builtin scenario name."
        )
        run.add_argument(
            "--trials", type=int, help="Monte-Carlo trials per sweep point."
        )
        run.add_argument("--seed", type=int, help="Seed of the Monte-Carlo trials.")
        run.add_argument(
            "--out", default="-", help="CSV file, '-' for standard output."
        )
        run.add_argument("--mode", choices=RunMode.ALL, help="Evaluation mode.")
        run.add_argument(
            "--curve", help="SVG file of the first metric, '-' for a sparkline."
        )
        run.add_argument("--workers", type=int, help="Parallel Monte-Carlo workers.")
        run.add_argument("--progress", action="store_true", help="Show trial progress.")

        commands.add_parser("list-scenarios", help="List the builtin scenarios.")

        validate = commands.add_parser("validate", help="Check a scenario file.")
        validate.add_argument(
            "scenario", help="Scenario JSON file or builtin scenario name."
        )

        self._args = self._parser.parse_args(argv)

    def get_command(self) -> str:
        return self._args.command

    def get_log_level(self) -> int:
        if self._args.verbose:
            return logging.DEBUG
        if self._args.quiet:
            return logging.WARNING
        return logging.INFO

    def get_scenario(self) -> Scenario:
        return load_scenario(self._args.scenario)

    def get_overrides(self) -> dict:
        return {
            "mode": self._args.mode,
            "trials": self._args.trials,
            "seed": self._args.seed,
            "workers": self._args.workers,
            "progress": self._args.progress,
        }

    def get_out(self) -> str:
        return self._args.out

    def get_curve(self) -> str | None:
        return self._args.curve


def _check_overrides(overrides: dict):
    problems = []
    if overrides["trials"] is not None and overrides["trials"] < 1:
        problems.append("--trials: has to be a positive integer")
    if overrides["seed"] is not None and not 0 <= overrides["seed"] < 2**63:
        problems.append("--seed: has to be an integer in [0, 2^63)")
    if problems:
        raise ConfigInvalid(problems)


def _run(args: ProgramArgumentParser) -> None:
    scenario = args.get_scenario()
    overrides = args.get_overrides()
    _check_overrides(overrides)
    rows = run_scenario(scenario, **overrides)

    out = args.get_out()
    emit_csv(rows, sys.stdout if out == "-" else out)
    curve = args.get_curve()
    if curve is not None:
        text = emit_curve(rows, curve)
        if text is not None:
            print(text, file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    args = ProgramArgumentParser(argv)
    logging.basicConfig(
        level=args.get_log_level(), format="%(levelname)s %(name)s: %(message)s"
    )

    try:
        command = args.get_command()
        if command == "list-scenarios":
            for name, path in builtin_scenarios().items():
                print(f"{name}\t{path}")
        elif command == "validate":
            scenario = args.get_scenario()
            print(
                f"{scenario.name}: valid, {len(scenario.series)} series, "
                f"{scenario.sweep.values.size} points"
            )
        else:
            _run(args)
    except ConfigInvalid as error:
        for problem in error.problems:
            logger.error("%s", problem)
        return EXIT_CONFIG
    except Exception:
        logger.exception("run failed")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
