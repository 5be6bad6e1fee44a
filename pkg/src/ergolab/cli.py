"""Command line interface.

    ergolab run <config> --out <dir> [--seed S] [--threads T]
    ergolab validate <config>
    ergolab list-scenarios

<config> is either a YAML file path or the name of a bundled scenario.
ERGOLAB_THREADS sets the default worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import bundled_scenarios, load_scenario, resolve
from .errors import ConfigInvariantError, ConfigParseError, UsageError
from .runner import EXIT_INVARIANT, EXIT_PARSE, run_scenario


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("ERGOLAB_THREADS", "1")))
    except ValueError:
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ergolab",
                                     description="iterated-function-system workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write reports")
    p_run.add_argument("config", help="config file path or bundled scenario name")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--threads", type=int, default=_default_threads())

    p_val = sub.add_parser("validate", help="validate a scenario config")
    p_val.add_argument("config", help="config file path or bundled scenario name")

    sub.add_parser("list-scenarios", help="list bundled scenarios")

    args = parser.parse_args(argv)

    if args.command == "run":
        return run_scenario(args.config, args.out, seed=args.seed, threads=args.threads)

    if args.command == "validate":
        try:
            resolved = resolve(load_scenario(args.config))
            from .config import build_system

            build_system(resolved)
        except ConfigParseError as exc:
            print(f"parse error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except (ConfigInvariantError, UsageError) as exc:
            print(f"invariant violation: {exc}", file=sys.stderr)
            return EXIT_INVARIANT
        print(json.dumps(resolved, sort_keys=True, indent=2))
        return 0

    for name, raw in bundled_scenarios().items():
        desc = raw.get("description", "") if isinstance(raw, dict) else ""
        print(f"{name}: {desc}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
