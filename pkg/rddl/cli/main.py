from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from ..core.config import RunConfig
from ..core.errors import ProofCheckError, RddlError
from ..core.logger import get_logger, set_level
from ..version import __version__
from .commands import EXIT_INPUT, EXIT_REFUTED
from .commands import (
    check as cmd_check,
    corpus as cmd_corpus,
    falsify as cmd_falsify,
    lie as cmd_lie,
    simulate as cmd_simulate,
    sync as cmd_sync,
)

log = get_logger(__name__)

_COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "falsify": cmd_falsify,
    "lie": cmd_lie,
    "sync": cmd_sync,
    "corpus": cmd_corpus,
}


def entrypoint():
    sys.exit(main())


def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--step", type=float, default=None, help="RK4 step size (default 1e-4)")
    shared.add_argument("--horizon", type=float, default=None, help="Integration horizon (default 10)")
    shared.add_argument("--samples", type=int, default=None, help="Falsifier samples (default 500)")
    shared.add_argument("--seed", type=int, default=None, help="Random seed (default 42)")
    shared.add_argument("--tolerance", type=float, default=None, help="Numeric tolerance (default 1e-6)")
    shared.add_argument("--verbose", action="store_true", help="Debug logging on stderr")
    return shared


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_flags()
    parser = argparse.ArgumentParser(prog="rddl", description="Relational differential dynamic logic toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[shared], help="Check a proof script and print its certificate")
    c.add_argument("script", type=str)
    c.add_argument("--strict", action="store_true", default=None,
                   help="List every trusted obligation on stderr")

    s = sub.add_parser("simulate", parents=[shared], help="Integrate a model and write a trajectory CSV")
    s.add_argument("model", type=str)
    s.add_argument("--init", type=str, default="", help="Initial state as k=v,... (overrides model values)")
    s.add_argument("--target", type=str, default=None, help="Term whose level ends the run")
    s.add_argument("--exit-level", type=float, default=None, help="Level of --target that ends the run")
    s.add_argument("--csv", type=str, default=None, help="Write CSV here instead of stdout")
    s.add_argument("--sync", action="store_true", help="Run the synchronized dynamics of an rdd model")
    s.add_argument("--side", choices=("left", "right"), default="left", help="Side of an rdd model to run")

    f = sub.add_parser("falsify", parents=[shared], help="Search for a counterexample to an rdd model")
    f.add_argument("model", type=str)

    lie = sub.add_parser("lie", parents=[shared], help="Print a Lie derivative along a model's dynamics")
    lie.add_argument("model", type=str)
    lie.add_argument("--term", type=str, required=True)
    lie.add_argument("--order", type=int, default=1)
    lie.add_argument("--side", choices=("left", "right"), default="left")

    y = sub.add_parser("sync", parents=[shared], help="Print the synchronized dynamics of an rdd model")
    y.add_argument("model", type=str)

    k = sub.add_parser("corpus", parents=[shared], help="Check every script in the corpus manifest")
    k.add_argument("--dir", type=str, default=None, help="Corpus directory (default: RDDL_CORPUS_DIR or ./corpus)")
    k.add_argument("--workers", type=int, default=1)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    overrides = {name: getattr(args, name, None)
                 for name in ("step", "horizon", "samples", "seed", "tolerance", "strict")}
    return RunConfig.resolve(overrides)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        set_level(logging.DEBUG)
    try:
        config = resolve_config(args)
        return _COMMANDS[args.command].run(args, config)
    except ValidationError as exc:
        log.error("Invalid configuration: %s", exc)
        return EXIT_INPUT
    except ProofCheckError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_REFUTED
    except RddlError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    finally:
        try:
            sys.stdout.flush()
        except Exception:
            pass


if __name__ == "__main__":
    sys.exit(main())
