from __future__ import annotations

from ...core.algebra import lie_derivative_n, normalize, to_term
from ...core.errors import RddlError
from ...core.model_file import load_model
from ...core.syntax.parser import parse_term
from ...core.syntax.printer import pretty
from . import EXIT_OK


def run(args, config) -> int:
    model = load_model(args.model)
    if args.order < 0:
        raise RddlError(f"order must be nonnegative, got {args.order}")
    term = parse_term(args.term)
    dynamics = model.side(args.side)
    result = lie_derivative_n(dynamics, term, args.order) if args.order else normalize(term)
    print(pretty(to_term(result)))
    return EXIT_OK
