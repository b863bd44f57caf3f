from __future__ import annotations

from ...core.errors import RddlError
from ...core.logger import get_logger
from ...core.model_file import load_model
from ...core.semantics.falsifier import falsify_rdd
from ...core.semantics.simulation import check_simulation_numeric
from ...core.syntax.printer import pretty
from . import EXIT_COUNTEREXAMPLE, EXIT_OK

log = get_logger(__name__)


def run(args, config) -> int:
    model = load_model(args.model)
    if model.rdd is None:
        raise RddlError(f"{args.model} has no rdd to falsify")
    found = falsify_rdd(
        model.rdd,
        model.gamma,
        samples=config.samples,
        box=model.box,
        step=config.step,
        horizon=config.horizon,
        seed=config.seed,
        radius=config.box_radius,
        slack=config.slack,
        tolerance=config.tolerance,
        fixed=model.fixed,
    )
    if found is not None:
        print(found.report())
        return EXIT_COUNTEREXAMPLE
    print("result: no counterexample")
    print(f"samples: {config.samples}")
    if model.relation is not None:
        # Evidence only; a violation here does not refute the formula.
        report = check_simulation_numeric(
            model.relation,
            model.rdd,
            grid=config.grid,
            box=model.box,
            step=config.step,
            horizon=config.horizon,
            tolerance=config.tolerance,
            radius=config.box_radius,
            fixed=model.fixed,
            slack=config.slack,
        )
        print(f"relation: {pretty(model.relation)}")
        print(report.report())
        if not report.clean and not report.vacuous:
            log.warning("Relation %s fails the lattice check", pretty(model.relation))
    return EXIT_OK
