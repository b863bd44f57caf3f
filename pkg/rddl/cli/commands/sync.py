from __future__ import annotations

from ...core.algebra import SideConditions, sync_vector_field
from ...core.errors import RddlError
from ...core.logger import get_logger
from ...core.model_file import load_model
from ...core.syntax.ast import Dyn
from ...core.syntax.printer import pretty
from . import EXIT_OK

log = get_logger(__name__)


def run(args, config) -> int:
    model = load_model(args.model)
    if model.rdd is None:
        raise RddlError(f"{args.model} has no rdd to synchronize")
    side = SideConditions()
    synced = sync_vector_field(model.rdd, side)
    print(pretty(Dyn(synced)))
    for formula in side.formulas():
        log.info("side condition: %s", pretty(formula))
    return EXIT_OK
