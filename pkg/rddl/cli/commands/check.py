from __future__ import annotations

import sys

from ...core.corpus import load_script
from ...core.kernel.checker import check_proof
from ...core.logger import get_logger
from . import EXIT_CONDITIONAL, EXIT_OK

log = get_logger(__name__)


def run(args, config) -> int:
    sequent, proof = load_script(args.script)
    log.info("Checking %s", args.script)
    certificate = check_proof(proof, sequent, config)
    print(certificate.render(strict=config.strict))
    if config.strict:
        for obligation in certificate.obligations:
            print(f"trusted {obligation.id}: {obligation.text}", file=sys.stderr)
    return EXIT_CONDITIONAL if certificate.obligations else EXIT_OK
