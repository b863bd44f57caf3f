from __future__ import annotations

from pathlib import Path

from ...core.corpus import check_corpus
from . import EXIT_OK, EXIT_REFUTED


def run(args, config) -> int:
    directory = Path(args.dir) if args.dir else None
    results = check_corpus(directory, config, workers=max(1, args.workers))
    for result in results:
        entry = result.entry
        verdict = "ok" if result.matches else "DRIFT"
        print(f"{entry.script}: {result.status} obligations={result.obligations} "
              f"(pinned {entry.status}/{entry.obligations}) {verdict}")
    return EXIT_OK if all(r.matches for r in results) else EXIT_REFUTED
