"""Ledger of arithmetic sequents accepted on trust."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Hashable, List, Sequence

from ..logger import get_logger
from ..algebra import formula_key
from ..syntax.ast import Formula
from ..syntax.printer import pretty

log = get_logger(__name__)

__all__ = ["Obligation", "ObligationLedger", "sequent_key", "format_sequent"]


def sequent_key(context: Sequence[Formula], goal: Formula) -> Hashable:
    return frozenset(formula_key(f) for f in context), formula_key(goal)


def format_sequent(context: Sequence[Formula], goal: Formula) -> str:
    left = ", ".join(pretty(f) for f in context)
    return f"{left} |- {pretty(goal)}" if left else f"|- {pretty(goal)}"


@dataclass(frozen=True)
class Obligation:
    id: str
    text: str
    reason: str = ""


class ObligationLedger:
    """Assigns ``T1``, ``T2``, ... to distinct sequents; repeats get the first id back."""

    def __init__(self) -> None:
        self._by_key: Dict[Hashable, Obligation] = {}

    def register_obligation(self, sequent, reason: str = "") -> str:
        key = sequent_key(sequent.context, sequent.goal)
        found = self._by_key.get(key)
        if found is not None:
            return found.id
        obligation = Obligation(f"T{len(self._by_key) + 1}", format_sequent(sequent.context, sequent.goal), reason)
        self._by_key[key] = obligation
        log.debug("Trusted obligation %s: %s", obligation.id, obligation.text)
        return obligation.id

    @property
    def obligations(self) -> List[Obligation]:
        return list(self._by_key.values())

    def __len__(self) -> int:
        return len(self._by_key)
