"""Sequents and proof trees."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..algebra import formula_key
from ..arith.obligations import format_sequent
from ..syntax.ast import Formula, conjuncts, is_first_order, normal_form

__all__ = ["Sequent", "RuleApplication", "ProofNode"]


@dataclass(frozen=True)
class Sequent:
    """``context |- goal``; the context is a set of modality-free formulas."""

    context: Tuple[Formula, ...]
    goal: Formula

    @classmethod
    def of(cls, context: Iterable[Formula], goal: Formula) -> "Sequent":
        """Normalized sequent; conjunctions in the context are split and repeats dropped."""
        seen = set()
        flat: List[Formula] = []
        for formula in context:
            for part in conjuncts(normal_form(formula)):
                key = formula_key(part)
                if key not in seen:
                    seen.add(key)
                    flat.append(part)
        return cls(tuple(flat), normal_form(goal))

    def with_goal(self, goal: Formula) -> "Sequent":
        return Sequent.of(self.context, goal)

    def extended(self, *formulas: Formula, goal: Optional[Formula] = None) -> "Sequent":
        return Sequent.of((*self.context, *formulas), self.goal if goal is None else goal)

    @property
    def is_arithmetic(self) -> bool:
        return is_first_order(self.goal) and all(is_first_order(f) for f in self.context)

    def key(self):
        return frozenset(formula_key(f) for f in self.context), formula_key(self.goal)

    def same_as(self, other: "Sequent") -> bool:
        return self.key() == other.key()

    def __str__(self) -> str:
        return format_sequent(self.context, self.goal)


@dataclass(frozen=True)
class RuleApplication:
    """Rule name plus its parameters (formulas, terms, integers or identifiers)."""

    rule: str
    params: Tuple[Tuple[str, Any], ...] = ()

    @classmethod
    def of(cls, rule: str, params: Optional[Mapping[str, Any]] = None) -> "RuleApplication":
        return cls(rule, tuple((params or {}).items()))

    @property
    def options(self) -> Dict[str, Any]:
        return dict(self.params)

    def __str__(self) -> str:
        return self.rule


@dataclass
class ProofNode:
    """One rule application. ``sequent`` is filled in for the root and checked for children."""

    rule: RuleApplication
    children: List["ProofNode"] = field(default_factory=list)
    sequent: Optional[Sequent] = None
    position: int = -1

    @classmethod
    def of(cls, rule: str, params: Optional[Mapping[str, Any]] = None,
           children: Sequence["ProofNode"] = (), sequent: Optional[Sequent] = None) -> "ProofNode":
        return cls(RuleApplication.of(rule, params), list(children), sequent)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()
