"""Fourier–Motzkin elimination over exact rationals.

A constraint reads ``sum(c_i * a_i) + constant >= 0`` (or ``> 0`` when strict). The atoms
``a_i`` are opaque hashable keys; the prover uses monomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Tuple

from ..logger import get_logger

log = get_logger(__name__)

__all__ = ["LinearConstraint", "infeasible", "MAX_CONSTRAINTS"]

MAX_CONSTRAINTS = 4000


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: Tuple[Tuple[Hashable, Fraction], ...]
    constant: Fraction
    strict: bool = False

    @classmethod
    def of(cls, coeffs: Dict[Hashable, Fraction], constant=0, strict: bool = False) -> "LinearConstraint":
        kept = {atom: Fraction(c) for atom, c in coeffs.items() if c != 0}
        return cls(tuple(sorted(kept.items(), key=lambda item: repr(item[0]))), Fraction(constant), strict)

    @property
    def atoms(self) -> FrozenSet[Hashable]:
        return frozenset(atom for atom, _ in self.coeffs)

    def coefficient(self, atom: Hashable) -> Fraction:
        for key, value in self.coeffs:
            if key == atom:
                return value
        return Fraction(0)

    def is_infeasible(self) -> bool:
        if self.coeffs:
            return False
        return self.constant < 0 or (self.strict and self.constant == 0)

    def is_trivial(self) -> bool:
        return not self.coeffs and not self.is_infeasible()

    def scale(self, factor: Fraction) -> "LinearConstraint":
        if factor <= 0:
            raise ValueError("constraints scale by positive factors only")
        return LinearConstraint(
            tuple((atom, c * factor) for atom, c in self.coeffs), self.constant * factor, self.strict
        )

    def add(self, other: "LinearConstraint") -> "LinearConstraint":
        total: Dict[Hashable, Fraction] = dict(self.coeffs)
        for atom, c in other.coeffs:
            total[atom] = total.get(atom, Fraction(0)) + c
        return LinearConstraint.of(total, self.constant + other.constant, self.strict or other.strict)

    def normalized(self) -> "LinearConstraint":
        """Scaled so the largest coefficient magnitude is one."""
        if not self.coeffs:
            if self.constant == 0:
                return self
            return LinearConstraint((), Fraction(1 if self.constant > 0 else -1), self.strict)
        top = max(abs(c) for _, c in self.coeffs)
        return self.scale(1 / top)

    def negated(self) -> "LinearConstraint":
        """The complement: ``-(sum) - constant > 0`` (strictness flips)."""
        return LinearConstraint(
            tuple((atom, -c) for atom, c in self.coeffs), -self.constant, not self.strict
        )

    def __str__(self) -> str:
        parts = [f"{c}*{atom}" for atom, c in self.coeffs]
        return f"{' + '.join(parts) or '0'} + {self.constant} {'>' if self.strict else '>='} 0"


def _pivot(constraints: List[LinearConstraint]) -> Optional[Hashable]:
    """Atom whose elimination creates the fewest new constraints."""
    best: Optional[Hashable] = None
    best_score = 0
    atoms = sorted({atom for con in constraints for atom in con.atoms}, key=repr)
    for atom in atoms:
        pos = sum(1 for con in constraints if con.coefficient(atom) > 0)
        neg = sum(1 for con in constraints if con.coefficient(atom) < 0)
        score = pos * neg - pos - neg
        if best is None or score < best_score:
            best, best_score = atom, score
    return best


def infeasible(constraints: Iterable[LinearConstraint], limit: int = MAX_CONSTRAINTS) -> bool:
    """True when the constraints have no real solution; False when feasible or too large."""
    current = {con.normalized() for con in constraints}
    if any(con.is_infeasible() for con in current):
        return True
    current = {con for con in current if not con.is_trivial()}
    while current:
        rows = sorted(current, key=str)
        atom = _pivot(rows)
        if atom is None:
            return False
        positive = [con for con in rows if con.coefficient(atom) > 0]
        negative = [con for con in rows if con.coefficient(atom) < 0]
        untouched = {con for con in rows if con.coefficient(atom) == 0}
        for pos in positive:
            for neg in negative:
                combined = pos.scale(-neg.coefficient(atom)).add(neg.scale(pos.coefficient(atom)))
                if combined.is_infeasible():
                    return True
                if not combined.is_trivial():
                    untouched.add(combined.normalized())
        if len(untouched) > limit:
            log.debug("Fourier-Motzkin gave up at %d constraints", len(untouched))
            return False
        current = untouched
    return False
