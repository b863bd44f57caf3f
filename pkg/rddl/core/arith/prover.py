"""Sound but incomplete prover for quantifier-free real-arithmetic sequents.

``hypotheses |- goal`` is proved by refuting ``hypotheses & !goal`` case by case:

1. the formula is split into a disjunction of conjunctions of comparisons;
2. implied equalities are promoted and ``var = term`` equalities substituted away;
3. denominators are cleared when their sign follows from the case's facts;
4. monomials become atoms of a linear system closed by Fourier–Motzkin, first plainly,
   then with sign facts and monomial factoring, then with pairwise products of facts.

A case that survives sends the sequent to the sampling refuter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import sympy

from ..algebra import RationalFunction, normalize, symbol
from ..errors import NonArithmeticInput, ZeroDenominator
from ..logger import get_logger
from ..syntax.ast import (
    And,
    Cmp,
    Falsity,
    Formula,
    Not,
    Sub,
    Truth,
    conj,
    is_first_order,
    negate,
    normal_form,
)
from ..syntax.printer import pretty
from .linear import LinearConstraint, infeasible
from .refuter import search_witness

log = get_logger(__name__)

__all__ = ["Proved", "Refuted", "Unknown", "ArithVerdict", "prove_arith", "split_cases", "MAX_CASES"]

MAX_CASES = 64
MAX_PRODUCT_FACTS = 24

Monomial = Tuple[Tuple[str, int], ...]


@dataclass(frozen=True)
class Proved:
    trace: Tuple[str, ...] = ()
    kind: str = field(default="proved", init=False)


@dataclass(frozen=True)
class Refuted:
    witness: Dict[str, Fraction]
    kind: str = field(default="refuted", init=False)


@dataclass(frozen=True)
class Unknown:
    reason: str = ""
    kind: str = field(default="unknown", init=False)


ArithVerdict = Union[Proved, Refuted, Unknown]


# --- case splitting -------------------------------------------------------------------


def split_cases(formula: Formula) -> Optional[List[List[Cmp]]]:
    """Disjunctive normal form over comparisons; ``a != b`` splits into ``<`` and ``>``.

    Returns ``None`` when the expansion exceeds :data:`MAX_CASES`.
    """
    try:
        return _dnf(normal_form(formula))
    except OverflowError:
        return None


def _product(left: List[List[Cmp]], right: List[List[Cmp]]) -> List[List[Cmp]]:
    if len(left) * len(right) > MAX_CASES:
        raise OverflowError
    return [a + b for a in left for b in right]


def _dnf(f: Formula) -> List[List[Cmp]]:
    if isinstance(f, Truth):
        return [[]]
    if isinstance(f, Falsity):
        return []
    if isinstance(f, Cmp):
        return [[f]]
    if isinstance(f, And):
        return _product(_dnf(f.left), _dnf(f.right))
    if isinstance(f, Not):
        inner = f.arg
        if isinstance(inner, Cmp) and inner.op == "=":
            return [[Cmp(inner.left, ">", inner.right)], [Cmp(inner.left, "<", inner.right)]]
        if isinstance(inner, And):
            cases = _dnf(negate(inner.left)) + _dnf(negate(inner.right))
            if len(cases) > MAX_CASES:
                raise OverflowError
            return cases
        if isinstance(inner, (Cmp, Not, Truth, Falsity)):
            return _dnf(negate(inner))
    raise NonArithmeticInput(pretty(f))


# --- polynomials ----------------------------------------------------------------------


def _terms(expr: sympy.Expr) -> Dict[Monomial, Fraction]:
    expr = sympy.expand(expr)
    gens = sorted(expr.free_symbols, key=lambda s: s.name)
    if not gens:
        value = sympy.Rational(expr)
        return {(): Fraction(int(value.p), int(value.q))} if value != 0 else {}
    out: Dict[Monomial, Fraction] = {}
    for exponents, coeff in sympy.Poly(expr, *gens, domain="QQ").terms():
        mono = tuple((g.name, e) for g, e in zip(gens, exponents) if e)
        coeff = sympy.Rational(coeff)
        out[mono] = Fraction(int(coeff.p), int(coeff.q))
    return out


def _constraint(expr: sympy.Expr, strict: bool) -> LinearConstraint:
    terms = _terms(expr)
    constant = terms.pop((), Fraction(0))
    return LinearConstraint.of(terms, constant, strict)


def _is_linear(expr: sympy.Expr) -> bool:
    return all(sum(e for _, e in mono) <= 1 for mono in _terms(expr))


@dataclass
class _Atom:
    """``expr op 0`` with ``op`` one of ``=``, ``>=``, ``>``; ``expr`` may be rational."""

    rf: RationalFunction
    op: str

    @classmethod
    def of(cls, cmp: Cmp) -> "_Atom":
        op = cmp.op
        if op in ("<", "<="):
            return cls(normalize(Sub(cmp.right, cmp.left)), ">" if op == "<" else ">=")
        return cls(normalize(Sub(cmp.left, cmp.right)), op)

    def decided(self) -> Optional[bool]:
        if not self.rf.is_constant:
            return None
        value = self.rf.constant_value()
        return {"=": value == 0, ">=": value >= 0, ">": value > 0}[self.op]

    def __str__(self) -> str:
        return f"{self.rf.expr} {self.op} 0"


class _CaseRefuter:
    def __init__(self, literals: Sequence[Cmp]):
        self.trace: List[str] = []
        self.atoms = [_Atom.of(lit) for lit in literals]

    # -- preprocessing ------------------------------------------------------------------

    def _closed(self) -> bool:
        kept = []
        for atom in self.atoms:
            verdict = atom.decided()
            if verdict is False:
                self.trace.append(f"constant fact {atom} is false")
                return True
            if verdict is None:
                kept.append(atom)
        self.atoms = kept
        return False

    def _solvable(self, atom: _Atom) -> Optional[Tuple[str, RationalFunction]]:
        if atom.op != "=":
            return None
        num = atom.rf.num
        for name in sorted((s.name for s in num.free_symbols), reverse=True):
            x = symbol(name)
            coeff = sympy.expand(sympy.diff(num, x))
            if coeff.free_symbols or coeff == 0:
                continue
            rest = sympy.expand(num - coeff * x)
            if x in rest.free_symbols:
                continue
            return name, RationalFunction.from_expr(-rest / coeff)
        return None

    def _substitute(self) -> bool:
        progress = True
        while progress:
            progress = False
            for i, atom in enumerate(self.atoms):
                solved = self._solvable(atom)
                if solved is None:
                    continue
                name, value = solved
                self.trace.append(f"substitute {name} := {value.expr}")
                others = self.atoms[:i] + self.atoms[i + 1:]
                self.atoms = [_Atom(a.rf.substitute({name: value}), a.op) for a in others]
                if self._closed():
                    return True
                progress = True
                break
        return False

    def _linear_system(self, atoms: Sequence[_Atom]) -> List[LinearConstraint]:
        system: List[LinearConstraint] = []
        for atom in atoms:
            if not atom.rf.is_polynomial:
                continue
            if atom.op == "=":
                system.append(_constraint(atom.rf.num, False))
                system.append(_constraint(-atom.rf.num, False))
            else:
                system.append(_constraint(atom.rf.num, atom.op == ">"))
        return system

    def _implied_equalities(self) -> bool:
        changed = False
        system = self._linear_system(self.atoms)
        for i, atom in enumerate(self.atoms):
            if atom.op != ">=" or not atom.rf.is_polynomial or not _is_linear(atom.rf.num):
                continue
            if infeasible(system + [_constraint(atom.rf.num, True)]):
                self.trace.append(f"implied equality {atom.rf.expr} = 0")
                self.atoms[i] = _Atom(atom.rf, "=")
                changed = True
        return changed

    # -- signs --------------------------------------------------------------------------

    def _variable_signs(
        self, system: List[LinearConstraint], extra: Sequence[str] = ()
    ) -> Dict[str, Tuple[int, bool]]:
        names = sorted({name for con in system for mono in con.atoms for name, _ in mono} | set(extra))
        linear = [con for con in system if all(len(mono) == 1 and mono[0][1] == 1 for mono in con.atoms)]
        signs: Dict[str, Tuple[int, bool]] = {}
        for name in names:
            atom = ((name, 1),)
            if infeasible(linear + [LinearConstraint.of({atom: -1})]):
                signs[name] = (1, True)
            elif infeasible(linear + [LinearConstraint.of({atom: 1})]):
                signs[name] = (-1, True)
            elif infeasible(linear + [LinearConstraint.of({atom: -1}, strict=True)]):
                signs[name] = (1, False)
            elif infeasible(linear + [LinearConstraint.of({atom: 1}, strict=True)]):
                signs[name] = (-1, False)
        return signs

    @staticmethod
    def _monomial_sign(mono: Monomial, signs: Dict[str, Tuple[int, bool]]) -> Optional[Tuple[int, bool]]:
        sign, strict = 1, True
        for name, exp in mono:
            known = signs.get(name)
            if exp % 2 == 0:
                strict = strict and known is not None and known[1]
                continue
            if known is None:
                return None
            sign *= known[0]
            strict = strict and known[1]
        return sign, strict

    def _sign_facts(self, system: List[LinearConstraint], signs) -> List[LinearConstraint]:
        facts = []
        for mono in sorted({m for con in system for m in con.atoms}, key=repr):
            known = self._monomial_sign(mono, signs)
            if known is not None:
                facts.append(LinearConstraint.of({mono: known[0]}, 0, known[1]))
        return facts

    def _factored(self, atoms: Sequence[_Atom], signs) -> List[LinearConstraint]:
        """Divide each polynomial fact by its monomial content when that content has a strict sign."""
        derived: List[LinearConstraint] = []
        for atom in atoms:
            if not atom.rf.is_polynomial:
                continue
            terms = _terms(atom.rf.num)
            if not terms or () in terms:
                continue
            names = set.intersection(*({n for n, _ in mono} for mono in terms))
            content = tuple(
                (n, min(dict(mono)[n] for mono in terms)) for n in sorted(names)
            )
            if not content:
                continue
            known = self._monomial_sign(content, signs)
            if known is None or not known[1]:
                continue
            factor = sympy.Mul(*(symbol(n) ** e for n, e in content))
            rest = sympy.expand(sympy.cancel(atom.rf.num / factor)) * known[0]
            if atom.op == "=":
                derived.append(_constraint(rest, False))
                derived.append(_constraint(-rest, False))
            else:
                derived.append(_constraint(rest, atom.op == ">"))
        return derived

    def _sign_of(self, poly: sympy.Expr, atoms: Sequence[_Atom]) -> int:
        system = self._linear_system(atoms)
        signs = self._variable_signs(system, [s.name for s in poly.free_symbols])
        base = system + self._sign_facts(system + [_constraint(poly, False)], signs)
        if infeasible(base + [_constraint(-poly, False)]):
            return 1
        if infeasible(base + [_constraint(poly, False)]):
            return -1
        return 0

    def _clear_denominators(self) -> None:
        polynomial = [a for a in self.atoms if a.rf.is_polynomial]
        cleared: List[_Atom] = []
        for atom in self.atoms:
            if atom.rf.is_polynomial:
                cleared.append(atom)
                continue
            if atom.op == "=":
                cleared.append(_Atom(RationalFunction(atom.rf.num, sympy.Integer(1)), "="))
                continue
            sign = self._sign_of(atom.rf.den, polynomial)
            if sign == 0:
                self.trace.append(f"dropped {atom}: denominator sign unknown")
                continue
            num = atom.rf.num if sign > 0 else sympy.expand(-atom.rf.num)
            self.trace.append(f"cleared denominator {atom.rf.den} (sign {sign:+d})")
            cleared.append(_Atom(RationalFunction(num, sympy.Integer(1)), atom.op))
        self.atoms = cleared

    # -- closure ------------------------------------------------------------------------

    def _products(self) -> List[LinearConstraint]:
        inequalities = [a for a in self.atoms if a.op != "=" and a.rf.is_polynomial][:MAX_PRODUCT_FACTS]
        products = []
        for first, second in combinations(inequalities, 2):
            strict = first.op == ">" and second.op == ">"
            products.append(_constraint(first.rf.num * second.rf.num, strict))
        for atom in inequalities:
            products.append(_constraint(atom.rf.num * atom.rf.num, False))
        return products

    def refute(self) -> bool:
        if self._closed() or self._substitute():
            return True
        if self._implied_equalities() and self._substitute():
            return True
        self._clear_denominators()
        if self._closed():
            return True
        system = self._linear_system(self.atoms)
        if infeasible(system):
            self.trace.append("linear closure")
            return True
        signs = self._variable_signs(system)
        enriched = system + self._sign_facts(system, signs) + self._factored(self.atoms, signs)
        if infeasible(enriched):
            self.trace.append("closure with sign facts")
            return True
        with_products = enriched + self._products()
        with_products += self._sign_facts(with_products, signs)
        if infeasible(with_products):
            self.trace.append("closure with degree-two products")
            return True
        return False


def prove_arith(
    hypotheses: Sequence[Formula],
    goal: Formula,
    refuter_points: int = 10_000,
    seed: int = 42,
    radius: float = 10.0,
) -> ArithVerdict:
    for formula in [*hypotheses, goal]:
        if not is_first_order(formula):
            raise NonArithmeticInput(pretty(formula))
    cases = split_cases(conj(*hypotheses, negate(goal)))
    trace: List[str] = []
    if cases is None:
        reason = f"more than {MAX_CASES} cases"
    else:
        reason = ""
        for i, literals in enumerate(cases):
            try:
                refuter = _CaseRefuter(literals)
                closed = refuter.refute()
            except ZeroDenominator as exc:
                closed, refuter = False, None
                reason = str(exc)
            if not closed:
                reason = reason or f"case {i + 1}/{len(cases)} not closed"
                break
            trace.append(f"case {i + 1}/{len(cases)}: " + "; ".join(refuter.trace))
        else:
            log.debug("Proved %s", pretty(goal))
            return Proved(tuple(trace))
    witness = search_witness(hypotheses, goal, refuter_points, seed, radius)
    if witness is not None:
        log.debug("Refuted %s with %s", pretty(goal), witness)
        return Refuted(witness)
    return Unknown(reason)
