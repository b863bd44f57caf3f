"""Abstract syntax for terms, formulas, hybrid programs and RDD formulas.

All nodes are frozen dataclasses and safe to share. Formulas produced by the parser and by
every kernel constructor are kept in normal form (see :func:`normal_form`):

* ``a | b`` becomes ``!(!a & !b)`` and ``a -> b`` becomes ``!(a & !b)``;
* double negations cancel;
* negating a single ordering comparison flips its operator (``!(a <= b)`` is ``a > b``).

Sharp variables are plain variables whose name ends in ``#``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import FrozenSet, Iterable, Iterator, List, Mapping, Tuple, Union

from ..errors import DisjointnessError

__all__ = [
    "Term",
    "Variable",
    "Constant",
    "Neg",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Pow",
    "Formula",
    "Cmp",
    "Not",
    "And",
    "Or",
    "Implies",
    "Forall",
    "Box",
    "Diamond",
    "Truth",
    "Falsity",
    "TRUE",
    "FALSE",
    "Program",
    "Test",
    "Dyn",
    "Seq",
    "Choice",
    "Dynamics",
    "RddFormula",
    "IDENT_PATTERN",
    "COMPARISON_OPS",
    "is_sharp",
    "conj",
    "conjuncts",
    "negate",
    "implies",
    "disj",
    "normal_form",
    "free_variables",
    "bound_variables",
    "seq_items",
    "make_seq",
    "is_first_order",
    "substitute",
    "desugar_rdd",
    "check_independent",
]

IDENT_PATTERN = re.compile(r"[A-Za-z][A-Za-z0-9_]*#?")
COMPARISON_OPS = ("=", "<=", "<", ">=", ">")
_FLIPPED = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def is_sharp(name: str) -> bool:
    return name.endswith("#")


# --- terms ----------------------------------------------------------------------------


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Variable(Term):
    name: str


@dataclass(frozen=True)
class Constant(Term):
    value: Fraction

    def __post_init__(self) -> None:
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Neg(Term):
    arg: Term


@dataclass(frozen=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Div(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class Pow(Term):
    base: Term
    exponent: int

    def __post_init__(self) -> None:
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ValueError(f"exponent must be a nonnegative integer, got {self.exponent!r}")


# --- formulas -------------------------------------------------------------------------


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Cmp(Formula):
    left: Term
    op: str
    right: Term

    def __post_init__(self) -> None:
        if self.op not in COMPARISON_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Box(Formula):
    program: "Program"
    post: Formula


@dataclass(frozen=True)
class Diamond(Formula):
    program: "Program"
    post: Formula


@dataclass(frozen=True)
class Truth(Formula):
    pass


@dataclass(frozen=True)
class Falsity(Formula):
    pass


TRUE = Truth()
FALSE = Falsity()


# --- programs -------------------------------------------------------------------------


@dataclass(frozen=True)
class Dynamics:
    """ODE system ``x' = f(x) & Q``; variables read but not defined are parameters."""

    odes: Tuple[Tuple[str, Term], ...]
    constraint: Formula = TRUE

    def __post_init__(self) -> None:
        odes = tuple((str(name), rhs) for name, rhs in self.odes)
        names = [name for name, _ in odes]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate ODE variable in {names}")
        if not odes:
            raise ValueError("dynamics needs at least one ODE")
        object.__setattr__(self, "odes", odes)

    @classmethod
    def of(cls, odes: Union[Mapping[str, Term], Iterable[Tuple[str, Term]]], constraint: Formula = TRUE):
        items = odes.items() if isinstance(odes, Mapping) else odes
        return cls(tuple(items), constraint)

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.odes)

    def rhs(self, name: str) -> Term:
        for var, term in self.odes:
            if var == name:
                return term
        raise KeyError(name)

    def with_constraint(self, constraint: Formula) -> "Dynamics":
        return Dynamics(self.odes, constraint)

    def parameters(self) -> FrozenSet[str]:
        return frozenset(free_variables(Dyn(self))) - frozenset(self.variables)


class Program:
    __slots__ = ()


@dataclass(frozen=True)
class Test(Program):
    cond: Formula


@dataclass(frozen=True)
class Dyn(Program):
    dynamics: Dynamics


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class Choice(Program):
    left: Program
    right: Program


@dataclass(frozen=True)
class RddFormula:
    """``[delta; delta#; ?exit] post`` with the two dynamics acting on disjoint variables."""

    left: Dynamics
    right: Dynamics
    exit: Formula
    post: Formula

    def __post_init__(self) -> None:
        check_independent(Dyn(self.left), Dyn(self.right), DisjointnessError)

    def desugar(self) -> Formula:
        return Box(Seq(Seq(Dyn(self.left), Dyn(self.right)), Test(self.exit)), self.post)

    @classmethod
    def from_box(cls, formula: Formula) -> "RddFormula":
        """Inverse of :meth:`desugar`; raises ``ValueError`` when the shape does not fit."""
        if isinstance(formula, Box):
            items = seq_items(formula.program)
            if (
                len(items) == 3
                and isinstance(items[0], Dyn)
                and isinstance(items[1], Dyn)
                and isinstance(items[2], Test)
            ):
                return cls(items[0].dynamics, items[1].dynamics, items[2].cond, formula.post)
        raise ValueError("formula is not an RDD box")


def check_independent(first: Program, second: Program, error=DisjointnessError) -> None:
    """Neither program writes a variable the other one reads or writes."""
    clash = (bound_variables(first) & free_variables(second)) | (
        bound_variables(second) & free_variables(first)
    )
    if clash:
        raise error(f"shared variables {sorted(clash)}")


# --- normal form ----------------------------------------------------------------------


def conj(*parts: Formula) -> Formula:
    """Left-nested conjunction that drops ``true`` operands."""
    kept = [p for p in parts if not isinstance(p, Truth)]
    if any(isinstance(p, Falsity) for p in kept):
        return FALSE
    if not kept:
        return TRUE
    result = kept[0]
    for part in kept[1:]:
        result = And(result, part)
    return result


def conjuncts(formula: Formula) -> List[Formula]:
    if isinstance(formula, And):
        return conjuncts(formula.left) + conjuncts(formula.right)
    if isinstance(formula, Truth):
        return []
    return [formula]


def negate(formula: Formula) -> Formula:
    """Negation kept in normal form."""
    if isinstance(formula, Not):
        return formula.arg
    if isinstance(formula, Truth):
        return FALSE
    if isinstance(formula, Falsity):
        return TRUE
    if isinstance(formula, Cmp) and formula.op in _FLIPPED:
        return Cmp(formula.left, _FLIPPED[formula.op], formula.right)
    return Not(formula)


def implies(premise: Formula, conclusion: Formula) -> Formula:
    return negate(conj(premise, negate(conclusion)))


def disj(left: Formula, right: Formula) -> Formula:
    return negate(conj(negate(left), negate(right)))


def normal_form(node):
    """Rewrite ``Or``/``Implies`` and push negations, recursively through programs."""
    if isinstance(node, Formula):
        return _nf_formula(node)
    if isinstance(node, Program):
        return _nf_program(node)
    if isinstance(node, Dynamics):
        return Dynamics(node.odes, _nf_formula(node.constraint))
    if isinstance(node, RddFormula):
        return RddFormula(
            normal_form(node.left), normal_form(node.right), _nf_formula(node.exit), _nf_formula(node.post)
        )
    return node


def _nf_formula(f: Formula) -> Formula:
    if isinstance(f, (Cmp, Truth, Falsity)):
        return f
    if isinstance(f, Not):
        return negate(_nf_formula(f.arg))
    if isinstance(f, And):
        return And(_nf_formula(f.left), _nf_formula(f.right))
    if isinstance(f, Or):
        return disj(_nf_formula(f.left), _nf_formula(f.right))
    if isinstance(f, Implies):
        return implies(_nf_formula(f.left), _nf_formula(f.right))
    if isinstance(f, Forall):
        return Forall(f.var, _nf_formula(f.body))
    if isinstance(f, Box):
        return Box(_nf_program(f.program), _nf_formula(f.post))
    if isinstance(f, Diamond):
        return Diamond(_nf_program(f.program), _nf_formula(f.post))
    raise TypeError(f"not a formula: {f!r}")


def _nf_program(p: Program) -> Program:
    if isinstance(p, Test):
        return Test(_nf_formula(p.cond))
    if isinstance(p, Dyn):
        return Dyn(normal_form(p.dynamics))
    if isinstance(p, Seq):
        return make_seq([_nf_program(item) for item in seq_items(p)])
    if isinstance(p, Choice):
        return Choice(_nf_program(p.left), _nf_program(p.right))
    raise TypeError(f"not a program: {p!r}")


# --- sequences ------------------------------------------------------------------------


def seq_items(program: Program) -> List[Program]:
    if isinstance(program, Seq):
        return seq_items(program.first) + seq_items(program.second)
    return [program]


def make_seq(items: Iterable[Program]) -> Program:
    items = list(items)
    if not items:
        raise ValueError("empty sequence")
    result = items[0]
    for item in items[1:]:
        result = Seq(result, item)
    return result


# --- variables ------------------------------------------------------------------------


def free_variables(node) -> FrozenSet[str]:
    """Variables occurring in ``node``; quantified variables are excluded."""
    return frozenset(_free(node))


def _free(node) -> Iterator[str]:
    if isinstance(node, Variable):
        yield node.name
    elif isinstance(node, Constant):
        return
    elif isinstance(node, Neg):
        yield from _free(node.arg)
    elif isinstance(node, (Add, Sub, Mul, Div)):
        yield from _free(node.left)
        yield from _free(node.right)
    elif isinstance(node, Pow):
        yield from _free(node.base)
    elif isinstance(node, Cmp):
        yield from _free(node.left)
        yield from _free(node.right)
    elif isinstance(node, Not):
        yield from _free(node.arg)
    elif isinstance(node, (And, Or, Implies)):
        yield from _free(node.left)
        yield from _free(node.right)
    elif isinstance(node, Forall):
        yield from (name for name in _free(node.body) if name != node.var)
    elif isinstance(node, (Box, Diamond)):
        yield from _free(node.program)
        yield from _free(node.post)
    elif isinstance(node, (Truth, Falsity)):
        return
    elif isinstance(node, Test):
        yield from _free(node.cond)
    elif isinstance(node, Dyn):
        yield from _free(node.dynamics)
    elif isinstance(node, Dynamics):
        for name, rhs in node.odes:
            yield name
            yield from _free(rhs)
        yield from _free(node.constraint)
    elif isinstance(node, (Seq,)):
        yield from _free(node.first)
        yield from _free(node.second)
    elif isinstance(node, Choice):
        yield from _free(node.left)
        yield from _free(node.right)
    elif isinstance(node, RddFormula):
        yield from _free(node.desugar())
    else:
        raise TypeError(f"unexpected node {node!r}")


def bound_variables(node) -> FrozenSet[str]:
    """Variables a program (or the programs inside a formula) may change."""
    if isinstance(node, Dyn):
        return frozenset(node.dynamics.variables)
    if isinstance(node, Dynamics):
        return frozenset(node.variables)
    if isinstance(node, Test):
        return frozenset()
    if isinstance(node, Seq):
        return bound_variables(node.first) | bound_variables(node.second)
    if isinstance(node, Choice):
        return bound_variables(node.left) | bound_variables(node.right)
    if isinstance(node, (Box, Diamond)):
        return bound_variables(node.program) | bound_variables(node.post)
    if isinstance(node, Not):
        return bound_variables(node.arg)
    if isinstance(node, (And, Or, Implies)):
        return bound_variables(node.left) | bound_variables(node.right)
    if isinstance(node, Forall):
        return bound_variables(node.body)
    return frozenset()


def is_first_order(formula: Formula) -> bool:
    """No modalities and no quantifiers."""
    if isinstance(formula, (Cmp, Truth, Falsity)):
        return True
    if isinstance(formula, Not):
        return is_first_order(formula.arg)
    if isinstance(formula, (And, Or, Implies)):
        return is_first_order(formula.left) and is_first_order(formula.right)
    return False


def substitute(term: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(term, Variable):
        return mapping.get(term.name, term)
    if isinstance(term, Constant):
        return term
    if isinstance(term, Neg):
        return Neg(substitute(term.arg, mapping))
    if isinstance(term, Pow):
        return Pow(substitute(term.base, mapping), term.exponent)
    if isinstance(term, (Add, Sub, Mul, Div)):
        return type(term)(substitute(term.left, mapping), substitute(term.right, mapping))
    raise TypeError(f"not a term: {term!r}")


def desugar_rdd(rdd: RddFormula) -> Formula:
    return rdd.desugar()
