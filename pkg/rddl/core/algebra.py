"""Exact symbolic algebra on rational-function terms.

Terms are normalized to reduced fractions ``num/den`` of sympy polynomials over QQ. The
denominator is made monic under graded-lex order over alphabetically sorted variable names,
which makes the pair canonical: two terms denote the same rational function iff their
normal forms are equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Tuple, Union

import sympy

from .errors import DegenerateExit, ExitShapeError, ZeroDenominator
from .logger import get_logger
from .syntax.ast import (
    FALSE,
    TRUE,
    Add,
    And,
    Box,
    Choice,
    Cmp,
    Constant,
    Diamond,
    Div,
    Dyn,
    Dynamics,
    Falsity,
    Forall,
    Formula,
    Mul,
    Neg,
    Not,
    Pow,
    Program,
    RddFormula,
    Seq,
    Sub,
    Term,
    Test,
    Truth,
    Variable,
    conjuncts,
    disj,
    conj,
    free_variables,
    normal_form,
    seq_items,
)

log = get_logger(__name__)

__all__ = [
    "RationalFunction",
    "VectorField",
    "SideConditions",
    "symbol",
    "as_expr",
    "normalize",
    "partial_derivative",
    "lie_derivative",
    "lie_derivative_n",
    "dii_disjunction",
    "compare_zero",
    "exit_functions",
    "stretch_factors",
    "sync_vector_field",
    "to_term",
    "formula_key",
    "program_key",
    "formulas_equal",
    "programs_equal",
    "dynamics_equal",
]


@lru_cache(maxsize=None)
def symbol(name: str) -> sympy.Symbol:
    return sympy.Symbol(name)


def _gens(expr: sympy.Expr) -> List[sympy.Symbol]:
    return sorted(expr.free_symbols, key=lambda s: s.name)


def _leading_coefficient(expr: sympy.Expr) -> sympy.Rational:
    gens = _gens(expr)
    if not gens:
        return sympy.sympify(expr)
    return sympy.Poly(expr, *gens, domain="QQ").LC(order="grlex")


@dataclass(frozen=True)
class RationalFunction:
    """Reduced ``num/den`` with a monic denominator."""

    num: sympy.Expr
    den: sympy.Expr

    @classmethod
    def from_expr(cls, expr) -> "RationalFunction":
        expr = sympy.cancel(sympy.together(sympy.sympify(expr)))
        if expr.has(sympy.zoo, sympy.nan, sympy.oo):
            raise ZeroDenominator(str(expr))
        num, den = sympy.fraction(expr)
        num, den = sympy.expand(num), sympy.expand(den)
        if den == 0:
            raise ZeroDenominator(str(expr))
        if num == 0:
            return cls(sympy.Integer(0), sympy.Integer(1))
        lc = _leading_coefficient(den)
        if lc != 1:
            num, den = sympy.expand(num / lc), sympy.expand(den / lc)
        return cls(num, den)

    @classmethod
    def constant(cls, value) -> "RationalFunction":
        value = Fraction(value)
        return cls(sympy.Rational(value.numerator, value.denominator), sympy.Integer(1))

    @classmethod
    def variable(cls, name: str) -> "RationalFunction":
        return cls(symbol(name), sympy.Integer(1))

    @property
    def expr(self) -> sympy.Expr:
        return self.num / self.den

    @property
    def variables(self) -> frozenset:
        return frozenset(s.name for s in self.num.free_symbols | self.den.free_symbols)

    @property
    def is_zero(self) -> bool:
        return self.num == 0

    @property
    def is_constant(self) -> bool:
        return not self.variables

    @property
    def is_polynomial(self) -> bool:
        return self.den == 1

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not constant")
        value = sympy.Rational(self.num) / sympy.Rational(self.den)
        return Fraction(int(value.p), int(value.q))

    def leading_sign(self) -> int:
        """Sign of the numerator's leading coefficient (0 for the zero function)."""
        if self.is_zero:
            return 0
        return 1 if _leading_coefficient(self.num) > 0 else -1

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction.from_expr(self.expr + other.expr)

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction.from_expr(self.expr - other.expr)

    def __mul__(self, other: "RationalFunction") -> "RationalFunction":
        return RationalFunction.from_expr(self.expr * other.expr)

    def __truediv__(self, other: "RationalFunction") -> "RationalFunction":
        if other.is_zero:
            raise ZeroDenominator(f"division of {self} by zero")
        return RationalFunction.from_expr(self.expr / other.expr)

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(sympy.expand(-self.num), self.den)

    def __str__(self) -> str:
        return str(self.expr)

    def substitute(self, mapping: Mapping[str, "RationalFunction"]) -> "RationalFunction":
        subs = {symbol(name): value.expr for name, value in mapping.items()}
        return RationalFunction.from_expr(self.expr.subs(subs, simultaneous=True))

    def evaluate(self, env: Mapping[str, float]) -> float:
        subs = {symbol(name): env[name] for name in self.variables}
        return float(self.expr.subs(subs))


class SideConditions:
    """Collects ``den != 0`` obligations introduced while normalizing."""

    def __init__(self) -> None:
        self._items: Dict[RationalFunction, None] = {}

    def add(self, denominator: RationalFunction) -> None:
        if denominator.is_constant:
            return
        monic = sympy.expand(denominator.num / _leading_coefficient(denominator.num))
        self._items.setdefault(RationalFunction(monic, sympy.Integer(1)), None)

    def extend(self, other: "SideConditions") -> None:
        for item in other:
            self._items.setdefault(item, None)

    def __iter__(self):
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def formulas(self) -> List[Formula]:
        return [Not(Cmp(to_term(item), "=", Constant(0))) for item in self._items]


# --- normalization --------------------------------------------------------------------


def _to_expr(term: Term, side: Optional[SideConditions]) -> sympy.Expr:
    if isinstance(term, Variable):
        return symbol(term.name)
    if isinstance(term, Constant):
        return sympy.Rational(term.value.numerator, term.value.denominator)
    if isinstance(term, Neg):
        return -_to_expr(term.arg, side)
    if isinstance(term, Add):
        return _to_expr(term.left, side) + _to_expr(term.right, side)
    if isinstance(term, Sub):
        return _to_expr(term.left, side) - _to_expr(term.right, side)
    if isinstance(term, Mul):
        return _to_expr(term.left, side) * _to_expr(term.right, side)
    if isinstance(term, Div):
        numerator = _to_expr(term.left, side)
        divisor = RationalFunction.from_expr(_to_expr(term.right, side))
        if divisor.is_zero:
            raise ZeroDenominator(f"division by {term.right}")
        if side is not None:
            side.add(RationalFunction(divisor.num, sympy.Integer(1)))
        return numerator / divisor.expr
    if isinstance(term, Pow):
        return _to_expr(term.base, side) ** term.exponent
    raise TypeError(f"not a term: {term!r}")


def as_expr(term: Term) -> sympy.Expr:
    """Sympy expression for a term, without cancelling."""
    return _to_expr(term, None)


def normalize(term: Union[Term, RationalFunction], side: Optional[SideConditions] = None) -> RationalFunction:
    if isinstance(term, RationalFunction):
        return term
    return RationalFunction.from_expr(_to_expr(term, side))


def partial_derivative(rf: RationalFunction, name: str) -> RationalFunction:
    return RationalFunction.from_expr(sympy.diff(rf.expr, symbol(name)))


# --- vector fields --------------------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    entries: Tuple[Tuple[str, RationalFunction], ...]

    @classmethod
    def of(cls, source: Union[Dynamics, Mapping[str, Union[Term, RationalFunction]]],
           side: Optional[SideConditions] = None) -> "VectorField":
        items = source.odes if isinstance(source, Dynamics) else source.items()
        return cls(tuple((name, normalize(rhs, side)) for name, rhs in items))

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def __getitem__(self, name: str) -> RationalFunction:
        for var, rhs in self.entries:
            if var == name:
                return rhs
        raise KeyError(name)


def _as_field(f) -> VectorField:
    return f if isinstance(f, VectorField) else VectorField.of(f)


def lie_derivative(f, g: Union[Term, RationalFunction]) -> RationalFunction:
    """``sum_x dg/dx * f(x)``; variables without an ODE are parameters."""
    field_ = _as_field(f)
    g = normalize(g)
    total = sympy.Integer(0)
    for name, rhs in field_.entries:
        if name in g.variables:
            total += sympy.diff(g.expr, symbol(name)) * rhs.expr
    return RationalFunction.from_expr(total)


def lie_derivative_n(f, g: Union[Term, RationalFunction], n: int) -> RationalFunction:
    if n < 1:
        raise ValueError(f"order must be positive, got {n}")
    field_ = _as_field(f)
    current = normalize(g)
    for _ in range(n):
        current = lie_derivative(field_, current)
    return current


def compare_zero(rf: RationalFunction, op: str) -> Formula:
    """``rf op 0`` as a formula, decided outright when ``rf`` is constant."""
    if rf.is_constant:
        value = rf.constant_value()
        holds = {"=": value == 0, ">": value > 0, ">=": value >= 0, "<": value < 0, "<=": value <= 0}[op]
        return TRUE if holds else FALSE
    return Cmp(to_term(rf), op, Constant(0))


def dii_disjunction(f, g: Union[Term, RationalFunction], n: int) -> Formula:
    """Disjunction over p < n of (all L^k g >= 0 for k <= p) and L^(p+1) g > 0."""
    if n < 1:
        raise ValueError(f"order must be positive, got {n}")
    field_ = _as_field(f)
    derivatives = []
    current = normalize(g)
    for _ in range(n):
        current = lie_derivative(field_, current)
        derivatives.append(current)
    result: Formula = FALSE
    for p in range(n):
        guard = conj(*(compare_zero(derivatives[k], ">=") for k in range(p)))
        disjunct = conj(guard, compare_zero(derivatives[p], ">"))
        result = disjunct if isinstance(result, Falsity) else disj(result, disjunct)
    return result


# --- synchronization ------------------------------------------------------------------


def exit_functions(rdd: RddFormula) -> Tuple[Term, Term]:
    """Split an exit ``g = g#`` into the left-side and right-side terms."""
    exit_ = rdd.exit
    if not isinstance(exit_, Cmp) or exit_.op != "=":
        raise ExitShapeError("expected a single equality")
    left_vars = frozenset(rdd.left.variables)
    right_vars = frozenset(rdd.right.variables)

    def over(term: Term, own: frozenset, other: frozenset) -> bool:
        names = free_variables(term)
        return bool(names & own) and not names & other

    if over(exit_.left, left_vars, right_vars) and over(exit_.right, right_vars, left_vars):
        return exit_.left, exit_.right
    if over(exit_.right, left_vars, right_vars) and over(exit_.left, right_vars, left_vars):
        return exit_.right, exit_.left
    raise ExitShapeError("sides of the equality do not separate the two dynamics")


def stretch_factors(rdd: RddFormula) -> Tuple[RationalFunction, RationalFunction]:
    """``(L_f g, L_f# g#)`` for the exit ``g = g#``; both must be nonzero."""
    g, g_sharp = exit_functions(rdd)
    lg = lie_derivative(rdd.left, g)
    lg_sharp = lie_derivative(rdd.right, g_sharp)
    if lg.is_zero:
        raise DegenerateExit(f"L_f of {g} is identically zero")
    if lg_sharp.is_zero:
        raise DegenerateExit(f"L_f# of {g_sharp} is identically zero")
    return lg, lg_sharp


def sync_vector_field(rdd: RddFormula, side: Optional[SideConditions] = None) -> Dynamics:
    """Right dynamics rescaled by ``L_f g / L_f# g#`` and run alongside the left one."""
    lg, lg_sharp = stretch_factors(rdd)
    if side is not None:
        side.add(RationalFunction(lg_sharp.num, sympy.Integer(1)))
    ratio = Div(to_term(lg), to_term(lg_sharp))
    odes = list(rdd.left.odes)
    odes.extend((name, Mul(rhs, ratio)) for name, rhs in rdd.right.odes)
    log.debug("Synchronized ratio %s / %s", lg, lg_sharp)
    return Dynamics(tuple(odes), conj(rdd.left.constraint, rdd.right.constraint))


# --- back to syntax -------------------------------------------------------------------


def _polynomial_term(expr: sympy.Expr) -> Term:
    """Integer-coefficient polynomial as a sum of monomials in graded-lex order."""
    if expr == 0:
        return Constant(0)
    gens = _gens(expr)
    if not gens:
        value = sympy.Rational(expr)
        term: Term = Constant(Fraction(abs(int(value.p)), int(value.q)))
        return Neg(term) if value < 0 else term
    poly = sympy.Poly(expr, *gens, domain="QQ")
    result: Optional[Term] = None
    for exponents, coeff in poly.terms(order="grlex"):
        coeff = sympy.Rational(coeff)
        factors: List[Term] = []
        for gen, exp in zip(gens, exponents):
            if exp == 1:
                factors.append(Variable(gen.name))
            elif exp > 1:
                factors.append(Pow(Variable(gen.name), exp))
        magnitude = abs(coeff)
        if magnitude != 1 or not factors:
            factors.insert(0, Constant(Fraction(int(magnitude.p), int(magnitude.q))))
        monomial = factors[0]
        for factor in factors[1:]:
            monomial = Mul(monomial, factor)
        if result is None:
            result = Neg(monomial) if coeff < 0 else monomial
        elif coeff < 0:
            result = Sub(result, monomial)
        else:
            result = Add(result, monomial)
    return result


def to_term(rf: Union[RationalFunction, sympy.Expr]) -> Term:
    """Printable term for a rational function, with integer coefficients throughout."""
    if not isinstance(rf, RationalFunction):
        rf = RationalFunction.from_expr(rf)
    scale = sympy.Integer(1)
    for part in (rf.num, rf.den):
        gens = _gens(part)
        coeffs = sympy.Poly(part, *gens, domain="QQ").coeffs() if gens else [sympy.Rational(part)]
        for c in coeffs:
            scale = sympy.ilcm(scale, sympy.Rational(c).q)
    num = sympy.expand(rf.num * scale)
    den = sympy.expand(rf.den * scale)
    if den == 1:
        return _polynomial_term(num)
    return Div(_polynomial_term(num), _polynomial_term(den))


# --- canonical keys -------------------------------------------------------------------

_FLIP = {"<": ">", "<=": ">="}


def _cmp_key(cmp: Cmp):
    rf = normalize(Sub(cmp.left, cmp.right))
    op = cmp.op
    if op in _FLIP:
        rf, op = -rf, _FLIP[op]
    elif op == "=" and rf.leading_sign() < 0:
        rf = -rf
    return ("cmp", op, rf)


def formula_key(formula: Formula):
    """Hashable key equal for formulas that agree up to normalization."""
    return _key(normal_form(formula))


def _key(f: Formula):
    if isinstance(f, (And, Truth)):
        parts = conjuncts(f)
        if not parts:
            return ("true",)
        if len(parts) > 1:
            return ("and", frozenset(_key(part) for part in parts))
        f = parts[0]
    if isinstance(f, Truth):
        return ("true",)
    if isinstance(f, Falsity):
        return ("false",)
    if isinstance(f, Cmp):
        return _cmp_key(f)
    if isinstance(f, Not):
        return ("not", _key(f.arg))
    if isinstance(f, Forall):
        return ("forall", f.var, _key(f.body))
    if isinstance(f, Box):
        return ("box", _program_key(f.program), _key(f.post))
    if isinstance(f, Diamond):
        return ("diamond", _program_key(f.program), _key(f.post))
    raise TypeError(f"not a normalized formula: {f!r}")


def _program_key(p: Program):
    if isinstance(p, Test):
        return ("test", _key(p.cond))
    if isinstance(p, Dyn):
        d = p.dynamics
        odes = frozenset((name, normalize(rhs)) for name, rhs in d.odes)
        return ("dyn", odes, _key(d.constraint))
    if isinstance(p, Seq):
        return ("seq", tuple(_program_key(item) for item in seq_items(p)))
    if isinstance(p, Choice):
        return ("choice", _program_key(p.left), _program_key(p.right))
    raise TypeError(f"not a program: {p!r}")


def program_key(program: Program):
    return _program_key(normal_form(program))


def formulas_equal(a: Formula, b: Formula) -> bool:
    return formula_key(a) == formula_key(b)


def programs_equal(a: Program, b: Program) -> bool:
    return program_key(a) == program_key(b)


def dynamics_equal(a: Dynamics, b: Dynamics) -> bool:
    return programs_equal(Dyn(a), Dyn(b))
