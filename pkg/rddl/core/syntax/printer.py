"""Pretty-printer emitting the concrete syntax the parser reads back."""

from __future__ import annotations

from fractions import Fraction

from ..errors import DisjointnessError
from .ast import (
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
    Implies,
    Mul,
    Neg,
    Not,
    Or,
    Pow,
    RddFormula,
    Seq,
    Sub,
    Test,
    Truth,
    Variable,
    seq_items,
)

__all__ = ["pretty", "format_constant"]

# Binding strength; higher binds tighter.
_T_SUM, _T_PRODUCT, _T_UNARY, _T_POWER, _T_ATOM = 1, 2, 3, 4, 5
_F_RDD, _F_IMPLIES, _F_OR, _F_AND, _F_UNARY, _F_ATOM = 0, 1, 2, 3, 4, 5
_P_CHOICE, _P_SEQ, _P_ITEM = 1, 2, 3


def pretty(node) -> str:
    if isinstance(node, RddFormula):
        return _rdd(node)
    if isinstance(node, Dynamics):
        return _dynamics_body(node)
    if isinstance(node, (Test, Dyn, Seq, Choice)):
        return _program(node, 0)
    if isinstance(node, (Variable, Constant, Neg, Add, Sub, Mul, Div, Pow)):
        return _term(node, 0)
    return _formula(node, 0)


def format_constant(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = value * 10**digits
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled.numerator), 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def _wrap(text: str, own: int, context: int) -> str:
    return f"({text})" if own < context else text


# --- terms ----------------------------------------------------------------------------


def _term(t, context: int) -> str:
    if isinstance(t, Variable):
        return t.name
    if isinstance(t, Constant):
        text = format_constant(t.value)
        if context and ("/" in text or text.startswith("-")):
            return f"({text})"
        return text
    if isinstance(t, Neg):
        return _wrap("-" + _term(t.arg, _T_UNARY), _T_UNARY, context)
    if isinstance(t, (Add, Sub)):
        op = "+" if isinstance(t, Add) else "-"
        text = f"{_term(t.left, _T_SUM)} {op} {_term(t.right, _T_PRODUCT)}"
        return _wrap(text, _T_SUM, context)
    if isinstance(t, (Mul, Div)):
        op = "*" if isinstance(t, Mul) else "/"
        text = f"{_term(t.left, _T_PRODUCT)} {op} {_term(t.right, _T_UNARY)}"
        return _wrap(text, _T_PRODUCT, context)
    if isinstance(t, Pow):
        return _wrap(f"{_term(t.base, _T_ATOM)}^{t.exponent}", _T_POWER, context)
    raise TypeError(f"not a term: {t!r}")


# --- formulas -------------------------------------------------------------------------


def _formula(f, context: int) -> str:
    if isinstance(f, Truth):
        return "true"
    if isinstance(f, Falsity):
        return "false"
    if isinstance(f, Cmp):
        return f"{_term(f.left, 0)} {f.op} {_term(f.right, 0)}"
    if isinstance(f, Not):
        if isinstance(f.arg, Cmp):
            return f"!({_formula(f.arg, 0)})"
        return "!" + _formula(f.arg, _F_UNARY)
    if isinstance(f, And):
        text = f"{_formula(f.left, _F_AND)} & {_formula(f.right, _F_UNARY)}"
        return _wrap(text, _F_AND, context)
    if isinstance(f, Or):
        text = f"{_formula(f.left, _F_OR)} | {_formula(f.right, _F_AND)}"
        return _wrap(text, _F_OR, context)
    if isinstance(f, Implies):
        text = f"{_formula(f.left, _F_OR)} -> {_formula(f.right, _F_IMPLIES)}"
        return _wrap(text, _F_IMPLIES, context)
    if isinstance(f, Forall):
        return _wrap(f"forall {f.var}. {_formula(f.body, _F_UNARY)}", _F_UNARY, context)
    if isinstance(f, Box):
        try:
            return _wrap(_rdd(RddFormula.from_box(f)), _F_RDD, context)
        except (ValueError, DisjointnessError):
            pass
        return _wrap(f"[{_program(f.program, 0)}] {_formula(f.post, _F_UNARY)}", _F_UNARY, context)
    if isinstance(f, Diamond):
        text = f"<{_program(f.program, 0, in_diamond=True)}> {_formula(f.post, _F_UNARY)}"
        return _wrap(text, _F_UNARY, context)
    raise TypeError(f"not a formula: {f!r}")


def _rdd(rdd: RddFormula) -> str:
    return (
        f"rdd {{{_dynamics_body(rdd.left)} || {_dynamics_body(rdd.right)}}} "
        f"exit {_formula(rdd.exit, _F_IMPLIES)} post {_formula(rdd.post, 0)}"
    )


# --- programs -------------------------------------------------------------------------


def _program(p, context: int, in_diamond: bool = False) -> str:
    if isinstance(p, Test):
        cond = _formula(p.cond, 0)
        if in_diamond and ">" in cond:
            cond = f"({cond})"
        return "?" + cond
    if isinstance(p, Dyn):
        return "{" + _dynamics_body(p.dynamics) + "}"
    if isinstance(p, Seq):
        text = "; ".join(_program(item, _P_ITEM, in_diamond) for item in seq_items(p))
        return _wrap(text, _P_SEQ, context)
    if isinstance(p, Choice):
        text = f"{_program(p.left, _P_CHOICE, in_diamond)} ++ {_program(p.right, _P_SEQ, in_diamond)}"
        return _wrap(text, _P_CHOICE, context)
    raise TypeError(f"not a program: {p!r}")


def _dynamics_body(d: Dynamics) -> str:
    text = ", ".join(f"{name}' = {_term(rhs, 0)}" for name, rhs in d.odes)
    if not isinstance(d.constraint, Truth):
        text += " & " + _formula(d.constraint, 0)
    return text
