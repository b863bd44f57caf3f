"""Recursive-descent parser for terms, formulas, programs and RDD formulas.

Grammar (whitespace-insensitive, loosest binding first)::

    formula := disj ('->' formula)?
    disj    := conj ('|' conj)*
    conj    := unary ('&' unary)*
    unary   := '!' unary | '[' program ']' unary | '<' program '>' unary
             | 'forall' IDENT '.' unary | primary
    primary := 'true' | 'false' | 'rdd' rdd | '(' formula ')' | term (CMP term)+
    program := seq ('++' seq)*
    seq     := item (';' item)*
    item    := '?' formula | '{' dynbody '}' | '(' program ')'
    dynbody := IDENT "'" '=' term (',' IDENT "'" '=' term)* ('&' formula)?
    rdd     := '{' dynbody '||' dynbody '}' 'exit' formula 'post' formula

Formulas come out in normal form. A test inside a diamond must be parenthesized when its
formula contains ``>``.
"""

from __future__ import annotations

from typing import Callable, List, Tuple, TypeVar

from ..errors import RddlSyntaxError
from .ast import (
    COMPARISON_OPS,
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
    Forall,
    Formula,
    Mul,
    Neg,
    Pow,
    Program,
    RddFormula,
    Sub,
    Term,
    Test,
    Variable,
    disj,
    implies,
    make_seq,
    negate,
    seq_items,
)
from .lexer import KEYWORDS, Token, tokenize

__all__ = ["Parser", "parse", "parse_term", "parse_formula", "parse_program", "parse_rdd"]

T = TypeVar("T")


class Parser:
    """Token cursor plus the expression grammar; file-format parsers extend it."""

    def __init__(self, source: str):
        self.source = source
        self.tokens: List[Token] = tokenize(source)
        self.pos = 0

    # --- cursor -------------------------------------------------------------------

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        return any(self.current.is_(text) for text in texts)

    def advance(self) -> Token:
        token = self.current
        if token.kind != "eof":
            self.pos += 1
        return token

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(repr(text))
        return self.advance()

    def fail(self, *expected: str):
        raise RddlSyntaxError(self.current.position, expected, self.current.text)

    def expect_ident(self) -> str:
        token = self.current
        if token.kind != "ident" or token.text in KEYWORDS:
            self.fail("identifier")
        self.advance()
        return token.text

    def expect_end(self) -> None:
        if self.current.kind != "eof":
            self.fail("end of input")

    def attempt(self, *alternatives: Callable[[], T]) -> T:
        """First alternative that parses; reports the error that got furthest."""
        start = self.pos
        best: RddlSyntaxError = None
        for alternative in alternatives:
            try:
                return alternative()
            except RddlSyntaxError as exc:
                if best is None or exc.position >= best.position:
                    best = exc
                self.pos = start
        raise best

    # --- terms --------------------------------------------------------------------

    def term(self) -> Term:
        left = self._product()
        while self.at("+", "-"):
            op = self.advance().text
            right = self._product()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def _product(self) -> Term:
        left = self._unary_term()
        while self.at("*", "/"):
            op = self.advance().text
            right = self._unary_term()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def _unary_term(self) -> Term:
        if self.accept("-"):
            return Neg(self._unary_term())
        return self._power()

    def _power(self) -> Term:
        base = self._atom()
        while self.accept("^"):
            token = self.current
            if token.kind != "number" or not token.text.isdigit():
                self.fail("integer exponent")
            self.advance()
            base = Pow(base, int(token.text))
        return base

    def _atom(self) -> Term:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Constant(token.text)
        if token.kind == "ident" and token.text not in KEYWORDS:
            self.advance()
            return Variable(token.text)
        if self.accept("("):
            inner = self.term()
            self.expect(")")
            return inner
        self.fail("number", "identifier", "'('")

    # --- formulas -----------------------------------------------------------------

    def formula(self) -> Formula:
        left = self._disjunction()
        if self.accept("->"):
            return implies(left, self.formula())
        return left

    def _disjunction(self) -> Formula:
        left = self._conjunction()
        while self.accept("|"):
            left = disj(left, self._conjunction())
        return left

    def _conjunction(self) -> Formula:
        left = self._unary_formula()
        while self.accept("&"):
            left = And(left, self._unary_formula())
        return left

    def _unary_formula(self) -> Formula:
        if self.accept("!"):
            return negate(self._unary_formula())
        if self.accept("["):
            program = self.program()
            self.expect("]")
            return Box(program, self._unary_formula())
        if self.accept("<"):
            program = self.program()
            self.expect(">")
            return Diamond(program, self._unary_formula())
        if self.accept("forall"):
            var = self.expect_ident()
            self.expect(".")
            return Forall(var, self._unary_formula())
        return self._primary_formula()

    def _primary_formula(self) -> Formula:
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.at("rdd"):
            return self.rdd().desugar()
        if self.at("("):
            return self.attempt(self._comparison_chain, self._parenthesized_formula)
        return self._comparison_chain()

    def _parenthesized_formula(self) -> Formula:
        self.expect("(")
        inner = self.formula()
        self.expect(")")
        return inner

    def _comparison_chain(self) -> Formula:
        terms = [self.term()]
        ops: List[str] = []
        while self.at(*COMPARISON_OPS):
            ops.append(self.advance().text)
            terms.append(self.term())
        if not ops:
            self.fail(*(repr(op) for op in COMPARISON_OPS))
        result: Formula = Cmp(terms[0], ops[0], terms[1])
        for i in range(1, len(ops)):
            result = And(result, Cmp(terms[i], ops[i], terms[i + 1]))
        return result

    # --- programs -----------------------------------------------------------------

    def program(self) -> Program:
        left = self._sequence()
        while self.accept("++"):
            left = Choice(left, self._sequence())
        return left

    def _sequence(self) -> Program:
        items = seq_items(self._program_item())
        while self.accept(";"):
            items.extend(seq_items(self._program_item()))
        return make_seq(items)

    def _program_item(self) -> Program:
        if self.accept("?"):
            return Test(self.formula())
        if self.accept("{"):
            dynamics = self.dynamics_body()
            self.expect("}")
            return Dyn(dynamics)
        if self.accept("("):
            inner = self.program()
            self.expect(")")
            return inner
        self.fail("'?'", "'{'", "'('")

    def dynamics_body(self) -> Dynamics:
        odes: List[Tuple[str, Term]] = [self._ode()]
        while self.accept(","):
            odes.append(self._ode())
        constraint = self.formula() if self.accept("&") else TRUE
        names = [name for name, _ in odes]
        if len(set(names)) != len(names):
            raise RddlSyntaxError(self.current.position, ["distinct ODE variables"], ",".join(names))
        return Dynamics(tuple(odes), constraint)

    def _ode(self) -> Tuple[str, Term]:
        name = self.expect_ident()
        self.expect("'")
        self.expect("=")
        return name, self.term()

    def rdd(self) -> RddFormula:
        self.expect("rdd")
        self.expect("{")
        left = self.dynamics_body()
        self.expect("||")
        right = self.dynamics_body()
        self.expect("}")
        self.expect("exit")
        exit_condition = self.formula()
        self.expect("post")
        post = self.formula()
        return RddFormula(left, right, exit_condition, post)


_CATEGORIES = {
    "term": Parser.term,
    "formula": Parser.formula,
    "program": Parser.program,
    "rdd": Parser.rdd,
    "dynamics": Parser.dynamics_body,
}


def parse(text: str, category: str = "formula"):
    """Parse a whole string as one syntactic category."""
    try:
        method = _CATEGORIES[category]
    except KeyError:
        raise ValueError(f"unknown category {category!r}; expected one of {sorted(_CATEGORIES)}")
    parser = Parser(text)
    node = method(parser)
    parser.expect_end()
    return node


def parse_term(text: str) -> Term:
    return parse(text, "term")


def parse_formula(text: str) -> Formula:
    return parse(text, "formula")


def parse_program(text: str) -> Program:
    return parse(text, "program")


def parse_rdd(text: str) -> RddFormula:
    return parse(text, "rdd")
