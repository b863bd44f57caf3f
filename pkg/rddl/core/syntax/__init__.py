"""Terms, formulas and programs: AST, lexer, parser and printer."""

from .ast import *  # noqa: F401,F403
from .ast import __all__ as _ast_all
from .parser import Parser, parse, parse_formula, parse_program, parse_rdd, parse_term
from .printer import format_constant, pretty

__all__ = [*_ast_all, "Parser", "parse", "parse_formula", "parse_program", "parse_rdd", "parse_term",
           "format_constant", "pretty"]
