"""Sampling refuter: looks for an exact rational state satisfying hypotheses and falsifying a goal."""

from __future__ import annotations

import itertools
from functools import lru_cache
from fractions import Fraction
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
import sympy

from ..algebra import RationalFunction, normalize, symbol
from ..errors import NonArithmeticInput, ZeroDenominator
from ..logger import get_logger
from ..semantics.compile import CompiledFormula, CompiledTerm
from ..semantics.falsifier import solve_definitions
from ..syntax.ast import And, Cmp, Falsity, Formula, Not, Sub, Truth, conj, free_variables, negate

log = get_logger(__name__)

__all__ = ["exact_value", "exact_holds", "search_witness"]

SMALL_VALUES = (Fraction(0), Fraction(1), Fraction(-1), Fraction(2), Fraction(-2), Fraction(1, 2))
SMALL_LATTICE = 4096
# Numerically promising rows re-checked exactly.
EXACT_CHECKS = 32


@lru_cache(maxsize=4096)
def _normalized(term) -> Optional[RationalFunction]:
    try:
        return normalize(term)
    except ZeroDenominator:
        return None


def exact_value(term, env: Mapping[str, Fraction]) -> Optional[Fraction]:
    """Exact value of a term, ``None`` where a denominator vanishes."""
    rf = _normalized(term)
    if rf is None:
        return None
    subs = {symbol(name): sympy.Rational(value.numerator, value.denominator) for name, value in env.items()}
    den = rf.den.subs(subs)
    if den == 0:
        return None
    value = sympy.Rational(rf.num.subs(subs)) / sympy.Rational(den)
    return Fraction(int(value.p), int(value.q))


def exact_holds(formula: Formula, env: Mapping[str, Fraction]) -> bool:
    if isinstance(formula, Truth):
        return True
    if isinstance(formula, Falsity):
        return False
    if isinstance(formula, Cmp):
        d = exact_value(Sub(formula.left, formula.right), env)
        if d is None:
            return False
        return {"=": d == 0, ">=": d >= 0, ">": d > 0, "<=": d <= 0, "<": d < 0}[formula.op]
    if isinstance(formula, Not):
        return not exact_holds(formula.arg, env)
    if isinstance(formula, And):
        return exact_holds(formula.left, env) and exact_holds(formula.right, env)
    raise NonArithmeticInput(type(formula).__name__)


def _complete(assignment: Dict[str, Fraction], definitions) -> Optional[Dict[str, Fraction]]:
    env = dict(assignment)
    for name, term in definitions:
        value = exact_value(term, env)
        if value is None:
            return None
        env[name] = value
    return env


def search_witness(
    hypotheses: Sequence[Formula],
    goal: Formula,
    points: int = 10_000,
    seed: int = 42,
    radius: float = 10.0,
) -> Optional[Dict[str, Fraction]]:
    """Small-integer lattice first, then uniform draws in ``[-radius, radius]``.

    Rows are screened numerically; only screened rows are checked with exact rationals.
    """
    target = conj(*hypotheses, negate(goal))
    names = tuple(sorted(free_variables(target)))
    definitions = [(n, t) for n, t in solve_definitions(target) if n in names]
    defined = {n for n, _ in definitions}
    drawn = [n for n in names if n not in defined]
    columns = [names.index(n) for n in drawn]

    def confirm(values: Sequence[Fraction]) -> Optional[Dict[str, Fraction]]:
        env = _complete(dict(zip(drawn, values)), definitions)
        if env is not None and exact_holds(target, env):
            return {name: env[name] for name in names}
        return None

    if not names:
        return {} if exact_holds(target, {}) else None

    screen = CompiledFormula(target, names, slack=0.0, tolerance=1e-9)
    compiled_definitions = [(names.index(n), CompiledTerm(t, names)) for n, t in definitions]

    def candidates(values: np.ndarray) -> np.ndarray:
        rows = np.zeros((values.shape[0], len(names)))
        rows[:, columns] = values
        for column, term in compiled_definitions:
            rows[:, column] = term(rows)
        return np.nonzero(screen(rows))[0]

    lattice = list(itertools.islice(itertools.product(SMALL_VALUES, repeat=len(drawn)), SMALL_LATTICE))
    grid = np.array([[float(v) for v in combo] for combo in lattice]).reshape(len(lattice), len(drawn))
    for i in candidates(grid)[:EXACT_CHECKS]:
        found = confirm(lattice[int(i)])
        if found is not None:
            log.debug("Witness on the small lattice: %s", found)
            return found
    if not drawn:
        return None

    rng = np.random.default_rng(seed)
    draws = rng.uniform(-radius, radius, size=(points, len(drawn)))
    promising = candidates(draws)
    for i in promising[:EXACT_CHECKS]:
        found = confirm([Fraction(float(v)) for v in draws[int(i)]])
        if found is not None:
            return found
    log.debug("No exact witness among %d draws (%d screened)", points, len(promising))
    return None
