"""Compile terms, formulas and dynamics into numpy-vectorized callables.

States are rows of a float array whose columns follow a fixed tuple of variable names.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np
import sympy

from ..algebra import RationalFunction, as_expr, symbol
from ..errors import NonArithmeticInput
from ..syntax.ast import (
    Add,
    And,
    Cmp,
    Div,
    Dyn,
    Dynamics,
    Falsity,
    Formula,
    Mul,
    Neg,
    Not,
    Pow,
    Sub,
    Term,
    Truth,
    free_variables,
)

__all__ = [
    "POLE_THRESHOLD",
    "CompiledTerm",
    "CompiledFormula",
    "CompiledDynamics",
    "state_names",
    "as_rows",
    "state_vector",
    "state_dict",
]

POLE_THRESHOLD = 1e-12


def state_names(*nodes, first: Sequence[str] = ()) -> Tuple[str, ...]:
    """Column order: ``first`` in order, then every other free variable sorted."""
    seen = list(dict.fromkeys(first))
    rest = set()
    for node in nodes:
        rest |= free_variables(node)
    return tuple(seen + sorted(rest - set(seen)))


def as_rows(states: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(states, dtype=float))


def _divisors(term: Term) -> List[Term]:
    if isinstance(term, Div):
        return _divisors(term.left) + _divisors(term.right) + [term.right]
    if isinstance(term, (Add, Sub, Mul)):
        return _divisors(term.left) + _divisors(term.right)
    if isinstance(term, Neg):
        return _divisors(term.arg)
    if isinstance(term, Pow):
        return _divisors(term.base)
    return []


class CompiledTerm:
    """Vectorized evaluation of a term over state rows."""

    def __init__(self, term, names: Sequence[str]):
        self.names = tuple(names)
        expr = term.expr if isinstance(term, RationalFunction) else as_expr(term)
        missing = {s.name for s in expr.free_symbols} - set(self.names)
        if missing:
            raise KeyError(f"no column for {sorted(missing)}")
        self._fn = sympy.lambdify([symbol(n) for n in self.names], expr, modules="numpy", dummify=True)

    def __call__(self, states: np.ndarray) -> np.ndarray:
        rows = as_rows(states)
        with np.errstate(divide="ignore", invalid="ignore"):
            value = self._fn(*rows.T)
        return np.broadcast_to(np.asarray(value, dtype=float), (rows.shape[0],)).copy()


class CompiledFormula:
    """First-order formula evaluated permissively.

    ``a >= b`` holds when ``a - b >= -slack``, ``a > b`` when ``a - b > -slack`` and
    ``a = b`` when ``|a - b| <= tolerance``.
    """

    def __init__(self, formula: Formula, names: Sequence[str], slack: float = 1e-9, tolerance: float = 1e-6):
        self.formula = formula
        self.names = tuple(names)
        self.slack = slack
        self.tolerance = tolerance
        self._fn = self._build(formula)

    def _build(self, f: Formula) -> Callable[[np.ndarray], np.ndarray]:
        if isinstance(f, Truth):
            return lambda rows: np.ones(rows.shape[0], dtype=bool)
        if isinstance(f, Falsity):
            return lambda rows: np.zeros(rows.shape[0], dtype=bool)
        if isinstance(f, Cmp):
            diff = CompiledTerm(Sub(f.left, f.right), self.names)
            op, slack, tol = f.op, self.slack, self.tolerance

            def compare(rows: np.ndarray) -> np.ndarray:
                d = diff(rows)
                with np.errstate(invalid="ignore"):
                    if op == "=":
                        return np.abs(d) <= tol
                    if op == ">=":
                        return d >= -slack
                    if op == ">":
                        return d > -slack
                    if op == "<=":
                        return d <= slack
                    return d < slack

            return compare
        if isinstance(f, Not):
            inner = self._build(f.arg)
            return lambda rows: ~inner(rows)
        if isinstance(f, And):
            left, right = self._build(f.left), self._build(f.right)
            return lambda rows: left(rows) & right(rows)
        raise NonArithmeticInput(f"cannot evaluate {type(f).__name__} pointwise")

    def __call__(self, states: np.ndarray) -> np.ndarray:
        return self._fn(as_rows(states))

    def holds(self, state: np.ndarray) -> bool:
        return bool(self._fn(as_rows(state))[0])


@dataclass
class CompiledDynamics:
    """Right-hand side over the full state vector; columns without an ODE stay fixed."""

    dynamics: Dynamics
    names: Tuple[str, ...]
    slack: float = 1e-9
    tolerance: float = 1e-6

    def __post_init__(self) -> None:
        self.names = tuple(self.names)
        index = {name: i for i, name in enumerate(self.names)}
        missing = free_variables(Dyn(self.dynamics)) - set(self.names)
        if missing:
            raise KeyError(f"no column for {sorted(missing)}")
        symbols = [symbol(n) for n in self.names]
        self._columns = [index[name] for name, _ in self.dynamics.odes]
        self._field = sympy.lambdify(
            symbols, [as_expr(rhs) for _, rhs in self.dynamics.odes], modules="numpy", dummify=True
        )
        divisors = [as_expr(t) for _, rhs in self.dynamics.odes for t in _divisors(rhs)]
        self._denominators = (
            sympy.lambdify(symbols, divisors, modules="numpy", dummify=True) if divisors else None
        )
        self.domain = CompiledFormula(self.dynamics.constraint, self.names, self.slack, self.tolerance)

    def derivative(self, states: np.ndarray, scale: float = 1.0) -> np.ndarray:
        rows = as_rows(states)
        out = np.zeros_like(rows)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            values = self._field(*rows.T)
            for column, value in zip(self._columns, values):
                out[:, column] = np.asarray(value, dtype=float) * scale
        return out

    def pole_mask(self, states: np.ndarray) -> np.ndarray:
        """Rows where some denominator is within the pole threshold of zero (or not finite)."""
        rows = as_rows(states)
        mask = ~np.all(np.isfinite(rows), axis=1)
        if self._denominators is not None:
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                for value in self._denominators(*rows.T):
                    value = np.broadcast_to(np.asarray(value, dtype=float), mask.shape)
                    mask |= ~(np.abs(value) >= POLE_THRESHOLD)
        return mask

    def rk4_step(self, states: np.ndarray, h, scale: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        """One classical RK4 step; returns (next states, pole mask over all stages).

        ``h`` is a scalar or a per-row array of step sizes.
        """
        rows = as_rows(states)
        h = np.asarray(h, dtype=float).reshape(-1, 1) if np.ndim(h) else float(h)
        poles = self.pole_mask(rows)
        k1 = self.derivative(rows, scale)
        s2 = rows + 0.5 * h * k1
        poles |= self.pole_mask(s2)
        k2 = self.derivative(s2, scale)
        s3 = rows + 0.5 * h * k2
        poles |= self.pole_mask(s3)
        k3 = self.derivative(s3, scale)
        s4 = rows + h * k3
        poles |= self.pole_mask(s4)
        k4 = self.derivative(s4, scale)
        nxt = rows + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        poles |= ~np.all(np.isfinite(nxt), axis=1)
        return nxt, poles


def state_vector(assignment: Mapping[str, float], names: Sequence[str]) -> np.ndarray:
    try:
        return np.array([float(assignment[name]) for name in names], dtype=float)
    except KeyError as exc:
        raise KeyError(f"state has no value for {exc.args[0]}") from None


def state_dict(row: np.ndarray, names: Sequence[str]) -> Dict[str, float]:
    return {name: float(value) for name, value in zip(names, row)}
