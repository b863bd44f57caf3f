"""Case-study dynamics and random generators for property tests."""

from __future__ import annotations

from typing import Dict, List, Sequence

import numpy as np

from ..syntax.ast import (
    TRUE,
    Add,
    Cmp,
    Constant,
    Div,
    Dynamics,
    Formula,
    Mul,
    Neg,
    Pow,
    RddFormula,
    Term,
    Variable,
    conj,
    disj,
)

__all__ = [
    "collision_speed",
    "constant_acceleration",
    "drag",
    "decaying_stage",
    "random_polynomial",
    "random_rational",
    "random_dynamics",
    "random_state",
]


def _v(name: str) -> Variable:
    return Variable(name)


def _car(position: str, velocity: str, accel: Term, constraint: Formula = TRUE) -> Dynamics:
    return Dynamics(((position, _v(velocity)), (velocity, accel)), constraint)


def collision_speed() -> RddFormula:
    """Two cars accelerating at 1 and 2 towards a wall at distance 1."""
    return RddFormula(
        _car("x", "v", Constant(1)),
        _car("x#", "v#", Constant(2)),
        conj(Cmp(_v("x"), "=", _v("x#")), Cmp(_v("x#"), "=", Constant(1))),
        Cmp(_v("v"), "<=", _v("v#")),
    )


def constant_acceleration() -> RddFormula:
    """Symbolic accelerations ``a`` and ``a#``; exit on equal position."""
    return RddFormula(
        _car("x", "v", _v("a")),
        _car("x#", "v#", _v("a#")),
        Cmp(_v("x"), "=", _v("x#")),
        Cmp(_v("v"), "<=", _v("v#")),
    )


def drag() -> RddFormula:
    """Linear drag on the left, quadratic drag on the right."""
    return RddFormula(
        _car("x", "v", Neg(_v("v"))),
        _car("x#", "v#", Neg(Pow(_v("v#"), 2))),
        Cmp(_v("x"), "=", _v("x#")),
        disj(Cmp(_v("v#"), "<=", _v("v")), Cmp(_v("v#"), "<=", Constant(1))),
    )


def decaying_stage(left_decays: bool, right_decays: bool, limit: str = "V") -> RddFormula:
    """One pair of the decaying-acceleration model: ``v' = a`` below the limit, ``a*V/v`` above."""

    def side(position: str, velocity: str, accel: str, decays: bool) -> Dynamics:
        if decays:
            return _car(position, velocity, Div(Mul(_v(accel), _v(limit)), _v(velocity)))
        return _car(position, velocity, _v(accel), Cmp(_v(velocity), "<=", _v(limit)))

    return RddFormula(
        side("x", "v", "a", left_decays),
        side("x#", "v#", "a#", right_decays),
        Cmp(_v("x"), "=", _v("x#")),
        Cmp(_v("v"), "<=", _v("v#")),
    )


# --- random generators ----------------------------------------------------------------


def _coefficient(rng: np.random.Generator, low: int = -3, high: int = 3) -> Constant:
    value = int(rng.integers(low, high + 1))
    while value == 0:
        value = int(rng.integers(low, high + 1))
    return Constant(value)


def _signed(term: Term, coefficient: Constant) -> Term:
    if coefficient.value < 0:
        magnitude = Constant(-coefficient.value)
        return Neg(term if magnitude.value == 1 else Mul(magnitude, term))
    return term if coefficient.value == 1 else Mul(coefficient, term)


def random_polynomial(rng: np.random.Generator, names: Sequence[str], degree: int = 2,
                      terms: int = 3) -> Term:
    """Sum of ``terms`` monomials with small integer coefficients and total degree <= ``degree``."""
    result: Term = None
    for _ in range(terms):
        monomial: Term = None
        for _ in range(int(rng.integers(0, degree + 1))):
            factor = _v(str(rng.choice(list(names))))
            monomial = factor if monomial is None else Mul(monomial, factor)
        coefficient = _coefficient(rng)
        part = coefficient if monomial is None else _signed(monomial, coefficient)
        result = part if result is None else Add(result, part)
    return result


def random_rational(rng: np.random.Generator, names: Sequence[str], degree: int = 2) -> Term:
    """``p / (1 + q^2)``; the denominator never vanishes."""
    numerator = random_polynomial(rng, names, degree)
    denominator = Add(Constant(1), Pow(random_polynomial(rng, names, 1, 2), 2))
    return Div(numerator, denominator)


def random_dynamics(rng: np.random.Generator, names: Sequence[str], degree: int = 2,
                    parameters: Sequence[str] = ()) -> Dynamics:
    """Polynomial right-hand sides over ``names`` and ``parameters``."""
    pool: List[str] = [*names, *parameters]
    return Dynamics(tuple((name, random_polynomial(rng, pool, degree)) for name in names), TRUE)


def random_state(rng: np.random.Generator, names: Sequence[str], radius: float = 1.0) -> Dict[str, float]:
    return {name: float(rng.uniform(-radius, radius)) for name in names}
