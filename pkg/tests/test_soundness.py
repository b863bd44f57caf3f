"""Rule soundness on random instances, checked with the sampling falsifiers.

Every test builds a conclusion, applies a rule and falsifies the premises and the conclusion
from the same seed. A sound rule never leaves all premises standing while the conclusion
falls. Families built to be valid also assert that the premises stand, so the check is not
vacuous.
"""

import numpy as np
import pytest

from rddl.core.algebra import normalize, partial_derivative, to_term
from rddl.core.errors import GammaUnsatisfiedInBox
from rddl.core.kernel.rules import (
    apply_DBX_GT,
    apply_DC,
    apply_DCC,
    apply_DI,
    apply_DII,
    apply_DW,
    apply_ECP,
    apply_MCS,
    apply_MID,
    apply_RDC,
    apply_SCC,
    apply_SIM,
    apply_TS,
)
from rddl.core.kernel.sequent import Sequent
from rddl.core.semantics.falsifier import falsify_box, falsify_rdd
from rddl.core.semantics.models import (
    collision_speed,
    constant_acceleration,
    random_dynamics,
    random_polynomial,
)
from rddl.core.syntax.ast import (
    TRUE,
    Box,
    Cmp,
    Constant,
    Dyn,
    Dynamics,
    Mul,
    Neg,
    RddFormula,
    Test,
    Variable,
    conj,
    implies,
    make_seq,
)
from rddl.core.syntax.parser import parse_formula, parse_program

NAMES = ("x", "y")
SEEDS = range(6)
CASE_SEEDS = range(3)

BOX_CHECK = dict(samples=24, step=1e-2, horizon=0.25, radius=2.0, slack=1e-6)
CASE_CHECK = dict(samples=12, step=1e-2, horizon=2.0, radius=1.0, slack=1e-6)

CARS_BOX = {
    "x": (-1.0, 1.0),
    "x#": (-1.0, 1.0),
    "v": (0.1, 1.0),
    "v#": (0.1, 1.0),
    "a": (0.1, 1.0),
    "a#": (0.1, 2.0),
    "V": (1.0, 2.0),
}
SLOWER_LEFT = parse_formula("x = x# & v = v# & v > 0 & a > 0 & a < a#")
FASTER_LEFT = parse_formula("x = x# & v = v# & v > 0 & a# > 0 & a# < a")


def refuted(sequent: Sequent, seed: int, **options) -> bool:
    settings = {**BOX_CHECK, **options}
    gamma = conj(*sequent.context)
    try:
        try:
            rdd = RddFormula.from_box(sequent.goal)
        except ValueError:
            return falsify_box(gamma, sequent.goal, seed=seed, **settings) is not None
        return falsify_rdd(rdd, gamma, seed=seed, **settings) is not None
    except GammaUnsatisfiedInBox:
        return False


def check_rule(conclusion: Sequent, premises, seed: int, **options) -> bool:
    """True when every premise survives; the conclusion must then survive as well."""
    held = not any(refuted(p, seed, **options) for p in premises)
    if held:
        assert not refuted(conclusion, seed, **options), f"{conclusion} falls while its premises hold"
    return held


def potential(rng):
    while True:
        g = random_polynomial(rng, NAMES, degree=2)
        if not normalize(g).is_constant:
            return g


def gradient_flow(g, ascent: bool = True) -> Dynamics:
    """``x' = grad g`` (or its negation); ``g`` never decreases along the ascent."""
    rf = normalize(g)
    odes = []
    for name in NAMES:
        slope = to_term(partial_derivative(rf, name))
        odes.append((name, slope if ascent else Neg(slope)))
    return Dynamics(tuple(odes), TRUE)


def at_least_zero(term):
    return Cmp(term, ">=", Constant(0))


def gradient_sequent(rng, ascent: bool = True) -> Sequent:
    g = potential(rng)
    return Sequent.of([at_least_zero(g)], Box(Dyn(gradient_flow(g, ascent)), at_least_zero(g)))


def linear_dynamics(rng, names, parameters=()) -> Dynamics:
    return random_dynamics(rng, names, degree=1, parameters=parameters)


class TestDifferentialRules:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_differential_invariant(self, seed):
        conclusion = gradient_sequent(np.random.default_rng(seed))
        assert check_rule(conclusion, apply_DI(conclusion), seed)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_differential_invariant_on_descent(self, seed):
        conclusion = gradient_sequent(np.random.default_rng(seed), ascent=False)
        check_rule(conclusion, apply_DI(conclusion), seed)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_differential_cut(self, seed):
        conclusion = gradient_sequent(np.random.default_rng(seed))
        assert check_rule(conclusion, apply_DC(conclusion, conclusion.goal.post), seed)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_differential_cut_on_descent(self, seed):
        conclusion = gradient_sequent(np.random.default_rng(seed), ascent=False)
        check_rule(conclusion, apply_DC(conclusion, conclusion.goal.post), seed)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_differential_weakening_with_frame(self, seed):
        rng = np.random.default_rng(seed)
        h = random_polynomial(rng, NAMES, degree=2)
        d = linear_dynamics(rng, NAMES, parameters=("c",)).with_constraint(at_least_zero(h))
        positive_c = Cmp(Variable("c"), ">", Constant(0))
        conclusion = Sequent.of([positive_c], Box(Dyn(d), conj(at_least_zero(h), positive_c)))
        assert check_rule(conclusion, apply_DW(conclusion, frame=1), seed)

    @pytest.mark.parametrize("seed", SEEDS)
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_higher_induction(self, seed, order):
        conclusion = gradient_sequent(np.random.default_rng(seed))
        assert check_rule(conclusion, apply_DII(conclusion, n=order), seed)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_conditional_cut(self, seed):
        rng = np.random.default_rng(seed)
        bound = int(rng.integers(-1, 2))
        x = Variable("x")
        cond = Cmp(x, "<=", Constant(bound))
        d = Dynamics((("x", Constant(1)), ("y", random_polynomial(rng, NAMES, degree=1))), TRUE)
        conclusion = Sequent.of([], Box(Dyn(d), implies(cond, Cmp(x, "<=", Constant(bound + 1)))))
        assert check_rule(conclusion, apply_DCC(conclusion, cond), seed)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_darboux(self, seed):
        rng = np.random.default_rng(seed)
        rate = Constant(int(rng.choice([-3, -2, -1, 1, 2, 3])))
        x = Variable("x")
        d = Dynamics((("x", Mul(rate, x)), ("y", random_polynomial(rng, NAMES, degree=1))), TRUE)
        positive = Cmp(x, ">", Constant(0))
        conclusion = Sequent.of([positive], Box(Dyn(d), positive))
        assert check_rule(conclusion, apply_DBX_GT(conclusion, rate), seed)


class TestStructuralRules:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_swap_independent_dynamics(self, seed):
        rng = np.random.default_rng(seed)
        first = Dyn(linear_dynamics(rng, ("x",)))
        second = Dyn(linear_dynamics(rng, ("y",)))
        post = at_least_zero(random_polynomial(rng, NAMES, degree=2))
        conclusion = Sequent.of([], Box(make_seq([first, second]), post))
        check_rule(conclusion, apply_SCC(conclusion), seed)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_merge_identical_dynamics(self, seed):
        single = gradient_sequent(np.random.default_rng(seed))
        flow = single.goal.program
        conclusion = single.with_goal(Box(make_seq([flow, flow]), single.goal.post))
        assert check_rule(conclusion, apply_MID(conclusion), seed)


class TestRelationalRules:
    @staticmethod
    def cars(gamma) -> Sequent:
        return Sequent.of([gamma], constant_acceleration().desugar())

    @pytest.mark.parametrize("seed", CASE_SEEDS)
    def test_time_synchronization(self, seed):
        conclusion = self.cars(SLOWER_LEFT)
        assert check_rule(conclusion, apply_TS(conclusion), seed, box=CARS_BOX, **CASE_CHECK)

    @pytest.mark.parametrize("seed", CASE_SEEDS)
    def test_time_synchronization_when_left_is_faster(self, seed):
        conclusion = self.cars(FASTER_LEFT)
        check_rule(conclusion, apply_TS(conclusion), seed, box=CARS_BOX, **CASE_CHECK)

    @pytest.mark.parametrize("seed", CASE_SEEDS)
    def test_monotone_condition_swap(self, seed):
        conclusion = self.cars(SLOWER_LEFT)
        assert check_rule(conclusion, apply_MCS(conclusion), seed, box=CARS_BOX, **CASE_CHECK)

    @pytest.mark.parametrize("seed", CASE_SEEDS)
    def test_simulation(self, seed):
        a = constant_acceleration()
        relation = parse_formula("v# > 0 & a# > 0")
        conclusion = Sequent.of([SLOWER_LEFT], RddFormula(a.left, a.right, a.exit, parse_formula("v# > 0")).desugar())
        assert check_rule(conclusion, apply_SIM(conclusion, relation), seed, box=CARS_BOX, **CASE_CHECK)

    @pytest.mark.parametrize("seed", CASE_SEEDS)
    def test_relational_cut(self, seed):
        gamma = parse_formula("x = 0 & x# = 0 & v = v# & v >= 0")
        conclusion = Sequent.of([gamma], collision_speed().desugar())
        premises = apply_RDC(conclusion, parse_formula("x = 1"))
        assert check_rule(conclusion, premises, seed, box={"v": (0.0, 1.0), "v#": (0.0, 1.0)}, **CASE_CHECK)

    @pytest.mark.parametrize("seed", CASE_SEEDS)
    def test_exit_condition_propagation(self, seed):
        single = Dyn(parse_program("{x#' = v#, v#' = a#}").dynamics)
        first = Dyn(parse_program("{x' = v, v' = a & v <= V}").dynamics)
        second = Dyn(parse_program("{x' = v, v' = 0}").dynamics)
        program = make_seq([single, first, Test(parse_formula("v = V")), second, Test(parse_formula("x = x#"))])
        gamma = conj(SLOWER_LEFT, parse_formula("v <= V"))
        conclusion = Sequent.of([gamma], Box(program, parse_formula("v > 0")))
        assert check_rule(conclusion, apply_ECP(conclusion), seed, box=CARS_BOX, **CASE_CHECK)
