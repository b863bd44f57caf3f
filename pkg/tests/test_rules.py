"""Tests for the individual proof rules."""

import pytest

from rddl.core.algebra import formulas_equal
from rddl.core.errors import (
    NonArithmeticInput,
    NonPolynomialCofactor,
    ProofRefuted,
    QuantifierNotSupported,
    RuleMismatch,
    SideConditionFailed,
)
from rddl.core.kernel.rules import (
    RULES,
    RuleContext,
    apply_ARITH,
    apply_COMPOSE,
    apply_CUT,
    apply_DBX_GT,
    apply_DC,
    apply_DCC,
    apply_DI,
    apply_DII,
    apply_DW,
    apply_ECP,
    apply_IMPLY,
    apply_MCS,
    apply_MID,
    apply_RDC,
    apply_SCC,
    apply_SIM,
    apply_SPLIT,
    apply_TEST,
    apply_TRUSTED,
    apply_TS,
    apply_WEAKEN,
    check_quantifiers,
)
from rddl.core.kernel.sequent import Sequent
from rddl.core.semantics.models import collision_speed, constant_acceleration
from rddl.core.syntax.ast import TRUE, RddFormula
from rddl.core.syntax.parser import parse_formula, parse_term


def f(text):
    return parse_formula(text)


def seq(context, goal) -> Sequent:
    return Sequent.of([f(c) for c in context], f(goal))


def assert_premises(found, expected):
    assert len(found) == len(expected)
    for premise, (context, goal) in zip(found, expected):
        assert premise.same_as(seq(context, goal)), f"{premise} != {seq(context, goal)}"


class TestDifferentialInvariant:
    def test_constant_derivative_closes(self):
        premises = apply_DI(seq(["x >= 0"], "[{x' = 1}] x >= 0"))
        assert_premises(premises, [(["x >= 0"], "x >= 0"), (["x >= 0"], "[{x' = 1}] true")])

    @pytest.mark.parametrize("goal", ["[{x' = 1}] x < 0", "[{v' = a}] v <= 3"])
    def test_upper_bound_rejected(self, goal):
        with pytest.raises(RuleMismatch):
            apply_DI(seq([], goal))

    def test_upper_bound_restated_as_lower_bound(self):
        weakened = apply_WEAKEN(seq([], "[{v' = a}] v <= 3"), post=f("3 >= v"))
        premises = apply_DI(weakened[0])
        assert formulas_equal(premises[1].goal, f("[{v' = a}] -a >= 0"))
        assert weakened[1].same_as(seq(["3 >= v"], "v <= 3"))

    def test_domain_joins_first_premise(self):
        premises = apply_DI(seq([], "[{x' = 1 & y > 0}] x >= 0"))
        assert premises[0].same_as(seq(["y > 0"], "x >= 0"))

    def test_variant_must_match(self):
        with pytest.raises(RuleMismatch):
            apply_DI(seq([], "[{x' = 1}] x >= 0"), variant="=")

    def test_needs_comparison(self):
        with pytest.raises(RuleMismatch):
            apply_DI(seq([], "[{x' = 1}] (x >= 0 & x <= 1)"))

    def test_needs_bare_dynamics(self):
        with pytest.raises(RuleMismatch):
            apply_DI(seq([], "[{x' = 1}; ?x = 1] x >= 0"))


class TestDifferentialCutAndWeakening:
    def test_cut_strengthens_domain(self):
        premises = apply_DC(seq([], "[{x' = v} ; ?x = 1] x >= 0"), f("v >= 0"))
        assert_premises(premises, [([], "[{x' = v}] v >= 0"), ([], "[{x' = v & v >= 0}; ?x = 1] x >= 0")])

    def test_cut_must_be_first_order(self):
        with pytest.raises(RuleMismatch):
            apply_DC(seq([], "[{x' = 1}] x >= 0"), f("[{x' = 1}] x >= 0"))

    def test_weakening_drops_context(self):
        premises = apply_DW(seq(["a > 0", "x = 0"], "[{x' = v & v >= 0}] x >= 0"))
        assert_premises(premises, [(["v >= 0"], "x >= 0")])

    def test_framed_weakening_keeps_constants(self):
        premises = apply_DW(seq(["a > 0", "x = 0"], "[{x' = v & v >= 0}] x >= 0"), frame=1)
        assert_premises(premises, [(["v >= 0", "a > 0"], "x >= 0")])


class TestHigherInduction:
    def test_first_order(self):
        premises = apply_DII(seq(["v >= 0"], "[{v' = a}] v >= 0"), n=1)
        assert_premises(premises, [(["v >= 0"], "v >= 0"), (["v >= 0"], "[{v' = a & v >= 0}] a > 0")])

    def test_second_order_disjunction(self):
        premises = apply_DII(seq([], "[{x' = v, v' = a}] x >= 0"), n=2)
        expected = f("[{x' = v, v' = a & x >= 0}] (v > 0 | v >= 0 & a > 0)")
        assert formulas_equal(premises[1].goal, expected)

    def test_strict_goal_rejected(self):
        with pytest.raises(RuleMismatch):
            apply_DII(seq([], "[{v' = a}] v > 0"))

    def test_upper_bound_rejected(self):
        with pytest.raises(RuleMismatch):
            apply_DII(seq([], "[{v' = -1}] v <= 3"))

    def test_order_positive(self):
        with pytest.raises(RuleMismatch):
            apply_DII(seq([], "[{v' = a}] v >= 0"), n=0)


class TestConditionalCut:
    def test_splits_on_condition(self):
        premises = apply_DCC(seq([], "[{x' = 1}] (x > 0 -> y > 0)"), f("x > 0"))
        assert_premises(premises, [([], "[{x' = 1 & x > 0}] y > 0"), (["x <= 0"], "[{x' = 1}] x <= 0")])

    def test_condition_must_be_premise(self):
        with pytest.raises(RuleMismatch):
            apply_DCC(seq([], "[{x' = 1}] (x > 0 -> y > 0)"), f("y > 1"))


class TestDarboux:
    def test_linear_decay(self):
        premises = apply_DBX_GT(seq(["v > 0"], "[{v' = -v}] v > 0"), parse_term("-1"))
        assert len(premises) == 1
        assert premises[0].context == ()
        assert apply_ARITH(premises[0]) == []

    def test_needs_post_in_context(self):
        with pytest.raises(RuleMismatch):
            apply_DBX_GT(seq([], "[{v' = -v}] v > 0"), parse_term("-1"))

    def test_upper_bound_rejected(self):
        with pytest.raises(RuleMismatch):
            apply_DBX_GT(seq(["v < 0"], "[{v' = -v}] v < 0"), parse_term("-1"))

    def test_cofactor_must_be_polynomial(self):
        with pytest.raises(NonPolynomialCofactor):
            apply_DBX_GT(seq(["v > 0"], "[{v' = -v}] v > 0"), parse_term("1 / v"))


class TestRelationalRules:
    def test_time_synchronization(self):
        context = RuleContext()
        s = Sequent.of([f("x = x# & x = 0")], constant_acceleration().desugar())
        premises = apply_TS(s, context=context)
        assert len(premises) == 3
        assert formulas_equal(premises[0].goal, f("[?true] x = x#"))
        assert formulas_equal(premises[1].goal, f("[{x' = v, v' = a}; {x#' = v#, v#' = a#}] v / v# > 0"))
        synced = premises[2].goal.program.dynamics
        assert synced.variables == ("x", "v", "x#", "v#")
        assert [str(c) for c in context.side] == ["v#"]

    def test_backward_needs_source(self):
        with pytest.raises(RuleMismatch):
            apply_TS(seq([], "[{x' = 1}] x >= 0"), direction="backward")

    def test_backward_restores_rdd(self):
        rdd = constant_acceleration()
        forward = apply_TS(Sequent.of([], rdd.desugar()))[2]
        backward = apply_TS(forward, direction="backward", rdd=rdd.desugar())
        assert formulas_equal(backward[2].goal, rdd.desugar())

    def test_simulation_premises(self):
        rdd = collision_speed()
        premises = apply_SIM(Sequent.of([], rdd.desugar()), f("x = x#"))
        assert len(premises) == 4
        assert premises[1].same_as(Sequent.of([f("x = x#"), rdd.exit], rdd.post))

    def test_monotone_condition_swap(self):
        premises = apply_MCS(Sequent.of([], constant_acceleration().desugar()))
        assert len(premises) == 5
        swapped = RddFormula.from_box(premises[0].goal)
        assert formulas_equal(swapped.exit, f("v = v#"))
        assert formulas_equal(swapped.post, f("x >= x#"))
        assert formulas_equal(premises[2].goal, f("[{x' = v, v' = a}] v > 0"))

    def test_swap_flags(self):
        s = Sequent.of([], constant_acceleration().desugar())
        with pytest.raises(RuleMismatch):
            apply_MCS(s, flags="iix")
        with pytest.raises(SideConditionFailed):
            apply_MCS(s, flags="iidd")
        with pytest.raises(RuleMismatch):
            apply_MCS(s, flags="dddd")

    def test_decreasing_swap_is_experimental(self):
        context = RuleContext()
        s = Sequent.of([], f("rdd {x' = -1, v' = a || x#' = -1, v#' = a#} exit x = x# post v >= v#"))
        apply_MCS(s, flags="dddd", context=context)
        assert context.experimental == ["MCS flags=dddd"]

    def test_relational_cut(self):
        s = Sequent.of([], constant_acceleration().desugar())
        premises = apply_RDC(s, f("v = v#"))
        assert formulas_equal(
            premises[0].goal, f("[{x' = v, v' = a}; {x#' = v#, v#' = a#}; ?v = v#; ?x = x#] v <= v#"))
        assert formulas_equal(premises[1].goal, f("[{x' = v, v' = a}; {x#' = v#, v#' = a#}; ?x = x#] v = v#"))
        with pytest.raises(RuleMismatch):
            apply_RDC(s, f("v <= v#"))

    def test_exit_condition_propagation(self):
        goal = "[{x#' = 1}; {x' = 1}; ?x >= 1; {x' = 2}; ?x = x#] x <= x#"
        premises = apply_ECP(seq([], goal))
        assert len(premises) == 4
        assert formulas_equal(
            premises[0].goal, f("[{x#' = 1}; {x' = 1}; ?x = x#; ?x >= 1; {x#' = 1}; {x' = 2}; ?x = x#] x <= x#"))
        assert formulas_equal(premises[3].goal, f("x# <= x"))

    def test_phase_condition_reads_phases_only(self):
        with pytest.raises(SideConditionFailed):
            apply_ECP(seq([], "[{x#' = 1}; {x' = 1}; ?x# >= 1; {x' = 2}; ?x = x#] x <= x#"))


class TestStructuralRules:
    def test_swap_independent(self):
        premises = apply_SCC(seq([], "[{x' = 1}; {y' = 1}; ?x = y] x >= 0"), at=1)
        assert_premises(premises, [([], "[{y' = 1}; {x' = 1}; ?x = y] x >= 0")])

    def test_swap_dependent_rejected(self):
        with pytest.raises(SideConditionFailed):
            apply_SCC(seq([], "[{x' = 1}; {y' = x}] y >= 0"), at=1)

    def test_swap_position_bounds(self):
        with pytest.raises(RuleMismatch):
            apply_SCC(seq([], "[{x' = 1}; {y' = 1}] y >= 0"), at=2)

    def test_merge_identical_dynamics(self):
        premises = apply_MID(seq([], "[{x' = 1}; {x' = 1}; ?x = 1] x >= 0"))
        assert_premises(premises, [([], "[{x' = 1}; ?x = 1] x >= 0")])

    def test_merge_requires_same_dynamics(self):
        with pytest.raises(RuleMismatch):
            apply_MID(seq([], "[{x' = 1}; {x' = 2}] x >= 0"))

    def test_split_choice(self):
        premises = apply_SPLIT(seq([], "[{x' = 1}; (?x = 1 ++ ?x = 2)] x >= 0"))
        assert_premises(premises, [([], "[{x' = 1}; ?x = 1] x >= 0"), ([], "[{x' = 1}; ?x = 2] x >= 0")])

    def test_split_without_choice(self):
        with pytest.raises(RuleMismatch):
            apply_SPLIT(seq([], "[{x' = 1}] x >= 0"))

    def test_compose_round_trip(self):
        s = seq([], "[{x' = 1}; {y' = 1}; ?x = y] x >= 0")
        split = apply_COMPOSE(s, at=2)[0]
        assert split.same_as(seq([], "[{x' = 1}; {y' = 1}][?x = y] x >= 0"))
        merged = apply_COMPOSE(split, direction="merge")[0]
        assert merged.same_as(s)

    def test_compose_position_bounds(self):
        with pytest.raises(RuleMismatch):
            apply_COMPOSE(seq([], "[{x' = 1}] x >= 0"), at=1)

    def test_test_elimination_and_introduction(self):
        s = seq([], "[?x > 0] y > 0")
        eliminated = apply_TEST(s)[0]
        assert eliminated.same_as(seq([], "x > 0 -> y > 0"))
        assert apply_TEST(eliminated, intro=f("x > 0"))[0].same_as(s)

    def test_test_under_box(self):
        premises = apply_TEST(seq([], "[{x' = 1}][?x > 0; {y' = 1}] y > 0"), depth=1)
        assert_premises(premises, [([], "[{x' = 1}](x > 0 -> [{y' = 1}] y > 0)")])

    def test_tests_merge_through_implication(self):
        s = seq([], "[{x' = 1}][?x > 0; ?y > 0; {y' = 1}] y > 0")
        once = apply_TEST(s, depth=1)[0]
        twice = apply_TEST(once, depth=2)[0]
        assert twice.same_as(seq([], "[{x' = 1}](x > 0 & y > 0 -> [{y' = 1}] y > 0)"))
        merged = apply_TEST(twice, depth=1, intro=f("x > 0 & y > 0"))[0]
        assert merged.same_as(seq([], "[{x' = 1}][?(x > 0 & y > 0)][{y' = 1}] y > 0"))

    def test_test_depth_stops_at_comparison(self):
        with pytest.raises(RuleMismatch):
            apply_TEST(seq([], "[{x' = 1}] x > 0"), depth=2)

    def test_weaken_keep(self):
        premises = apply_WEAKEN(seq(["x > 0", "y > 0"], "x >= 0"), keep=f("x > 0"))
        assert_premises(premises, [(["x > 0"], "x >= 0")])
        with pytest.raises(RuleMismatch):
            apply_WEAKEN(seq(["x > 0"], "x >= 0"), keep=f("z > 0"))

    def test_weaken_post(self):
        premises = apply_WEAKEN(seq([], "[{x' = 1}] x >= 0"), post=f("x > 0"))
        assert_premises(premises, [([], "[{x' = 1}] x > 0"), (["x > 0"], "x >= 0")])

    def test_cut_and_imply(self):
        assert_premises(apply_CUT(seq(["x > 1"], "x > 0"), f("x >= 1")),
                        [(["x > 1"], "x >= 1"), (["x > 1", "x >= 1"], "x > 0")])
        assert_premises(apply_IMPLY(seq([], "x > 0 & y > 0 -> x + y > 0")),
                        [(["x > 0", "y > 0"], "x + y > 0")])

    def test_imply_needs_implication(self):
        with pytest.raises(RuleMismatch):
            apply_IMPLY(seq([], "x > 0"))


class TestLeaves:
    def test_trusted_goes_to_ledger(self):
        context = RuleContext()
        assert apply_TRUSTED(seq(["x > 0"], "x^3 + x > 0"), context=context) == []
        assert [o.id for o in context.ledger.obligations] == ["T1"]

    @pytest.mark.parametrize(
        "context, goal",
        [([], "[{x' = 1}] x >= 0"), (["[{x' = 1}] x >= 0"], "x >= 0"), ([], "x > 0 -> [{x' = 1}] x > 0")],
    )
    def test_trusted_rejects_modal_leaves(self, context, goal):
        rule_context = RuleContext()
        with pytest.raises(RuleMismatch):
            apply_TRUSTED(seq(context, goal), context=rule_context)
        assert rule_context.ledger.obligations == []

    def test_arith_closes_truth(self):
        assert apply_ARITH(Sequent.of([], TRUE)) == []

    def test_arith_refutes(self):
        with pytest.raises(ProofRefuted):
            apply_ARITH(seq(["x > 0"], "x > 1"), context=RuleContext(refuter_points=200))

    def test_arith_rejects_modal_goal(self):
        with pytest.raises(NonArithmeticInput):
            apply_ARITH(seq([], "[{x' = 1}] x >= 0"))

    def test_quantifiers_rejected(self):
        with pytest.raises(QuantifierNotSupported):
            check_quantifiers(seq([], "forall y. y >= 0"))


def test_registry_arities():
    assert RULES["DI"].arity == frozenset({2})
    assert RULES["MCS"].arity == frozenset({5})
    assert RULES["ARITH"].arity == frozenset({0})
    assert RULES["WEAKEN"].arity == frozenset({1, 2})
    assert "cut" in RULES["DC"].required
