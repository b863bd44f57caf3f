"""Tests for the lexer, parser and printer."""

from fractions import Fraction

import pytest

from rddl.core.errors import DisjointnessError, RddlSyntaxError
from rddl.core.syntax.ast import (
    And,
    Box,
    Cmp,
    Constant,
    Diamond,
    Dyn,
    Dynamics,
    Not,
    RddFormula,
    Seq,
    Test,
    Variable,
    bound_variables,
    desugar_rdd,
    conj,
    free_variables,
    implies,
    make_seq,
    negate,
    normal_form,
    seq_items,
)
from rddl.core.syntax.lexer import tokenize
from rddl.core.syntax.parser import parse, parse_formula, parse_program, parse_rdd, parse_term
from rddl.core.syntax.printer import format_constant, pretty


class TestLexer:
    def test_sharp_identifiers(self):
        tokens = tokenize("x# + v")
        assert [t.text for t in tokens[:-1]] == ["x#", "+", "v"]
        assert tokens[0].kind == "ident"

    def test_comment_runs_to_end_of_line(self):
        tokens = tokenize("x % ignored <= 3\n< 1")
        assert [t.text for t in tokens[:-1]] == ["x", "<", "1"]

    def test_longest_operator_wins(self):
        assert [t.text for t in tokenize("a <= b")[:-1]] == ["a", "<=", "b"]

    def test_bad_character(self):
        with pytest.raises(RddlSyntaxError) as exc:
            tokenize("x @ y")
        assert exc.value.position == 2
        assert exc.value.expected == ("a token",)


class TestTerms:
    def test_precedence(self):
        term = parse_term("1 + 2 * x^2")
        assert pretty(term) == "1 + 2 * x^2"

    def test_unary_minus_binds_tighter_than_product(self):
        assert pretty(parse_term("-(v#^2)")) == "-v#^2"

    def test_decimal_constant(self):
        term = parse_term("0.25")
        assert term == Constant(Fraction(1, 4))

    def test_exponent_must_be_integer(self):
        with pytest.raises(RddlSyntaxError):
            parse_term("x^y")

    def test_parenthesized_difference(self):
        assert pretty(parse_term("a - (b - c)")) == "a - (b - c)"


class TestFormulas:
    def test_parse_by_category(self):
        assert parse("x + 1", "term") == parse_term("x + 1")
        assert parse("{x' = 1}; ?x > 0", "program") == parse_program("{x' = 1}; ?x > 0")
        assert parse("x >= 0") == parse_formula("x >= 0")
        with pytest.raises(ValueError):
            parse("x", "sentence")
        with pytest.raises(RddlSyntaxError):
            parse("x + 1 )", "term")

    def test_chain_is_conjunction(self):
        f = parse_formula("0 < a < a#")
        assert isinstance(f, And)
        assert f.left == Cmp(Constant(0), "<", Variable("a"))
        assert f.right == Cmp(Variable("a"), "<", Variable("a#"))

    def test_negation_flips_comparisons(self):
        assert parse_formula("!(x < 1)") == Cmp(Variable("x"), ">=", Constant(1))

    def test_negated_equality_stays_negated(self):
        f = parse_formula("!(x = 1)")
        assert isinstance(f, Not)
        assert pretty(f) == "!(x = 1)"

    def test_implication_is_sugar(self):
        f = parse_formula("x > 0 -> y > 0")
        assert f == implies(Cmp(Variable("x"), ">", Constant(0)), Cmp(Variable("y"), ">", Constant(0)))

    def test_parenthesized_formula_and_term(self):
        assert pretty(parse_formula("(x + 1) > 0")) == "x + 1 > 0"
        assert pretty(parse_formula("(x > 0 & y > 0)")) == "x > 0 & y > 0"

    def test_box_and_diamond(self):
        box = parse_formula("[{x' = 1}; ?x > 2] x >= 0")
        assert isinstance(box, Box)
        assert isinstance(box.program, Seq)
        diamond = parse_formula("<{x' = 1}> x > 2")
        assert isinstance(diamond, Diamond)

    @pytest.mark.parametrize(
        "text",
        [
            "x = x# & 0 < v",
            "[{x' = v, v' = a & v <= V}] v <= V",
            "<{x' = 1}; ?(x > 1)> x >= 1",
            "[?x = 0 ++ {x' = 1}; ?x = 1] x >= 0",
            "x > 0 | y > 0",
        ],
    )
    def test_print_parse_fixpoint(self, text):
        once = pretty(parse_formula(text))
        assert pretty(parse_formula(once)) == once

    def test_trailing_input_rejected(self):
        with pytest.raises(RddlSyntaxError):
            parse_formula("x > 0 y")


class TestRdd:
    TEXT = "rdd {x' = v, v' = a || x#' = v#, v#' = a#} exit x = x# post v <= v#"

    def test_parse_and_print(self):
        rdd = parse_rdd(self.TEXT)
        assert rdd.left.variables == ("x", "v")
        assert rdd.right.variables == ("x#", "v#")
        assert pretty(rdd) == self.TEXT

    def test_desugars_to_box(self):
        formula = parse_formula(self.TEXT)
        assert isinstance(formula, Box)
        items = seq_items(formula.program)
        assert [type(i) for i in items] == [Dyn, Dyn, Test]
        assert RddFormula.from_box(formula) == parse_rdd(self.TEXT)
        assert pretty(formula) == self.TEXT

    def test_desugar_ends_in_single_test(self):
        rdd = parse_rdd("rdd {x' = 1 & x <= 2 || y' = 2} exit x = y post x <= y")
        formula = desugar_rdd(rdd)
        items = seq_items(formula.program)
        assert [isinstance(i, Test) for i in items] == [False, False, True]
        assert items[-1].cond == rdd.exit
        assert formula.post == rdd.post
        assert items[0].dynamics.constraint == parse_formula("x <= 2")

    def test_shared_variable_rejected(self):
        with pytest.raises(DisjointnessError):
            parse_rdd("rdd {x' = y || y' = 1} exit x = y post x >= 0")

    def test_duplicate_ode_rejected(self):
        with pytest.raises(RddlSyntaxError):
            parse_program("{x' = 1, x' = 2}")

    def test_from_box_rejects_other_shapes(self):
        with pytest.raises(ValueError):
            RddFormula.from_box(parse_formula("[{x' = 1}] x >= 0"))


class TestNormalForm:
    def test_conj_drops_truth(self):
        x = Cmp(Variable("x"), ">", Constant(0))
        assert conj(parse_formula("true"), x) == x
        assert conj() == parse_formula("true")

    def test_double_negation(self):
        f = parse_formula("[{x' = 1}] x > 0")
        assert negate(negate(f)) == f

    def test_make_seq_is_left_nested(self):
        a, b, c = (Test(parse_formula(f"x > {i}")) for i in range(3))
        program = make_seq([a, b, c])
        assert program == Seq(Seq(a, b), c)
        assert seq_items(program) == [a, b, c]

    def test_normal_form_idempotent(self):
        f = parse_formula("x > 0 -> !(y > 0 | z = 1)")
        assert normal_form(normal_form(f)) == normal_form(f)

    def test_free_and_bound_variables(self):
        f = parse_formula("[{x' = v & v <= V}] x >= y")
        assert free_variables(f) == {"x", "v", "V", "y"}
        assert bound_variables(f) == {"x"}
        assert Dynamics.of({"x": Variable("v")}).parameters() == {"v"}


class TestFormatConstant:
    @pytest.mark.parametrize(
        "value, text",
        [(Fraction(3), "3"), (Fraction(1, 4), "0.25"), (Fraction(-3, 2), "-1.5"), (Fraction(1, 3), "1/3")],
    )
    def test_format(self, value, text):
        assert format_constant(value) == text

    def test_program_printing(self):
        program = make_seq([Dyn(Dynamics.of({"x": Constant(1)})), Test(parse_formula("x = 1"))])
        assert pretty(program) == "{x' = 1}; ?x = 1"
