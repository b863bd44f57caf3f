"""Rule schemas.

Every ``apply_*`` function takes the conclusion sequent and returns the premises in a
fixed order. Rules that compute Lie derivatives record nonzero-denominator side
conditions on the :class:`RuleContext`; ``ARITH`` and ``TRUSTED`` write to its ledger.

``RULES`` maps the names used in proof scripts to adapters that read script parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from ..algebra import (
    RationalFunction,
    SideConditions,
    VectorField,
    compare_zero,
    dii_disjunction,
    dynamics_equal,
    exit_functions,
    formula_key,
    formulas_equal,
    lie_derivative,
    normalize,
    stretch_factors,
    sync_vector_field,
    to_term,
)
from ..arith.obligations import ObligationLedger
from ..arith.prover import Proved, Refuted, prove_arith
from ..errors import (
    ExitShapeError,
    NonArithmeticInput,
    NonPolynomialCofactor,
    ProofRefuted,
    QuantifierNotSupported,
    RuleMismatch,
    SideConditionFailed,
)
from ..logger import get_logger
from ..syntax.ast import (
    TRUE,
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
    Implies,
    Mul,
    Not,
    Or,
    Program,
    RddFormula,
    Seq,
    Sub,
    Term,
    Test,
    Truth,
    check_independent,
    conj,
    conjuncts,
    free_variables,
    implies,
    is_first_order,
    make_seq,
    negate,
    seq_items,
)
from ..syntax.printer import pretty
from .sequent import Sequent

log = get_logger(__name__)

__all__ = [
    "RuleContext",
    "RuleSpec",
    "RULES",
    "DI_VARIANTS",
    "contains_quantifier",
    "check_quantifiers",
    "apply_DI",
    "apply_DC",
    "apply_DW",
    "apply_DII",
    "apply_SIM",
    "apply_TS",
    "apply_MCS",
    "apply_RDC",
    "apply_ECP",
    "apply_SCC",
    "apply_MID",
    "apply_DCC",
    "apply_DBX_GT",
    "apply_SPLIT",
    "apply_COMPOSE",
    "apply_TEST",
    "apply_WEAKEN",
    "apply_CUT",
    "apply_IMPLY",
    "apply_TRUSTED",
    "apply_ARITH",
]

# Goal operator (after moving everything to the left of 0) -> derivative operator.
DI_VARIANTS: Dict[str, str] = {"=": "=", ">": ">=", ">=": ">="}
_VARIANT_NAMES = {"eq": "=", "gt": ">", "ge": ">="}
_MIRROR = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "="}


@dataclass
class RuleContext:
    """State shared by every rule application of one proof check."""

    side: SideConditions = field(default_factory=SideConditions)
    ledger: ObligationLedger = field(default_factory=ObligationLedger)
    experimental: List[str] = field(default_factory=list)
    refuter_points: int = 10_000
    seed: int = 42
    radius: float = 10.0

    def mark_experimental(self, note: str) -> None:
        if note not in self.experimental:
            self.experimental.append(note)
            log.warning("Experimental rule variant used: %s", note)


# --- shape helpers --------------------------------------------------------------------


def contains_quantifier(formula) -> bool:
    if isinstance(formula, Forall):
        return True
    if isinstance(formula, Not):
        return contains_quantifier(formula.arg)
    if isinstance(formula, (And, Or, Implies)):
        return contains_quantifier(formula.left) or contains_quantifier(formula.right)
    if isinstance(formula, (Box, Diamond)):
        return contains_quantifier(formula.post) or any(
            contains_quantifier(_program_formula(item)) for item in _programs(formula.program)
        )
    return False


def _programs(program: Program) -> List[Program]:
    if isinstance(program, Choice):
        return _programs(program.left) + _programs(program.right)
    if isinstance(program, Seq):
        return _programs(program.first) + _programs(program.second)
    return [program]


def _program_formula(program: Program) -> Formula:
    if isinstance(program, Test):
        return program.cond
    if isinstance(program, Dyn):
        return program.dynamics.constraint
    return TRUE


def _modal(goal: Formula, rule: str, modality: str = "box"):
    wanted = Box if modality == "box" else Diamond
    if not isinstance(goal, wanted):
        raise RuleMismatch(f"{rule} expects a {modality} goal, got {pretty(goal)}")
    return goal


def _bare(s: Sequent, rule: str) -> Tuple[Dynamics, Formula]:
    goal = _modal(s.goal, rule)
    if not isinstance(goal.program, Dyn):
        raise RuleMismatch(f"{rule} expects [dynamics] post, got {pretty(goal)}")
    return goal.program.dynamics, goal.post


def _first_order(formula: Formula, rule: str, what: str) -> Formula:
    if not is_first_order(formula):
        raise RuleMismatch(f"{rule}: {what} must be first-order, got {pretty(formula)}")
    return formula


def _zero_form(formula: Formula, rule: str) -> Tuple[Term, str]:
    """``l op r`` as ``(l - r, op)``; upper bounds are not flipped, use WEAKEN to restate them."""
    if not isinstance(formula, Cmp):
        raise RuleMismatch(f"{rule} expects a comparison, got {pretty(formula)}")
    if formula.op in ("<", "<="):
        raise RuleMismatch(f"{rule} has no variant for {formula.op} in {pretty(formula)}")
    return Sub(formula.left, formula.right), formula.op


def _rdd(goal: Formula, rule: str) -> RddFormula:
    try:
        return RddFormula.from_box(goal)
    except ValueError:
        raise RuleMismatch(f"{rule} expects an rdd goal, got {pretty(goal)}") from None


def _lie(dynamics: Dynamics, term, context: RuleContext) -> RationalFunction:
    return lie_derivative(VectorField.of(dynamics, context.side), normalize(term, context.side))


def _domains(rdd: RddFormula) -> Formula:
    return conj(rdd.left.constraint, rdd.right.constraint)


def _split_sides(cmp: Formula, rdd: RddFormula, rule: str) -> Tuple[Term, Term, str]:
    """``(h, h#, op)`` with ``h op h#``, ``h`` free of right variables and ``h#`` of left ones."""
    if not isinstance(cmp, Cmp):
        raise RuleMismatch(f"{rule} expects a comparison, got {pretty(cmp)}")
    own, other = frozenset(rdd.left.variables), frozenset(rdd.right.variables)
    a, b = free_variables(cmp.left), free_variables(cmp.right)
    if not a & other and not b & own:
        return cmp.left, cmp.right, cmp.op
    if not a & own and not b & other:
        return cmp.right, cmp.left, _MIRROR[cmp.op]
    raise RuleMismatch(f"{rule}: {pretty(cmp)} does not separate the two sides")


def _consequent(post: Formula, cond: Formula, rule: str) -> Formula:
    """``phi`` for a post of the shape ``cond -> phi``."""
    if isinstance(cond, Truth):
        return post
    if not isinstance(post, Not):
        raise RuleMismatch(f"{rule} expects an implication, got {pretty(post)}")
    parts = conjuncts(post.arg)
    keys = [formula_key(p) for p in parts]
    wanted = {formula_key(c) for c in conjuncts(cond)}
    if not wanted <= set(keys):
        raise RuleMismatch(f"{rule}: {pretty(cond)} is not the premise of {pretty(post)}")
    rest = [p for p, k in zip(parts, keys) if k not in wanted]
    return negate(conj(*rest))


def _rebuild(goal: Formula, items: Sequence[Program], post: Formula) -> Formula:
    return type(goal)(make_seq(items), post)


# --- differential rules ---------------------------------------------------------------


def apply_DI(s: Sequent, variant: Optional[str] = None,
             context: Optional[RuleContext] = None) -> List[Sequent]:
    """Differential invariant for ``[x'=f & Q] g ~ 0``."""
    context = context or RuleContext()
    dynamics, post = _bare(s, "DI")
    g, op = _zero_form(post, "DI")
    derived = DI_VARIANTS.get(op)
    if derived is None:
        raise RuleMismatch(f"DI has no variant for {op}")
    if variant is not None and variant != op:
        raise RuleMismatch(f"DI variant {variant} does not match goal operator {op}")
    lie = _lie(dynamics, g, context)
    return [
        s.extended(*conjuncts(dynamics.constraint), goal=post),
        s.with_goal(Box(Dyn(dynamics), compare_zero(lie, derived))),
    ]


def apply_DC(s: Sequent, cut: Formula, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Differential cut on the leading dynamics of a box."""
    goal = _modal(s.goal, "DC")
    _first_order(cut, "DC", "cut")
    items = seq_items(goal.program)
    if not isinstance(items[0], Dyn):
        raise RuleMismatch(f"DC expects leading dynamics, got {pretty(goal)}")
    dynamics = items[0].dynamics
    strengthened = Dyn(dynamics.with_constraint(conj(dynamics.constraint, cut)))
    return [
        s.with_goal(Box(Dyn(dynamics), cut)),
        s.with_goal(Box(make_seq([strengthened, *items[1:]]), goal.post)),
    ]


def apply_DW(s: Sequent, frame: int = 0, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Differential weakening; ``frame`` keeps context formulas the dynamics cannot change."""
    dynamics, post = _bare(s, "DW")
    kept = list(conjuncts(dynamics.constraint))
    if frame:
        bound = frozenset(dynamics.variables)
        kept.extend(f for f in s.context if not free_variables(f) & bound)
    return [Sequent.of(kept, post)]


def apply_DII(s: Sequent, n: int = 1, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Differential induction of order ``n`` for ``[x'=f & Q] g >= 0``."""
    context = context or RuleContext()
    if n < 1:
        raise RuleMismatch(f"DII order must be positive, got {n}")
    dynamics, post = _bare(s, "DII")
    g, op = _zero_form(post, "DII")
    if op != ">=":
        raise RuleMismatch(f"DII expects a non-strict inequality, got {pretty(post)}")
    field_ = VectorField.of(dynamics, context.side)
    progress = dii_disjunction(field_, normalize(g, context.side), n)
    return [
        s.extended(*conjuncts(dynamics.constraint), goal=post),
        s.with_goal(Box(Dyn(dynamics.with_constraint(conj(dynamics.constraint, post))), progress)),
    ]


def apply_DCC(s: Sequent, cond: Formula, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Differential conditional cut for ``[x'=f & Q](C -> phi)``."""
    dynamics, post = _bare(s, "DCC")
    _first_order(cond, "DCC", "condition")
    phi = _consequent(post, cond, "DCC")
    return [
        s.with_goal(Box(Dyn(dynamics.with_constraint(conj(dynamics.constraint, cond))), phi)),
        Sequent.of([*conjuncts(dynamics.constraint), negate(cond)], Box(Dyn(dynamics), negate(cond))),
    ]


def apply_DBX_GT(s: Sequent, cofactor: Term, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Darboux inequality: ``h > 0`` stays positive when ``L h >= g * h``."""
    context = context or RuleContext()
    dynamics, post = _bare(s, "DBX-GT")
    h, op = _zero_form(post, "DBX-GT")
    if op != ">":
        raise RuleMismatch(f"DBX-GT expects a strict inequality, got {pretty(post)}")
    if not any(formula_key(f) == formula_key(post) for f in s.context):
        raise RuleMismatch(f"DBX-GT needs {pretty(post)} in the context")
    if not normalize(cofactor).is_polynomial:
        raise NonPolynomialCofactor(pretty(cofactor))
    h_term = to_term(normalize(h, context.side))
    lie = _lie(dynamics, h, context)
    return [Sequent.of(conjuncts(dynamics.constraint), Cmp(to_term(lie), ">=", Mul(cofactor, h_term)))]


# --- relational rules -----------------------------------------------------------------


def apply_SIM(s: Sequent, relation: Formula, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Simulation through a relation ``R`` between the two sides."""
    rdd = _rdd(s.goal, "SIM")
    _first_order(relation, "SIM", "relation")
    left, right = Dyn(rdd.left), Dyn(rdd.right)
    return [
        Sequent.of([relation], Box(left, Diamond(right, relation))),
        Sequent.of([relation, rdd.exit], rdd.post),
        Sequent.of([relation], RddFormula(rdd.left, rdd.right, rdd.exit, relation).desugar()),
        s.with_goal(Box(Test(_domains(rdd)), relation)),
    ]


def apply_TS(s: Sequent, direction: str = "forward", rdd: Optional[Formula] = None,
             context: Optional[RuleContext] = None) -> List[Sequent]:
    """Time synchronization of an rdd into one ODE, or back with ``direction='backward'``."""
    context = context or RuleContext()
    if direction == "forward":
        target = _rdd(s.goal, "TS")
    elif direction == "backward":
        if rdd is None:
            raise RuleMismatch("TS backward needs the rdd it came from")
        target = _rdd(rdd, "TS")
    else:
        raise RuleMismatch(f"TS direction must be forward or backward, got {direction}")
    lg, lg_sharp = stretch_factors(target)
    VectorField.of(target.left, context.side)
    VectorField.of(target.right, context.side)
    synced = sync_vector_field(target, context.side)
    if direction == "backward":
        goal = _modal(s.goal, "TS")
        if not (isinstance(goal.program, Dyn) and dynamics_equal(goal.program.dynamics, synced)
                and formulas_equal(goal.post, target.post)):
            raise RuleMismatch(f"{pretty(goal)} is not the synchronized form of the given rdd")
        last = s.with_goal(target.desugar())
    else:
        last = s.with_goal(Box(Dyn(synced), target.post))
    ratio = Cmp(Div(to_term(lg), to_term(lg_sharp)), ">", Constant(0))
    return [
        s.with_goal(Box(Test(_domains(target)), target.exit)),
        s.with_goal(Box(Seq(Dyn(target.left), Dyn(target.right)), ratio)),
        last,
    ]


def apply_MCS(s: Sequent, flags: str = "iiii", context: Optional[RuleContext] = None) -> List[Sequent]:
    """Monotone condition swap: exchange exit and post of an rdd.

    ``flags`` gives the direction of ``g``, ``h``, ``h#`` and ``g#`` (``i`` increasing,
    ``d`` decreasing). Decreasing variants are recorded as experimental.
    """
    context = context or RuleContext()
    rdd = _rdd(s.goal, "MCS")
    if len(flags) != 4 or set(flags) - {"i", "d"}:
        raise RuleMismatch(f"MCS flags must be four of i/d, got {flags!r}")
    if flags[0] != flags[3] or flags[1] != flags[2]:
        raise SideConditionFailed(f"MCS flags {flags} pair g with g# and h with h# inconsistently")
    g, g_sharp = exit_functions(rdd)
    h, h_sharp, op = _split_sides(rdd.post, rdd, "MCS")
    if op in ("<", ">"):
        raise RuleMismatch(f"MCS expects a non-strict post, got {pretty(rdd.post)}")
    g_up, h_up = flags[0] == "i", flags[1] == "i"
    if op != ("<=" if h_up else ">="):
        raise RuleMismatch(f"MCS flags {flags} do not fit post {pretty(rdd.post)}")
    if "d" in flags:
        context.mark_experimental(f"MCS flags={flags}")
    swapped = RddFormula(rdd.left, rdd.right, Cmp(h, "=", h_sharp), Cmp(g, ">=" if g_up else "<=", g_sharp))
    return [
        s.with_goal(swapped.desugar()),
        s.with_goal(Box(Test(_domains(rdd)), Cmp(h, op, h_sharp))),
        s.with_goal(Box(Dyn(rdd.left), compare_zero(_lie(rdd.left, g, context), ">" if g_up else "<"))),
        s.with_goal(Box(Dyn(rdd.left), compare_zero(_lie(rdd.left, h, context), ">=" if h_up else "<="))),
        s.with_goal(Box(Dyn(rdd.right), compare_zero(_lie(rdd.right, h_sharp, context), ">=" if h_up else "<="))),
    ]


def apply_RDC(s: Sequent, cut: Formula, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Relational cut of an equality ``g = g#`` before the final test."""
    goal = _modal(s.goal, "RDC")
    items = seq_items(goal.program)
    if not (len(items) == 3 and isinstance(items[0], Dyn) and isinstance(items[1], Dyn)
            and isinstance(items[2], Test)):
        raise RuleMismatch(f"RDC expects [d; d#; ?P] post, got {pretty(goal)}")
    if not isinstance(cut, Cmp) or cut.op != "=":
        raise RuleMismatch(f"RDC cuts an equality, got {pretty(cut)}")
    return [
        s.with_goal(Box(make_seq([items[0], items[1], Test(cut), items[2]]), goal.post)),
        s.with_goal(Box(make_seq(items), cut)),
    ]


def apply_ECP(s: Sequent, direction: str = "increasing",
              context: Optional[RuleContext] = None) -> List[Sequent]:
    """Exit-condition propagation over ``[d; d1; ?P; d2; ?g = g#] post``.

    ``d`` is the single-phase side; ``d1`` and ``d2`` drive the same variables. The
    ``decreasing`` direction is experimental.
    """
    context = context or RuleContext()
    goal = _modal(s.goal, "ECP")
    items = seq_items(goal.program)
    shape = (Dyn, Dyn, Test, Dyn, Test)
    if len(items) != 5 or not all(isinstance(item, kind) for item, kind in zip(items, shape)):
        raise RuleMismatch(f"ECP expects [d; d1; ?P; d2; ?exit] post, got {pretty(goal)}")
    single, first, cond, second, exit_ = items
    if set(first.dynamics.variables) != set(second.dynamics.variables):
        raise RuleMismatch("ECP phases must evolve the same variables")
    check_independent(single, first, SideConditionFailed)
    check_independent(single, second, SideConditionFailed)
    if free_variables(cond.cond) & frozenset(single.dynamics.variables):
        raise SideConditionFailed(f"phase condition {pretty(cond.cond)} reads single-phase variables")
    if direction not in ("increasing", "decreasing"):
        raise RuleMismatch(f"ECP direction must be increasing or decreasing, got {direction}")
    if direction == "decreasing":
        context.mark_experimental("ECP dir=decreasing")
    if not isinstance(exit_.cond, Cmp) or exit_.cond.op != "=":
        raise ExitShapeError(pretty(exit_.cond))
    try:
        g, g_two, _ = _split_sides(exit_.cond, RddFormula(single.dynamics, first.dynamics, exit_.cond, TRUE), "ECP")
    except RuleMismatch as exc:
        raise ExitShapeError(exc.detail) from None
    sign = ">=" if direction == "increasing" else "<="
    return [
        s.with_goal(Box(make_seq([single, first, exit_, cond, single, second, exit_]), goal.post)),
        s.with_goal(Box(first, compare_zero(_lie(first.dynamics, g_two, context), sign))),
        s.with_goal(Box(Seq(first, second), compare_zero(_lie(second.dynamics, g_two, context), sign))),
        s.with_goal(Cmp(g, "<=" if direction == "increasing" else ">=", g_two)),
    ]


# --- structural rules -----------------------------------------------------------------


def apply_SCC(s: Sequent, modality: str = "box", at: int = 1,
              context: Optional[RuleContext] = None) -> List[Sequent]:
    """Swap two adjacent independent programs (1-based position ``at``)."""
    goal = _modal(s.goal, "SCC", modality)
    items = seq_items(goal.program)
    i = at - 1
    if i < 0 or i + 1 >= len(items):
        raise RuleMismatch(f"SCC position {at} outside a sequence of {len(items)}")
    check_independent(items[i], items[i + 1], SideConditionFailed)
    swapped = [*items[:i], items[i + 1], items[i], *items[i + 2:]]
    return [s.with_goal(_rebuild(goal, swapped, goal.post))]


def apply_MID(s: Sequent, modality: str = "box", at: Optional[int] = None,
              context: Optional[RuleContext] = None) -> List[Sequent]:
    """Merge two adjacent runs of the same dynamics into one."""
    context = context or RuleContext()
    goal = _modal(s.goal, "MID", modality)
    items = seq_items(goal.program)
    if at is None:
        pairs = [i for i in range(len(items) - 1)
                 if isinstance(items[i], Dyn) and isinstance(items[i + 1], Dyn)]
        if not pairs:
            raise RuleMismatch(f"MID found no adjacent dynamics in {pretty(goal)}")
        i = pairs[0]
    else:
        i = at - 1
        if i < 0 or i + 1 >= len(items) or not (isinstance(items[i], Dyn) and isinstance(items[i + 1], Dyn)):
            raise RuleMismatch(f"MID position {at} is not a pair of dynamics")
    first, second = items[i].dynamics, items[i + 1].dynamics
    VectorField.of(first, context.side)
    VectorField.of(second, context.side)
    if not dynamics_equal(first, second):
        raise RuleMismatch("MID needs identical dynamics")
    return [s.with_goal(_rebuild(goal, [*items[:i], items[i], *items[i + 2:]], goal.post))]


def apply_SPLIT(s: Sequent, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Box over a choice: one premise per branch."""
    goal = _modal(s.goal, "SPLIT")
    items = seq_items(goal.program)
    for k, item in enumerate(items):
        if isinstance(item, Choice):
            before, after = items[:k], items[k + 1:]
            return [
                s.with_goal(Box(make_seq([*before, *seq_items(branch), *after]), goal.post))
                for branch in (item.left, item.right)
            ]
    raise RuleMismatch(f"SPLIT found no choice in {pretty(goal)}")


def apply_COMPOSE(s: Sequent, at: int = 1, direction: str = "split",
                  context: Optional[RuleContext] = None) -> List[Sequent]:
    """``[a; b] p`` to ``[a][b] p`` after the first ``at`` items, or back with ``merge``."""
    goal = s.goal
    if not isinstance(goal, (Box, Diamond)):
        raise RuleMismatch(f"COMPOSE expects a modal goal, got {pretty(goal)}")
    kind = type(goal)
    if direction == "merge":
        if not isinstance(goal.post, kind):
            raise RuleMismatch(f"COMPOSE merge expects nested {kind.__name__.lower()}es")
        inner = goal.post
        return [s.with_goal(kind(make_seq([*seq_items(goal.program), *seq_items(inner.program)]), inner.post))]
    if direction != "split":
        raise RuleMismatch(f"COMPOSE direction must be split or merge, got {direction}")
    items = seq_items(goal.program)
    if not 1 <= at < len(items):
        raise RuleMismatch(f"COMPOSE position {at} outside a sequence of {len(items)}")
    return [s.with_goal(kind(make_seq(items[:at]), kind(make_seq(items[at:]), goal.post)))]


def _eliminate_test(formula: Formula) -> Formula:
    if not isinstance(formula, Box):
        raise RuleMismatch(f"TEST expects a box, got {pretty(formula)}")
    items = seq_items(formula.program)
    if not isinstance(items[0], Test):
        raise RuleMismatch(f"TEST expects a leading test, got {pretty(formula)}")
    rest = Box(make_seq(items[1:]), formula.post) if len(items) > 1 else formula.post
    return implies(items[0].cond, rest)


def _introduce_test(formula: Formula, cond: Formula) -> Formula:
    return Box(Test(cond), _consequent(formula, cond, "TEST"))


def apply_TEST(s: Sequent, depth: int = 0, intro: Optional[Formula] = None,
               context: Optional[RuleContext] = None) -> List[Sequent]:
    """``[?P] p`` to ``P -> p`` under ``depth`` boxes or implications, or the reverse with ``intro``.

    Stepping through ``A -> q`` rewrites ``q``, so ``[?A; ?B] p`` becomes ``A & B -> p``
    after two eliminations and ``[?(A & B)] p`` after an ``intro``.
    """

    def rewrite(formula: Formula, level: int) -> Formula:
        if level == 0:
            return _eliminate_test(formula) if intro is None else _introduce_test(formula, intro)
        if isinstance(formula, Box):
            return Box(formula.program, rewrite(formula.post, level - 1))
        parts = conjuncts(formula.arg) if isinstance(formula, Not) else []
        if len(parts) < 2:
            raise RuleMismatch(f"TEST depth {depth} reaches {pretty(formula)}")
        return implies(conj(*parts[:-1]), rewrite(negate(parts[-1]), level - 1))

    return [s.with_goal(rewrite(s.goal, depth))]


def apply_WEAKEN(s: Sequent, keep: Optional[Formula] = None, post: Optional[Formula] = None,
                 context: Optional[RuleContext] = None) -> List[Sequent]:
    """Drop context formulas (``keep``) or replace a postcondition by a stronger one (``post``)."""
    if (keep is None) == (post is None):
        raise RuleMismatch("WEAKEN takes exactly one of keep or post")
    if keep is not None:
        present = {formula_key(f): f for f in s.context}
        wanted = [formula_key(f) for f in conjuncts(keep)]
        missing = [pretty(f) for f, k in zip(conjuncts(keep), wanted) if k not in present]
        if missing:
            raise RuleMismatch(f"WEAKEN keeps formulas not in the context: {', '.join(missing)}")
        return [Sequent.of([present[k] for k in wanted], s.goal)]
    goal = s.goal
    if not isinstance(goal, (Box, Diamond)):
        raise RuleMismatch(f"WEAKEN post expects a modal goal, got {pretty(goal)}")
    first = s.with_goal(type(goal)(goal.program, post))
    if is_first_order(goal.post) and is_first_order(post):
        return [first, Sequent.of([post], goal.post)]
    if not formulas_equal(goal.post, post):
        raise RuleMismatch("WEAKEN can only replace a first-order postcondition")
    return [first]


def apply_CUT(s: Sequent, cut: Formula, context: Optional[RuleContext] = None) -> List[Sequent]:
    _first_order(cut, "CUT", "cut")
    return [s.with_goal(cut), s.extended(cut)]


def apply_IMPLY(s: Sequent, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Move the premise of an implication goal into the context."""
    goal = s.goal
    parts = conjuncts(goal.arg) if isinstance(goal, Not) else []
    if len(parts) < 2:
        raise RuleMismatch(f"IMPLY expects an implication, got {pretty(goal)}")
    for part in parts[:-1]:
        _first_order(part, "IMPLY", "premise")
    return [s.extended(*parts[:-1], goal=negate(parts[-1]))]


def apply_TRUSTED(s: Sequent, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Record a first-order leaf as an obligation; modal goals must be proved."""
    context = context or RuleContext()
    if not s.is_arithmetic:
        raise RuleMismatch(f"TRUSTED only closes first-order leaves, got {pretty(s.goal)}")
    ident = context.ledger.register_obligation(s, "trusted")
    log.info("Trusted %s: %s", ident, s)
    return []


def apply_ARITH(s: Sequent, context: Optional[RuleContext] = None) -> List[Sequent]:
    """Close a first-order leaf; undecided leaves become trusted obligations."""
    context = context or RuleContext()
    if any(isinstance(f, Falsity) for f in s.context) or isinstance(s.goal, Truth):
        return []
    if not s.is_arithmetic:
        raise NonArithmeticInput(str(s))
    verdict = prove_arith(list(s.context), s.goal, refuter_points=context.refuter_points,
                          seed=context.seed, radius=context.radius)
    if isinstance(verdict, Proved):
        log.debug("ARITH closed %s via %s", s, ", ".join(verdict.trace) or "constant check")
        return []
    if isinstance(verdict, Refuted):
        raise ProofRefuted(verdict.witness, str(s))
    ident = context.ledger.register_obligation(s, verdict.reason)
    log.info("ARITH undecided on %s; trusted as %s (%s)", s, ident, verdict.reason)
    return []


# --- registry -------------------------------------------------------------------------

Adapter = Callable[[Sequent, Mapping[str, Any], RuleContext], List[Sequent]]


@dataclass(frozen=True)
class RuleSpec:
    """Script-facing description of a rule: accepted parameters and possible premise counts."""

    name: str
    apply: Adapter
    params: FrozenSet[str] = frozenset()
    required: FrozenSet[str] = frozenset()
    arity: Optional[FrozenSet[int]] = None


RULES: Dict[str, RuleSpec] = {}


def _register(name: str, arity: Sequence[int], params: Sequence[str] = (), required: Sequence[str] = ()):
    def wrap(adapter: Adapter) -> Adapter:
        RULES[name] = RuleSpec(name, adapter, frozenset(params) | frozenset(required),
                               frozenset(required), frozenset(arity))
        return adapter

    return wrap


def _variant(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    if value not in _VARIANT_NAMES:
        raise RuleMismatch(f"DI variant must be one of {sorted(_VARIANT_NAMES)}, got {value}")
    return _VARIANT_NAMES[value]


@_register("DI", (2,), ("variant",))
def _di(s, p, ctx):
    return apply_DI(s, _variant(p.get("variant")), context=ctx)


@_register("DC", (2,), required=("cut",))
def _dc(s, p, ctx):
    return apply_DC(s, p["cut"], context=ctx)


@_register("DW", (1,), ("frame",))
def _dw(s, p, ctx):
    return apply_DW(s, p.get("frame", 0), context=ctx)


@_register("DII", (2,), ("n",))
def _dii(s, p, ctx):
    return apply_DII(s, p.get("n", 1), context=ctx)


@_register("DCC", (2,), required=("cond",))
def _dcc(s, p, ctx):
    return apply_DCC(s, p["cond"], context=ctx)


@_register("DBX-GT", (1,), required=("cofactor",))
def _dbx(s, p, ctx):
    return apply_DBX_GT(s, p["cofactor"], context=ctx)


@_register("SIM", (4,), required=("R",))
def _sim(s, p, ctx):
    return apply_SIM(s, p["R"], context=ctx)


@_register("TS", (3,), ("dir", "rdd"))
def _ts(s, p, ctx):
    return apply_TS(s, p.get("dir", "forward"), p.get("rdd"), context=ctx)


@_register("MCS", (5,), ("flags",))
def _mcs(s, p, ctx):
    return apply_MCS(s, p.get("flags", "iiii"), context=ctx)


@_register("RDC", (2,), required=("cut",))
def _rdc(s, p, ctx):
    return apply_RDC(s, p["cut"], context=ctx)


@_register("ECP", (4,), ("dir",))
def _ecp(s, p, ctx):
    return apply_ECP(s, p.get("dir", "increasing"), context=ctx)


@_register("SCC-BOX", (1,), ("at",))
def _scc_box(s, p, ctx):
    return apply_SCC(s, "box", p.get("at", 1), context=ctx)


@_register("SCC-DIA", (1,), ("at",))
def _scc_dia(s, p, ctx):
    return apply_SCC(s, "diamond", p.get("at", 1), context=ctx)


@_register("MID-BOX", (1,), ("at",))
def _mid_box(s, p, ctx):
    return apply_MID(s, "box", p.get("at"), context=ctx)


@_register("MID-DIA", (1,), ("at",))
def _mid_dia(s, p, ctx):
    return apply_MID(s, "diamond", p.get("at"), context=ctx)


@_register("SPLIT", (2,))
def _split(s, p, ctx):
    return apply_SPLIT(s, context=ctx)


@_register("COMPOSE", (1,), ("at", "dir"))
def _compose(s, p, ctx):
    return apply_COMPOSE(s, p.get("at", 1), p.get("dir", "split"), context=ctx)


@_register("TEST", (1,), ("depth", "intro"))
def _test(s, p, ctx):
    return apply_TEST(s, p.get("depth", 0), p.get("intro"), context=ctx)


@_register("WEAKEN", (1, 2), ("keep", "post"))
def _weaken(s, p, ctx):
    return apply_WEAKEN(s, p.get("keep"), p.get("post"), context=ctx)


@_register("CUT", (2,), required=("cut",))
def _cut(s, p, ctx):
    return apply_CUT(s, p["cut"], context=ctx)


@_register("IMPLY", (1,))
def _imply(s, p, ctx):
    return apply_IMPLY(s, context=ctx)


@_register("TRUSTED", (0,))
def _trusted(s, p, ctx):
    return apply_TRUSTED(s, context=ctx)


@_register("ARITH", (0,))
def _arith(s, p, ctx):
    return apply_ARITH(s, context=ctx)


def check_quantifiers(s: Sequent) -> None:
    """Rules match on quantifier-free formulas only."""
    for formula in (*s.context, s.goal):
        if contains_quantifier(formula):
            raise QuantifierNotSupported(pretty(formula))

