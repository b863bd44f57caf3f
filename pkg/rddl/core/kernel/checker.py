"""Depth-first proof checker.

Each node's rule regenerates the premises of its sequent; children are checked against
them in order. The first failure is reported with its path from the root.
"""

from __future__ import annotations

import time
from collections import Counter
from typing import Optional, Sequence

from ..config import RunConfig
from ..errors import ArityMismatch, ProofCheckError, RddlError, RuleMismatch, UnknownRule
from ..logger import get_logger
from ..syntax.printer import pretty
from .certificate import Certificate
from .rules import RULES, RuleContext, check_quantifiers
from .sequent import ProofNode, Sequent

log = get_logger(__name__)

__all__ = ["check_proof", "diff_sequents"]


def diff_sequents(expected: Sequent, found: Sequent) -> str:
    return f"  expected: {expected}\n     found: {found}"


def check_proof(tree: ProofNode, root: Optional[Sequent] = None,
                config: Optional[RunConfig] = None) -> Certificate:
    """Check ``tree`` against ``root`` (defaults to ``tree.sequent``).

    Raises:
        ProofCheckError: for the first node whose rule does not apply or whose children
            disagree with the regenerated premises.
    """
    config = config or RunConfig()
    sequent = root if root is not None else tree.sequent
    if sequent is None:
        raise ValueError("proof tree has no root sequent")
    context = RuleContext(refuter_points=config.refuter_points, seed=config.seed, radius=config.box_radius)
    histogram: Counter = Counter()
    start = time.perf_counter()
    _check(tree, sequent, (), context, histogram)
    elapsed = (time.perf_counter() - start) * 1000.0
    certificate = Certificate(
        root=str(sequent),
        rules=dict(sorted(histogram.items())),
        obligations=context.ledger.obligations,
        side_conditions=tuple(sorted({pretty(f) for f in context.side.formulas()})),
        experimental=tuple(context.experimental),
        wall_ms=elapsed,
    )
    log.info("Proof checked: %s, %d rule applications, %d obligations",
             certificate.status, certificate.rule_count, len(certificate.obligations))
    return certificate


def _check(node: ProofNode, sequent: Sequent, path: Sequence[int], context: RuleContext,
           histogram: Counter) -> None:
    name = node.rule.rule
    spec = RULES.get(name)
    if spec is None:
        raise ProofCheckError(path, name, UnknownRule(name))
    options = node.rule.options
    annotated = options.pop("goal", None)
    if annotated is not None:
        expected = Sequent.of(sequent.context, annotated)
        if not expected.same_as(sequent):
            raise ProofCheckError(path, name, RuleMismatch("goal annotation differs from the regenerated goal"),
                                  diff_sequents(sequent, expected))
    try:
        if name != "TRUSTED":
            check_quantifiers(sequent)
        premises = spec.apply(sequent, options, context)
    except ProofCheckError:
        raise
    except RddlError as exc:
        raise ProofCheckError(path, name, exc) from exc
    if len(premises) != len(node.children):
        raise ProofCheckError(
            path, name, ArityMismatch(f"{len(premises)} premises, {len(node.children)} subproofs"))
    histogram[name] += 1
    log.debug("%s at %s: %d premises", name, "/".join(map(str, path)) or "root", len(premises))
    for index, (child, premise) in enumerate(zip(node.children, premises)):
        child_path = (*path, index)
        if child.sequent is not None and not child.sequent.same_as(premise):
            raise ProofCheckError(child_path, child.rule.rule, RuleMismatch("sequent differs from the premise"),
                                  diff_sequents(premise, child.sequent))
        _check(child, premise, child_path, context, histogram)
