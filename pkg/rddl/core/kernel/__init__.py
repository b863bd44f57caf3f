"""Proof kernel: sequents, rule schemas and the checker."""

from .certificate import CONDITIONAL, UNCONDITIONAL, Certificate
from .checker import check_proof
from .rules import RULES, RuleContext, RuleSpec
from .sequent import ProofNode, RuleApplication, Sequent

__all__ = [
    "Certificate",
    "CONDITIONAL",
    "UNCONDITIONAL",
    "check_proof",
    "RULES",
    "RuleContext",
    "RuleSpec",
    "ProofNode",
    "RuleApplication",
    "Sequent",
]
