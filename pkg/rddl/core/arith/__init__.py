"""Arithmetic leaves: prover, sampling refuter and the trusted-obligation ledger."""

from .linear import LinearConstraint, infeasible
from .obligations import Obligation, ObligationLedger, format_sequent, sequent_key
from .prover import ArithVerdict, Proved, Refuted, Unknown, prove_arith
from .refuter import exact_holds, exact_value, search_witness

__all__ = [
    "LinearConstraint",
    "infeasible",
    "Obligation",
    "ObligationLedger",
    "format_sequent",
    "sequent_key",
    "ArithVerdict",
    "Proved",
    "Refuted",
    "Unknown",
    "prove_arith",
    "exact_holds",
    "exact_value",
    "search_witness",
]
