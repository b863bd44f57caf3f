"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`RddlError`, so the CLI
can map whole families to exit codes without catching unrelated bugs.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional, Sequence


class RddlError(Exception):
    form = "error"

    def __init__(self, detail: str = ""):
        self.detail = detail
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.detail:
            return f"{self.form}: {self.detail}"
        return self.form


# --- syntax ---------------------------------------------------------------------------


class RddlSyntaxError(RddlError):
    form = "syntax error"

    def __init__(self, position: int, expected: Iterable[str], found: str = ""):
        self.position = position
        self.expected = tuple(sorted(set(expected)))
        self.found = found
        wanted = ", ".join(self.expected) or "end of input"
        detail = f"at offset {position}: expected {wanted}"
        if found:
            detail += f", found {found!r}"
        super().__init__(detail)


class DisjointnessError(RddlError):
    form = "rdd sides share variables"


class QuantifierNotSupported(RddlError):
    form = "quantified formula in a rule-matched position"


# --- algebra --------------------------------------------------------------------------


class ZeroDenominator(RddlError):
    form = "denominator is identically zero"


class ExitShapeError(RddlError):
    form = "exit condition is not a single cross-side equality"


class DegenerateExit(RddlError):
    form = "exit term has a zero Lie derivative"


class NonPolynomialCofactor(RddlError):
    form = "Darboux cofactor is not a polynomial"


# --- semantics ------------------------------------------------------------------------


class PoleEncountered(RddlError):
    form = "vector field pole"

    def __init__(self, time: float, detail: str = ""):
        self.time = time
        super().__init__(f"t={time:.6g}" + (f" ({detail})" if detail else ""))


class DomainViolatedAtStart(RddlError):
    form = "initial state violates the evolution domain"


class MonotonicityViolated(RddlError):
    form = "exit term is not strictly monotone"

    def __init__(self, time: float, side: str):
        self.time = time
        self.side = side
        super().__init__(f"{side} side at t={time:.6g}")


class MismatchedEndpoints(RddlError):
    form = "exit terms disagree at the endpoints"


class NonMonotoneSamples(RddlError):
    form = "sampled time stretch is not strictly increasing"


class GammaUnsatisfiedInBox(RddlError):
    form = "no sampled state satisfies the assumptions"


# --- arith ----------------------------------------------------------------------------


class NonArithmeticInput(RddlError):
    form = "formula is not quantifier- and modality-free"


# --- kernel ---------------------------------------------------------------------------


class RuleMismatch(RddlError):
    form = "rule does not match"


class SideConditionFailed(RddlError):
    form = "side condition failed"


class ProofRefuted(RddlError):
    form = "arithmetic leaf refuted"

    def __init__(self, witness: Mapping[str, object], detail: str = ""):
        self.witness = dict(witness)
        shown = ", ".join(f"{k}={v}" for k, v in sorted(self.witness.items()))
        super().__init__(f"{detail} witness {{{shown}}}".strip())


class ProofCheckError(RddlError):
    """First failing node of a proof tree."""

    form = "proof check failed"

    def __init__(self, path: Sequence[int], rule: str, cause: RddlError, diff: Optional[str] = None):
        self.path = tuple(path)
        self.rule = rule
        self.cause = cause
        self.diff = diff
        where = "/".join(str(i) for i in self.path) or "root"
        detail = f"node {where} ({rule}): {cause}"
        if diff:
            detail += f"\n{diff}"
        super().__init__(detail)


# --- corpus ---------------------------------------------------------------------------


class UnknownRule(RddlError):
    form = "unknown rule"


class ArityMismatch(RddlError):
    form = "wrong number of premises"


class UnresolvedIdentifier(RddlError):
    form = "unresolved identifier"
