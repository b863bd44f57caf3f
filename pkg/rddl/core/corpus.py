"""Proof scripts (``.rdl``) and the pinned corpus manifest.

A script declares parameters, states one sequent and gives the proof tree::

    param V
    sequent { assume 0 < v; v = v# ; goal rdd {...} exit x = x# post v <= v# }
    (DC cut=v > 0 (DI (ARITH) (DW frame=1 (ARITH))) ...)
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field

from .config import RunConfig
from .errors import ArityMismatch, ProofCheckError, RddlError, RddlSyntaxError, UnknownRule, UnresolvedIdentifier
from .kernel.certificate import Certificate
from .kernel.checker import check_proof
from .kernel.rules import RULES
from .kernel.sequent import ProofNode, RuleApplication, Sequent
from .logger import get_logger
from .syntax.ast import Cmp, Constant, Formula, Term, Variable, free_variables
from .syntax.parser import Parser

log = get_logger(__name__)

__all__ = [
    "Script",
    "ScriptParser",
    "read_script",
    "load_script",
    "corpus_dir",
    "ManifestEntry",
    "Manifest",
    "CorpusResult",
    "corpus_manifest",
    "check_corpus",
]

FORMULA_KEYS = frozenset({"cut", "cond", "R", "rdd", "keep", "post", "intro", "goal"})
TERM_KEYS = frozenset({"cofactor"})
INT_KEYS = frozenset({"n", "at", "depth", "frame"})
IDENT_KEYS = frozenset({"dir", "flags", "variant"})


@dataclass
class Script:
    name: str
    params: Dict[str, Optional[Fraction]]
    sequent: Sequent
    proof: ProofNode
    path: Optional[Path] = None


class ScriptParser(Parser):
    """Script grammar on top of the expression parser."""

    def script(self, name: str = "<script>") -> Script:
        params: Dict[str, Optional[Fraction]] = {}
        while self.accept("param"):
            ident = self.expect_ident()
            params[ident] = self._decimal() if self.accept("=") else None
        self.expect("sequent")
        self.expect("{")
        context: List[Formula] = []
        if self.accept("assume"):
            context.append(self.formula())
            while self.accept(";"):
                if self.at("goal"):
                    break
                context.append(self.formula())
        self.expect("goal")
        goal = self.formula()
        self.expect("}")
        for ident, value in params.items():
            if value is not None:
                context.append(Cmp(Variable(ident), "=", Constant(value)))
        sequent = Sequent.of(context, goal)
        proof = self.proof()
        self.expect_end()
        proof.sequent = sequent
        _resolve(proof, free_variables_of(sequent) | set(params))
        return Script(name, params, sequent, proof)

    def _decimal(self) -> Fraction:
        negative = self.accept("-")
        token = self.current
        if token.kind != "number":
            self.fail("decimal")
        self.advance()
        value = Fraction(token.text)
        return -value if negative else value

    def _rule_name(self) -> str:
        parts = [self.expect_ident()]
        while self.at("-") and self.peek().kind == "ident":
            self.advance()
            parts.append(self.advance().text)
        return "-".join(parts)

    def proof(self) -> ProofNode:
        self.expect("(")
        position = self.current.position
        name = self._rule_name()
        spec = RULES.get(name)
        if spec is None:
            raise UnknownRule(f"{name} at offset {position}")
        params: Dict[str, Any] = {}
        while self.current.kind == "ident" and self.peek().is_("="):
            key_token = self.advance()
            self.expect("=")
            key = key_token.text
            if key not in spec.params and key != "goal":
                raise RddlSyntaxError(key_token.position, [f"{p}=" for p in spec.params] or ["subproof"], key)
            params[key] = self._value(key, key_token.position)
        missing = spec.required - set(params)
        if missing:
            self.fail(*(f"{p}=" for p in sorted(missing)))
        children: List[ProofNode] = []
        while self.at("("):
            children.append(self.proof())
        self.expect(")")
        if spec.arity is not None and len(children) not in spec.arity:
            wanted = " or ".join(str(n) for n in sorted(spec.arity))
            raise ArityMismatch(f"{name} at offset {position} takes {wanted} subproofs, got {len(children)}")
        node = ProofNode(RuleApplication.of(name, params), children)
        node.position = position
        return node

    def _value(self, key: str, position: int) -> Union[Formula, Term, int, str]:
        if key in FORMULA_KEYS:
            return self.formula()
        if key in TERM_KEYS:
            return self.term()
        if key in INT_KEYS:
            token = self.current
            if token.kind != "number" or not token.text.isdigit():
                self.fail("integer")
            self.advance()
            return int(token.text)
        if key in IDENT_KEYS:
            token = self.current
            if token.kind != "ident":
                self.fail("identifier")
            self.advance()
            return token.text
        raise RddlSyntaxError(position, ["known parameter"], key)


def free_variables_of(sequent: Sequent) -> set:
    names = set(free_variables(sequent.goal))
    for formula in sequent.context:
        names |= free_variables(formula)
    return names


def _resolve(node: ProofNode, known: set) -> None:
    for key, value in node.rule.params:
        if isinstance(value, (Formula, Term)):
            unknown = free_variables(value) - known
            if unknown:
                raise UnresolvedIdentifier(
                    f"{', '.join(sorted(unknown))} in {node.rule.rule} {key}= at offset {node.position}")
    for child in node.children:
        _resolve(child, known)


def read_script(path: Union[str, Path]) -> Script:
    path = Path(path)
    script = ScriptParser(path.read_text(encoding="utf-8")).script(path.stem)
    script.path = path
    log.debug("Loaded %s: %d proof nodes", path.name, sum(1 for _ in script.proof.walk()))
    return script


def load_script(path: Union[str, Path]) -> Tuple[Sequent, ProofNode]:
    """Root sequent and proof tree of a script; the tree's root carries the sequent."""
    script = read_script(path)
    return script.sequent, script.proof


# --- manifest -------------------------------------------------------------------------


def corpus_dir() -> Path:
    """``RDDL_CORPUS_DIR`` if set, otherwise ``corpus/`` next to the package."""
    env_dir = os.environ.get("RDDL_CORPUS_DIR")
    if env_dir:
        log.debug("Using corpus directory from RDDL_CORPUS_DIR: %s", env_dir)
        return Path(env_dir)
    return Path(__file__).resolve().parents[2] / "corpus"


class ManifestEntry(BaseModel):
    script: str
    status: str = Field(..., pattern="^(unconditional|conditional|refuted)$")
    obligations: int = Field(0, ge=0)


class Manifest(BaseModel):
    scripts: List[ManifestEntry] = Field(default_factory=list)


def corpus_manifest(directory: Optional[Path] = None) -> List[ManifestEntry]:
    directory = directory or corpus_dir()
    data = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    return Manifest.model_validate(data).scripts


@dataclass
class CorpusResult:
    entry: ManifestEntry
    status: str
    obligations: int = 0
    certificate: Optional[Certificate] = None
    error: Optional[str] = None
    notes: List[str] = field(default_factory=list)

    @property
    def matches(self) -> bool:
        return self.status == self.entry.status and self.obligations == self.entry.obligations


def _check_entry(entry: ManifestEntry, directory: Path, config: RunConfig) -> CorpusResult:
    try:
        sequent, proof = load_script(directory / entry.script)
        certificate = check_proof(proof, sequent, config)
    except ProofCheckError as exc:
        return CorpusResult(entry, "refuted", error=str(exc))
    except (RddlError, OSError) as exc:
        return CorpusResult(entry, "error", error=str(exc))
    return CorpusResult(entry, certificate.status, len(certificate.obligations), certificate)


def check_corpus(directory: Optional[Path] = None, config: Optional[RunConfig] = None,
                 workers: int = 1) -> List[CorpusResult]:
    """Check every manifest script; results come back in manifest order."""
    directory = directory or corpus_dir()
    config = config or RunConfig()
    entries = corpus_manifest(directory)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda e: _check_entry(e, directory, config), entries))
    else:
        results = [_check_entry(e, directory, config) for e in entries]
    for result in results:
        if result.matches:
            log.info("%s: %s", result.entry.script, result.status)
        else:
            log.error("%s: expected %s/%d, got %s/%d %s", result.entry.script, result.entry.status,
                      result.entry.obligations, result.status, result.obligations, result.error or "")
    return results
