"""Tests for script parsing and the pinned corpus."""

import json
from fractions import Fraction
from pathlib import Path

import pytest
from pydantic import ValidationError

from rddl.core.config import RunConfig
from rddl.core.corpus import (
    ScriptParser,
    check_corpus,
    corpus_dir,
    corpus_manifest,
    read_script,
)
from rddl.core.errors import ArityMismatch, RddlSyntaxError, UnknownRule, UnresolvedIdentifier
from rddl.core.syntax.parser import parse_formula

FAST = RunConfig(refuter_points=500)

INVARIANT = """\
% x only grows
sequent {
  assume x >= 0;
  goal [{x' = 1}] x >= 0
}
(DI (ARITH) (DW (ARITH)))
"""


def parse_script(text: str):
    return ScriptParser(text).script()


def write_corpus(root: Path, scripts: dict, manifest: list) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    for name, text in scripts.items():
        (root / name).write_text(text, encoding="utf-8")
    (root / "manifest.json").write_text(json.dumps({"scripts": manifest}), encoding="utf-8")
    return root


class TestScriptParser:
    def test_invariant_script(self):
        script = parse_script(INVARIANT)
        assert script.params == {}
        assert script.proof.rule.rule == "DI"
        assert [c.rule.rule for c in script.proof.children] == ["ARITH", "DW"]
        assert script.proof.sequent is script.sequent

    def test_several_assumptions(self):
        script = parse_script("sequent { assume x > 0; y > 0; goal x + y > 0 } (ARITH)")
        assert len(script.sequent.context) == 2

    def test_bound_parameter_becomes_assumption(self):
        script = parse_script("param c = 2\nsequent { goal c > 1 } (ARITH)")
        assert script.params == {"c": Fraction(2)}
        assert script.sequent.context == (parse_formula("c = 2"),)

    def test_free_parameter(self):
        script = parse_script("param V\nsequent { assume V > 1; goal V > 0 } (ARITH)")
        assert script.params == {"V": None}

    def test_rule_parameters(self):
        script = parse_script(
            "sequent { goal [{x' = 1}; {y' = 1}] x >= 0 } (SCC-BOX at=1 (TRUSTED))")
        assert script.proof.rule.rule == "SCC-BOX"
        assert script.proof.rule.options == {"at": 1}

    def test_formula_parameter(self):
        script = parse_script("sequent { goal [{x' = v}] x >= 0 } (DC cut=v >= 0 (TRUSTED) (TRUSTED))")
        assert script.proof.rule.options["cut"] == parse_formula("v >= 0")

    def test_unknown_rule(self):
        with pytest.raises(UnknownRule):
            parse_script("sequent { goal x > 0 } (MAGIC)")

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatch):
            parse_script("sequent { goal [{x' = 1}] x >= 0 } (DI (ARITH))")

    def test_unresolved_identifier(self):
        with pytest.raises(UnresolvedIdentifier):
            parse_script("sequent { goal [{x' = 1}] x >= 0 } (DC cut=w > 0 (TRUSTED) (TRUSTED))")

    def test_missing_required_parameter(self):
        with pytest.raises(RddlSyntaxError):
            parse_script("sequent { goal [{x' = 1}] x >= 0 } (DC (TRUSTED) (TRUSTED))")

    def test_unknown_parameter(self):
        with pytest.raises(RddlSyntaxError):
            parse_script("sequent { goal [{x' = 1}] x >= 0 } (DW depth=1 (TRUSTED))")

    def test_trailing_text(self):
        with pytest.raises(RddlSyntaxError):
            parse_script(INVARIANT + "(ARITH)")


class TestCorpusFiles:
    def test_read_script_from_disk(self, corpus_path):
        script = read_script(corpus_path / "decay_6.rdl")
        assert script.name == "decay_6"
        assert script.params == {"V": None}
        assert script.path == corpus_path / "decay_6.rdl"

    def test_corpus_dir_from_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RDDL_CORPUS_DIR", str(tmp_path))
        assert corpus_dir() == tmp_path

    def test_default_corpus_dir(self, corpus_path):
        assert corpus_dir() == corpus_path

    def test_manifest_validation(self, tmp_path):
        write_corpus(tmp_path, {}, [{"script": "a.rdl", "status": "maybe"}])
        with pytest.raises(ValidationError):
            corpus_manifest(tmp_path)

    def test_small_corpus(self, tmp_path):
        root = write_corpus(
            tmp_path / "corpus",
            {
                "inv.rdl": INVARIANT,
                "trusted.rdl": "sequent { assume x > 0; goal x^3 + x > 0 } (TRUSTED)",
                "modal.rdl": "sequent { goal [{x' = 1}] x >= 0 } (TRUSTED)",
                "bad.rdl": "sequent { assume x > 0; goal x > 1 } (ARITH)",
            },
            [
                {"script": "inv.rdl", "status": "unconditional"},
                {"script": "trusted.rdl", "status": "conditional", "obligations": 1},
                {"script": "modal.rdl", "status": "refuted"},
                {"script": "bad.rdl", "status": "refuted"},
            ],
        )
        results = check_corpus(root, FAST, workers=2)
        assert [r.entry.script for r in results] == ["inv.rdl", "trusted.rdl", "modal.rdl", "bad.rdl"]
        assert all(r.matches for r in results)
        assert "TRUSTED only closes first-order leaves" in str(results[2].error)
        assert results[3].error is not None

    def test_drift_is_reported(self, tmp_path):
        root = write_corpus(
            tmp_path,
            {"inv.rdl": INVARIANT},
            [{"script": "inv.rdl", "status": "conditional", "obligations": 1}],
        )
        (result,) = check_corpus(root, FAST)
        assert not result.matches
        assert result.status == "unconditional"

    def test_missing_script_is_an_error(self, tmp_path):
        root = write_corpus(tmp_path, {}, [{"script": "gone.rdl", "status": "unconditional"}])
        (result,) = check_corpus(root, FAST)
        assert result.status == "error"
        assert not result.matches


def test_pinned_corpus(corpus_path):
    results = check_corpus(corpus_path, FAST, workers=4)
    drift = [(r.entry.script, r.status, r.obligations, r.error) for r in results if not r.matches]
    assert drift == []
