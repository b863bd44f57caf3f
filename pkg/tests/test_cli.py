"""End-to-end runs of the ``rddl`` command through ``main``."""

import csv
import json
import math

import pytest

from rddl.cli.commands import EXIT_CONDITIONAL, EXIT_COUNTEREXAMPLE, EXIT_INPUT, EXIT_OK, EXIT_REFUTED
from rddl.cli.commands.simulate import parse_init
from rddl.cli.main import main
from rddl.core.algebra import dynamics_equal, sync_vector_field
from rddl.core.errors import RddlSyntaxError
from rddl.core.semantics.models import drag
from rddl.core.syntax.parser import parse_program

FAST = ["--step", "1e-3", "--horizon", "2"]


@pytest.fixture(autouse=True)
def _small_refuter(_clean_env, monkeypatch):
    monkeypatch.setenv("RDDL_REFUTER_POINTS", "500")


@pytest.fixture
def trusted_script(tmp_path):
    script = tmp_path / "trusted.rdl"
    script.write_text(
        "sequent { assume x > 0; goal x^3 + x > 0 }\n(CUT cut=x^3 > 0 (TRUSTED) (TRUSTED))\n", encoding="utf-8"
    )
    return script


class TestCheck:
    def test_unconditional(self, corpus_path, capsys):
        assert main(["check", str(corpus_path / "phi_C.rdl")]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("status: unconditional")
        assert "  !(v# = 0)" in out.splitlines()

    def test_refuted(self, corpus_path, capsys):
        assert main(["check", str(corpus_path / "phi_C_broken.rdl")]) == EXIT_REFUTED
        assert "proof check failed" in capsys.readouterr().err

    def test_conditional_strict(self, trusted_script, capsys):
        assert main(["check", "--strict", str(trusted_script)]) == EXIT_CONDITIONAL
        captured = capsys.readouterr()
        assert "status: conditional" in captured.out
        assert "trusted T1:" in captured.err
        assert "trusted T2:" in captured.err

    def test_conditional_lists_obligations_only_when_strict(self, trusted_script, capsys):
        assert main(["check", str(trusted_script)]) == EXIT_CONDITIONAL
        assert "trusted T1:" not in capsys.readouterr().err

    def test_strict_from_environment(self, trusted_script, capsys, monkeypatch):
        monkeypatch.setenv("RDDL_STRICT", "1")
        assert main(["check", str(trusted_script)]) == EXIT_CONDITIONAL
        assert "trusted T1:" in capsys.readouterr().err

    def test_trusted_modal_leaf_refuted(self, tmp_path, capsys):
        script = tmp_path / "modal.rdl"
        script.write_text("sequent { goal [{x' = 1}] x >= 0 } (TRUSTED)", encoding="utf-8")
        assert main(["check", str(script)]) == EXIT_REFUTED
        assert "first-order" in capsys.readouterr().err

    def test_missing_script(self, tmp_path):
        assert main(["check", str(tmp_path / "missing.rdl")]) == EXIT_INPUT

    def test_bad_syntax(self, tmp_path):
        script = tmp_path / "bad.rdl"
        script.write_text("sequent { goal x > } (ARITH)", encoding="utf-8")
        assert main(["check", str(script)]) == EXIT_INPUT

    def test_invalid_flag_value(self, corpus_path):
        assert main(["check", str(corpus_path / "phi_C.rdl"), "--step", "-1"]) == EXIT_INPUT

    def test_invalid_environment(self, corpus_path, monkeypatch):
        monkeypatch.setenv("RDDL_TOLERANCE", "tight")
        assert main(["check", str(corpus_path / "phi_C.rdl")]) == EXIT_INPUT


class TestFalsify:
    def test_counterexample(self, models_path, capsys):
        code = main(["falsify", str(models_path / "example_rdd_flipped.rdm"), "--samples", "5", *FAST])
        assert code == EXIT_COUNTEREXAMPLE
        out = capsys.readouterr().out
        assert "result: counterexample" in out
        assert "violated: v# <= v" in out

    def test_no_counterexample_with_relation(self, models_path, capsys, monkeypatch):
        monkeypatch.setenv("RDDL_GRID", "4")
        code = main(["falsify", str(models_path / "example_rdd.rdm"), "--samples", "5", *FAST])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "result: no counterexample" in out
        assert "relation: " in out
        assert "support_violations: 0" in out
        assert "exit_pairs: 0" not in out
        assert "essential_inclusion_violations: 0" in out

    def test_empty_assumptions(self, models_path):
        assert main(["falsify", str(models_path / "gamma_empty.rdm"), "--samples", "1"]) == EXIT_INPUT

    def test_single_dynamics_rejected(self, models_path):
        assert main(["falsify", str(models_path / "example_left.rdm")]) == EXIT_INPUT


class TestLie:
    def test_drag_speed(self, models_path, capsys):
        assert main(["lie", str(models_path / "drag.rdm"), "--term", "v"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "-v"

    def test_right_side(self, models_path, capsys):
        assert main(["lie", str(models_path / "drag.rdm"), "--term", "x#", "--side", "right"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "v#"

    def test_constant_vanishes(self, models_path, capsys):
        assert main(["lie", str(models_path / "drag.rdm"), "--term", "1", "--order", "5"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "0"

    def test_negative_order(self, models_path):
        assert main(["lie", str(models_path / "drag.rdm"), "--term", "v", "--order", "-1"]) == EXIT_INPUT


class TestSync:
    def test_drag(self, models_path, capsys):
        assert main(["sync", str(models_path / "drag.rdm")]) == EXIT_OK
        printed = parse_program(capsys.readouterr().out.strip()).dynamics
        assert dynamics_equal(printed, sync_vector_field(drag()))

    def test_needs_rdd(self, models_path):
        assert main(["sync", str(models_path / "example_left.rdm")]) == EXIT_INPUT


class TestSimulate:
    def test_header_only(self, models_path, capsys):
        assert main(["simulate", str(models_path / "example_left.rdm"), "--horizon", "0"]) == EXIT_OK
        assert capsys.readouterr().out == "t,x,v,a\n"

    def test_exit_level_to_file(self, models_path, tmp_path):
        target = tmp_path / "run.csv"
        code = main(
            ["simulate", str(models_path / "example_left.rdm"), "--target", "x", "--exit-level", "1",
             "--csv", str(target), *FAST]
        )
        assert code == EXIT_OK
        rows = list(csv.DictReader(target.open(encoding="utf-8")))
        assert rows[0]["exit"] == "0"
        assert rows[-1]["exit"] == "1"
        assert float(rows[-1]["t"]) == pytest.approx(math.sqrt(2), abs=1e-6)
        assert float(rows[-1]["x"]) == pytest.approx(1.0, abs=1e-9)
        assert float(rows[-1]["v"]) == pytest.approx(math.sqrt(2), abs=1e-3)

    def test_init_overrides_model(self, models_path, capsys):
        code = main(["simulate", str(models_path / "example_left.rdm"), "--init", "v=1",
                     "--step", "0.5", "--horizon", "1"])
        assert code == EXIT_OK
        last = capsys.readouterr().out.splitlines()[-1].split(",")
        assert [float(v) for v in last] == pytest.approx([1.0, 1.5, 2.0, 1.0])

    def test_right_side(self, models_path, capsys):
        code = main(["simulate", str(models_path / "example_rdd.rdm"), "--side", "right", "--horizon", "0"])
        assert code == EXIT_OK
        assert capsys.readouterr().out == "t,x#,v#,a#\n"

    def test_missing_initial_value(self, models_path):
        assert main(["simulate", str(models_path / "gamma_empty.rdm"), "--horizon", "0"]) == EXIT_INPUT

    def test_synchronized(self, models_path, capsys):
        code = main(["simulate", str(models_path / "drag.rdm"), "--sync", "--init", "v=2,v#=2",
                     "--step", "1e-2", "--horizon", "0.5"])
        assert code == EXIT_OK
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert list(rows[0]) == ["t", "x", "v", "x#", "v#", "gap"]
        assert max(float(r["gap"]) for r in rows) < 1e-9


class TestCorpus:
    def write(self, root, status):
        root.mkdir()
        (root / "inv.rdl").write_text(
            "sequent { assume x >= 0; goal [{x' = 1}] x >= 0 }\n(DI (ARITH) (DW (ARITH)))\n", encoding="utf-8"
        )
        manifest = {"scripts": [{"script": "inv.rdl", "status": status}]}
        (root / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
        return root

    def test_all_match(self, tmp_path, capsys):
        root = self.write(tmp_path / "ok", "unconditional")
        assert main(["corpus", "--dir", str(root)]) == EXIT_OK
        assert "inv.rdl: unconditional obligations=0" in capsys.readouterr().out

    def test_drift(self, tmp_path, capsys):
        root = self.write(tmp_path / "drift", "refuted")
        assert main(["corpus", "--dir", str(root), "--workers", "2"]) == EXIT_REFUTED
        assert "DRIFT" in capsys.readouterr().out


def test_parse_init():
    assert parse_init(" x=0, v#=1.5 ,") == {"x": 0.0, "v#": 1.5}
    with pytest.raises(RddlSyntaxError):
        parse_init("x")
