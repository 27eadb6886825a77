import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from metriq.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, app

runner = CliRunner()

CLOSE_PAIR = "{ a b : d(a,b)=1 }"


def invoke(*args: str):
    return runner.invoke(app, ["--depth", "2", *args])


def invoke_json(*args: str):
    result = runner.invoke(app, ["--json", "--depth", "2", *args])
    return result, json.loads(result.stdout)


def write_model(path: Path, d: int) -> Path:
    doc = {"carrier": {"points": [0, 1], "dist": [[0, d], [d, 0]]}, "ops": {}}
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


class TestCheck:
    def test_builtin(self) -> None:
        result = invoke("check", "t2")
        assert result.exit_code == EXIT_OK
        assert "well-formed: 1 axioms" in result.stdout

    def test_theory_file(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.mt"
        path.write_text("theory Bad {\n  op f : { 0 1 : d(0,1)=1 }\n  axiom glue: |- f(x, y) =[0] x\n}\n")
        result, payload = invoke_json("check", str(path))
        assert result.exit_code == EXIT_FAILED
        assert payload["wellFormed"] is False and payload["axiom"] == "glue"

    def test_unknown_theory(self) -> None:
        result, payload = invoke_json("check", "nosuch")
        assert result.exit_code == EXIT_USAGE
        assert payload["error"] == "UnknownTheoryError"

    def test_parse_errors_are_usage_errors(self, tmp_path: Path) -> None:
        path = tmp_path / "broken.mt"
        path.write_text("theory X {\n  op f : \n}\n")
        assert invoke("check", str(path)).exit_code == EXIT_USAGE


class TestProofs:
    def test_prove_then_check(self, tmp_path: Path) -> None:
        out = tmp_path / "proof.json"
        result = invoke("prove", "t2", "--goal", "{ x =[1] y } |- x =[0] y", "--out", str(out))
        assert result.exit_code == EXIT_OK
        assert "derivable" in result.stdout
        checked, payload = invoke_json("check-proof", "t2", str(out))
        assert checked.exit_code == EXIT_OK
        assert payload["valid"] is True

    def test_extra_context(self) -> None:
        result, payload = invoke_json("prove", "t2", "--goal", "x =[0] y", "--ctx", "x =[1] y")
        assert result.exit_code == EXIT_OK
        assert payload["derivable"] is True and payload["proof"]["nodes"]

    def test_reflexivity_without_a_theory(self, tmp_path: Path) -> None:
        path = tmp_path / "empty.mt"
        path.write_text("space A = { a }\n")
        result = invoke("prove", str(path), "--goal", "{ x =[1] y } |- x =[0] x")
        assert result.exit_code == EXIT_OK

    def test_not_derivable(self) -> None:
        result, payload = invoke_json("prove", "t2", "--goal", "x =[1] y")
        assert result.exit_code == EXIT_FAILED
        assert payload == {"derivable": False, "bound": "inf", "truncated": False}

    def test_unrelated_variables_at_infinity(self) -> None:
        result, payload = invoke_json("prove", "t2", "--goal", "x =[inf] y")
        assert result.exit_code == EXIT_FAILED
        assert payload == {"derivable": False, "bound": "inf", "truncated": False}

    def test_tampered_proof(self, tmp_path: Path) -> None:
        out = tmp_path / "proof.json"
        invoke("prove", "t2", "--goal", "{ x =[1] y } |- x =[0] y", "--out", str(out))
        doc = json.loads(out.read_text())
        doc["nodes"][doc["root"]]["conclusion"]["context"] = []
        out.write_text(json.dumps(doc))
        result, payload = invoke_json("check-proof", "t2", str(out))
        assert result.exit_code == EXIT_FAILED
        assert payload["valid"] is False

    def test_garbage_proof(self, tmp_path: Path) -> None:
        out = tmp_path / "proof.json"
        out.write_text("not json")
        result, payload = invoke_json("check-proof", "t2", str(out))
        assert result.exit_code == EXIT_USAGE
        assert payload["error"] == "ProofFormatError"


class TestDistances:
    def test_collapsed_generators(self) -> None:
        result, payload = invoke_json("dist", "t2", "--gens", CLOSE_PAIR, "--t1", "'a", "--t2", "'b")
        assert result.exit_code == EXIT_OK
        assert payload["distance"] == "0" and payload["exact"] is True

    def test_ill_formed_term(self) -> None:
        far = "{ a b : d(a,b)=2 }"
        result, payload = invoke_json("dist", "t1", "--gens", far, "--t1", "f('a, 'b)", "--t2", "'a")
        assert result.exit_code == EXIT_FAILED
        assert payload["error"] == "NotWellFormedError"

    def test_free_model(self, tmp_path: Path) -> None:
        out = tmp_path / "free.json"
        result = invoke("free", "t2", "--gens", CLOSE_PAIR, "--no-certify", "--out", str(out))
        assert result.exit_code == EXIT_OK
        assert "1 classes" in result.stdout
        assert "<- a b" in result.stdout
        assert len(json.loads(out.read_text())["points"]) == 1


class TestModels:
    def test_satisfied(self, tmp_path: Path) -> None:
        result, payload = invoke_json("satisfy", "t2", "--model", str(write_model(tmp_path / "m.json", 2)))
        assert result.exit_code == EXIT_OK
        assert payload == {"axioms": {"collapse": True}, "model": True}

    def test_violated(self, tmp_path: Path) -> None:
        result = invoke("satisfy", "t2", "--model", str(write_model(tmp_path / "m.json", 1)))
        assert result.exit_code == EXIT_FAILED
        assert "collapse: violated" in result.stdout

    def test_countermodel(self) -> None:
        result, payload = invoke_json("countermodel", "t2", "--goal", "x =[0] y", "--size", "2", "--grid", "0,1,inf")
        assert result.exit_code == EXIT_OK
        assert payload["distance"] != "0"
        assert set(payload["assignment"]) == {"x", "y"}

    def test_no_countermodel(self) -> None:
        result, payload = invoke_json(
            "countermodel", "t2", "--goal", "x =[0] y", "--ctx", "x =[1] y", "--size", "2", "--grid", "0,1,inf"
        )
        assert result.exit_code == EXIT_FAILED
        assert payload["found"] is False and payload["exhausted"] is True

    def test_ok_goals_are_rejected(self) -> None:
        result, payload = invoke_json("countermodel", "t1", "--goal", "f(x, x) ok")
        assert result.exit_code == EXIT_USAGE
        assert payload["error"] == "UsageError"


class TestDemos:
    def test_t2(self) -> None:
        result = runner.invoke(app, ["--json", "demo", "t2"])
        payload = json.loads(result.stdout)
        assert result.exit_code == EXIT_OK
        assert payload["passed"] is True and len(payload["rows"]) == 3

    @pytest.mark.parametrize("name", ["t3", ""])
    def test_unknown_demo(self, name: str) -> None:
        result = runner.invoke(app, ["demo", name])
        assert result.exit_code == EXIT_USAGE


class TestConfiguration:
    def test_bad_environment_depth(self) -> None:
        result = runner.invoke(app, ["--json", "check", "t2"], env={"METRIQ_DEPTH": "abc"})
        payload = json.loads(result.stdout)
        assert result.exit_code == EXIT_USAGE
        assert payload["error"] == "ConfigError" and "METRIQ_DEPTH" in payload["message"]

    def test_bad_grid(self) -> None:
        result, payload = invoke_json("countermodel", "t2", "--goal", "x =[0] y", "--grid", "1/0")
        assert result.exit_code == EXIT_USAGE
        assert payload["error"] == "ConfigError"

    def test_missing_proof_file(self, tmp_path: Path) -> None:
        result, payload = invoke_json("check-proof", "t2", str(tmp_path / "absent.json"))
        assert result.exit_code == EXIT_USAGE
        assert payload["error"] == "ProofFormatError"

    @pytest.mark.parametrize(
        "args",
        [
            ["check", "t2"],
            ["prove", "t2", "--goal", "{ x =[1] y } |- x =[0] y"],
            ["free", "t2", "--gens", CLOSE_PAIR, "--no-certify"],
        ],
    )
    def test_command_depth(self, args: list[str]) -> None:
        result = runner.invoke(app, [*args, "--depth", "2"])
        assert result.exit_code == EXIT_OK

    def test_command_depth_wins(self) -> None:
        result, payload = invoke_json("free", "t2", "--gens", CLOSE_PAIR, "--no-certify", "--depth", "1")
        assert result.exit_code == EXIT_OK
        assert payload["depth"] == 1
