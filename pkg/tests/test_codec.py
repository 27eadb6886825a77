import json
from pathlib import Path

import pytest

from metriq.algebra import Model, StreamRule
from metriq.codec import (
    CountermodelDoc,
    ModelDoc,
    SequentDoc,
    SpaceDoc,
    TermDoc,
    dumps,
    load_json,
    load_model,
    load_proof,
    load_space,
    proof_from_json,
    proof_to_doc,
)
from metriq.config import ProverConfig
from metriq.errors import ProofFormatError
from metriq.kernel import Proof, check_proof, proof_size
from metriq.metric import ZERO, FinMetric
from metriq.prover import Countermodel, countermodel_search, saturate
from metriq.syntax import App, Context, Eq, Ok, Sequent, StreamApp, Var
from metriq.theories import builtin

x, y = Var("x"), Var("y")


def roundtrip(proof: Proof) -> Proof:
    return proof_from_json(json.loads(dumps(proof_to_doc(proof))))


def sequent_json(ctx: list, **body) -> dict:
    return {"context": ctx, **body}


class TestTerms:
    def test_stream_term(self) -> None:
        t = StreamApp("lim", (App("'a"),), Var("z"))
        doc = TermDoc.of(t)
        assert doc.tail is not None and doc.tail.var == "z"
        assert TermDoc.model_validate(json.loads(dumps(doc))).to_term() == t

    @pytest.mark.parametrize(
        "raw",
        [{"var": "x", "op": "f"}, {}, {"op": "lim", "prefix": []}],
    )
    def test_malformed_terms(self, raw: dict) -> None:
        with pytest.raises(ProofFormatError):
            TermDoc.model_validate(raw).to_term()

    def test_sequent(self) -> None:
        seq = Sequent(Context.of(("x", "y", "1/2")), Eq(App("g", (x,)), y, ZERO))
        doc = SequentDoc.of(seq)
        assert doc.context[0].bound == "1/2"
        assert doc.to_sequent() == seq
        with pytest.raises(ProofFormatError):
            SequentDoc(lhs=TermDoc(var="x")).to_sequent()


class TestProofs:
    def test_substitution_proof(self, cfg: ProverConfig) -> None:
        t2 = builtin("t2")
        proof = saturate(t2, Context.of(("x", "y", 1)), cfg=cfg).witness(x, y)
        again = roundtrip(proof)  # type: ignore[arg-type]
        assert again.conclusion == proof.conclusion  # type: ignore[union-attr]
        assert proof_size(again) == proof_size(proof)  # type: ignore[arg-type]
        assert check_proof(t2, again)

    def test_continuity_proof(self, cfg: ProverConfig) -> None:
        comp = builtin("comp")
        stream = StreamApp("lim", (Var("x1"),), Var("x_"))
        state = saturate(comp, Context.of(("x1", "x_", "1/2")), cfg=cfg, goals=(stream,))
        proof = state.witness(stream, Var("x_"))
        again = roundtrip(proof)  # type: ignore[arg-type]
        assert check_proof(comp, again)
        assert again.conclusion.body == Eq(stream, Var("x_"), ZERO)

    def test_nodes_come_before_their_users(self, cfg: ProverConfig) -> None:
        proof = saturate(builtin("t2"), Context.of(("x", "y", 1)), cfg=cfg).witness(x, y)
        doc = proof_to_doc(proof)  # type: ignore[arg-type]
        assert doc.root == len(doc.nodes) - 1
        for i, node in enumerate(doc.nodes):
            assert all(p < i for p in node.premises)

    def test_nested_tree_form(self) -> None:
        ctx = [{"x": "x", "y": "y", "bound": "1"}]
        raw = {
            "rule": "Refl",
            "conclusion": sequent_json(ctx, lhs={"var": "x"}, rhs={"var": "x"}, bound="0"),
            "premises": [{"rule": "Var", "conclusion": sequent_json(ctx, ok={"var": "x"})}],
        }
        proof = proof_from_json(raw)
        assert proof.rule == "Refl" and proof.premises[0].conclusion.body == Ok(x)
        assert check_proof(builtin("t2"), proof)

    @pytest.mark.parametrize(
        "raw",
        [
            [],
            {"root": 3, "nodes": []},
            {"root": 0, "nodes": [{"rule": "Var", "conclusion": {"ok": {"var": "x"}}, "premises": [0]}]},
            {"root": 0, "nodes": [{"rule": "Var", "conclusion": {"ok": {"var": "x"}}, "extra": 1}]},
            {"root": 0, "nodes": [{"rule": "Ax", "conclusion": {"ok": {"var": "x"}}, "data": {"kind": "magic"}}]},
            {"root": 0, "nodes": [{"rule": "Ax", "conclusion": {"ok": {"var": "x"}}, "data": {"kind": "ax"}}]},
            {
                "root": 0,
                "nodes": [
                    {
                        "rule": "Assum",
                        "conclusion": {"lhs": {"var": "x"}, "rhs": {"var": "y"}, "bound": "-1"},
                    }
                ],
            },
        ],
    )
    def test_malformed_documents(self, raw) -> None:
        with pytest.raises(ProofFormatError):
            proof_from_json(raw)


class TestModels:
    def test_finite_tables(self) -> None:
        raw = {"carrier": {"points": [0, 1], "dist": [[0, 1], [1, 0]]}, "ops": {"f": [0, 0, 1, 1]}}
        model = ModelDoc.model_validate(raw).to_model(builtin("t1").signature)
        assert model.apply("f", (0, 1)) == 0

    def test_stream_rule(self) -> None:
        raw = {
            "carrier": {"points": ["p", "q"], "dist": [["0", "1/2"], ["1/2", "0"]]},
            "ops": {"lim": {"mode": "eventual-value"}},
        }
        model = ModelDoc.model_validate(raw).to_model(builtin("comp").signature)
        assert model.table("lim") == StreamRule()

    def test_model_document_roundtrip(self, pair: FinMetric) -> None:
        model = Model(builtin("comp").signature, pair, (("lim", StreamRule(("b", "a"))),))
        again = ModelDoc.model_validate_json(dumps(ModelDoc.of(model))).to_model(model.signature)
        assert again == model

    @pytest.mark.parametrize(
        "ops,match",
        [
            ({}, "no table"),
            ({"f": [0, 0, 1, 1], "g": [0]}, "unknown symbols"),
            ({"f": {"mode": "eventual-value"}}, "finite table"),
            ({"f": [0, 1]}, "invalid model"),
        ],
    )
    def test_malformed_models(self, ops: dict, match: str) -> None:
        raw = {"carrier": {"points": [0, 1], "dist": [[0, 1], [1, 0]]}, "ops": ops}
        with pytest.raises(ProofFormatError, match=match):
            ModelDoc.model_validate(raw).to_model(builtin("t1").signature)

    def test_countermodel_document(self, cfg: ProverConfig) -> None:
        found = countermodel_search(builtin("t2"), Context(), x, y, ZERO, cfg)
        assert isinstance(found, Countermodel)
        doc = CountermodelDoc.of(found)
        assert doc.distance == "inf"
        assert set(doc.assignment) == {"x", "y"}


class TestFiles:
    def test_space_file(self, tmp_path: Path, triangle: FinMetric) -> None:
        path = tmp_path / "space.json"
        path.write_text(dumps(SpaceDoc.of(triangle)), encoding="utf-8")
        assert load_space(path) == triangle

    def test_invalid_space(self, tmp_path: Path) -> None:
        path = tmp_path / "space.json"
        path.write_text(json.dumps({"points": ["a", "b"], "dist": [[0, 1], [2, 0]]}), encoding="utf-8")
        with pytest.raises(ProofFormatError, match="invalid space"):
            load_space(path)

    def test_not_json(self, tmp_path: Path) -> None:
        path = tmp_path / "proof.json"
        path.write_text("{ nope", encoding="utf-8")
        with pytest.raises(ProofFormatError, match="not JSON"):
            load_proof(path)
        with pytest.raises(ProofFormatError):
            load_json(path)

    def test_model_file(self, tmp_path: Path) -> None:
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"carrier": {"points": [0]}, "ops": {}}), encoding="utf-8")
        with pytest.raises(ProofFormatError, match="not a model document"):
            load_model(path, builtin("t2"))

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(ProofFormatError, match="cannot read"):
            load_proof(tmp_path / "absent.json")
