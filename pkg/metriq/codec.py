"""JSON documents for spaces, terms, sequents, proofs, models and free models.

Distances travel as strings ("3/4", "inf"); proofs as a node list in which
every premise index is smaller than the index of the node using it.
"""

import json
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from metriq.algebra import Model, StreamRule, Table
from metriq.errors import MetriqError, ProofFormatError
from metriq.freemodel import FreeModelApprox
from metriq.kernel import AxData, InstData, ParametricBoundFamily, Proof, SubstData, nodes
from metriq.metric import ExtReal, FinMetric
from metriq.prover import Countermodel
from metriq.syntax import App, Context, Eq, GeometricStream, Ok, Preterm, Sequent, Signature, StreamApp, Var
from metriq.theories import Theory

JsonPoint = str | int


class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _distance(raw: str | int) -> ExtReal:
    try:
        return ExtReal.of(raw if isinstance(raw, str) else int(raw))
    except MetriqError as exc:
        raise ProofFormatError(exc.message) from None


# Spaces


class SpaceDoc(_Doc):
    points: list[JsonPoint]
    dist: list[list[str | int]]

    @classmethod
    def of(cls, space: FinMetric) -> "SpaceDoc":
        return cls(
            points=list(space.points),  # type: ignore[arg-type]
            dist=[[str(d) for d in row] for row in space.dist],
        )

    def to_space(self) -> FinMetric:
        rows = [[_distance(v) for v in row] for row in self.dist]
        try:
            return FinMetric.from_matrix(self.points, rows)  # type: ignore[return-value]
        except MetriqError as exc:
            raise ProofFormatError(f"invalid space: {exc.message}") from None


# Terms and sequents


class TermDoc(_Doc):
    var: str | None = None
    op: str | None = None
    args: list["TermDoc"] | None = None
    prefix: list["TermDoc"] | None = None
    tail: "TermDoc | None" = None

    @classmethod
    def of(cls, t: Preterm) -> "TermDoc":
        if isinstance(t, Var):
            return cls(var=t.name)
        if isinstance(t, App):
            return cls(op=t.symbol, args=[cls.of(a) for a in t.args])
        return cls(op=t.symbol, prefix=[cls.of(a) for a in t.prefix], tail=cls.of(t.tail))

    def to_term(self) -> Preterm:
        if self.var is not None:
            if self.op is not None:
                raise ProofFormatError("a term is either a variable or an application")
            return Var(self.var)
        if self.op is None:
            raise ProofFormatError("a term needs 'var' or 'op'")
        if self.tail is not None:
            return StreamApp(self.op, tuple(a.to_term() for a in self.prefix or ()), self.tail.to_term())
        if self.prefix is not None:
            raise ProofFormatError(f"stream application of {self.op} has no tail")
        return App(self.op, tuple(a.to_term() for a in self.args or ()))


TermDoc.model_rebuild()


class EntryDoc(_Doc):
    x: str
    y: str
    bound: str | int

    def to_entry(self) -> tuple[str, str, ExtReal]:
        return self.x, self.y, _distance(self.bound)


def _entries(entries: tuple[tuple[str, str, ExtReal], ...]) -> list[EntryDoc]:
    return [EntryDoc(x=x, y=y, bound=str(e)) for x, y, e in entries]


class SequentDoc(_Doc):
    context: list[EntryDoc] = Field(default_factory=list)
    ok: TermDoc | None = None
    lhs: TermDoc | None = None
    rhs: TermDoc | None = None
    bound: str | int | None = None

    @classmethod
    def of(cls, seq: Sequent) -> "SequentDoc":
        ctx = _entries(seq.context.entries)
        if isinstance(seq.body, Ok):
            return cls(context=ctx, ok=TermDoc.of(seq.body.term))
        return cls(
            context=ctx,
            lhs=TermDoc.of(seq.body.lhs),
            rhs=TermDoc.of(seq.body.rhs),
            bound=str(seq.body.bound),
        )

    def to_sequent(self) -> Sequent:
        ctx = Context(tuple(e.to_entry() for e in self.context))
        if self.ok is not None:
            return Sequent(ctx, Ok(self.ok.to_term()))
        if self.lhs is None or self.rhs is None or self.bound is None:
            raise ProofFormatError("a sequent needs 'ok' or 'lhs', 'rhs' and 'bound'")
        return Sequent(ctx, Eq(self.lhs.to_term(), self.rhs.to_term(), _distance(self.bound)))


# Proofs


class NodeDoc(_Doc):
    rule: str
    conclusion: SequentDoc
    premises: list[int] = Field(default_factory=list)
    data: dict[str, Any] | None = None


class ProofDoc(_Doc):
    root: int
    nodes: list[NodeDoc]


def _terms(items: list[Any]) -> tuple[Preterm, ...]:
    return tuple(TermDoc.model_validate(i).to_term() for i in items)


def _encode_data(data: Any, index: dict[int, int]) -> dict[str, Any] | None:
    if data is None:
        return None
    if isinstance(data, SubstData):
        return {
            "kind": "subst",
            "delta": [e.model_dump() for e in _entries(data.delta)],
            "sigma": [[x, TermDoc.of(u).model_dump(exclude_none=True)] for x, u in data.sigma],
        }
    if isinstance(data, AxData):
        out: dict[str, Any] = {"kind": "ax", "axiom": data.axiom}
        if data.parameter is not None:
            out["parameter"] = str(data.parameter)
        return out
    if isinstance(data, InstData):
        return {
            "kind": "inst",
            "axiom": data.axiom,
            "prefix": [TermDoc.of(a).model_dump(exclude_none=True) for a in data.prefix],
            "tail": TermDoc.of(data.tail).model_dump(exclude_none=True),
            "index": data.index,
        }
    if isinstance(data, ParametricBoundFamily):
        return {
            "kind": "family",
            "lhs": TermDoc.of(data.lhs).model_dump(exclude_none=True),
            "rhs": TermDoc.of(data.rhs).model_dump(exclude_none=True),
            "scale": str(ExtReal(data.scale)),
            "ratio": str(ExtReal(data.ratio)),
            "k0": data.k0,
            "template": index[id(data.template)],
        }
    raise ProofFormatError(f"cannot encode proof data {data!r}")


def _decode_data(raw: dict[str, Any] | None, built: list[Proof]) -> Any:
    if raw is None:
        return None
    kind = raw.get("kind")
    if kind == "subst":
        delta = tuple(EntryDoc.model_validate(e).to_entry() for e in raw["delta"])
        sigma = tuple((str(x), TermDoc.model_validate(u).to_term()) for x, u in raw["sigma"])
        return SubstData(delta, sigma)
    if kind == "ax":
        parameter = raw.get("parameter")
        return AxData(raw["axiom"], None if parameter is None else _distance(parameter))
    if kind == "inst":
        return InstData(
            raw["axiom"], _terms(raw["prefix"]), TermDoc.model_validate(raw["tail"]).to_term(), int(raw["index"])
        )
    if kind == "family":
        scale, ratio = _distance(raw["scale"]), _distance(raw["ratio"])
        if scale.is_inf or ratio.is_inf:
            raise ProofFormatError("family scale and ratio are finite")
        return ParametricBoundFamily(
            TermDoc.model_validate(raw["lhs"]).to_term(),
            TermDoc.model_validate(raw["rhs"]).to_term(),
            scale.value,  # type: ignore[arg-type]
            ratio.value,  # type: ignore[arg-type]
            int(raw["k0"]),
            _node(built, raw["template"]),
        )
    raise ProofFormatError(f"unknown proof data kind {kind!r}")


def _node(built: list[Proof], i: Any) -> Proof:
    if not isinstance(i, int) or not 0 <= i < len(built):
        raise ProofFormatError(f"node reference {i!r} does not point to an earlier node")
    return built[i]


def proof_to_doc(proof: Proof) -> ProofDoc:
    order = nodes(proof)
    index = {id(n): i for i, n in enumerate(order)}
    docs = []
    for n in order:
        docs.append(
            NodeDoc(
                rule=n.rule,
                conclusion=SequentDoc.of(n.conclusion),
                premises=[index[id(p)] for p in n.premises],
                data=_encode_data(n.data, index),
            )
        )
    return ProofDoc(root=len(order) - 1, nodes=docs)


def _from_tree(raw: dict[str, Any], built: list[Proof]) -> Proof:
    """Nested form {"rule", "conclusion", "premises": [subproofs], "data"}."""
    premises = tuple(_from_tree(p, built) for p in raw.get("premises", []))
    node = NodeDoc.model_validate({**raw, "premises": []})
    data = raw.get("data")
    if isinstance(data, dict) and data.get("kind") == "family" and isinstance(data.get("template"), dict):
        template = _from_tree(data["template"], built)
        built.append(template)
        data = {**data, "template": len(built) - 1}
    proof = Proof(node.rule, node.conclusion.to_sequent(), premises, _decode_data(data, built))
    built.append(proof)
    return proof


def proof_from_json(raw: Any) -> Proof:
    """Decode a proof document; the nested tree form is accepted too."""
    try:
        if isinstance(raw, dict) and "nodes" in raw:
            doc = ProofDoc.model_validate(raw)
            built: list[Proof] = []
            for n in doc.nodes:
                premises = tuple(_node(built, i) for i in n.premises)
                built.append(Proof(n.rule, n.conclusion.to_sequent(), premises, _decode_data(n.data, built)))
            return _node(built, doc.root)
        if isinstance(raw, dict):
            return _from_tree(raw, [])
    except ValidationError as exc:
        raise ProofFormatError(f"malformed proof: {exc.error_count()} problems, first: {exc.errors()[0]['msg']}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ProofFormatError(f"malformed proof data: {exc}") from exc
    raise ProofFormatError("a proof document is a JSON object")


# Models


class StreamOpDoc(_Doc):
    mode: Literal["eventual-value"] = "eventual-value"
    map: list[JsonPoint] | None = None


class ModelDoc(_Doc):
    carrier: SpaceDoc
    ops: dict[str, list[JsonPoint] | StreamOpDoc]

    @classmethod
    def of(cls, model: Model) -> "ModelDoc":
        ops: dict[str, list[JsonPoint] | StreamOpDoc] = {}
        for name, table in model.tables:
            if isinstance(table, StreamRule):
                ops[name] = StreamOpDoc(map=None if table.mapping is None else list(table.mapping))  # type: ignore[arg-type]
            else:
                ops[name] = list(table)  # type: ignore[arg-type]
        return cls(carrier=SpaceDoc.of(model.carrier), ops=ops)

    def to_model(self, signature: Signature) -> Model:
        carrier = self.carrier.to_space()
        tables: list[tuple[str, Table]] = []
        for name, arity in signature.symbols:
            raw = self.ops.get(name)
            if raw is None:
                raise ProofFormatError(f"model has no table for {name!r}")
            if isinstance(arity, GeometricStream):
                if not isinstance(raw, StreamOpDoc):
                    raise ProofFormatError(f"{name} needs an eventual-value rule")
                tables.append((name, StreamRule(None if raw.map is None else tuple(raw.map))))
            else:
                if isinstance(raw, StreamOpDoc):
                    raise ProofFormatError(f"{name} needs a finite table")
                tables.append((name, tuple(raw)))
        extra = set(self.ops) - set(signature.names)
        if extra:
            raise ProofFormatError(f"model has tables for unknown symbols {sorted(extra)}")
        try:
            return Model(signature, carrier, tuple(tables)).validate()
        except MetriqError as exc:
            raise ProofFormatError(f"invalid model: {exc.message}") from None


class CountermodelDoc(_Doc):
    model: ModelDoc
    assignment: dict[str, JsonPoint]
    distance: str

    @classmethod
    def of(cls, found: Countermodel) -> "CountermodelDoc":
        return cls(
            model=ModelDoc.of(found.model),
            assignment=dict(found.assignment),  # type: ignore[arg-type]
            distance=str(found.distance),
        )


# Free models


class FreeModelDoc(_Doc):
    points: list[str]
    dist: list[list[str]]
    reps: dict[str, str]
    unit: list[tuple[JsonPoint, str]]
    exactness: list[tuple[tuple[str, str], Literal["exact", "upper"]]]
    stabilized: bool
    truncated: bool
    depth: int

    @classmethod
    def of(cls, fm: FreeModelApprox) -> "FreeModelDoc":
        return cls(
            points=list(fm.space.points),  # type: ignore[arg-type]
            dist=[[str(d) for d in row] for row in fm.space.dist],
            reps={cid: str(t) for cid, t in fm.reps.items()},
            unit=list(fm.unit.items()),  # type: ignore[arg-type]
            exactness=[
                (pair, "exact" if fm.exact.get(pair) else "upper")
                for pair in _pairs(fm)
            ],
            stabilized=fm.stabilized,
            truncated=fm.truncated,
            depth=fm.depth,
        )


def _pairs(fm: FreeModelApprox) -> list[tuple[str, str]]:
    ids = list(fm.space.points)
    return [(a, b) for i, a in enumerate(ids) for b in ids[i + 1 :]]  # type: ignore[misc]


# Files


def dumps(doc: BaseModel) -> str:
    return doc.model_dump_json(indent=2, exclude_none=True)


def load_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProofFormatError(f"{path}: not JSON ({exc.msg} at line {exc.lineno})") from exc
    except OSError as exc:
        raise ProofFormatError(f"{path}: cannot read ({exc.strerror})") from exc


def load_space(path: Path) -> FinMetric:
    try:
        return SpaceDoc.model_validate(load_json(path)).to_space()
    except ValidationError as exc:
        raise ProofFormatError(f"{path}: not a space document ({exc.errors()[0]['msg']})") from exc


def load_model(path: Path, theory: Theory) -> Model:
    try:
        return ModelDoc.model_validate(load_json(path)).to_model(theory.signature)
    except ValidationError as exc:
        raise ProofFormatError(f"{path}: not a model document ({exc.errors()[0]['msg']})") from exc


def load_proof(path: Path) -> Proof:
    return proof_from_json(load_json(path))

