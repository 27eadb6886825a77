"""Proof objects and the trusted checker.

The checker never searches: it walks a proof DAG once, checks every node
against its rule's side conditions and reports the first bad node.
"""

from collections.abc import Iterator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Union

from metriq.errors import MetriqError
from metriq.metric import ZERO, ExtReal
from metriq.syntax import (
    App,
    Body,
    Context,
    Eq,
    Ok,
    Preterm,
    Sequent,
    StreamApp,
    Var,
    aligned_positions,
    app_constraints_of,
    check_term,
    children,
    reduced_app_constraints,
    substitute,
    variables,
)
from metriq.theories import ArityIndexed, Concrete, Scaled, Theory

RULES = (
    "Var",
    "Assum",
    "Refl",
    "Symm",
    "Triang",
    "Max",
    "Cont",
    "Nexp",
    "Subst",
    "App",
    "Ax",
    "Inst",
)


@dataclass(frozen=True, eq=False)
class Proof:
    rule: str
    conclusion: Sequent
    premises: tuple["Proof", ...] = ()
    data: Any = None

    def __str__(self) -> str:
        return f"{self.rule}: {self.conclusion}"


@dataclass(frozen=True)
class SubstData:
    """Inner context {x_i =_delta x_j} and the substitution x -> u."""

    delta: tuple[tuple[str, str, ExtReal], ...]
    sigma: tuple[tuple[str, Preterm], ...]

    @property
    def mapping(self) -> dict[str, Preterm]:
        return dict(self.sigma)


@dataclass(frozen=True)
class AxData:
    axiom: str
    parameter: ExtReal | None = None


@dataclass(frozen=True)
class InstData:
    axiom: str
    prefix: tuple[Preterm, ...]
    tail: Preterm
    index: int


@dataclass(frozen=True)
class ParametricBoundFamily:
    """Gamma |- lhs =_{scale * ratio^n} rhs for every n >= k0.

    `template` is the member at n = k0, an `Inst` node whose stream index
    lies in the tail region, so every other member differs only in the index
    and the bound.
    """

    lhs: Preterm
    rhs: Preterm
    scale: Fraction
    ratio: Fraction
    k0: int
    template: Proof = field(compare=False)

    def bound(self, n: int) -> ExtReal:
        return ExtReal(self.scale * self.ratio**n)

    @property
    def infimum(self) -> ExtReal:
        return ZERO if self.ratio < 1 else ExtReal(self.scale)

    def member(self, n: int) -> Proof:
        t = self.template
        data: InstData = t.data
        return Proof(
            "Inst",
            Sequent(t.conclusion.context, Eq(self.lhs, self.rhs, self.bound(n))),
            t.premises,
            InstData(data.axiom, data.prefix, data.tail, n),
        )


CONT_SAMPLES = 4


@dataclass(frozen=True)
class Valid:
    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Invalid:
    node: Proof
    reason: str

    def __bool__(self) -> bool:
        return False


Verdict = Union[Valid, Invalid]


def proof_conclusion(p: Proof) -> Sequent:
    return p.conclusion


def _eq(p: Proof) -> Eq:
    body = p.conclusion.body
    if not isinstance(body, Eq):
        raise _Reject(f"{p.rule} premise must be an equation")
    return body


class _Reject(Exception):
    pass


def _need(cond: bool, reason: str) -> None:
    if not cond:
        raise _Reject(reason)


Judgment = Union[Ok, tuple[Preterm, Preterm, ExtReal]]


def _matches(body: Body, want: Judgment) -> bool:
    if isinstance(want, Ok):
        return body == want
    s, t, e = want
    return isinstance(body, Eq) and body.bound == e and (
        (body.lhs, body.rhs) == (s, t) or (body.lhs, body.rhs) == (t, s)
    )


def _premises_are(node: Proof, required: list[Judgment], start: int = 0) -> None:
    """Premises from `start` on are exactly the required judgments in the node's context."""
    gamma = node.conclusion.context
    given = node.premises[start:]
    for p in given:
        _need(p.conclusion.context == gamma, f"premise {p.conclusion} changes the context")
        _need(
            any(_matches(p.conclusion.body, w) for w in required),
            f"unexpected premise {p.conclusion.body}",
        )
    for w in required:
        if not any(_matches(p.conclusion.body, w) for p in given):
            shown = w if isinstance(w, Ok) else f"{w[0]} =[{w[2]}] {w[1]}"
            raise _Reject(f"missing premise {shown}")


def _same_context(node: Proof) -> None:
    for p in node.premises:
        _need(
            p.conclusion.context == node.conclusion.context,
            f"premise {p.conclusion} changes the context",
        )


def _check_var(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    _need(isinstance(body, Ok) and isinstance(body.term, Var), "Var concludes x ok")
    _need(not node.premises, "Var has no premises")


def _check_assum(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    _need(isinstance(body, Eq), "Assum concludes an equation")
    assert isinstance(body, Eq)
    _need(
        isinstance(body.lhs, Var) and isinstance(body.rhs, Var),
        "Assum relates two variables",
    )
    x, y = body.lhs.name, body.rhs.name  # type: ignore[union-attr]
    _need(
        any(
            e == body.bound and (a, b) in ((x, y), (y, x))
            for a, b, e in node.conclusion.context
        ),
        f"{body} is not in the context",
    )
    _need(not node.premises, "Assum has no premises")


def _check_refl(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    _need(isinstance(body, Eq) and body.bound == ZERO, "Refl concludes t =[0] t")
    assert isinstance(body, Eq)
    _need(body.lhs == body.rhs, "Refl relates a term to itself")
    _need(len(node.premises) == 1, "Refl has one premise")
    _same_context(node)
    _need(node.premises[0].conclusion.body == Ok(body.lhs), f"Refl needs {body.lhs} ok")


def _check_symm(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    _need(isinstance(body, Eq) and len(node.premises) == 1, "Symm has one premise")
    assert isinstance(body, Eq)
    _same_context(node)
    prem = _eq(node.premises[0])
    _need(prem == Eq(body.rhs, body.lhs, body.bound), "Symm swaps the two sides")


def _check_triang(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    _need(isinstance(body, Eq) and len(node.premises) == 2, "Triang has two premises")
    assert isinstance(body, Eq)
    _same_context(node)
    first, second = _eq(node.premises[0]), _eq(node.premises[1])
    _need(first.lhs == body.lhs and second.rhs == body.rhs, "Triang endpoints differ")
    _need(first.rhs == second.lhs, "Triang middle terms differ")
    _need(first.bound + second.bound == body.bound, "Triang bound is not the sum")


def _check_max(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    _need(isinstance(body, Eq) and len(node.premises) == 1, "Max has one premise")
    assert isinstance(body, Eq)
    _same_context(node)
    prem = _eq(node.premises[0])
    _need((prem.lhs, prem.rhs) == (body.lhs, body.rhs), "Max keeps both sides")
    _need(prem.bound < body.bound, "Max needs a strictly smaller premise bound")


def _check_cont(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    fam = node.data
    _need(isinstance(body, Eq), "Cont concludes an equation")
    _need(isinstance(fam, ParametricBoundFamily), "Cont carries a bound family")
    _need(not node.premises, "Cont premises live in its bound family")
    assert isinstance(body, Eq) and isinstance(fam, ParametricBoundFamily)
    _need((fam.lhs, fam.rhs) == (body.lhs, body.rhs), "Cont family relates other terms")
    _need(0 < fam.ratio < 1, "Cont needs a geometric family with ratio below 1")
    _need(body.bound == fam.infimum, f"Cont concludes the infimum {fam.infimum}")
    template = fam.template
    _need(template.rule == "Inst" and isinstance(template.data, InstData), "Cont template is an Inst node")
    data: InstData = template.data
    _need(data.index == fam.k0, "Cont template sits at index k0")
    _need(fam.k0 > len(data.prefix), "Cont family must start in the tail region")
    _need(
        template.conclusion == Sequent(node.conclusion.context, Eq(fam.lhs, fam.rhs, fam.bound(fam.k0))),
        "Cont template does not conclude the family member at k0",
    )
    for n in range(fam.k0, fam.k0 + CONT_SAMPLES):
        member = fam.member(n)
        try:
            _check_inst(t, member)
        except _Reject as exc:
            raise _Reject(f"family member at n={n}: {exc}") from None


def _check_nexp(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    _need(isinstance(body, Eq), "Nexp concludes an equation")
    assert isinstance(body, Eq)
    s, u = body.lhs, body.rhs
    _need(
        (isinstance(s, App) and isinstance(u, App) and bool(s.args))
        or (isinstance(s, StreamApp) and isinstance(u, StreamApp)),
        "Nexp relates two applications",
    )
    _need(s.symbol == u.symbol, "Nexp relates applications of one symbol")  # type: ignore[union-attr]
    required: list[Judgment] = [
        *app_constraints_of(t.signature, s),
        *app_constraints_of(t.signature, u),
        *((a, b, body.bound) for a, b in aligned_positions(s, u)),
    ]
    _premises_are(node, required)


def _check_app(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    _need(isinstance(body, Ok), "App concludes t ok")
    assert isinstance(body, Ok)
    term = body.term
    _need(isinstance(term, App | StreamApp), "App concludes an application ok")
    required: list[Judgment] = [Ok(a) for a in children(term)]
    required.extend(app_constraints_of(t.signature, term))
    _premises_are(node, required)


def _check_subst(t: Theory, node: Proof) -> None:
    body = node.conclusion.body
    data = node.data
    _need(isinstance(body, Eq), "Subst concludes an equation")
    _need(isinstance(data, SubstData), "Subst carries its substitution")
    _need(len(node.premises) >= 1, "Subst needs the inner proof")
    assert isinstance(body, Eq) and isinstance(data, SubstData)
    sigma = data.mapping
    _need(len(sigma) == len(data.sigma), "Subst binds each variable once")
    inner = node.premises[0].conclusion
    _need(isinstance(inner.body, Eq), "Subst inner proof concludes an equation")
    assert isinstance(inner.body, Eq)
    _need(inner.context == Context(data.delta), "Subst inner context is not {x_i =delta x_j}")
    scoped = variables(inner.body.lhs) | variables(inner.body.rhs)
    scoped |= {v for x, y, _ in data.delta for v in (x, y)}
    _need(scoped <= sigma.keys(), "Subst leaves inner variables unbound")
    expected = Eq(
        substitute(inner.body.lhs, sigma), substitute(inner.body.rhs, sigma), inner.body.bound
    )
    _need(body == expected, f"Subst should conclude {expected}")
    required: list[Judgment] = [
        (sigma[x], sigma[y], e) for x, y, e in data.delta if e.is_finite and x != y
    ]
    required.extend((u, u, ZERO) for u in sigma.values())
    _premises_are(node, required, start=1)


def _check_ax(t: Theory, node: Proof) -> None:
    data = node.data
    _need(isinstance(data, AxData) and t.has_axiom(data.axiom), "Ax names an axiom of the theory")
    _need(not node.premises, "Ax has no premises")
    schema = t.axiom(data.axiom)
    if isinstance(schema, Concrete):
        _need(node.conclusion == schema.sequent, f"Ax does not conclude axiom {schema.name}")
    elif isinstance(schema, Scaled):
        e = data.parameter
        _need(e is not None and e.is_finite, "scaled axiom needs a finite parameter")
        _need(node.conclusion == schema.instance(e), f"Ax does not conclude {schema.name} at {e}")  # type: ignore[arg-type]
    else:
        raise _Reject(f"{schema.name} is a stream schema, instantiate it with Inst")


def _check_inst(t: Theory, node: Proof) -> None:
    data = node.data
    _need(isinstance(data, InstData) and t.has_axiom(data.axiom), "Inst names an axiom")
    schema = t.axiom(data.axiom)
    _need(isinstance(schema, ArityIndexed), f"{data.axiom} is not a stream schema")
    assert isinstance(schema, ArityIndexed)
    stream = StreamApp("_", data.prefix, data.tail)
    _need(stream.prefix == data.prefix, "Inst binding is not in normal form")
    lhs, rhs, bound = schema.instance(data.prefix, data.tail, data.index)
    body = node.conclusion.body
    _need(body == Eq(lhs, rhs, bound), f"Inst should conclude {lhs} =[{bound}] {rhs}")
    required: list[Judgment] = [Ok(a) for a in (*data.prefix, data.tail)]
    required.extend(reduced_app_constraints(schema.arity, (data.prefix, data.tail)))
    _premises_are(node, required)


_CHECKS = {
    "Var": _check_var,
    "Assum": _check_assum,
    "Refl": _check_refl,
    "Symm": _check_symm,
    "Triang": _check_triang,
    "Max": _check_max,
    "Cont": _check_cont,
    "Nexp": _check_nexp,
    "Subst": _check_subst,
    "App": _check_app,
    "Ax": _check_ax,
    "Inst": _check_inst,
}


def _check_node(t: Theory, node: Proof) -> str | None:
    check = _CHECKS.get(node.rule)
    if check is None:
        return f"unknown rule {node.rule!r}"
    try:
        for term in node.conclusion.terms():
            check_term(t.signature, term)
        check(t, node)
    except _Reject as exc:
        return str(exc)
    except MetriqError as exc:
        return exc.message
    return None


def _post_order(root: Proof) -> Iterator[Proof]:
    """Each distinct node once, premises before conclusions."""
    seen: set[int] = set()
    stack: list[tuple[Proof, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            yield node
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        kids = list(node.premises)
        if isinstance(node.data, ParametricBoundFamily):
            kids.append(node.data.template)
        for kid in reversed(kids):
            if id(kid) not in seen:
                stack.append((kid, False))


def nodes(proof: Proof) -> list[Proof]:
    """Distinct nodes, every premise (and Cont template) before its conclusion."""
    return list(_post_order(proof))


def check_proof(theory: Theory, proof: Proof) -> Verdict:
    for node in _post_order(proof):
        reason = _check_node(theory, node)
        if reason is not None:
            return Invalid(node, reason)
    return Valid()


def proof_size(proof: Proof) -> int:
    return sum(1 for _ in _post_order(proof))


def render(proof: Proof, indent: str = "") -> list[str]:
    """Indented text rendering; shared sub-proofs are printed each time they occur."""
    lines = [f"{indent}{proof.rule:7} {proof.conclusion}"]
    kids = list(proof.premises)
    if isinstance(proof.data, ParametricBoundFamily):
        kids.append(proof.data.template)
    for kid in kids:
        lines.extend(render(kid, indent + "  "))
    return lines
