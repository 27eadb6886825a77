from fractions import Fraction

import pytest

from metriq.config import ProverConfig
from metriq.kernel import (
    RULES,
    AxData,
    Invalid,
    ParametricBoundFamily,
    Proof,
    Valid,
    check_proof,
    nodes,
    proof_conclusion,
    proof_size,
    render,
)
from metriq.metric import ZERO, ExtReal
from metriq.prover import saturate
from metriq.syntax import App, Context, Eq, Ok, Sequent, StreamApp, Var
from metriq.theories import Theory, builtin

x, y, z = Var("x"), Var("y"), Var("z")
HALF = ExtReal(Fraction(1, 2))
GAMMA = Context.of(("x", "y", 1), ("y", "z", 2))


def var_ok(v: Var, ctx: Context = GAMMA) -> Proof:
    return Proof("Var", Sequent(ctx, Ok(v)))


def assum(a: Var, b: Var, e: int, ctx: Context = GAMMA) -> Proof:
    return Proof("Assum", Sequent(ctx, Eq(a, b, ExtReal(e))))


@pytest.fixture
def t2() -> Theory:
    return builtin("t2")


class TestStructuralRules:
    def test_var_and_refl(self, t2: Theory) -> None:
        refl = Proof("Refl", Sequent(GAMMA, Eq(x, x, ZERO)), (var_ok(x),))
        assert check_proof(t2, refl) == Valid()
        assert proof_conclusion(refl).body == Eq(x, x, ZERO)

    def test_assumption_must_be_in_the_context(self, t2: Theory) -> None:
        assert check_proof(t2, assum(x, y, 1))
        assert check_proof(t2, assum(y, x, 1))
        verdict = check_proof(t2, assum(x, z, 3))
        assert isinstance(verdict, Invalid)
        assert "not in the context" in verdict.reason

    def test_triangle_adds_bounds(self, t2: Theory) -> None:
        good = Proof("Triang", Sequent(GAMMA, Eq(x, z, ExtReal(3))), (assum(x, y, 1), assum(y, z, 2)))
        assert check_proof(t2, good)
        bad = Proof("Triang", Sequent(GAMMA, Eq(x, z, ExtReal(2))), (assum(x, y, 1), assum(y, z, 2)))
        verdict = check_proof(t2, bad)
        assert isinstance(verdict, Invalid) and verdict.node is bad

    def test_max_needs_a_strictly_smaller_bound(self, t2: Theory) -> None:
        weaker = Proof("Max", Sequent(GAMMA, Eq(x, y, ExtReal(2))), (assum(x, y, 1),))
        assert check_proof(t2, weaker)
        same = Proof("Max", Sequent(GAMMA, Eq(x, y, ExtReal(1))), (assum(x, y, 1),))
        assert not check_proof(t2, same)

    def test_symmetry(self, t2: Theory) -> None:
        assert check_proof(t2, Proof("Symm", Sequent(GAMMA, Eq(y, x, ExtReal(1))), (assum(x, y, 1),)))
        assert not check_proof(t2, Proof("Symm", Sequent(GAMMA, Eq(x, y, ExtReal(1))), (assum(x, y, 1),)))

    def test_premises_keep_the_context(self, t2: Theory) -> None:
        other = Context.of(("x", "y", 1))
        refl = Proof("Refl", Sequent(GAMMA, Eq(x, x, ZERO)), (var_ok(x, other),))
        verdict = check_proof(t2, refl)
        assert isinstance(verdict, Invalid)
        assert "changes the context" in verdict.reason

    def test_unknown_rule(self, t2: Theory) -> None:
        verdict = check_proof(t2, Proof("Magic", Sequent(GAMMA, Eq(x, z, ZERO))))
        assert isinstance(verdict, Invalid) and "unknown rule" in verdict.reason

    def test_first_bad_node_is_reported(self, t2: Theory) -> None:
        bad = assum(x, z, 3)
        root = Proof("Max", Sequent(GAMMA, Eq(x, z, ExtReal(4))), (bad,))
        verdict = check_proof(t2, root)
        assert isinstance(verdict, Invalid) and verdict.node is bad


class TestAxioms:
    def test_axiom_leaf(self, t2: Theory) -> None:
        (collapse,) = t2.axioms
        leaf = Proof("Ax", collapse.sequent, (), AxData("collapse"))  # type: ignore[union-attr]
        assert check_proof(t2, leaf)
        wrong = Proof("Ax", Sequent(Context(), Eq(x, y, ZERO)), (), AxData("collapse"))
        assert not check_proof(t2, wrong)
        assert not check_proof(t2, Proof("Ax", collapse.sequent, (), AxData("nope")))  # type: ignore[union-attr]

    def test_substitution_instance_from_saturation(self, t2: Theory, cfg: ProverConfig) -> None:
        ctx = Context.of(("u", "v", 1))
        state = saturate(t2, ctx, cfg=cfg)
        u, v = Var("u"), Var("v")
        assert state.bound(u, v) == ZERO
        proof = state.witness(u, v)
        assert proof is not None
        assert check_proof(t2, proof)
        assert any(n.rule == "Subst" for n in nodes(proof))

    def test_substitution_without_its_side_premises(self, t2: Theory, cfg: ProverConfig) -> None:
        ctx = Context.of(("u", "v", 1))
        proof = saturate(t2, ctx, cfg=cfg).witness(Var("u"), Var("v"))
        subst = next(n for n in nodes(proof) if n.rule == "Subst")  # type: ignore[arg-type]
        stripped = Proof(subst.rule, subst.conclusion, subst.premises[:1], subst.data)
        verdict = check_proof(t2, stripped)
        assert isinstance(verdict, Invalid) and "missing premise" in verdict.reason

    def test_scaled_axiom_needs_its_parameter(self) -> None:
        theory = builtin("contraction")
        (halve,) = theory.axioms
        inst = halve.instance(HALF)  # type: ignore[union-attr]
        assert check_proof(theory, Proof("Ax", inst, (), AxData("halve", HALF)))
        assert not check_proof(theory, Proof("Ax", inst, (), AxData("halve")))
        assert not check_proof(theory, Proof("Ax", inst, (), AxData("halve", ExtReal(1))))


class TestContinuity:
    @pytest.fixture
    def comp_run(self, cfg: ProverConfig):
        comp = builtin("comp")
        stream = StreamApp("lim", (Var("x1"),), Var("x_"))
        ctx = Context.of(("x1", "x_", "1/2"))
        return comp, stream, saturate(comp, ctx, cfg=cfg, goals=(stream,))

    def test_limit_is_reached_at_distance_zero(self, comp_run) -> None:
        comp, stream, state = comp_run
        assert state.bound(stream, Var("x_")) == ZERO
        assert state.bound(stream, Var("x1")) == HALF
        proof = state.witness(stream, Var("x_"))
        assert check_proof(comp, proof)
        cont = next(n for n in nodes(proof) if n.rule == "Cont")
        family = cont.data
        assert isinstance(family, ParametricBoundFamily)
        assert family.infimum == ZERO
        assert family.member(5).conclusion.body.bound == ExtReal(Fraction(1, 32))  # type: ignore[union-attr]

    def test_continuity_must_conclude_the_infimum(self, comp_run) -> None:
        comp, stream, state = comp_run
        proof = state.witness(stream, Var("x_"))
        cont = next(n for n in nodes(proof) if n.rule == "Cont")
        body = cont.conclusion.body
        forged = Proof("Cont", Sequent(cont.conclusion.context, Eq(body.lhs, body.rhs, HALF)), (), cont.data)
        verdict = check_proof(comp, forged)
        assert isinstance(verdict, Invalid) and "infimum" in verdict.reason

    def test_continuity_rejects_another_context(self, comp_run) -> None:
        comp, stream, state = comp_run
        proof = state.witness(stream, Var("x_"))
        cont = next(n for n in nodes(proof) if n.rule == "Cont")
        moved = Proof("Cont", Sequent(Context(), cont.conclusion.body), (), cont.data)
        assert not check_proof(comp, moved)


class TestSaturationWitnesses:
    def test_every_recorded_bound_checks(self, cfg: ProverConfig) -> None:
        t1 = builtin("t1")
        state = saturate(t1, Context.of(("x", "y", 1)), cfg=cfg.with_depth(1))
        assert state.bounds
        for (s, t), (b, proof) in state.bounds.items():
            assert proof.conclusion.body == Eq(s, t, b)
            assert check_proof(t1, proof), proof
        for t in state.ok_set:
            assert check_proof(t1, state.ok_proof(t))  # type: ignore[arg-type]

    def test_application_needs_its_constraints(self) -> None:
        t1 = builtin("t1")
        ctx = Context.of(("x", "y", 2))
        app = Proof("App", Sequent(ctx, Ok(App("f", (x, y)))), (var_ok(x, ctx), var_ok(y, ctx)))
        verdict = check_proof(t1, app)
        assert isinstance(verdict, Invalid) and "missing premise" in verdict.reason


def test_rendering_and_size() -> None:
    refl = Proof("Refl", Sequent(GAMMA, Eq(x, x, ZERO)), (var_ok(x),))
    triang = Proof("Triang", Sequent(GAMMA, Eq(x, x, ZERO)), (refl, refl))
    assert proof_size(triang) == 3
    assert nodes(triang)[-1] is triang
    lines = render(triang)
    assert lines[0].startswith("Triang")
    assert len(lines) == 5
    assert set(RULES) >= {n.rule for n in nodes(triang)}
