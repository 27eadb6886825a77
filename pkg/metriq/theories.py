"""Theory presentations: axioms, axiom schemas, combinators and built-ins."""

import dataclasses
import logging
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Union

from metriq.errors import ArityError, SignatureError, UnknownTheoryError
from metriq.metric import INF, ZERO, ExtReal, FinMetric
from metriq.syntax import (
    App,
    Context,
    Eq,
    FiniteArity,
    GeometricStream,
    Preterm,
    Sequent,
    Signature,
    StreamApp,
    Var,
    check_term,
    reduced_app_constraints,
    rename_symbols,
    stream_element,
)

if TYPE_CHECKING:
    from metriq.config import ProverConfig
    from metriq.kernel import Proof

log = logging.getLogger(__name__)


# Templates for arity-indexed schemas. `lim(x...)` applies a stream symbol to
# the whole bound stream, `x[n]` is its n-th element.


@dataclass(frozen=True, slots=True)
class SpreadApp:
    symbol: str
    var: str

    def __str__(self) -> str:
        return f"{self.symbol}({self.var}...)"


@dataclass(frozen=True, slots=True)
class IndexedVar:
    var: str

    def __str__(self) -> str:
        return f"{self.var}[n]"


Template = Union[Var, App, StreamApp, SpreadApp, IndexedVar]


def instantiate_template(
    t: Template, prefix: tuple[Preterm, ...], tail: Preterm, n: int
) -> Preterm:
    if isinstance(t, SpreadApp):
        return StreamApp(t.symbol, prefix, tail)
    if isinstance(t, IndexedVar):
        return stream_element(prefix, tail, n)
    if isinstance(t, Var):
        return t
    if isinstance(t, App):
        return App(
            t.symbol, tuple(instantiate_template(a, prefix, tail, n) for a in t.args)
        )
    return StreamApp(
        t.symbol,
        tuple(instantiate_template(a, prefix, tail, n) for a in t.prefix),
        instantiate_template(t.tail, prefix, tail, n),
    )


def template_nodes(t: Template) -> Iterable[Template]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from template_nodes(a)
    elif isinstance(t, StreamApp):
        for a in t.prefix + (t.tail,):
            yield from template_nodes(a)


def _rename_template(t: Template, renaming: Mapping[str, str]) -> Template:
    if isinstance(t, SpreadApp):
        return SpreadApp(renaming.get(t.symbol, t.symbol), t.var)
    if isinstance(t, IndexedVar | Var):
        return t
    if isinstance(t, App):
        return App(
            renaming.get(t.symbol, t.symbol),
            tuple(_rename_template(a, renaming) for a in t.args),
        )
    return StreamApp(
        renaming.get(t.symbol, t.symbol),
        tuple(_rename_template(a, renaming) for a in t.prefix),
        _rename_template(t.tail, renaming),
    )


# Axiom schemas


@dataclass(frozen=True)
class Concrete:
    """A single equational axiom Gamma |- s =_eps t."""

    sequent: Sequent
    name: str = ""

    def __str__(self) -> str:
        return str(self.sequent)


@dataclass(frozen=True)
class ArityIndexed:
    """Gamma(N) |- lhs(n) =_{scale * ratio^n} rhs(n) for every stream index n.

    The context Gamma(N) is the arity context of the stream arity over the
    stream variable; `ratio == 1` makes the bound the constant `scale`.
    """

    arity: GeometricStream
    var: str
    lhs: Template
    rhs: Template
    scale: Fraction
    ratio: Fraction = Fraction(1)
    name: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "scale", Fraction(self.scale))
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        if not isinstance(self.arity, GeometricStream):
            raise ArityError("arity-indexed schemas range over stream arities")
        if self.scale < 0 or not 0 < self.ratio <= 1:
            raise ArityError("schema bound must be scale * ratio^n, 0 < ratio <= 1")
        for node in (*template_nodes(self.lhs), *template_nodes(self.rhs)):
            if isinstance(node, Var):
                raise ArityError(
                    f"schema templates may only use {self.var} as {self.var}[n] "
                    f"or f({self.var}...), found {node}"
                )
            if isinstance(node, SpreadApp | IndexedVar) and node.var != self.var:
                raise ArityError(f"unbound stream variable {node.var}")

    @property
    def converges(self) -> bool:
        return self.ratio < 1

    def bound(self, n: int) -> ExtReal:
        return ExtReal(self.scale * self.ratio**n)

    def instance(
        self, prefix: tuple[Preterm, ...], tail: Preterm, n: int
    ) -> tuple[Preterm, Preterm, ExtReal]:
        if n < 1:
            raise ArityError(f"stream index must be positive, got {n}")
        return (
            instantiate_template(self.lhs, prefix, tail, n),
            instantiate_template(self.rhs, prefix, tail, n),
            self.bound(n),
        )

    def bound_text(self) -> str:
        if self.ratio == 1:
            return str(ExtReal(self.scale))
        power = f"({ExtReal(self.ratio)})^n"
        return power if self.scale == 1 else f"{ExtReal(self.scale)} * {power}"

    def __str__(self) -> str:
        return f"[N over {self.var}] |- {self.lhs} =[{self.bound_text()}] {self.rhs}"


@dataclass(frozen=True)
class Scaled:
    """{x =_{a*e} y, ...} |- lhs =_{c*e} rhs for every rational e >= 0."""

    context: tuple[tuple[str, str, Fraction], ...]
    lhs: Preterm
    rhs: Preterm
    coefficient: Fraction
    name: str = ""

    def __post_init__(self) -> None:
        ctx = tuple((x, y, Fraction(a)) for x, y, a in self.context)
        object.__setattr__(self, "context", ctx)
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))
        if any(a < 0 for _, _, a in ctx) or self.coefficient < 0:
            raise ArityError("scaled schema coefficients must be non-negative")

    def instance(self, e: ExtReal) -> Sequent:
        if e.is_inf:
            raise ArityError("scaled schemas are instantiated at finite values")
        return Sequent(
            Context(tuple((x, y, e.scale(a)) for x, y, a in self.context)),
            Eq(self.lhs, self.rhs, e.scale(self.coefficient)),
        )

    def least_parameter(
        self, distance: Callable[[str, str], ExtReal]
    ) -> ExtReal:
        """Smallest e at which the context holds, given the distances between variables."""
        e = ZERO
        for x, y, a in self.context:
            d = distance(x, y)
            if a == 0:
                if d != ZERO:
                    return INF
                continue
            if d.is_inf:
                return INF
            e = max(e, ExtReal(d.value / a))  # type: ignore[operator]
        return e

    def __str__(self) -> str:
        def scaled(a: Fraction) -> str:
            return "e" if a == 1 else f"{ExtReal(a)}*e"

        ctx = ", ".join(f"{x} =[{scaled(a)}] {y}" for x, y, a in self.context)
        return (
            f"forall e {{ {ctx} }} |- {self.lhs} =[{scaled(self.coefficient)}] {self.rhs}"
        )


AxiomSchema = Union[Concrete, ArityIndexed, Scaled]


def _schema_terms(schema: AxiomSchema) -> tuple[Preterm, ...]:
    if isinstance(schema, Concrete):
        return schema.sequent.terms()
    if isinstance(schema, Scaled):
        return (schema.lhs, schema.rhs)
    return ()


def _with_name(schema: AxiomSchema, name: str) -> AxiomSchema:
    return dataclasses.replace(schema, name=name)


@dataclass(frozen=True)
class Theory:
    signature: Signature
    axioms: tuple[AxiomSchema, ...] = ()
    name: str = ""

    def __post_init__(self) -> None:
        named: list[AxiomSchema] = []
        for i, ax in enumerate(self.axioms, start=1):
            named.append(ax if ax.name else _with_name(ax, f"ax{i}"))
        names = [ax.name for ax in named]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise SignatureError(f"duplicate axiom name {dup!r}")
        object.__setattr__(self, "axioms", tuple(named))
        for ax in named:
            self._check_schema(ax)

    def _check_schema(self, ax: AxiomSchema) -> None:
        if isinstance(ax, Concrete) and not isinstance(ax.sequent.body, Eq):
            raise SignatureError(f"axiom {ax.name} must be an equation")
        for t in _schema_terms(ax):
            check_term(self.signature, t)
        if isinstance(ax, ArityIndexed):
            for node in (*template_nodes(ax.lhs), *template_nodes(ax.rhs)):
                if isinstance(node, SpreadApp):
                    if self.signature[node.symbol] != ax.arity:
                        raise ArityError(
                            f"{node.symbol} does not have the arity of axiom {ax.name}"
                        )
                elif isinstance(node, App | StreamApp):
                    if node.symbol not in self.signature:
                        raise SignatureError(f"unknown operation symbol {node.symbol!r}")

    def axiom(self, name: str) -> AxiomSchema:
        for ax in self.axioms:
            if ax.name == name:
                return ax
        raise SignatureError(f"unknown axiom {name!r}")

    def has_axiom(self, name: str) -> bool:
        return any(ax.name == name for ax in self.axioms)

    @property
    def is_quantitative(self) -> bool:
        """True when every arity is discrete, so every term is well-formed."""
        return all(
            isinstance(a, FiniteArity) and a.is_discrete for _, a in self.signature.symbols
        )

    def __str__(self) -> str:
        return self.name or "<theory>"


# Verdicts of check_axioms


@dataclass(frozen=True)
class WellFormed:
    witnesses: tuple[tuple[str, "Proof"], ...]


@dataclass(frozen=True)
class Failed:
    axiom: str
    side: Preterm
    reason: str


def stream_binding(
    schema: ArityIndexed, cap: int
) -> tuple[Context, tuple[Preterm, ...], Preterm]:
    """Generic binding x1..x_cap ; x_ with its reduced arity context."""
    prefix = tuple(Var(f"{schema.var}{i}") for i in range(1, cap + 1))
    tail = Var(f"{schema.var}_")
    constraints = reduced_app_constraints(schema.arity, (prefix, tail))
    ctx = Context(
        tuple((a.name, b.name, e) for a, b, e in constraints)  # type: ignore[union-attr]
    )
    return ctx, prefix, tail


def axiom_obligations(
    schema: AxiomSchema, cfg: "ProverConfig"
) -> list[tuple[Context, Preterm]]:
    """The (context, term) pairs whose well-formedness makes the axiom well-formed."""
    if isinstance(schema, Concrete):
        return [(schema.sequent.context, t) for t in schema.sequent.terms()]
    if isinstance(schema, Scaled):
        out = []
        for e in cfg.grid:
            if e.is_finite:
                seq = schema.instance(e)
                out.extend((seq.context, t) for t in seq.terms())
        return out
    ctx, prefix, tail = stream_binding(schema, cfg.stream_prefix_cap)
    out = []
    for n in range(1, len(prefix) + 2):
        lhs, rhs, _ = schema.instance(prefix, tail, n)
        out.extend([(ctx, lhs), (ctx, rhs)])
    return out


def check_axioms(theory: Theory, cfg: "ProverConfig") -> WellFormed | Failed:
    """Derive every axiom side well-formed from the axioms themselves."""
    from metriq.prover import prove_ok

    witnesses: list[tuple[str, "Proof"]] = []
    for ax in theory.axioms:
        seen: set[tuple[Context, Preterm]] = set()
        for ctx, term in axiom_obligations(ax, cfg):
            if (ctx, term) in seen:
                continue
            seen.add((ctx, term))
            derivable, proof = prove_ok(theory, ctx, term, cfg)
            if not derivable or proof is None:
                log.info("axiom %s: %s not provably ok at depth %s", ax.name, term, cfg.depth)
                return Failed(ax.name, term, f"{term} is not provably ok at depth {cfg.depth}")
            witnesses.append((ax.name, proof))
    log.info("%s: %s axioms well-formed", theory, len(theory.axioms))
    return WellFormed(tuple(witnesses))


# Combinators


def constant_name(point: object) -> str:
    return f"'{point}"


def theory_of_space(space: FinMetric, name: str = "") -> Theory:
    """T(A): one constant per point and |- [a] =_d(a,a') [a'] for finite distances."""
    sig = Signature(
        tuple((constant_name(p), FiniteArity.discrete(0)) for p in space.points)
    )
    axioms: list[AxiomSchema] = []
    for a in space.points:
        for b in space.points:
            d = space.d(a, b)
            if d.is_finite:
                axioms.append(
                    Concrete(
                        Sequent(
                            Context(),
                            Eq(App(constant_name(a)), App(constant_name(b)), d),
                        ),
                        name=f"{constant_name(a)}~{constant_name(b)}",
                    )
                )
    return Theory(sig, tuple(axioms), name or "T(A)")


def _prefixed(name: str, prefix: str) -> str:
    if name.startswith("'"):
        return f"'{prefix}{name[1:]}"
    return f"{prefix}{name}"


def rename_schema(schema: AxiomSchema, renaming: Mapping[str, str], name: str) -> AxiomSchema:
    if isinstance(schema, Concrete):
        seq = schema.sequent
        body = seq.body
        assert isinstance(body, Eq)
        return Concrete(
            Sequent(
                seq.context,
                Eq(rename_symbols(body.lhs, renaming), rename_symbols(body.rhs, renaming), body.bound),
            ),
            name,
        )
    if isinstance(schema, Scaled):
        return dataclasses.replace(
            schema,
            lhs=rename_symbols(schema.lhs, renaming),
            rhs=rename_symbols(schema.rhs, renaming),
            name=name,
        )
    return dataclasses.replace(
        schema,
        lhs=_rename_template(schema.lhs, renaming),
        rhs=_rename_template(schema.rhs, renaming),
        name=name,
    )


def _renamed(theory: Theory, clashes: set[str], axiom_clashes: set[str], prefix: str) -> Theory:
    renaming = {n: _prefixed(n, prefix) for n in theory.signature.names if n in clashes}
    sig = Signature(tuple((renaming.get(n, n), a) for n, a in theory.signature.symbols))
    axioms = tuple(
        rename_schema(
            ax, renaming, f"{prefix}{ax.name}" if ax.name in axiom_clashes else ax.name
        )
        for ax in theory.axioms
    )
    return Theory(sig, axioms, theory.name)


def disjoint_union(left: Theory, right: Theory) -> Theory:
    """Union of signatures and axioms; clashing names get left_/right_ prefixes."""
    clashes = set(left.signature.names) & set(right.signature.names)
    axiom_clashes = {a.name for a in left.axioms} & {a.name for a in right.axioms}
    if clashes or axiom_clashes:
        log.info("renaming clashing names %s", sorted(clashes | axiom_clashes))
        left = _renamed(left, clashes, axiom_clashes, "left_")
        right = _renamed(right, clashes, axiom_clashes, "right_")
    name = " + ".join(n for n in (left.name, right.name) if n)
    return Theory(
        left.signature.union(right.signature), left.axioms + right.axioms, name
    )


def with_generators(theory: Theory, space: FinMetric) -> Theory:
    """T + T(A)."""
    return disjoint_union(theory, theory_of_space(space))


# Built-in theories


def _x(name: str) -> Var:
    return Var(name)


def _comp() -> Theory:
    arity = GeometricStream(Fraction(1, 2), Fraction(1))
    return Theory(
        Signature((("lim", arity),)),
        (
            ArityIndexed(
                arity,
                "x",
                SpreadApp("lim", "x"),
                IndexedVar("x"),
                scale=Fraction(1),
                ratio=Fraction(1, 2),
                name="limit",
            ),
        ),
        "comp",
    )


def _t1() -> Theory:
    pair = FiniteArity(FinMetric.from_matrix([0, 1], [[0, 1], [1, 0]]))  # type: ignore[arg-type]
    return Theory(Signature((("f", pair),)), (), "t1")


def _t2() -> Theory:
    return Theory(
        Signature(),
        (
            Concrete(
                Sequent(Context.of(("x", "y", 1)), Eq(_x("x"), _x("y"), ZERO)),
                name="collapse",
            ),
        ),
        "t2",
    )


def _contraction() -> Theory:
    return Theory(
        Signature((("s", FiniteArity.discrete(1)),)),
        (
            Scaled(
                (("x", "y", Fraction(2)),),
                App("s", (_x("x"),)),
                App("s", (_x("y"),)),
                Fraction(1),
                name="halve",
            ),
        ),
        "contraction",
    )


def _strongfinit() -> Theory:
    return Theory(
        Signature(
            (
                ("f", FiniteArity.discrete(2)),
                ("g", FiniteArity.discrete(1)),
                ("g'", FiniteArity.discrete(1)),
            )
        ),
        (
            Concrete(
                Sequent(
                    Context(),
                    Eq(App("g", (_x("x"),)), App("g'", (_x("x"),)), ExtReal(1)),
                ),
                name="close",
            ),
        ),
        "strongfinit",
    )


def _semilattice() -> Theory:
    x, y, z = _x("x"), _x("y"), _x("z")

    def join(a: Preterm, b: Preterm) -> App:
        return App("join", (a, b))

    def law(lhs: Preterm, rhs: Preterm, name: str) -> Concrete:
        return Concrete(Sequent(Context(), Eq(lhs, rhs, ZERO)), name)

    return Theory(
        Signature((("join", FiniteArity.discrete(2)),)),
        (
            law(join(x, x), x, "idem"),
            law(join(x, y), join(y, x), "comm"),
            law(join(x, join(y, z)), join(join(x, y), z), "assoc"),
        ),
        "semilattice",
    )


BUILTINS = {
    "comp": _comp,
    "t1": _t1,
    "t2": _t2,
    "contraction": _contraction,
    "strongfinit": _strongfinit,
    "semilattice": _semilattice,
}


def builtin(name: str) -> Theory:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise UnknownTheoryError(
            f"unknown theory {name!r}; choose from {', '.join(BUILTINS)}"
        ) from None


def empty_theory() -> Theory:
    return Theory(Signature(), (), "empty")
