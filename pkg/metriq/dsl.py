"""Theory files: grammar, parser and printer.

A file holds at most one theory block plus named spaces, terms and sequents:

    theory Comp {
      arity N = geometric(ratio = 1/2, scale = 1)
      op lim : N
      axiom limit: [N over x] |- lim(x...) =[(1/2)^n] x[n]
    }
    space A = { a b : d(a,b)=1 }
    term t = lim('a; 'b)
    sequent g = { x =[1] y } |- x =[0] y

Numbers are exact: `1/2`, `0.5` and `inf`. A bare identifier that names a
declared constant is that constant, otherwise a variable; `'a` is the
generator constant of point `a`.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from metriq.errors import MetriqError, ParseError
from metriq.metric import INF, ZERO, ExtReal, FinMetric, Point
from metriq.syntax import (
    App,
    Arity,
    Context,
    Eq,
    FiniteArity,
    GeometricStream,
    Ok,
    Preterm,
    Sequent,
    Signature,
    StreamApp,
    Var,
    check_term,
    symbols,
)
from metriq.theories import (
    ArityIndexed,
    AxiomSchema,
    Concrete,
    IndexedVar,
    Scaled,
    SpreadApp,
    Template,
    Theory,
    empty_theory,
)

log = logging.getLogger(__name__)

GRAMMAR = r"""
file: (item ";"?)*
?item: theory | space_decl | term_decl | sequent_decl

theory: "theory" NAME "{" (member ";"?)* "}"
?member: arity_decl | op_decl | axiom
arity_decl: "arity" NAME "=" arity_expr
op_decl: "op" NAME ":" arity_expr
arity_expr: space_lit                                                   -> finite_arity
          | "geometric" "(" "ratio" "=" number "," "scale" "=" number ")" -> geometric
          | NUMBER                                                      -> discrete
          | NAME                                                        -> arity_ref

axiom: "axiom" [NAME ":"] schema
schema: [context] "|-" equation                     -> concrete_schema
      | "forall" NAME [context] "|-" equation       -> scaled_schema
      | "[" NAME "over" NAME "]" "|-" equation      -> indexed_schema

space_decl: "space" NAME "=" space_lit
term_decl: "term" NAME "=" term
sequent_decl: "sequent" NAME "=" sequent

space_lit: "{" point* dists? "}"
dists: ":" dist ("," dist)*
point: NAME | NUMBER
dist: NAME "(" point "," point ")" "=" number

sequent: [context] "|-" equation   -> eq_sequent
       | [context] "|-" term "ok"  -> ok_sequent
context: "{" (entry ("," entry)*)? "}"
entry: NAME "=" "[" bound "]" NAME
equation: term "=" "[" bound "]" term

bound: number                              -> const_bound
     | NAME                                -> param_bound
     | number "*" NAME                     -> scaled_param
     | "(" number ")" "^" NAME             -> power_bound
     | number "*" "(" number ")" "^" NAME  -> scaled_power
number: NUMBER | INF

term: NAME "(" [args] ")"              -> app
    | NAME "(" [args] ";" term ")"     -> stream
    | NAME "(" NAME "..." ")"          -> spread
    | NAME "[" NAME "]"                -> indexed
    | NAME                             -> var
    | CONST                            -> const
args: term ("," term)*

INF: "inf"
NAME: /[A-Za-z_][A-Za-z0-9_]*'*/
CONST: /'[A-Za-z0-9_]+'*/
NUMBER: /\d+(\.\d+|\/\d+)?/
COMMENT: /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(
    GRAMMAR,
    parser="lalr",
    start=["file", "term", "sequent", "context", "space_lit"],
    propagate_positions=True,
    maybe_placeholders=True,
)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*'*")


@dataclass(frozen=True)
class TheoryFile:
    theory: Theory
    spaces: dict[str, FinMetric] = field(default_factory=dict)
    terms: dict[str, Preterm] = field(default_factory=dict)
    sequents: dict[str, Sequent] = field(default_factory=dict)
    source: str = field(default="", compare=False, repr=False)


@dataclass(frozen=True)
class _Bound:
    kind: str  # const | param | power
    value: ExtReal = ZERO
    scale: Fraction = Fraction(1)
    ratio: Fraction = Fraction(1)
    var: Token | None = None


def _fail(at: Token | object, expectation: str) -> ParseError:
    line = getattr(at, "line", 0) or 0
    column = getattr(at, "column", 0) or 0
    return ParseError(line, column, expectation)


def _finite(q: ExtReal, at: Token | object) -> Fraction:
    if q.is_inf:
        raise _fail(at, "a finite number")
    return q.value  # type: ignore[return-value]


def resolve_constants(t: Template, constants: set[str]) -> Template:
    """Read bare identifiers naming declared constants as constant applications."""
    if isinstance(t, Var):
        return App(t.name) if t.name in constants else t
    if isinstance(t, App):
        return App(t.symbol, tuple(resolve_constants(a, constants) for a in t.args))  # type: ignore[misc]
    if isinstance(t, StreamApp):
        return StreamApp(
            t.symbol,
            tuple(resolve_constants(a, constants) for a in t.prefix),  # type: ignore[misc]
            resolve_constants(t.tail, constants),  # type: ignore[arg-type]
        )
    return t


def _is_plain(t: Template) -> bool:
    if isinstance(t, SpreadApp | IndexedVar):
        return False
    if isinstance(t, App):
        return all(_is_plain(a) for a in t.args)
    if isinstance(t, StreamApp):
        return all(_is_plain(a) for a in (*t.prefix, t.tail))
    return True


def _plain(t: Template, at: object) -> Preterm:
    if not _is_plain(t):
        raise _fail(at, "a term without x... or x[n] outside an arity-indexed axiom")
    return t  # type: ignore[return-value]


def _check_against(sig: Signature, t: Preterm, at: object) -> None:
    quoted = sorted(s for s in symbols(t) if s.startswith("'") and s not in sig)
    extended = sig.union(Signature(tuple((c, FiniteArity.discrete(0)) for c in quoted)))
    try:
        check_term(extended, t)
    except MetriqError as exc:
        raise _fail(at, f"a term matching the signature ({exc.message})") from None


@v_args(inline=True)
class _Builder(Transformer):
    """Tree to values. Theory-level checks happen when the block closes."""

    # numbers and bounds

    def number(self, tok: Token) -> ExtReal:
        if tok.type == "INF":
            return INF
        return ExtReal(Fraction(str(tok)))

    def const_bound(self, value: ExtReal) -> _Bound:
        return _Bound("const", value=value)

    def param_bound(self, var: Token) -> _Bound:
        return _Bound("param", scale=Fraction(1), var=var)

    def scaled_param(self, coef: ExtReal, var: Token) -> _Bound:
        return _Bound("param", scale=_finite(coef, var), var=var)

    def power_bound(self, ratio: ExtReal, var: Token) -> _Bound:
        return _Bound("power", ratio=_finite(ratio, var), var=var)

    def scaled_power(self, scale: ExtReal, ratio: ExtReal, var: Token) -> _Bound:
        return _Bound("power", scale=_finite(scale, var), ratio=_finite(ratio, var), var=var)

    # terms

    def args(self, *terms: Template) -> tuple[Template, ...]:
        return terms

    def app(self, name: Token, args: tuple | None) -> App:
        return App(str(name), args or ())

    def stream(self, name: Token, prefix: tuple | None, tail: Template) -> StreamApp:
        return StreamApp(str(name), prefix or (), tail)  # type: ignore[arg-type]

    def spread(self, name: Token, var: Token) -> SpreadApp:
        return SpreadApp(str(name), str(var))

    def indexed(self, var: Token, index: Token) -> IndexedVar:
        if str(index) != "n":
            raise _fail(index, "the index variable n")
        return IndexedVar(str(var))

    def var(self, name: Token) -> Var:
        return Var(str(name))

    def const(self, name: Token) -> App:
        return App(str(name))

    # contexts and sequents

    def entry(self, x: Token, bound: _Bound, y: Token) -> tuple[str, str, _Bound, Token]:
        return str(x), str(y), bound, x

    def context(self, *entries: tuple | None) -> list[tuple]:
        return [e for e in entries if e is not None]

    def equation(self, lhs: Template, bound: _Bound, rhs: Template) -> tuple:
        return lhs, rhs, bound

    @v_args(inline=True, meta=True)
    def eq_sequent(self, meta, ctx: list | None, eq: tuple) -> tuple:
        return "eq", _concrete_context(ctx or []), eq, meta

    @v_args(inline=True, meta=True)
    def ok_sequent(self, meta, ctx: list | None, term: Template) -> tuple:
        return "ok", _concrete_context(ctx or []), term, meta

    # spaces and arities

    def point(self, tok: Token) -> tuple[Point, Token]:
        if tok.type == "NUMBER":
            value = Fraction(str(tok))
            if value.denominator != 1:
                raise _fail(tok, "an integer or identifier point")
            return int(value), tok
        return str(tok), tok

    def dist(self, name: Token, a: tuple, b: tuple, value: ExtReal) -> tuple:
        if str(name) != "d":
            raise _fail(name, "d(p, q) = distance")
        return a, b, value

    def dists(self, *items: tuple) -> list[tuple]:
        return list(items)

    @v_args(inline=True, meta=True)
    def space_lit(self, meta, *items: tuple | list) -> FinMetric:
        points = [p for p in items if isinstance(p, tuple)]
        dists = next((d for d in items if isinstance(d, list)), [])
        names = [p for p, _ in points]
        for p, tok in points:
            if names.count(p) > 1:
                raise _fail(tok, f"distinct point names ({p!r} repeats)")
        index = {p: i for i, p in enumerate(names)}
        rows = [[ZERO if i == j else INF for j in range(len(names))] for i in range(len(names))]
        seen: dict[tuple[int, int], ExtReal] = {}
        for (a, at), (b, _), value in dists:
            if a not in index or b not in index:
                raise _fail(at, "distances between declared points")
            i, j = index[a], index[b]
            key = (min(i, j), max(i, j))
            if key in seen and seen[key] != value:
                raise _fail(at, f"one distance between {a} and {b}")
            seen[key] = value
            rows[i][j] = rows[j][i] = value
        try:
            return FinMetric.from_matrix(names, rows)  # type: ignore[return-value]
        except MetriqError as exc:
            raise _fail(meta, f"a metric space ({exc.message})") from None

    @v_args(inline=True, meta=True)
    def finite_arity(self, meta, space: FinMetric) -> FiniteArity:
        try:
            return FiniteArity(space)
        except MetriqError as exc:
            raise _fail(meta, f"a finite arity ({exc.message})") from None

    @v_args(inline=True, meta=True)
    def geometric(self, meta, ratio: ExtReal, scale: ExtReal) -> GeometricStream:
        try:
            return GeometricStream(_finite(ratio, meta), _finite(scale, meta))
        except MetriqError as exc:
            if isinstance(exc, ParseError):
                raise
            raise _fail(meta, f"a geometric arity ({exc.message})") from None

    def discrete(self, tok: Token) -> FiniteArity:
        value = Fraction(str(tok))
        if value.denominator != 1:
            raise _fail(tok, "a whole number of arguments")
        return FiniteArity.discrete(int(value))

    def arity_ref(self, tok: Token) -> Token:
        return tok

    # declarations

    def arity_decl(self, name: Token, arity: Arity | Token) -> tuple:
        return "arity", name, arity

    def op_decl(self, name: Token, arity: Arity | Token) -> tuple:
        return "op", name, arity

    def concrete_schema(self, ctx: list | None, eq: tuple) -> tuple:
        return "concrete", ctx or [], eq

    def scaled_schema(self, param: Token, ctx: list | None, eq: tuple) -> tuple:
        return "scaled", param, ctx or [], eq

    def indexed_schema(self, arity: Token, var: Token, eq: tuple) -> tuple:
        return "indexed", arity, var, eq

    @v_args(inline=True, meta=True)
    def axiom(self, meta, name: Token | None, schema: tuple) -> tuple:
        return "axiom", name, schema, meta

    @v_args(inline=True, meta=True)
    def theory(self, meta, name: Token, *members: tuple | None) -> tuple:
        return "theory", _assemble(str(name), [m for m in members if m is not None], meta), meta

    def space_decl(self, name: Token, space: FinMetric) -> tuple:
        return "space", name, space

    def term_decl(self, name: Token, term: Template) -> tuple:
        return "term", name, term

    def sequent_decl(self, name: Token, seq: tuple) -> tuple:
        return "sequent", name, seq

    def file(self, *items: tuple | None) -> list[tuple]:
        return [i for i in items if i is not None]


# Assembly


def _concrete_context(entries: list[tuple]) -> Context:
    out = []
    for x, y, bound, at in entries:
        if bound.kind != "const":
            raise _fail(at, "a number as context bound")
        out.append((x, y, bound.value))
    return Context(tuple(out))


def _arity(expr: Arity | Token, arities: dict[str, Arity]) -> Arity:
    if isinstance(expr, Token):
        try:
            return arities[str(expr)]
        except KeyError:
            raise _fail(expr, f"a declared arity (no arity named {expr})") from None
    return expr


def _concrete(schema: tuple, consts: set[str], name: str, at: object) -> Concrete:
    _, ctx, (lhs, rhs, bound) = schema
    if bound.kind != "const":
        raise _fail(bound.var or at, "a number as equation bound")
    eq = Eq(
        _plain(resolve_constants(lhs, consts), at),
        _plain(resolve_constants(rhs, consts), at),
        bound.value,
    )
    return Concrete(Sequent(_concrete_context(ctx), eq), name)


def _coefficient(bound: _Bound, param: str, at: object) -> Fraction:
    if bound.kind == "const" and bound.value == ZERO:
        return Fraction(0)
    if bound.kind != "param" or str(bound.var) != param:
        raise _fail(bound.var or at, f"a multiple of {param}")
    return bound.scale


def _scaled(schema: tuple, consts: set[str], name: str, at: object) -> Scaled:
    _, param, ctx, (lhs, rhs, bound) = schema
    entries = tuple((x, y, _coefficient(b, str(param), tok)) for x, y, b, tok in ctx)
    return Scaled(
        entries,
        _plain(resolve_constants(lhs, consts), at),
        _plain(resolve_constants(rhs, consts), at),
        _coefficient(bound, str(param), at),
        name,
    )


def _indexed(
    schema: tuple, consts: set[str], arities: dict[str, Arity], name: str, at: object
) -> ArityIndexed:
    _, arity_tok, var, (lhs, rhs, bound) = schema
    arity = _arity(arity_tok, arities)
    if not isinstance(arity, GeometricStream):
        raise _fail(arity_tok, "a geometric arity")
    if bound.kind == "param":
        raise _fail(bound.var, "a constant or (r)^n bound")
    if bound.kind == "power" and str(bound.var) != "n":
        raise _fail(bound.var, "the index variable n")
    scale = _finite(bound.value, at) if bound.kind == "const" else bound.scale
    try:
        return ArityIndexed(
            arity,
            str(var),
            resolve_constants(lhs, consts),
            resolve_constants(rhs, consts),
            scale=scale,
            ratio=bound.ratio,
            name=name,
        )
    except MetriqError as exc:
        raise _fail(at, f"a well-formed arity-indexed axiom ({exc.message})") from None


def _assemble(name: str, members: list[tuple], meta: object) -> Theory:
    arities: dict[str, Arity] = {}
    ops: dict[str, Arity] = {}
    raw_axioms = []
    for member in members:
        kind = member[0]
        if kind == "arity":
            _, tok, expr = member
            if str(tok) in arities:
                raise _fail(tok, f"a new arity name ({tok} is declared twice)")
            arities[str(tok)] = _arity(expr, arities)
        elif kind == "op":
            _, tok, expr = member
            if str(tok) in ops:
                raise _fail(tok, f"a new operation name ({tok} is declared twice)")
            ops[str(tok)] = _arity(expr, arities)
        else:
            raw_axioms.append(member)
    sig = Signature(tuple(ops.items()))
    consts = set(sig.constants())
    axioms: list[AxiomSchema] = []
    for i, (_, label, schema, at) in enumerate(raw_axioms, start=1):
        ax_name = str(label) if label is not None else f"ax{i}"
        if schema[0] == "concrete":
            ax: AxiomSchema = _concrete(schema, consts, ax_name, at)
        elif schema[0] == "scaled":
            ax = _scaled(schema, consts, ax_name, at)
        else:
            ax = _indexed(schema, consts, arities, ax_name, at)
        try:
            Theory(sig, (ax,))
        except MetriqError as exc:
            raise _fail(at, f"a well-formed axiom ({exc.message})") from None
        axioms.append(ax)
    try:
        return Theory(sig, tuple(axioms), name)
    except MetriqError as exc:
        raise _fail(meta, f"a well-formed theory ({exc.message})") from None


def _sequent(raw: tuple, theory: Theory) -> Sequent:
    kind, ctx, body, at = raw
    consts = set(theory.signature.constants())
    if kind == "ok":
        term = _plain(resolve_constants(body, consts), at)
        _check_against(theory.signature, term, at)
        return Sequent(ctx, Ok(term))
    lhs, rhs, bound = body
    if bound.kind != "const":
        raise _fail(bound.var or at, "a number as equation bound")
    lhs = _plain(resolve_constants(lhs, consts), at)
    rhs = _plain(resolve_constants(rhs, consts), at)
    _check_against(theory.signature, lhs, at)
    _check_against(theory.signature, rhs, at)
    return Sequent(ctx, Eq(lhs, rhs, bound.value))


def _run(text: str, start: str):
    try:
        tree = _PARSER.parse(text, start=start)
    except UnexpectedInput as exc:
        raise _positioned(exc, text) from None
    try:
        return _Builder().transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, MetriqError):
            raise exc.orig_exc from None
        raise


def _pretty(terminal: str) -> str:
    if terminal == "$END":
        return "end of input"
    try:
        pattern = _PARSER.get_terminal(terminal).pattern
    except KeyError:
        return terminal.lower()
    if pattern.type == "str":
        return f"'{pattern.value}'"
    return terminal.lower()


def _positioned(exc: UnexpectedInput, text: str) -> ParseError:
    if isinstance(exc, UnexpectedToken | UnexpectedEOF):
        expected = set(exc.expected)
    elif isinstance(exc, UnexpectedCharacters):
        expected = set(exc.allowed or ())
    else:
        expected = set()
    line, column = exc.line, exc.column
    if line is None or line < 1:
        lines = text.split("\n")
        line, column = len(lines), len(lines[-1]) + 1
    expectation = " or ".join(sorted(_pretty(t) for t in expected)) or "valid input"
    return ParseError(line, column, expectation)


# Public entry points


def parse_theory(source: str) -> TheoryFile:
    """Parse a theory file; raises ParseError with line and column."""
    theory: Theory | None = None
    spaces: dict[str, FinMetric] = {}
    raw_terms: list[tuple] = []
    raw_sequents: list[tuple] = []
    taken: set[str] = set()
    for item in _run(source, "file"):
        kind = item[0]
        if kind == "theory":
            if theory is not None:
                raise _fail(item[2], "at most one theory block")
            theory = item[1]
            continue
        name = item[1]
        if str(name) in taken:
            raise _fail(name, f"a new name ({name} is declared twice)")
        taken.add(str(name))
        if kind == "space":
            spaces[str(name)] = item[2]
        elif kind == "term":
            raw_terms.append(item)
        else:
            raw_sequents.append(item)
    theory = theory or empty_theory()
    consts = set(theory.signature.constants())
    terms: dict[str, Preterm] = {}
    for _, name, raw in raw_terms:
        term = _plain(resolve_constants(raw, consts), name)
        _check_against(theory.signature, term, name)
        terms[str(name)] = term
    sequents = {str(name): _sequent(raw, theory) for _, name, raw in raw_sequents}
    log.debug(
        "parsed %s: %s symbols, %s axioms", theory, len(theory.signature), len(theory.axioms)
    )
    return TheoryFile(theory, spaces, terms, sequents, source)


def parse_term(text: str, theory: Theory | None = None) -> Preterm:
    theory = theory or empty_theory()
    term = _plain(resolve_constants(_run(text, "term"), set(theory.signature.constants())), None)
    _check_against(theory.signature, term, None)
    return term


def parse_sequent(text: str, theory: Theory | None = None) -> Sequent:
    return _sequent(_run(text, "sequent"), theory or empty_theory())


def parse_context(text: str) -> Context:
    """A context, with or without its braces; the empty string is the empty context."""
    body = text.strip()
    if not body:
        return Context()
    if not body.startswith("{"):
        body = "{ " + body + " }"
    return _concrete_context(_run(body, "context"))


def parse_space(text: str) -> FinMetric:
    return _run(text, "space_lit")


# Printing


def _ident(name: str, fallback: str) -> str:
    if _IDENT.fullmatch(name):
        return name
    cleaned = re.sub(r"\W", "_", name).strip("_")
    return cleaned if cleaned and _IDENT.fullmatch(cleaned) else fallback


def format_space(space: FinMetric) -> str:
    points = " ".join(str(p) for p in space.points)
    edges = ", ".join(f"d({a},{b})={d}" for a, b, d in space.edges())
    return "{ " + points + (" : " + edges if edges else "") + " }"


def _format_arity(arity: Arity) -> str:
    if isinstance(arity, GeometricStream):
        return str(arity)
    if arity.is_discrete:
        return str(arity.size)
    return format_space(arity.space)


def _scaled_text(a: Fraction) -> str:
    return "e" if a == 1 else f"{ExtReal(a)}*e"


def format_axiom(ax: AxiomSchema, arity_names: dict[Arity, str]) -> str:
    if isinstance(ax, Concrete):
        return f"axiom {ax.name}: {ax.sequent}"
    if isinstance(ax, Scaled):
        ctx = ", ".join(f"{x} =[{_scaled_text(a)}] {y}" for x, y, a in ax.context)
        return (
            f"axiom {ax.name}: forall e {{ {ctx} }} |- "
            f"{ax.lhs} =[{_scaled_text(ax.coefficient)}] {ax.rhs}"
        )
    arity = arity_names[ax.arity]
    return f"axiom {ax.name}: [{arity} over {ax.var}] |- {ax.lhs} =[{ax.bound_text()}] {ax.rhs}"


def format_theory(theory: Theory) -> str:
    arity_names: dict[Arity, str] = {}
    lines = [f"theory {_ident(theory.name, 'T')} {{"]

    def declare(arity: Arity) -> None:
        if arity not in arity_names:
            arity_names[arity] = f"A{len(arity_names) + 1}"
            lines.append(f"  arity {arity_names[arity]} = {_format_arity(arity)}")

    for _, arity in theory.signature.symbols:
        if isinstance(arity, GeometricStream) or not arity.is_discrete:
            declare(arity)
    for ax in theory.axioms:
        if isinstance(ax, ArityIndexed):
            declare(ax.arity)
    for name, arity in theory.signature.symbols:
        ref = arity_names.get(arity) or _format_arity(arity)
        lines.append(f"  op {name} : {ref}")
    lines.extend(f"  {format_axiom(ax, arity_names)}" for ax in theory.axioms)
    lines.append("}")
    return "\n".join(lines)


def format_theory_file(tf: TheoryFile) -> str:
    """Text that parses back to a TheoryFile equal to `tf`."""
    parts = [format_theory(tf.theory)]
    parts.extend(f"space {name} = {format_space(s)}" for name, s in tf.spaces.items())
    parts.extend(f"term {name} = {t}" for name, t in tf.terms.items())
    parts.extend(f"sequent {name} = {s}" for name, s in tf.sequents.items())
    return "\n".join(parts) + "\n"
