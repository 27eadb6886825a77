"""Signatures with metric arities, preterms, contexts and sequents."""

import itertools
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from metriq.errors import ArityError, SignatureError
from metriq.metric import (
    ZERO,
    ExtReal,
    FinMetric,
    FinPseudoMetric,
    Point,
    closure,
    metric_quotient,
)


@dataclass(frozen=True)
class FiniteArity:
    """A finite metric arity over the indices 0..n-1."""

    space: FinMetric

    def __post_init__(self) -> None:
        if self.space.points != tuple(range(len(self.space.points))):
            raise ArityError("finite arity points must be the indices 0..n-1")

    @classmethod
    def discrete(cls, n: int) -> "FiniteArity":
        return cls(FinMetric.discrete(list(range(n))))

    @property
    def size(self) -> int:
        return len(self.space.points)

    @property
    def is_discrete(self) -> bool:
        return not self.space.edges()

    def distance(self, i: int, j: int) -> ExtReal:
        return self.space.dist[i][j]

    def __str__(self) -> str:
        edges = ", ".join(f"d({i},{j})={e}" for i, j, e in self.space.edges())
        pts = " ".join(str(p) for p in self.space.points)
        return "{ " + pts + (" : " + edges if edges else "") + " }"


@dataclass(frozen=True)
class GeometricStream:
    """Countable arity 1, 2, ... with d(n, m) = scale * ratio^min(n, m) for n != m."""

    ratio: Fraction
    scale: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        object.__setattr__(self, "scale", Fraction(self.scale))
        if not 0 < self.ratio < 1:
            raise ArityError(f"stream ratio must lie in (0, 1), got {self.ratio}")
        if self.scale <= 0:
            raise ArityError(f"stream scale must be positive, got {self.scale}")

    def distance(self, i: int, j: int) -> ExtReal:
        if i == j:
            return ZERO
        return ExtReal(self.scale * self.ratio ** min(i, j))

    def __str__(self) -> str:
        return f"geometric(ratio = {_frac(self.ratio)}, scale = {_frac(self.scale)})"


Arity = Union[FiniteArity, GeometricStream]


def _frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Signature:
    symbols: tuple[tuple[str, Arity], ...] = ()

    def __post_init__(self) -> None:
        names = [name for name, _ in self.symbols]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise SignatureError(f"duplicate operation symbol {dup!r}")

    @classmethod
    def of(cls, symbols: Mapping[str, Arity]) -> "Signature":
        return cls(tuple(symbols.items()))

    def __contains__(self, name: object) -> bool:
        return any(name == n for n, _ in self.symbols)

    def __getitem__(self, name: str) -> Arity:
        for n, arity in self.symbols:
            if n == name:
                return arity
        raise SignatureError(f"unknown operation symbol {name!r}")

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.symbols)

    def constants(self) -> tuple[str, ...]:
        return tuple(
            n
            for n, a in self.symbols
            if isinstance(a, FiniteArity) and a.size == 0
        )

    def union(self, other: "Signature") -> "Signature":
        return Signature(self.symbols + other.symbols)


# Preterms


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class App:
    """Application of a finite-arity symbol; constants have no arguments."""

    symbol: str
    args: tuple["Preterm", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.symbol
        return f"{self.symbol}({', '.join(map(str, self.args))})"


@dataclass(frozen=True, slots=True)
class StreamApp:
    """Application of a stream-arity symbol to prefix . tail^omega.

    The prefix never ends with a copy of the tail, so equal streams have
    equal representations.
    """

    symbol: str
    prefix: tuple["Preterm", ...]
    tail: "Preterm"

    def __post_init__(self) -> None:
        prefix = self.prefix
        while prefix and prefix[-1] == self.tail:
            prefix = prefix[:-1]
        object.__setattr__(self, "prefix", tuple(prefix))

    def element(self, n: int) -> "Preterm":
        """The n-th argument (1-based)."""
        return stream_element(self.prefix, self.tail, n)

    def __str__(self) -> str:
        return f"{self.symbol}({', '.join(map(str, self.prefix))}; {self.tail})"


Preterm = Union[Var, App, StreamApp]


def stream_element(prefix: tuple[Preterm, ...], tail: Preterm, n: int) -> Preterm:
    if n < 1:
        raise ArityError(f"stream positions start at 1, got {n}")
    return prefix[n - 1] if n <= len(prefix) else tail


def children(t: Preterm) -> tuple[Preterm, ...]:
    if isinstance(t, App):
        return t.args
    if isinstance(t, StreamApp):
        return t.prefix + (t.tail,)
    return ()


def depth(t: Preterm) -> int:
    kids = children(t)
    return 1 + max(map(depth, kids)) if kids else 0


def subterms(t: Preterm) -> Iterator[Preterm]:
    """Post-order: every proper subterm comes before the term itself."""
    for kid in children(t):
        yield from subterms(kid)
    yield t


def variables(t: Preterm) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    out: set[str] = set()
    for kid in children(t):
        out |= variables(kid)
    return out


def symbols(t: Preterm) -> set[str]:
    out: set[str] = set()
    for s in subterms(t):
        if isinstance(s, (App, StreamApp)):
            out.add(s.symbol)
    return out


def substitute(t: Preterm, sigma: Mapping[str, Preterm]) -> Preterm:
    """Simultaneous substitution; variables outside `sigma` are unchanged."""
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if isinstance(t, App):
        if not t.args:
            return t
        return App(t.symbol, tuple(substitute(a, sigma) for a in t.args))
    return StreamApp(
        t.symbol,
        tuple(substitute(a, sigma) for a in t.prefix),
        substitute(t.tail, sigma),
    )


def rename_symbols(t: Preterm, renaming: Mapping[str, str]) -> Preterm:
    if isinstance(t, Var):
        return t
    if isinstance(t, App):
        return App(
            renaming.get(t.symbol, t.symbol),
            tuple(rename_symbols(a, renaming) for a in t.args),
        )
    return StreamApp(
        renaming.get(t.symbol, t.symbol),
        tuple(rename_symbols(a, renaming) for a in t.prefix),
        rename_symbols(t.tail, renaming),
    )


def replace_constants(t: Preterm, replacement: Mapping[str, Preterm]) -> Preterm:
    """Replace nullary applications by the given terms."""
    if isinstance(t, Var):
        return t
    if isinstance(t, App):
        if not t.args:
            return replacement.get(t.symbol, t)
        return App(t.symbol, tuple(replace_constants(a, replacement) for a in t.args))
    return StreamApp(
        t.symbol,
        tuple(replace_constants(a, replacement) for a in t.prefix),
        replace_constants(t.tail, replacement),
    )


def check_term(sig: Signature, t: Preterm) -> None:
    """Raise ArityError/SignatureError unless every application matches its arity."""
    for s in subterms(t):
        if isinstance(s, App):
            arity = sig[s.symbol]
            if not isinstance(arity, FiniteArity):
                raise ArityError(f"{s.symbol} takes a stream of arguments")
            if len(s.args) != arity.size:
                raise ArityError(
                    f"{s.symbol} takes {arity.size} arguments, got {len(s.args)}"
                )
        elif isinstance(s, StreamApp):
            if not isinstance(sig[s.symbol], GeometricStream):
                raise ArityError(f"{s.symbol} does not take a stream of arguments")


# Contexts and sequents


def _pair(x: str, y: str) -> tuple[str, str]:
    return (x, y) if x <= y else (y, x)


@dataclass(frozen=True, eq=False)
class Context:
    """A finite set of variable bounds x =_eps y; compared as a set."""

    entries: tuple[tuple[str, str, ExtReal], ...] = ()
    canonical: frozenset[tuple[str, str, ExtReal]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        entries = tuple((x, y, ExtReal.of(e)) for x, y, e in self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(
            self,
            "canonical",
            frozenset(
                (*_pair(x, y), e) for x, y, e in entries if e.is_finite and x != y
            ),
        )

    @classmethod
    def of(cls, *entries: tuple[str, str, "ExtReal | int | Fraction | str"]) -> "Context":
        return cls(tuple(entries))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Context) and self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)

    def __iter__(self) -> Iterator[tuple[str, str, ExtReal]]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def variables(self) -> list[str]:
        seen: dict[str, None] = {}
        for x, y, _ in self.entries:
            seen.setdefault(x)
            seen.setdefault(y)
        return list(seen)

    def contains(self, x: str, y: str, eps: ExtReal) -> bool:
        return x != y and eps.is_finite and (*_pair(x, y), eps) in self.canonical

    def union(self, other: Iterable[tuple[str, str, ExtReal]]) -> "Context":
        return Context(self.entries + tuple(other))

    def __str__(self) -> str:
        return "{ " + ", ".join(f"{x} =[{e}] {y}" for x, y, e in self.entries) + " }"


@dataclass(frozen=True, slots=True)
class Ok:
    term: Preterm

    def __str__(self) -> str:
        return f"{self.term} ok"


@dataclass(frozen=True, slots=True)
class Eq:
    lhs: Preterm
    rhs: Preterm
    bound: ExtReal

    def __str__(self) -> str:
        return f"{self.lhs} =[{self.bound}] {self.rhs}"


Body = Union[Ok, Eq]


@dataclass(frozen=True)
class Sequent:
    context: Context
    body: Body

    def variables(self) -> set[str]:
        out = set(self.context.variables())
        if isinstance(self.body, Ok):
            return out | variables(self.body.term)
        return out | variables(self.body.lhs) | variables(self.body.rhs)

    def terms(self) -> tuple[Preterm, ...]:
        if isinstance(self.body, Ok):
            return (self.body.term,)
        return (self.body.lhs, self.body.rhs)

    def __str__(self) -> str:
        ctx = str(self.context) + " " if len(self.context) else ""
        return f"{ctx}|- {self.body}"


def context_space(
    gamma: Context, vars: Iterable[str]
) -> tuple[FinPseudoMetric, FinMetric, dict[Point, Point]]:
    """The pseudometric X^_Gamma, its metric reflection X_Gamma and the projection."""
    names = list(dict.fromkeys(list(vars) + gamma.variables()))
    hat = closure(names, gamma.entries)
    space, projection = metric_quotient(hat)
    return hat, space, projection


def arity_context(arity: FiniteArity, names: list[str]) -> Context:
    """Gamma(C): the context { x_i =_{d_C(i,j)} x_j } of a finite arity."""
    return Context(
        tuple((names[i], names[j], e) for i, j, e in arity.space.edges())
    )


ArgShape = Union[tuple[Preterm, ...], tuple[tuple[Preterm, ...], Preterm]]


def reduced_app_constraints(
    arity: Arity, args: ArgShape
) -> tuple[tuple[Preterm, Preterm, ExtReal], ...]:
    """Finite premise family of the App rule for a symbol with this arity.

    Finite arity: every pair i < j at finite distance. Stream arity with
    prefix t_1..t_k and tail u: (t_i, t_j, c r^i) for i < j <= k,
    (t_i, u, c r^i) for i <= k, and (u, u, 0); these imply every instance of
    the infinite family by Refl and Max.
    """
    if isinstance(arity, FiniteArity):
        terms = args
        if len(terms) != arity.size:
            raise ArityError(f"expected {arity.size} arguments, got {len(terms)}")
        return tuple(
            (terms[i], terms[j], e) for i, j, e in arity.space.edges()  # type: ignore[misc]
        )
    prefix, tail = args  # type: ignore[misc]
    k = len(prefix)
    out: list[tuple[Preterm, Preterm, ExtReal]] = []
    for i, j in itertools.combinations(range(1, k + 1), 2):
        out.append((prefix[i - 1], prefix[j - 1], arity.distance(i, j)))
    for i in range(1, k + 1):
        out.append((prefix[i - 1], tail, arity.distance(i, k + 1)))
    out.append((tail, tail, ZERO))
    return tuple(out)


def app_constraints_of(sig: Signature, t: Preterm) -> tuple[tuple[Preterm, Preterm, ExtReal], ...]:
    if isinstance(t, App):
        return reduced_app_constraints(sig[t.symbol], t.args)
    if isinstance(t, StreamApp):
        return reduced_app_constraints(sig[t.symbol], (t.prefix, t.tail))
    return ()


def aligned_positions(s: Preterm, t: Preterm) -> list[tuple[Preterm, Preterm]]:
    """Argument pairs compared by the Nexp rule (streams aligned, tail last)."""
    if isinstance(s, App) and isinstance(t, App):
        return list(zip(s.args, t.args))
    if isinstance(s, StreamApp) and isinstance(t, StreamApp):
        k = max(len(s.prefix), len(t.prefix))
        pairs = [(s.element(n), t.element(n)) for n in range(1, k + 1)]
        pairs.append((s.tail, t.tail))
        return pairs
    raise ArityError(f"cannot align arguments of {s} and {t}")


