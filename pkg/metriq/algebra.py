"""Finite models, evaluation, satisfaction and model enumeration."""

import itertools
import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Union

from metriq.errors import MetricError, SignatureError
from metriq.metric import INF, ZERO, ExtReal, FinMetric, Point, power_space
from metriq.syntax import (
    App,
    Context,
    FiniteArity,
    GeometricStream,
    Ok,
    Preterm,
    Sequent,
    Signature,
    Var,
    variables,
)
from metriq.theories import ArityIndexed, AxiomSchema, Concrete, Scaled, Theory

log = logging.getLogger(__name__)

Assignment = Mapping[str, Point]


@dataclass(frozen=True)
class StreamRule:
    """Eventual-value rule: a stream goes to phi(its tail value).

    `mapping` lists phi(p) for each carrier point in carrier order; None is the
    identity, i.e. the limit of the (eventually constant) stream.
    """

    mapping: tuple[Point, ...] | None = None

    @property
    def is_limit(self) -> bool:
        return self.mapping is None

    def __call__(self, carrier: FinMetric, tail_value: Point) -> Point:
        if self.mapping is None:
            return tail_value
        return self.mapping[carrier.index(tail_value)]


Table = Union[tuple[Point, ...], StreamRule]


@dataclass(frozen=True)
class Undefined:
    term: Preterm
    reason: str

    def __str__(self) -> str:
        return f"{self.term} undefined: {self.reason}"


@dataclass(frozen=True)
class Model:
    """A finite carrier with one table per symbol.

    A finite-arity table lists the value at every point of
    power_space(carrier, arity) in that space's point order.
    """

    signature: Signature
    carrier: FinMetric
    tables: tuple[tuple[str, Table], ...]

    @cached_property
    def _tables(self) -> dict[str, Table]:
        return dict(self.tables)

    @cached_property
    def _domains(self) -> dict[str, tuple[FinMetric, dict[tuple[Point, ...], int]]]:
        out = {}
        for name, arity in self.signature.symbols:
            if isinstance(arity, FiniteArity):
                dom = power_space(self.carrier, arity.space)
                out[name] = (dom, {p: i for i, p in enumerate(dom.points)})  # type: ignore[misc]
        return out

    def table(self, symbol: str) -> Table:
        try:
            return self._tables[symbol]
        except KeyError:
            raise SignatureError(f"model has no table for {symbol!r}") from None

    def domain(self, symbol: str) -> FinMetric:
        return self._domains[symbol][0]

    def apply(self, symbol: str, args: tuple[Point, ...]) -> Point:
        """Value of a finite-arity operation on an admissible argument tuple."""
        table = self.table(symbol)
        assert not isinstance(table, StreamRule)
        return table[self._domains[symbol][1][args]]

    def apply_stream(self, symbol: str, tail_value: Point) -> Point:
        table = self.table(symbol)
        assert isinstance(table, StreamRule)
        return table(self.carrier, tail_value)

    def validate(self) -> "Model":
        """Check table shapes and nonexpansiveness of every operation."""
        names = set(self.signature.names)
        if set(self._tables) != names:
            raise SignatureError("model tables do not match the signature")
        pts = set(self.carrier.points)
        for name, arity in self.signature.symbols:
            table = self._tables[name]
            if isinstance(arity, GeometricStream):
                if not isinstance(table, StreamRule):
                    raise MetricError(f"{name} needs an eventual-value rule")
                if table.mapping is not None:
                    phi = dict(zip(self.carrier.points, table.mapping))
                    if len(table.mapping) != len(self.carrier) or not set(phi.values()) <= pts:
                        raise MetricError(f"{name}: rule does not map the carrier")
                    if not _nonexpansive_self_map(self.carrier, phi):
                        raise MetricError(f"{name}: rule is not nonexpansive")
                continue
            if isinstance(table, StreamRule):
                raise MetricError(f"{name} needs a finite table")
            dom = self.domain(name)
            if len(table) != len(dom) or not set(table) <= pts:
                raise MetricError(f"{name}: table has the wrong shape")
            for i, j in itertools.combinations(range(len(dom)), 2):
                if self.carrier.d(table[i], table[j]) > dom.dist[i][j]:
                    raise MetricError(f"{name} is not nonexpansive")
        return self


def _nonexpansive_self_map(m: FinMetric, phi: Mapping[Point, Point]) -> bool:
    return all(m.d(phi[x], phi[y]) <= m.d(x, y) for x in m.points for y in m.points)


# Evaluation


def _admissible_finite(
    m: FinMetric, arity: FiniteArity, values: Sequence[Point]
) -> tuple[int, int, ExtReal] | None:
    for i, j, e in arity.space.edges():
        if m.d(values[i], values[j]) > e:  # type: ignore[index]
            return i, j, e  # type: ignore[return-value]
    return None


def _admissible_stream(
    m: FinMetric, arity: GeometricStream, prefix: Sequence[Point], tail: Point
) -> tuple[int, int, ExtReal] | None:
    k = len(prefix)
    seq = list(prefix) + [tail]
    for i in range(1, k + 1):
        for j in range(i + 1, k + 2):
            bound = arity.distance(i, j)
            if m.d(seq[i - 1], seq[j - 1]) > bound:
                return i, j, bound
    return None


def evaluate(
    model: Model,
    t: Preterm,
    alpha: Assignment,
    cache: dict[Preterm, "Point | Undefined"] | None = None,
) -> Point | Undefined:
    if cache is not None and t in cache:
        return cache[t]
    result = _evaluate(model, t, alpha, cache)
    if cache is not None:
        cache[t] = result
    return result


def _evaluate(
    model: Model, t: Preterm, alpha: Assignment, cache: dict | None
) -> Point | Undefined:
    if isinstance(t, Var):
        if t.name not in alpha:
            return Undefined(t, "unassigned variable")
        return alpha[t.name]
    arity = model.signature[t.symbol]
    m = model.carrier
    if isinstance(t, App):
        values = []
        for a in t.args:
            v = evaluate(model, a, alpha, cache)
            if isinstance(v, Undefined):
                return v
            values.append(v)
        assert isinstance(arity, FiniteArity)
        bad = _admissible_finite(m, arity, values)
        if bad is not None:
            i, j, e = bad
            return Undefined(t, f"arguments {i} and {j} further apart than {e}")
        return model.apply(t.symbol, tuple(values))
    prefix = []
    for a in t.prefix:
        v = evaluate(model, a, alpha, cache)
        if isinstance(v, Undefined):
            return v
        prefix.append(v)
    tail = evaluate(model, t.tail, alpha, cache)
    if isinstance(tail, Undefined):
        return tail
    assert isinstance(arity, GeometricStream)
    bad = _admissible_stream(m, arity, prefix, tail)
    if bad is not None:
        i, j, e = bad
        return Undefined(t, f"stream positions {i} and {j} further apart than {e}")
    return model.apply_stream(t.symbol, tail)


# Satisfaction


def assignments(
    carrier: FinMetric, context: Context, names: Sequence[str]
) -> Iterator[dict[str, Point]]:
    """All assignments of `names` into the carrier satisfying the context."""
    names = list(dict.fromkeys(names))
    checks: list[list[tuple[str, ExtReal]]] = [[] for _ in names]
    where = {n: i for i, n in enumerate(names)}
    for x, y, e in context:
        if e.is_inf or x == y or x not in where or y not in where:
            continue
        later, earlier = (x, y) if where[x] >= where[y] else (y, x)
        checks[where[later]].append((earlier, e))
    alpha: dict[str, Point] = {}

    def extend(i: int) -> Iterator[dict[str, Point]]:
        if i == len(names):
            yield dict(alpha)
            return
        for p in carrier.points:
            if all(carrier.d(p, alpha[other]) <= e for other, e in checks[i]):
                alpha[names[i]] = p
                yield from extend(i + 1)
        alpha.pop(names[i], None)

    yield from extend(0)


def violation(model: Model, seq: Sequent) -> dict[str, Point] | None:
    """First context-satisfying assignment under which the sequent fails."""
    for alpha in assignments(model.carrier, seq.context, sorted(seq.variables())):
        cache: dict = {}
        if isinstance(seq.body, Ok):
            if isinstance(evaluate(model, seq.body.term, alpha, cache), Undefined):
                return alpha
            continue
        s = evaluate(model, seq.body.lhs, alpha, cache)
        t = evaluate(model, seq.body.rhs, alpha, cache)
        if isinstance(s, Undefined) or isinstance(t, Undefined):
            return alpha
        if model.carrier.d(s, t) > seq.body.bound:
            return alpha
    return None


def satisfies(model: Model, seq: Sequent) -> bool:
    return violation(model, seq) is None


def _stream_bindings(
    carrier: FinMetric, arity: GeometricStream, cap: int
) -> Iterator[tuple[tuple[Point, ...], Point]]:
    for k in range(cap + 1):
        for values in itertools.product(carrier.points, repeat=k + 1):
            prefix, tail = values[:-1], values[-1]
            if prefix and prefix[-1] == tail:
                continue
            if _admissible_stream(carrier, arity, prefix, tail) is None:
                yield prefix, tail


def _satisfies_stream_schema(model: Model, schema: ArityIndexed, cap: int) -> bool:
    m = model.carrier
    for prefix_vals, tail_val in _stream_bindings(m, schema.arity, cap):
        names = [f"{schema.var}#{i}" for i in range(1, len(prefix_vals) + 1)]
        prefix = tuple(Var(n) for n in names)
        tail = Var(f"{schema.var}#_")
        alpha = dict(zip(names, prefix_vals)) | {tail.name: tail_val}
        cache: dict = {}
        for n in range(1, len(prefix) + 2):
            lhs, rhs, bound = schema.instance(prefix, tail, n)
            if n == len(prefix) + 1 and schema.converges:
                bound = ZERO
            s, t = evaluate(model, lhs, alpha, cache), evaluate(model, rhs, alpha, cache)
            if isinstance(s, Undefined) or isinstance(t, Undefined) or m.d(s, t) > bound:
                return False
    return True


def _satisfies_scaled(model: Model, schema: Scaled) -> bool:
    m = model.carrier
    names = sorted(
        {v for x, y, _ in schema.context for v in (x, y)}
        | variables(schema.lhs)
        | variables(schema.rhs)
    )
    for values in itertools.product(m.points, repeat=len(names)):
        alpha = dict(zip(names, values))
        e = schema.least_parameter(lambda x, y: m.d(alpha[x], alpha[y]))
        if e.is_inf:
            continue
        cache: dict = {}
        s, t = evaluate(model, schema.lhs, alpha, cache), evaluate(model, schema.rhs, alpha, cache)
        if isinstance(s, Undefined) or isinstance(t, Undefined):
            return False
        if m.d(s, t) > e.scale(schema.coefficient):
            return False
    return True


def satisfies_axiom(model: Model, schema: AxiomSchema, stream_cap: int = 2) -> bool:
    if isinstance(schema, Concrete):
        return satisfies(model, schema.sequent)
    if isinstance(schema, Scaled):
        return _satisfies_scaled(model, schema)
    return _satisfies_stream_schema(model, schema, stream_cap)


def is_model(model: Model, theory: Theory, stream_cap: int = 2) -> bool:
    return all(satisfies_axiom(model, ax, stream_cap) for ax in theory.axioms)


def is_homomorphism(source: Model, target: Model, phi: Mapping[Point, Point]) -> bool:
    m, n = source.carrier, target.carrier
    if any(n.d(phi[x], phi[y]) > m.d(x, y) for x in m.points for y in m.points):
        return False
    for name, arity in source.signature.symbols:
        if isinstance(arity, GeometricStream):
            if any(
                phi[source.apply_stream(name, u)] != target.apply_stream(name, phi[u])
                for u in m.points
            ):
                return False
            continue
        for args in source.domain(name).points:
            image = tuple(phi[a] for a in args)  # type: ignore[union-attr]
            if phi[source.apply(name, args)] != target.apply(name, image):  # type: ignore[arg-type]
                return False
    return True


# Enumeration


def _tables(carrier: FinMetric, domain: FinMetric) -> Iterator[tuple[Point, ...]]:
    """Every nonexpansive map domain -> carrier, as a value tuple."""
    size = len(domain)
    values: list[Point] = []

    def extend(i: int) -> Iterator[tuple[Point, ...]]:
        if i == size:
            yield tuple(values)
            return
        for v in carrier.points:
            if all(carrier.d(v, values[j]) <= domain.dist[i][j] for j in range(i)):
                values.append(v)
                yield from extend(i + 1)
                values.pop()

    yield from extend(0)


def _stream_rules(carrier: FinMetric) -> Iterator[StreamRule]:
    yield StreamRule(None)
    identity = tuple(carrier.points)
    for values in _tables(carrier, carrier):
        if values != identity:
            yield StreamRule(values)


def _choices(carrier: FinMetric, arity: FiniteArity | GeometricStream) -> Iterator[Table]:
    if isinstance(arity, GeometricStream):
        return _stream_rules(carrier)
    return _tables(carrier, power_space(carrier, arity.space))


def enumerate_models(
    sig: Signature, carrier: FinMetric, only: set[str] | None = None
) -> Iterator[Model]:
    """Every model of the signature on the carrier.

    Symbols outside `only` (when given) get just their first table.
    """
    symbols = list(sig.symbols)
    chosen: list[tuple[str, Table]] = []

    def extend(i: int) -> Iterator[Model]:
        if i == len(symbols):
            yield Model(sig, carrier, tuple(chosen))
            return
        name, arity = symbols[i]
        options = _choices(carrier, arity)
        if only is not None and name not in only:
            options = itertools.islice(options, 1)
        for table in options:
            chosen.append((name, table))
            yield from extend(i + 1)
            chosen.pop()

    yield from extend(0)


def enumerate_carriers(size: int, grid: Sequence[ExtReal]) -> Iterator[FinMetric]:
    """Every metric on 0..size-1 with off-diagonal distances from the grid.

    Larger distances are tried first.
    """
    values = sorted((g for g in set(grid) if g != ZERO), reverse=True)
    pairs = [(i, j) for j in range(size) for i in range(j)]
    d = [[ZERO if i == j else INF for j in range(size)] for i in range(size)]

    def fits(i: int, j: int) -> bool:
        for k in range(i):
            a, b, c = d[k][i], d[k][j], d[i][j]
            if a > b + c or b > a + c or c > a + b:
                return False
        return True

    def extend(p: int) -> Iterator[FinMetric]:
        if p == len(pairs):
            yield FinMetric(
                tuple(range(size)), tuple(tuple(row) for row in d)
            )
            return
        i, j = pairs[p]
        for v in values:
            d[i][j] = d[j][i] = v
            if fits(i, j):
                yield from extend(p + 1)
        d[i][j] = d[j][i] = INF

    yield from extend(0)


def models_of(
    theory: Theory,
    carrier: FinMetric,
    stream_cap: int = 2,
    only: set[str] | None = None,
) -> Iterator[Model]:
    found = 0
    for model in enumerate_models(theory.signature, carrier, only):
        if is_model(model, theory, stream_cap):
            found += 1
            yield model
    log.debug("%s: %s models on %s points", theory, found, len(carrier))
