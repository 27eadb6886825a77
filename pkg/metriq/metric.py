"""Exact distances and finite presented (pseudo)metric spaces.

All distances are `ExtReal` values: exact non-negative rationals plus INF.
No floating point value is ever produced by this module.
"""

import itertools
from collections.abc import Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Union

from metriq.errors import MetricError

Point = Hashable
Rational = Union[int, Fraction]


@total_ordering
@dataclass(frozen=True, slots=True)
class ExtReal:
    """A value of [0, inf]. `value is None` encodes INF."""

    value: Fraction | None

    def __post_init__(self) -> None:
        if self.value is not None:
            if not isinstance(self.value, Fraction):
                object.__setattr__(self, "value", Fraction(self.value))
            if self.value < 0:
                raise MetricError(f"negative distance {self.value}")

    @classmethod
    def of(cls, raw: "ExtReal | Rational | str") -> "ExtReal":
        """Coerce ints, Fractions and strings ("3/4", "0.5", "inf")."""
        if isinstance(raw, ExtReal):
            return raw
        if isinstance(raw, str):
            text = raw.strip().lower()
            if text in ("inf", "infinity", "∞"):
                return INF
            try:
                return cls(Fraction(text))
            except (ValueError, ZeroDivisionError) as exc:
                raise MetricError(f"not an exact rational: {raw!r}") from exc
        if isinstance(raw, float):
            raise MetricError("floating point distances are not accepted")
        return cls(Fraction(raw))

    @property
    def is_inf(self) -> bool:
        return self.value is None

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def __add__(self, other: "ExtReal") -> "ExtReal":
        if self.value is None or other.value is None:
            return INF
        return ExtReal(self.value + other.value)

    def scale(self, factor: Rational) -> "ExtReal":
        """Multiply by a non-negative rational; INF stays INF (0 * INF = 0)."""
        factor = Fraction(factor)
        if factor < 0:
            raise MetricError(f"negative scale factor {factor}")
        if self.value is None:
            return ZERO if factor == 0 else INF
        return ExtReal(self.value * factor)

    def __lt__(self, other: "ExtReal") -> bool:
        if not isinstance(other, ExtReal):
            return NotImplemented
        if self.value is None:
            return False
        if other.value is None:
            return True
        return self.value < other.value

    def __str__(self) -> str:
        if self.value is None:
            return "inf"
        if self.value.denominator == 1:
            return str(self.value.numerator)
        return f"{self.value.numerator}/{self.value.denominator}"

    def __repr__(self) -> str:
        return f"ExtReal({self})"


INF = ExtReal(None)
ZERO = ExtReal(Fraction(0))


@dataclass(frozen=True)
class FinPseudoMetric:
    """A finite space given by an ordered point list and a distance matrix."""

    points: tuple[Point, ...]
    dist: tuple[tuple[ExtReal, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.points)
        if len(set(self.points)) != n:
            raise MetricError("duplicate point identifiers")
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise MetricError("distance matrix does not match the point list")
        for i in range(n):
            if self.dist[i][i] != ZERO:
                raise MetricError(f"d({self.points[i]!r}, itself) must be 0")
            for j in range(n):
                if self.dist[i][j] != self.dist[j][i]:
                    raise MetricError(
                        f"asymmetric distance between {self.points[i]!r} "
                        f"and {self.points[j]!r}"
                    )
        # the triangle inequality is checked by validate(); derived spaces skip it

    def validate(self) -> "FinPseudoMetric":
        n = len(self.points)
        for i, j, k in itertools.product(range(n), repeat=3):
            if self.dist[i][k] > self.dist[i][j] + self.dist[j][k]:
                raise MetricError(
                    "triangle inequality fails for "
                    f"{self.points[i]!r}, {self.points[j]!r}, {self.points[k]!r}"
                )
        return self

    @classmethod
    def from_matrix(
        cls,
        points: Sequence[Point],
        rows: Sequence[Sequence["ExtReal | Rational | str"]],
    ) -> "FinPseudoMetric":
        space = cls(
            tuple(points),
            tuple(tuple(ExtReal.of(v) for v in row) for row in rows),
        )
        space.validate()
        return space

    def __len__(self) -> int:
        return len(self.points)

    def index(self, point: Point) -> int:
        where = self.__dict__.get("_where")
        if where is None:
            where = {p: i for i, p in enumerate(self.points)}
            object.__setattr__(self, "_where", where)
        try:
            return where[point]
        except KeyError:
            raise MetricError(f"unknown point {point!r}") from None

    def d(self, x: Point, y: Point) -> ExtReal:
        return self.dist[self.index(x)][self.index(y)]

    def edges(self) -> list[tuple[Point, Point, ExtReal]]:
        """All finite off-diagonal distances, each unordered pair once."""
        n = len(self.points)
        return [
            (self.points[i], self.points[j], self.dist[i][j])
            for i in range(n)
            for j in range(i + 1, n)
            if self.dist[i][j].is_finite
        ]


@dataclass(frozen=True)
class FinMetric(FinPseudoMetric):
    """A finite extended metric space: distinct points are at positive distance."""

    def __post_init__(self) -> None:
        super().__post_init__()
        n = len(self.points)
        for i in range(n):
            for j in range(i + 1, n):
                if self.dist[i][j] == ZERO:
                    raise MetricError(
                        f"distinct points {self.points[i]!r} and "
                        f"{self.points[j]!r} at distance 0"
                    )

    @classmethod
    def discrete(cls, points: Sequence[Point]) -> "FinMetric":
        n = len(points)
        return cls(
            tuple(points),
            tuple(tuple(ZERO if i == j else INF for j in range(n)) for i in range(n)),
        )


def closure(
    points: Iterable[Point],
    constraints: Iterable[tuple[Point, Point, "ExtReal | Rational | str"]],
) -> FinPseudoMetric:
    """Least pseudometric below every constraint: all-pairs shortest paths."""
    pts = tuple(points)
    where = {p: i for i, p in enumerate(pts)}
    n = len(pts)
    d = [[ZERO if i == j else INF for j in range(n)] for i in range(n)]
    for x, y, bound in constraints:
        if x not in where or y not in where:
            missing = x if x not in where else y
            raise MetricError(f"unknown point {missing!r} in constraint")
        i, j, b = where[x], where[y], ExtReal.of(bound)
        if b < d[i][j]:
            d[i][j] = d[j][i] = b
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik.is_inf:
                continue
            di = d[i]
            for j in range(n):
                via = dik + dk[j]
                if via < di[j]:
                    di[j] = via
    return FinPseudoMetric(pts, tuple(tuple(row) for row in d))


def metric_quotient(
    p: FinPseudoMetric,
) -> tuple[FinMetric, dict[Point, Point]]:
    """Merge distance-0 classes; each class is named by its first member."""
    projection: dict[Point, Point] = {}
    reps: list[int] = []
    for i, x in enumerate(p.points):
        for r in reps:
            if p.dist[r][i] == ZERO:
                projection[x] = p.points[r]
                break
        else:
            reps.append(i)
            projection[x] = x
    space = FinMetric(
        tuple(p.points[r] for r in reps),
        tuple(tuple(p.dist[r][s] for s in reps) for r in reps),
    )
    return space, projection


def fibers(projection: Mapping[Point, Point]) -> dict[Point, tuple[Point, ...]]:
    out: dict[Point, list[Point]] = {}
    for x, cls in projection.items():
        out.setdefault(cls, []).append(x)
    return {cls: tuple(members) for cls, members in out.items()}


def is_nonexpansive(
    source: FinPseudoMetric, target: FinPseudoMetric, f: Mapping[Point, Point]
) -> bool:
    pts = source.points
    return all(
        target.d(f[pts[i]], f[pts[j]]) <= source.dist[i][j]
        for i in range(len(pts))
        for j in range(i + 1, len(pts))
    )


def power_space(m: FinMetric, a: FinMetric) -> FinMetric:
    """M^A: nonexpansive maps A -> M (as tuples indexed like a.points), sup metric."""
    n = len(a.points)
    maps: list[tuple[int, ...]] = []

    def extend(prefix: list[int]) -> None:
        i = len(prefix)
        if i == n:
            maps.append(tuple(prefix))
            return
        for v in range(len(m.points)):
            if all(m.dist[v][prefix[j]] <= a.dist[i][j] for j in range(i)):
                prefix.append(v)
                extend(prefix)
                prefix.pop()

    extend([])
    points = tuple(tuple(m.points[v] for v in f) for f in maps)
    dist = tuple(
        tuple(
            max((m.dist[f[i]][g[i]] for i in range(n)), default=ZERO) for g in maps
        )
        for f in maps
    )
    return FinMetric(points, dist)


def isometric_via(
    source: FinPseudoMetric, target: FinPseudoMetric, f: Mapping[Point, Point]
) -> bool:
    """True iff `f` is a distance-preserving bijection source -> target."""
    if len(source) != len(target):
        return False
    if sorted(map(repr, (f[x] for x in source.points))) != sorted(
        map(repr, target.points)
    ):
        return False
    return all(
        target.d(f[x], f[y]) == source.d(x, y)
        for x in source.points
        for y in source.points
    )


def find_isometry(a: FinPseudoMetric, b: FinPseudoMetric) -> dict[Point, Point] | None:
    """Brute-force isometry search; meant for the small spaces of the test suite."""
    if len(a) != len(b):
        return None
    for perm in itertools.permutations(b.points):
        f = dict(zip(a.points, perm))
        if all(b.d(f[x], f[y]) == a.d(x, y) for x in a.points for y in a.points):
            return f
    return None


@dataclass(frozen=True)
class SpaceMap:
    """A map between finite spaces, given point by point."""

    source: FinPseudoMetric
    target: FinPseudoMetric
    mapping: tuple[tuple[Point, Point], ...]

    def __post_init__(self) -> None:
        table = dict(self.mapping)
        if set(table) != set(self.source.points):
            raise MetricError("map must be defined on every source point")
        for image in table.values():
            self.target.index(image)

    @classmethod
    def of(
        cls, source: FinPseudoMetric, target: FinPseudoMetric, mapping: Mapping[Point, Point]
    ) -> "SpaceMap":
        return cls(source, target, tuple((p, mapping[p]) for p in source.points))

    def __call__(self, point: Point) -> Point:
        return dict(self.mapping)[point]

    @property
    def table(self) -> dict[Point, Point]:
        return dict(self.mapping)

    @property
    def is_nonexpansive(self) -> bool:
        return is_nonexpansive(self.source, self.target, self.table)

    @property
    def is_surjective(self) -> bool:
        return set(self.table.values()) == set(self.target.points)

    def then(self, other: "SpaceMap") -> "SpaceMap":
        """Composite: first self, then other."""
        return SpaceMap.of(self.source, other.target, {p: other(self(p)) for p in self.source.points})
