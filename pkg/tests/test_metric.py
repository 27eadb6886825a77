import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from metriq.errors import MetricError
from metriq.metric import (
    INF,
    ZERO,
    ExtReal,
    FinMetric,
    FinPseudoMetric,
    SpaceMap,
    closure,
    fibers,
    find_isometry,
    is_nonexpansive,
    isometric_via,
    metric_quotient,
    power_space,
)
from tests.strategies import DISTANCES, VARS, contexts, metric_spaces


def q(text: str) -> ExtReal:
    return ExtReal.of(text)


class TestExtReal:
    def test_parses_exact_literals(self) -> None:
        assert q("3/4") == ExtReal(Fraction(3, 4))
        assert q("0.5") == q("1/2")
        assert q("inf") is INF
        assert ExtReal.of(2) == ExtReal(Fraction(2))

    def test_rejects_floats_and_negatives(self) -> None:
        with pytest.raises(MetricError):
            ExtReal.of(0.5)  # type: ignore[arg-type]
        with pytest.raises(MetricError):
            q("-1")
        with pytest.raises(MetricError):
            q("half")

    def test_infinity_absorbs_addition(self) -> None:
        assert q("1") + INF == INF
        assert INF + ZERO == INF
        assert q("1/3") + q("2/3") == q("1")

    def test_total_order(self) -> None:
        values = [INF, q("2"), ZERO, q("1/2")]
        assert sorted(values) == [ZERO, q("1/2"), q("2"), INF]
        assert not INF < INF
        assert q("7") < INF

    def test_scale(self) -> None:
        assert q("3").scale(Fraction(1, 2)) == q("3/2")
        assert INF.scale(0) == ZERO
        assert INF.scale(2) == INF

    def test_text(self) -> None:
        assert [str(q(v)) for v in ("1", "1/2", "inf", "0.25")] == ["1", "1/2", "inf", "1/4"]


class TestSpaces:
    def test_from_matrix_checks_the_triangle_inequality(self) -> None:
        with pytest.raises(MetricError, match="triangle"):
            FinMetric.from_matrix(["a", "b", "c"], [[0, 1, 3], [1, 0, 1], [3, 1, 0]])

    def test_asymmetric_matrix_is_rejected(self) -> None:
        with pytest.raises(MetricError, match="asymmetric"):
            FinMetric.from_matrix(["a", "b"], [[0, 1], [2, 0]])

    def test_metric_forbids_distinct_points_at_zero(self) -> None:
        with pytest.raises(MetricError):
            FinMetric.from_matrix(["a", "b"], [[0, 0], [0, 0]])
        FinPseudoMetric.from_matrix(["a", "b"], [[0, 0], [0, 0]])

    def test_unknown_point(self, pair: FinMetric) -> None:
        with pytest.raises(MetricError, match="unknown point"):
            pair.d("a", "zz")

    def test_edges_lists_finite_pairs_once(self, triangle: FinMetric) -> None:
        assert triangle.edges() == [
            ("p", "q", q("1")),
            ("p", "r", q("3/2")),
            ("q", "r", q("1/2")),
        ]
        assert FinMetric.discrete(["a", "b"]).edges() == []


class TestClosure:
    def test_path_sums(self) -> None:
        space = closure(["x", "y", "z"], [("x", "y", 1), ("y", "z", 2)])
        assert space.d("x", "z") == q("3")

    def test_single_point(self) -> None:
        assert closure(["x"], []).d("x", "x") == ZERO

    def test_disconnected_points_are_infinitely_far(self) -> None:
        assert closure(["x", "y"], []).d("x", "y") == INF

    def test_keeps_the_least_constraint(self) -> None:
        space = closure(["x", "y"], [("x", "y", 2), ("y", "x", "1/2")])
        assert space.d("x", "y") == q("1/2")

    def test_unknown_endpoint(self) -> None:
        with pytest.raises(MetricError, match="unknown point"):
            closure(["x"], [("x", "y", 1)])


class TestQuotient:
    def test_merges_zero_classes(self) -> None:
        hat = closure(["x", "y", "z"], [("x", "y", 0), ("y", "z", 1)])
        space, projection = metric_quotient(hat)
        assert space.points == ("x", "z")
        assert projection == {"x": "x", "y": "x", "z": "z"}
        assert space.d("x", "z") == q("1")
        assert fibers(projection) == {"x": ("x", "y"), "z": ("z",)}


class TestMaps:
    def test_power_space_keeps_only_nonexpansive_maps(self) -> None:
        far = FinMetric.from_matrix(["p", "q"], [[0, 2], [2, 0]])
        unit = FinMetric.from_matrix([0, 1], [[0, 1], [1, 0]])
        assert len(power_space(far, unit)) == 2  # type: ignore[arg-type]
        assert len(power_space(far, FinMetric.discrete([0, 1]))) == 4  # type: ignore[arg-type]

    def test_power_space_uses_the_sup_metric(self, pair: FinMetric) -> None:
        square = power_space(pair, FinMetric.discrete([0, 1]))
        assert square.d(("a", "a"), ("b", "b")) == q("1")
        assert square.d(("a", "a"), ("a", "b")) == q("1")

    def test_isometry_search(self, triangle: FinMetric) -> None:
        relabelled = FinMetric.from_matrix(
            ["r", "q", "p"], [[0, "1/2", "3/2"], ["1/2", 0, 1], ["3/2", 1, 0]]
        )
        f = find_isometry(triangle, relabelled)
        assert f is not None and isometric_via(triangle, relabelled, f)
        assert find_isometry(triangle, FinMetric.discrete(["a", "b", "c"])) is None

    def test_space_map(self, pair: FinMetric, far_pair: FinMetric) -> None:
        glue = SpaceMap.of(far_pair, pair, {"a": "a", "b": "b"})
        assert glue.is_nonexpansive and glue.is_surjective
        back = SpaceMap.of(pair, far_pair, {"a": "a", "b": "b"})
        assert not back.is_nonexpansive
        assert glue.then(back).table == {"a": "a", "b": "b"}
        with pytest.raises(MetricError):
            SpaceMap.of(pair, far_pair, {"a": "a", "b": "nowhere"})
        with pytest.raises(MetricError, match="every source point"):
            SpaceMap(pair, far_pair, (("a", "a"),))


def floyd_warshall(names: list[str], edges: list[tuple[str, str, ExtReal]]) -> dict:
    """Reference shortest paths with None as infinity."""
    d: dict[tuple[str, str], Fraction | None] = {
        (a, b): Fraction(0) if a == b else None for a in names for b in names
    }
    for x, y, e in edges:
        if e.is_inf:
            continue
        for a, b in ((x, y), (y, x)):
            if d[a, b] is None or e.value < d[a, b]:  # type: ignore[operator]
                d[a, b] = e.value
    for k in names:
        for i in names:
            for j in names:
                if d[i, k] is None or d[k, j] is None:
                    continue
                via = d[i, k] + d[k, j]  # type: ignore[operator]
                if d[i, j] is None or via < d[i, j]:  # type: ignore[operator]
                    d[i, j] = via
    return d


@given(contexts())
def test_closure_matches_reference_shortest_paths(ctx) -> None:
    names = list(VARS)
    space = closure(names, ctx.entries)
    reference = floyd_warshall(names, list(ctx.entries))
    for a in names:
        for b in names:
            want = reference[a, b]
            assert space.d(a, b) == (INF if want is None else ExtReal(want))


@given(contexts())
def test_closure_is_a_pseudometric_below_its_constraints(ctx) -> None:
    space = closure(VARS, ctx.entries)
    space.validate()
    for x, y, e in ctx.entries:
        assert space.d(x, y) <= e


@given(contexts())
def test_quotient_fibers_are_the_zero_classes(ctx) -> None:
    hat = closure(VARS, ctx.entries)
    space, projection = metric_quotient(hat)
    assert set(projection.values()) == set(space.points)
    for a in VARS:
        for b in VARS:
            assert (projection[a] == projection[b]) == (hat.d(a, b) == ZERO)
            assert space.d(projection[a], projection[b]) == hat.d(a, b)


@given(metric_spaces(max_points=3), metric_spaces(max_points=2))
def test_power_space_points_are_nonexpansive(m: FinMetric, a: FinMetric) -> None:
    exponent = FinMetric(tuple(range(len(a))), a.dist)
    power = power_space(m, exponent)
    for f in power.points:
        table = dict(zip(exponent.points, f))  # type: ignore[arg-type]
        assert is_nonexpansive(exponent, m, table)


@given(metric_spaces(), st.randoms())
def test_isometry_survives_relabelling(space: FinMetric, rnd) -> None:
    order = list(range(len(space)))
    rnd.shuffle(order)
    names = [f"n{i}" for i in order]
    relabelled = FinMetric(
        tuple(names),
        tuple(tuple(space.dist[i][j] for j in order) for i in order),
    )
    assert find_isometry(space, relabelled) is not None


@given(contexts())
def test_closure_is_idempotent(ctx) -> None:
    space = closure(VARS, ctx.entries)
    assert closure(VARS, space.edges()) == space


def grid_pseudometrics(names: tuple[str, ...]):
    """Every pseudometric on `names` with distances drawn from DISTANCES."""
    pairs = list(itertools.combinations(range(len(names)), 2))
    for values in itertools.product([ExtReal.of(v) for v in DISTANCES], repeat=len(pairs)):
        d = [[ZERO] * len(names) for _ in names]
        for (i, j), v in zip(pairs, values):
            d[i][j] = d[j][i] = v
        space = FinPseudoMetric(names, tuple(tuple(row) for row in d))
        try:
            yield space.validate()
        except MetricError:
            continue


@given(contexts(names=("x", "y", "z"), max_size=4))
def test_closure_dominates_every_pseudometric_below_the_constraints(ctx) -> None:
    names = ("x", "y", "z")
    space = closure(names, ctx.entries)
    for other in grid_pseudometrics(names):
        if all(other.d(x, y) <= e for x, y, e in ctx.entries):
            assert all(other.d(a, b) <= space.d(a, b) for a in names for b in names)


@given(contexts())
def test_quotient_is_idempotent(ctx) -> None:
    space, _ = metric_quotient(closure(VARS, ctx.entries))
    again, projection = metric_quotient(space)
    assert again == space
    assert projection == {p: p for p in space.points}


@given(metric_spaces())
def test_power_of_a_single_point_is_the_space(m: FinMetric) -> None:
    power = power_space(m, FinMetric.discrete(["*"]))
    assert isometric_via(power, m, {(p,): p for p in m.points})
