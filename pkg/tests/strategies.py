"""Hypothesis strategies shared by the property tests."""

from fractions import Fraction

from hypothesis import strategies as st

from metriq.metric import INF, ExtReal, FinMetric
from metriq.syntax import App, Context, Preterm, StreamApp, Var

VARS = ("x", "y", "z", "u", "v", "w")
DISTANCES = ("0", "1/4", "1/2", "1", "3/2", "2", "inf")
GRID_STEPS = (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2))

distances = st.sampled_from(DISTANCES).map(ExtReal.of)
positive = st.sampled_from(DISTANCES[1:]).map(ExtReal.of)


@st.composite
def contexts(draw: st.DrawFn, names: tuple[str, ...] = VARS, max_size: int = 8) -> Context:
    entries = draw(
        st.lists(
            st.tuples(st.sampled_from(names), st.sampled_from(names), distances),
            max_size=max_size,
        )
    )
    return Context(tuple(entries))


@st.composite
def metric_spaces(draw: st.DrawFn, max_points: int = 4) -> FinMetric:
    """Finite metrics: shortest paths over random positive edge weights."""
    n = draw(st.integers(1, max_points))
    d = [[Fraction(0) if i == j else None for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            w = draw(st.sampled_from(GRID_STEPS + (None,)))
            d[i][j] = d[j][i] = w
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] is not None and d[k][j] is not None:
                    via = d[i][k] + d[k][j]
                    if d[i][j] is None or via < d[i][j]:
                        d[i][j] = via
    rows = [[INF if v is None else ExtReal(v) for v in row] for row in d]
    return FinMetric.from_matrix([f"p{i}" for i in range(n)], rows)  # type: ignore[return-value]


def terms(max_leaves: int = 6) -> st.SearchStrategy[Preterm]:
    """Terms over f/2, g/1, constant c and the stream symbol lim."""
    leaves = st.one_of(st.sampled_from(VARS[:3]).map(Var), st.just(App("c")))
    return st.recursive(
        leaves,
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda a: App("f", a)),
            inner.map(lambda a: App("g", (a,))),
            st.tuples(st.lists(inner, max_size=2), inner).map(
                lambda pt: StreamApp("lim", tuple(pt[0]), pt[1])
            ),
        ),
        max_leaves=max_leaves,
    )


def substitutions(max_leaves: int = 3) -> st.SearchStrategy[dict[str, Preterm]]:
    return st.dictionaries(st.sampled_from(VARS[:3]), terms(max_leaves), max_size=3)
