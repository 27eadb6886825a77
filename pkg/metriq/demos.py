"""Worked scenarios: each row pairs an expected value with what metriq computes."""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction

from metriq.algebra import Model, StreamRule, is_model
from metriq.config import ProverConfig
from metriq.freemodel import Preserved, Violated, check_surjection_preservation, free_model
from metriq.metric import ExtReal, FinMetric, SpaceMap, find_isometry
from metriq.prover import Countermodel, countermodel_search, min_distance
from metriq.syntax import App, Context, Preterm
from metriq.theories import builtin, constant_name, with_generators

log = logging.getLogger(__name__)

DEMO_CONFIG = ProverConfig(
    depth=2,
    stream_prefix_cap=1,
    model_size=3,
    grid=("0", "1/2", "1", "inf"),
    model_budget=20000,
)


@dataclass(frozen=True)
class Row:
    claim: str
    expected: str
    computed: str

    @property
    def ok(self) -> bool:
        return self.expected == self.computed


@dataclass(frozen=True)
class DemoReport:
    name: str
    rows: tuple[Row, ...]

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    def table(self) -> list[str]:
        width = max((len(r.claim) for r in self.rows), default=5)
        lines = [f"{'claim':{width}}  {'expected':>10}  {'computed':>10}"]
        for r in self.rows:
            mark = "" if r.ok else "  MISMATCH"
            lines.append(f"{r.claim:{width}}  {r.expected:>10}  {r.computed:>10}{mark}")
        return lines


def pair_space(d: ExtReal | str, a: str = "a", b: str = "b") -> FinMetric:
    return FinMetric.from_matrix([a, b], [[0, d], [d, 0]])  # type: ignore[return-value]


def _c(point: str) -> App:
    return App(constant_name(point))


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def demo_t1(cfg: ProverConfig) -> DemoReport:
    theory = builtin("t1")
    rows = []
    for d in ("2", "3/2", "11/10"):
        fm = free_model(theory, pair_space(d), cfg, certify=False, check_stable=False)
        mixed = App("f", (_c("a"), _c("b"))) in fm.term_class
        rows.append(Row(f"d={d}: f(a,b) is a term", "no", _yes(mixed)))
        rows.append(
            Row(f"d={d}: generators isometric to A", "yes", _yes(find_isometry(fm.generator_part(), pair_space(d)) is not None))
        )
    fm = free_model(theory, pair_space("1"), cfg, check_stable=False)
    a, b = fm.unit["a"], fm.unit["b"]
    rows.append(Row("d=1: f(a,b) is a term", "yes", _yes(App("f", (_c("a"), _c("b"))) in fm.term_class)))
    rows.append(Row("d=1: d([a],[b])", "1", str(fm.distance(a, b))))
    rows.append(Row("d=1: d([a],[b]) certified", "yes", _yes(fm.is_exact(a, b))))
    return DemoReport("t1", tuple(rows))


def demo_t2(cfg: ProverConfig) -> DemoReport:
    theory = builtin("t2")
    far = free_model(theory, pair_space("11/10"), cfg, certify=False)
    near = free_model(theory, pair_space("1"), cfg, certify=False)
    return DemoReport(
        "t2",
        (
            Row("d=11/10: points", "2", str(len(far))),
            Row("d=11/10: distance", "11/10", str(far.distance(far.unit["a"], far.unit["b"]))),
            Row("d=1: points", "1", str(len(near))),
        ),
    )


def demo_comp(cfg: ProverConfig) -> DemoReport:
    theory = builtin("comp")
    space = FinMetric.from_matrix(
        ["p", "q", "r"],
        [[0, 1, "3/2"], [1, 0, "1/2"], ["3/2", "1/2", 0]],
    )
    fm = free_model(theory, space, cfg, certify=False)  # type: ignore[arg-type]
    limit = Model(theory.signature, space, (("lim", StreamRule()),))  # type: ignore[arg-type]
    return DemoReport(
        "comp",
        (
            Row("Free(X) isometric to X", "yes", _yes(find_isometry(fm.space, space) is not None)),
            Row("eventual-value lim is a model", "yes", _yes(is_model(limit, theory, cfg.stream_prefix_cap))),
        ),
    )


def _iterate(symbol: str, t: Preterm, n: int) -> Preterm:
    for _ in range(n):
        t = App(symbol, (t,))
    return t


def demo_contraction(cfg: ProverConfig) -> DemoReport:
    theory = builtin("contraction")
    fm = free_model(theory, pair_space("1"), cfg, certify=False, check_stable=False)
    rows = [Row("points", str(2 * (cfg.depth + 1)), str(len(fm)))]
    for n in range(cfg.depth + 1):
        a = fm.class_of(_iterate("s", _c("a"), n))
        b = fm.class_of(_iterate("s", _c("b"), n))
        rows.append(Row(f"level {n}: d", str(ExtReal(Fraction(1, 2**n))), str(fm.distance(a, b))))
    across = fm.distance(fm.class_of(_iterate("s", _c("a"), 1)), fm.class_of(_c("a")))
    rows.append(Row("levels 0/1: d(s a, a)", "inf", str(across)))
    return DemoReport("contraction", tuple(rows))


def demo_strongfinit(cfg: ProverConfig) -> DemoReport:
    theory = builtin("strongfinit")
    space = FinMetric.from_matrix(
        ["x1", "x2", "x3"],
        [[0, 1, "inf"], [1, 0, "inf"], ["inf", "inf", 0]],
    )
    full = with_generators(theory, space)  # type: ignore[arg-type]
    s = App("f", (_c("x1"), App("g", (_c("x3"),))))
    t = App("f", (_c("x2"), App("g'", (_c("x3"),))))
    report = min_distance(full, Context(), s, t, cfg)
    found = countermodel_search(full, Context(), s, t, ExtReal(Fraction(1, 2)), cfg)
    return DemoReport(
        "strongfinit",
        (
            Row("upper bound", "1", str(report.upper)),
            Row("bound certified exact", "yes", _yes(report.exact)),
            Row("separating model at 1/2", "yes", _yes(isinstance(found, Countermodel))),
        ),
    )


def demo_surj(cfg: ProverConfig) -> DemoReport:
    lattice = builtin("semilattice")
    three = FinMetric.discrete(["a", "b", "c"])
    two = FinMetric.discrete(["p", "q"])
    onto = SpaceMap.of(three, two, {"a": "p", "b": "q", "c": "q"})
    kept = check_surjection_preservation(lattice, onto, cfg)
    t1 = builtin("t1")
    discrete = pair_space("inf")
    glue = SpaceMap.of(discrete, pair_space("1"), {"a": "a", "b": "b"})
    lost = check_surjection_preservation(t1, glue, cfg)
    missed = str(lost.representative) if isinstance(lost, Violated) else "-"
    log.info("t1 discretization misses %s", missed)
    return DemoReport(
        "surj",
        (
            Row("semilattice 3 -> 2", "Preserved", "Preserved" if isinstance(kept, Preserved) else "Violated"),
            Row("t1 A^d -> A", "Violated", "Violated" if isinstance(lost, Violated) else "Preserved"),
        ),
    )


DEMOS: dict[str, Callable[[ProverConfig], DemoReport]] = {
    "t1": demo_t1,
    "t2": demo_t2,
    "comp": demo_comp,
    "contraction": demo_contraction,
    "strongfinit": demo_strongfinit,
    "surj": demo_surj,
}
