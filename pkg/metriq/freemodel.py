"""Depth-bounded free and initial models, induced maps, surjection preservation."""

import itertools
import logging
from collections.abc import Mapping
from dataclasses import dataclass, field, replace

from metriq.algebra import Model, Undefined, enumerate_carriers, enumerate_models, evaluate, is_model
from metriq.config import ProverConfig
from metriq.errors import EmptyUniverseError, MetricError, NotWellFormedError
from metriq.kernel import Proof
from metriq.metric import ExtReal, FinMetric, Point, SpaceMap
from metriq.prover import SaturationState, refutes_below, relevant_symbols, saturate
from metriq.syntax import App, Context, Preterm, StreamApp, Var, rename_symbols, symbols
from metriq.theories import Theory, constant_name, with_generators

log = logging.getLogger(__name__)

OpKey = tuple[str, tuple]


@dataclass(frozen=True)
class FreeModelApprox:
    """Classes of closed well-formed terms up to depth D, metrized by saturated bounds.

    `ops` is the partial operation table read off the universe: for a finite
    arity the key is (symbol, argument classes); for a stream arity it is
    (symbol, ((prefix classes), tail class)).
    """

    theory: Theory
    depth: int
    space: FinMetric
    reps: dict[str, Preterm]
    unit: dict[Point, str]
    ops: dict[OpKey, str]
    term_class: dict[Preterm, str]
    exact: dict[tuple[str, str], bool]
    stabilized: bool
    truncated: bool
    state: SaturationState = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.space)

    def class_of(self, term: Preterm) -> str:
        if not self.space.points:
            raise EmptyUniverseError("the free model is empty")
        try:
            return self.term_class[term]
        except KeyError:
            raise NotWellFormedError(
                f"{term} is not a well-formed term of depth at most {self.depth}"
            ) from None

    def distance(self, a: str, b: str) -> ExtReal:
        return self.space.d(a, b)

    def witness(self, a: str, b: str) -> Proof | None:
        return self.state.witness(self.reps[a], self.reps[b])

    def is_exact(self, a: str, b: str) -> bool:
        return a == b or self.exact.get((a, b), False) or self.exact.get((b, a), False)

    def evaluate_closed(self, term: Preterm) -> str | None:
        """Class of a closed term, through the operation tables where needed."""
        known = self.term_class.get(term)
        if known is not None:
            return known
        if isinstance(term, Var):
            return None
        if isinstance(term, App):
            args = tuple(self.evaluate_closed(a) for a in term.args)
            if None in args:
                return None
            return self.ops.get((term.symbol, args))
        prefix = tuple(self.evaluate_closed(a) for a in term.prefix)
        tail = self.evaluate_closed(term.tail)
        if None in prefix or tail is None:
            return None
        return self.ops.get((term.symbol, (prefix, tail)))

    def generator_part(self) -> FinMetric:
        """The subspace spanned by the unit's image."""
        ids = list(dict.fromkeys(self.unit.values()))
        return FinMetric(
            tuple(ids), tuple(tuple(self.space.d(a, b) for b in ids) for a in ids)
        )


def _op_key(term: Preterm, term_class: Mapping[Preterm, str]) -> OpKey | None:
    if isinstance(term, App):
        return term.symbol, tuple(term_class[a] for a in term.args)
    if isinstance(term, StreamApp):
        return term.symbol, (tuple(term_class[a] for a in term.prefix), term_class[term.tail])
    return None


def _build(theory: Theory, full: Theory, gens: FinMetric | None, cfg: ProverConfig) -> FreeModelApprox:
    state = saturate(full, Context(), cfg=cfg)
    groups = state.classes()
    ids = [f"c{n}" for n in range(len(groups))]
    reps = {cid: state.universe[g[0]] for cid, g in zip(ids, groups)}
    term_class = {state.universe[i]: cid for cid, g in zip(ids, groups) for i in g}
    dist = tuple(
        tuple(state.bound(reps[a], reps[b]) for b in ids) for a in ids
    )
    space = FinMetric(tuple(ids), dist)
    ops: dict[OpKey, str] = {}
    for term, cid in term_class.items():
        key = _op_key(term, term_class)
        if key is not None:
            ops.setdefault(key, cid)
    unit = {}
    if gens is not None:
        for p in gens.points:
            unit[p] = term_class[App(constant_name(p))]
    log.info("free model of %s at depth %s: %s classes", theory, cfg.depth, len(ids))
    return FreeModelApprox(
        theory, cfg.depth, space, reps, unit, ops, term_class, {}, False, state.truncated, state
    )


def _stable(small: FreeModelApprox, large: FreeModelApprox) -> bool:
    """The inclusion of the depth-D classes into the depth-(D+1) classes is an isometry onto."""
    if small.truncated or large.truncated or len(small) != len(large):
        return False
    image = {}
    for cid, rep in small.reps.items():
        target = large.term_class.get(rep)
        if target is None:
            return False
        image[cid] = target
    if len(set(image.values())) != len(large):
        return False
    return all(
        small.distance(a, b) == large.distance(image[a], image[b])
        for a, b in itertools.combinations(small.reps, 2)
    )


def certify_distances(model: FreeModelApprox, cfg: ProverConfig) -> dict[tuple[str, str], bool]:
    """Mark a distance exact when some finite model of the theory attains it."""
    theory = model.state.theory
    pairs = list(itertools.combinations(model.reps, 2))
    exact = {pair: False for pair in pairs}
    open_pairs = set(pairs)
    if not open_pairs:
        return exact
    tests = {pair: refutes_below(model.distance(*pair)) for pair in pairs}
    only: set[str] = set()
    for rep in model.reps.values():
        only |= symbols(rep)
    examined = 0
    for size in range(1, cfg.model_size + 1):
        for carrier in enumerate_carriers(size, cfg.grid):
            for m in enumerate_models(theory.signature, carrier, only | relevant_symbols(theory, ())):
                examined += 1
                if examined > cfg.model_budget:
                    return exact
                if not is_model(m, theory, cfg.stream_prefix_cap):
                    continue
                _certify_in(m, model, tests, exact, open_pairs)
                if not open_pairs:
                    return exact
    return exact


def _certify_in(
    m: Model,
    model: FreeModelApprox,
    tests: Mapping,
    exact: dict[tuple[str, str], bool],
    open_pairs: set[tuple[str, str]],
) -> None:
    cache: dict = {}
    values = {cid: evaluate(m, rep, {}, cache) for cid, rep in model.reps.items()}
    for pair in list(open_pairs):
        a, b = values[pair[0]], values[pair[1]]
        if isinstance(a, Undefined) or isinstance(b, Undefined):
            continue
        if tests[pair](m.carrier.d(a, b)):
            exact[pair] = True
            open_pairs.discard(pair)


def free_model(
    theory: Theory,
    gens: FinMetric,
    cfg: ProverConfig | None = None,
    certify: bool = True,
    check_stable: bool = True,
) -> FreeModelApprox:
    """Depth-D approximation of Free(A): the initial model of T + T(A)."""
    cfg = cfg or ProverConfig()
    full = with_generators(theory, gens)
    model = _build(theory, full, gens, cfg)
    stabilized = False
    if check_stable:
        larger = _build(theory, full, gens, cfg.with_depth(cfg.depth + 1))
        stabilized = _stable(model, larger)
    exact = certify_distances(model, cfg) if certify else {}
    return _finish(model, exact, stabilized)


def initial_model(
    theory: Theory,
    cfg: ProverConfig | None = None,
    certify: bool = True,
    check_stable: bool = True,
) -> FreeModelApprox:
    cfg = cfg or ProverConfig()
    model = _build(theory, theory, None, cfg)
    stabilized = False
    if check_stable:
        stabilized = _stable(model, _build(theory, theory, None, cfg.with_depth(cfg.depth + 1)))
    exact = certify_distances(model, cfg) if certify else {}
    return _finish(model, exact, stabilized)


def _finish(
    model: FreeModelApprox, exact: dict[tuple[str, str], bool], stabilized: bool
) -> FreeModelApprox:
    return replace(model, exact=exact, stabilized=stabilized)


# Functoriality


def induced_map(
    theory: Theory,
    f: SpaceMap,
    cfg: ProverConfig | None = None,
    source: FreeModelApprox | None = None,
    target: FreeModelApprox | None = None,
) -> dict[str, str | None]:
    """Free(f) on classes: rename each constant [a] to [f(a)] and re-evaluate.

    A class whose image falls outside the depth-D target maps to None.
    """
    if not f.is_nonexpansive:
        raise MetricError("induced maps need a nonexpansive map")
    cfg = cfg or ProverConfig()
    source = source or free_model(theory, f.source, cfg, certify=False, check_stable=False)  # type: ignore[arg-type]
    target = target or free_model(theory, f.target, cfg, certify=False, check_stable=False)  # type: ignore[arg-type]
    renaming = {constant_name(a): constant_name(b) for a, b in f.mapping}
    out: dict[str, str | None] = {}
    for cid, rep in source.reps.items():
        image = target.evaluate_closed(rename_symbols(rep, renaming))
        if image is None:
            log.warning("class %s (%s) has no image at depth %s", cid, rep, target.depth)
        out[cid] = image
    return out


@dataclass(frozen=True)
class Preserved:
    pass


@dataclass(frozen=True)
class Violated:
    missed: str
    representative: Preterm


def check_surjection_preservation(
    theory: Theory,
    f: SpaceMap,
    cfg: ProverConfig | None = None,
    source: FreeModelApprox | None = None,
    target: FreeModelApprox | None = None,
) -> Preserved | Violated:
    if not f.is_surjective:
        raise MetricError("surjection preservation needs a surjective map")
    cfg = cfg or ProverConfig()
    source = source or free_model(theory, f.source, cfg, certify=False, check_stable=False)  # type: ignore[arg-type]
    target = target or free_model(theory, f.target, cfg, certify=False, check_stable=False)  # type: ignore[arg-type]
    hit = set(induced_map(theory, f, cfg, source, target).values())
    for cid in target.space.points:
        if cid not in hit:
            return Violated(cid, target.reps[cid])  # type: ignore[index]
    return Preserved()


def evaluation_map(model: FreeModelApprox, m: Model) -> dict[str, Point] | None:
    """[t] -> M[t] on class representatives, or None if some value is undefined."""
    cache: dict = {}
    out = {}
    for cid, rep in model.reps.items():
        value = evaluate(m, rep, {}, cache)
        if isinstance(value, Undefined):
            return None
        out[cid] = value
    return out


def respects_operations(model: FreeModelApprox, m: Model, phi: Mapping[str, Point]) -> bool:
    """phi commutes with every recorded operation of the depth-D carrier."""
    for (symbol, args), result in model.ops.items():
        if args and isinstance(args[0], tuple):
            value = m.apply_stream(symbol, phi[args[1]])
        else:
            value = m.apply(symbol, tuple(phi[a] for a in args))
        if value != phi[result]:
            return False
    return True

