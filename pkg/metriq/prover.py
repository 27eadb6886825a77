"""Bounded saturation: best derivable bounds and well-formedness, with proofs.

The engine keeps a finite universe of terms, an ok-proof per well-formed
term and, per unordered pair, the best bound found so far with its witness.
Rounds apply App marking, term generation, axiom instantiation and Nexp;
Triang closure runs incrementally off a worklist whenever a bound improves.
"""

import itertools
import logging
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field

from metriq.algebra import (
    Model,
    Undefined,
    assignments,
    enumerate_carriers,
    enumerate_models,
    evaluate,
    is_model,
)
from metriq.config import ProverConfig
from metriq.errors import NotWellFormedError
from metriq.kernel import (
    AxData,
    InstData,
    ParametricBoundFamily,
    Proof,
    SubstData,
)
from metriq.metric import INF, ZERO, ExtReal, FinMetric, Point
from metriq.syntax import (
    App,
    Context,
    Eq,
    FiniteArity,
    GeometricStream,
    Ok,
    Preterm,
    Sequent,
    StreamApp,
    Var,
    aligned_positions,
    app_constraints_of,
    children,
    depth,
    replace_constants,
    substitute,
    symbols,
    variables,
)
from metriq.theories import (
    ArityIndexed,
    AxiomSchema,
    Concrete,
    Scaled,
    SpreadApp,
    Theory,
    constant_name,
    template_nodes,
    with_generators,
)

log = logging.getLogger(__name__)


def match(pattern: Preterm, term: Preterm, sigma: dict[str, Preterm]) -> dict[str, Preterm] | None:
    """First-order matching of `pattern` against `term`, extending `sigma`."""
    if isinstance(pattern, Var):
        bound = sigma.get(pattern.name)
        if bound is None:
            return sigma | {pattern.name: term}
        return sigma if bound == term else None
    if isinstance(pattern, App):
        if not isinstance(term, App) or term.symbol != pattern.symbol:
            return None
        if len(term.args) != len(pattern.args):
            return None
        pairs = list(zip(pattern.args, term.args))
    else:
        if not isinstance(term, StreamApp) or term.symbol != pattern.symbol:
            return None
        if len(term.prefix) != len(pattern.prefix):
            return None
        pairs = list(zip(pattern.prefix + (pattern.tail,), term.prefix + (term.tail,)))
    for p, t in pairs:
        sigma = match(p, t, sigma)  # type: ignore[assignment]
        if sigma is None:
            return None
    return sigma


def _describe(sigma: dict[str, Preterm]) -> str:
    return ", ".join(f"{x} := {t}" for x, t in sorted(sigma.items(), key=lambda kv: kv[0]))


@dataclass
class SaturationState:
    theory: Theory
    context: Context
    cfg: ProverConfig
    universe: list[Preterm] = field(default_factory=list)
    truncated: bool = False
    iterations: int = 0
    schema_instantiations: list[tuple[str, str]] = field(default_factory=list)
    until: Callable[["SaturationState"], bool] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self._index: dict[Preterm, int] = {}
        self._ok: dict[int, Proof] = {}
        self._bounds: dict[tuple[int, int], tuple[ExtReal, Proof]] = {}
        self._flipped: dict[tuple[int, int], Proof] = {}
        self._nbrs: dict[int, set[int]] = {}
        self._parent: list[int] = []
        self._work: list[tuple[int, int]] = []
        self._changed = False
        self._axiom_leaves: dict[str, Proof] = {}

    # queries

    def __contains__(self, t: object) -> bool:
        return t in self._index

    def index_of(self, t: Preterm) -> int:
        return self._index[t]

    def is_ok(self, t: Preterm) -> bool:
        i = self._index.get(t)
        return i is not None and i in self._ok

    def ok_proof(self, t: Preterm) -> Proof | None:
        i = self._index.get(t)
        return None if i is None else self._ok.get(i)

    @property
    def ok_set(self) -> list[Preterm]:
        return [self.universe[i] for i in sorted(self._ok)]

    @property
    def bounds(self) -> dict[tuple[Preterm, Preterm], tuple[ExtReal, Proof]]:
        return {
            (self.universe[i], self.universe[j]): v for (i, j), v in self._bounds.items()
        }

    def bound(self, s: Preterm, t: Preterm) -> ExtReal:
        if s not in self._index or t not in self._index:
            return INF
        return self._bound(self._index[s], self._index[t])

    def witness(self, s: Preterm, t: Preterm) -> Proof | None:
        """Proof of s =_b t at the recorded bound b, or None when b is INF."""
        if self.bound(s, t).is_inf:
            return None
        return self._oriented(self._index[s], self._index[t])

    def proof_at(self, s: Preterm, t: Preterm, eps: ExtReal) -> Proof | None:
        """Proof of s =_eps t when the recorded bound is at most eps.

        An unrelated pair has no proof even at eps = INF: no rule concludes
        a bound without a finite one to weaken.
        """
        if s not in self._index or t not in self._index:
            return None
        b = self.bound(s, t)
        if b > eps or (b.is_inf and s != t):
            return None
        i, j = self._index[s], self._index[t]
        if i == j and i not in self._ok:
            return None
        return self._proof_eq(i, j, eps)

    def find(self, i: int) -> int:
        parent = self._parent
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def classes(self) -> list[list[int]]:
        """0-classes of well-formed terms, each sorted, ordered by least member."""
        groups: dict[int, list[int]] = {}
        for i in sorted(self._ok):
            groups.setdefault(self.find(i), []).append(i)
        return sorted(groups.values(), key=lambda g: g[0])

    def representatives(self) -> list[int]:
        return [g[0] for g in self.classes()]

    # recording

    def _gamma(self, body: Eq | Ok) -> Sequent:
        return Sequent(self.context, body)

    def add_term(self, t: Preterm, force: bool = False) -> int | None:
        i = self._index.get(t)
        if i is not None:
            return i
        if not force and depth(t) > self.cfg.depth:
            return None
        for kid in children(t):
            if self.add_term(kid, force) is None:
                return None
        if not force and len(self.universe) >= self.cfg.max_terms:
            self.truncated = True
            return None
        i = len(self.universe)
        self.universe.append(t)
        self._index[t] = i
        self._parent.append(i)
        self._nbrs[i] = set()
        self._changed = True
        if isinstance(t, Var):
            self._ok[i] = Proof("Var", self._gamma(Ok(t)))
        return i

    def _bound(self, i: int, j: int) -> ExtReal:
        if i == j:
            return ZERO
        entry = self._bounds.get((i, j) if i < j else (j, i))
        return INF if entry is None else entry[0]

    def _oriented(self, i: int, j: int) -> Proof:
        if i == j:
            return Proof("Refl", self._gamma(Eq(self.universe[i], self.universe[i], ZERO)), (self._ok[i],))
        if i < j:
            return self._bounds[(i, j)][1]
        key = (j, i)
        b, p = self._bounds[key]
        cached = self._flipped.get(key)
        if cached is None or cached.premises[0] is not p:
            cached = Proof("Symm", self._gamma(Eq(self.universe[i], self.universe[j], b)), (p,))
            self._flipped[key] = cached
        return cached

    def _proof_eq(self, i: int, j: int, eps: ExtReal) -> Proof:
        base = self._oriented(i, j)
        b = self._bound(i, j)
        if b == eps:
            return base
        return Proof("Max", self._gamma(Eq(self.universe[i], self.universe[j], eps)), (base,))

    def _union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self._parent[max(ri, rj)] = min(ri, rj)

    def record(self, i: int, j: int, b: ExtReal, proof: Proof) -> bool:
        """Keep `proof` (of u_i =_b u_j) when it beats the recorded bound."""
        if i == j or b.is_inf or b >= self._bound(i, j):
            return False
        if i > j:
            proof = Proof("Symm", self._gamma(Eq(self.universe[j], self.universe[i], b)), (proof,))
            i, j = j, i
        self._bounds[(i, j)] = (b, proof)
        self._nbrs[i].add(j)
        self._nbrs[j].add(i)
        if b == ZERO:
            self._union(i, j)
        self._work.append((i, j))
        self._changed = True
        return True

    def _set_ok(self, i: int, proof: Proof) -> None:
        self._ok[i] = proof
        self._changed = True

    def relax(self) -> None:
        """Triang closure over the bound graph, driven by the worklist."""
        while self._work:
            i, j = self._work.pop()
            b = self._bound(i, j)
            for a, c in ((i, j), (j, i)):
                for k in list(self._nbrs[c]):
                    if k == a:
                        continue
                    total = b + self._bound(c, k)
                    if total < self._bound(a, k):
                        first, second = self._oriented(a, c), self._oriented(c, k)
                        self.record(
                            a,
                            k,
                            total,
                            Proof(
                                "Triang",
                                self._gamma(Eq(self.universe[a], self.universe[k], total)),
                                (first, second),
                            ),
                        )

    # rules

    def _constraints_hold(self, t: Preterm) -> bool:
        for a, b, e in app_constraints_of(self.theory.signature, t):
            if self.bound(a, b) > e:
                return False
        return True

    def _app_proof(self, t: Preterm) -> Proof:
        premises: list[Proof] = []
        seen: set[Preterm] = set()
        for kid in children(t):
            if kid not in seen:
                seen.add(kid)
                premises.append(self._ok[self._index[kid]])
        for a, b, e in app_constraints_of(self.theory.signature, t):
            premises.append(self._proof_eq(self._index[a], self._index[b], e))
        return Proof("App", self._gamma(Ok(t)), tuple(premises))

    def mark_apps(self) -> None:
        for i, t in enumerate(self.universe):
            if i in self._ok or isinstance(t, Var):
                continue
            if all(self._index[k] in self._ok for k in children(t)) and self._constraints_hold(t):
                self._set_ok(i, self._app_proof(t))

    def generate(self) -> None:
        reps = [self.universe[i] for i in self.representatives()]
        inner = [r for r in reps if depth(r) < self.cfg.depth]
        for name, arity in self.theory.signature.symbols:
            if isinstance(arity, FiniteArity):
                if arity.size == 0:
                    continue
                candidates: Iterable[Preterm] = (
                    App(name, args) for args in self._admissible_tuples(arity, inner)
                )
            else:
                candidates = self._admissible_streams(name, arity, inner)
            for t in candidates:
                if t in self._index:
                    continue
                if self.add_term(t) is None:
                    return

    def _admissible_tuples(self, arity: FiniteArity, pool: Sequence[Preterm]) -> Iterator[tuple[Preterm, ...]]:
        n = arity.size
        chosen: list[Preterm] = []

        def extend(i: int) -> Iterator[tuple[Preterm, ...]]:
            if i == n:
                yield tuple(chosen)
                return
            for t in pool:
                if all(
                    self.bound(t, chosen[j]) <= arity.distance(i, j)
                    for j in range(i)
                    if arity.distance(i, j).is_finite
                ):
                    chosen.append(t)
                    yield from extend(i + 1)
                    chosen.pop()

        yield from extend(0)

    def _admissible_streams(
        self, name: str, arity: GeometricStream, pool: Sequence[Preterm]
    ) -> Iterator[StreamApp]:
        for k in range(self.cfg.stream_prefix_cap + 1):
            for values in itertools.product(pool, repeat=k + 1):
                prefix, tail = values[:-1], values[-1]
                if prefix and prefix[-1] == tail:
                    continue
                t = StreamApp(name, prefix, tail)
                if self._constraints_hold(t):
                    yield t

    def _axiom_leaf(self, schema: AxiomSchema, e: ExtReal | None = None) -> Proof:
        if isinstance(schema, Concrete):
            leaf = self._axiom_leaves.get(schema.name)
            if leaf is None:
                leaf = Proof("Ax", schema.sequent, (), AxData(schema.name))
                self._axiom_leaves[schema.name] = leaf
            return leaf
        assert isinstance(schema, Scaled) and e is not None
        return Proof("Ax", schema.instance(e), (), AxData(schema.name, e))

    def _substitutions(
        self,
        lhs: Preterm,
        rhs: Preterm,
        names: Sequence[str],
        admissible: Callable[[dict[str, Preterm]], bool],
    ) -> Iterator[dict[str, Preterm]]:
        """Substitutions into ok terms: anchored on a structured side, the rest over reps."""
        anchors = [p for p in (lhs, rhs) if not isinstance(p, Var)]
        anchors.sort(key=lambda p: -len(symbols(p)))
        starts: list[dict[str, Preterm]] = []
        if anchors:
            for t in list(self.universe):
                sigma = match(anchors[0], t, {})
                if sigma is not None and all(self.is_ok(v) for v in sigma.values()):
                    starts.append(sigma)
        else:
            starts.append({})
        reps = [self.universe[i] for i in self.representatives()]
        for sigma in starts:
            free = [n for n in names if n not in sigma]
            for values in itertools.product(reps, repeat=len(free)):
                full = sigma | dict(zip(free, values))
                if admissible(full):
                    yield full

    def _subst_proof(
        self,
        inner: Proof,
        delta: tuple[tuple[str, str, ExtReal], ...],
        sigma: dict[str, Preterm],
        names: Sequence[str],
    ) -> Proof:
        body = inner.conclusion.body
        assert isinstance(body, Eq)
        premises = [inner]
        for x, y, e in delta:
            if e.is_finite and x != y:
                premises.append(self._proof_eq(self._index[sigma[x]], self._index[sigma[y]], e))
        for x in names:
            i = self._index[sigma[x]]
            premises.append(self._proof_eq(i, i, ZERO))
        conclusion = Eq(substitute(body.lhs, sigma), substitute(body.rhs, sigma), body.bound)
        return Proof(
            "Subst",
            self._gamma(conclusion),
            tuple(premises),
            SubstData(delta, tuple((x, sigma[x]) for x in names)),
        )

    def _apply_instance(self, name: str, how: str, proof: Proof) -> None:
        body = proof.conclusion.body
        assert isinstance(body, Eq)
        i, j = self.add_term(body.lhs), self.add_term(body.rhs)
        if i is None or j is None:
            return
        if self.record(i, j, body.bound, proof):
            self.schema_instantiations.append((name, how))

    def apply_concrete(self, schema: Concrete) -> None:
        seq = schema.sequent
        body = seq.body
        assert isinstance(body, Eq)
        names = sorted(seq.variables())
        delta = seq.context.entries

        def admissible(sigma: dict[str, Preterm]) -> bool:
            return all(
                self.bound(sigma[x], sigma[y]) <= e for x, y, e in delta if e.is_finite
            )

        leaf = self._axiom_leaf(schema)
        for sigma in list(self._substitutions(body.lhs, body.rhs, names, admissible)):
            lhs, rhs = substitute(body.lhs, sigma), substitute(body.rhs, sigma)
            if self.bound(lhs, rhs) <= body.bound:
                continue
            if depth(lhs) > self.cfg.depth and lhs not in self._index:
                continue
            if depth(rhs) > self.cfg.depth and rhs not in self._index:
                continue
            self._apply_instance(schema.name, _describe(sigma), self._subst_proof(leaf, delta, sigma, names))

    def apply_scaled(self, schema: Scaled) -> None:
        names = sorted(
            {v for x, y, _ in schema.context for v in (x, y)}
            | variables(schema.lhs)
            | variables(schema.rhs)
        )

        def parameter(sigma: dict[str, Preterm]) -> ExtReal:
            return schema.least_parameter(lambda x, y: self.bound(sigma[x], sigma[y]))

        for sigma in list(
            self._substitutions(schema.lhs, schema.rhs, names, lambda s: parameter(s).is_finite)
        ):
            e = parameter(sigma)
            lhs, rhs = substitute(schema.lhs, sigma), substitute(schema.rhs, sigma)
            if lhs == rhs or self.bound(lhs, rhs) <= e.scale(schema.coefficient):
                continue
            leaf = self._axiom_leaf(schema, e)
            delta = leaf.conclusion.context.entries
            self._apply_instance(schema.name, _describe(sigma), self._subst_proof(leaf, delta, sigma, names))

    def apply_stream_schema(self, schema: ArityIndexed) -> None:
        streams = [
            t
            for i, t in enumerate(list(self.universe))
            if isinstance(t, StreamApp)
            and i in self._ok
            and self.theory.signature[t.symbol] == schema.arity
        ]
        for t in streams:
            prefix, tail = t.prefix, t.tail
            premises: list[Proof] = []
            seen: set[Preterm] = set()
            for kid in (*prefix, tail):
                if kid not in seen:
                    seen.add(kid)
                    premises.append(self._ok[self._index[kid]])
            for a, b, e in app_constraints_of(self.theory.signature, t):
                premises.append(self._proof_eq(self._index[a], self._index[b], e))
            k = len(prefix)
            for n in range(1, k + 2):
                lhs, rhs, b = schema.instance(prefix, tail, n)
                inst = Proof(
                    "Inst",
                    self._gamma(Eq(lhs, rhs, b)),
                    tuple(premises),
                    InstData(schema.name, prefix, tail, n),
                )
                if n <= k or not schema.converges:
                    if self.bound(lhs, rhs) > b:
                        self._apply_instance(schema.name, f"{t} at n={n}", inst)
                    continue
                if self.bound(lhs, rhs) > ZERO:
                    family = ParametricBoundFamily(lhs, rhs, schema.scale, schema.ratio, n, inst)
                    cont = Proof("Cont", self._gamma(Eq(lhs, rhs, ZERO)), (), family)
                    self._apply_instance(schema.name, f"{t} at n>={n}", cont)

    def apply_axioms(self) -> None:
        for schema in self.theory.axioms:
            if isinstance(schema, Concrete):
                self.apply_concrete(schema)
            elif isinstance(schema, Scaled):
                self.apply_scaled(schema)
            else:
                self.apply_stream_schema(schema)
            self.relax()

    def nexp(self) -> None:
        groups: dict[str, list[int]] = {}
        for i in sorted(self._ok):
            t = self.universe[i]
            if (isinstance(t, App) and t.args) or isinstance(t, StreamApp):
                groups.setdefault(t.symbol, []).append(i)
        sig = self.theory.signature
        for members in groups.values():
            for i, j in itertools.combinations(members, 2):
                s, t = self.universe[i], self.universe[j]
                pairs = aligned_positions(s, t)
                eps = max((self.bound(a, b) for a, b in pairs), default=ZERO)
                if eps.is_inf or eps >= self._bound(i, j):
                    continue
                premises = [
                    self._proof_eq(self._index[a], self._index[b], e)
                    for a, b, e in (*app_constraints_of(sig, s), *app_constraints_of(sig, t))
                ]
                premises.extend(
                    self._proof_eq(self._index[a], self._index[b], eps) for a, b in pairs
                )
                self.record(i, j, eps, Proof("Nexp", self._gamma(Eq(s, t, eps)), tuple(premises)))
            self.relax()

    # driver

    def seed(self, goals: Iterable[Preterm]) -> None:
        for x in self.context.variables():
            self.add_term(Var(x), force=True)
        for name in self.theory.signature.constants():
            self.add_term(App(name), force=True)
        for goal in goals:
            self.add_term(goal, force=True)
        for x, y, e in self.context:
            if x != y and e.is_finite:
                proof = Proof("Assum", self._gamma(Eq(Var(x), Var(y), e)))
                self.record(self._index[Var(x)], self._index[Var(y)], e, proof)
        self.relax()

    def run(self) -> "SaturationState":
        while self.iterations < self.cfg.max_iterations:
            self.iterations += 1
            self._changed = False
            self.mark_apps()
            if self.until is not None and self.until(self):
                log.debug("goal reached in round %s", self.iterations)
                break
            self.generate()
            self.mark_apps()
            self.apply_axioms()
            self.nexp()
            self.mark_apps()
            log.debug(
                "round %s: terms=%s ok=%s bounds=%s",
                self.iterations,
                len(self.universe),
                len(self._ok),
                len(self._bounds),
            )
            if not self._changed:
                break
        else:
            self.truncated = True
        log.info(
            "saturated %s: terms=%s ok=%s bounds=%s rounds=%s truncated=%s",
            self.theory,
            len(self.universe),
            len(self._ok),
            len(self._bounds),
            self.iterations,
            self.truncated,
        )
        return self


def saturate(
    theory: Theory,
    context: Context,
    gens: FinMetric | None = None,
    cfg: ProverConfig | None = None,
    goals: Iterable[Preterm] = (),
    until: Callable[[SaturationState], bool] | None = None,
) -> SaturationState:
    """Saturate from the context and goal terms; `until` stops early once it holds."""
    if gens is not None:
        theory = with_generators(theory, gens)
    state = SaturationState(theory, context, cfg or ProverConfig(), until=until)
    state.seed(goals)
    return state.run()


def prove_ok(
    theory: Theory, context: Context, t: Preterm, cfg: ProverConfig | None = None
) -> tuple[bool, Proof | None]:
    state = saturate(theory, context, cfg=cfg, goals=(t,), until=lambda s: s.is_ok(t))
    proof = state.ok_proof(t)
    return proof is not None, proof


@dataclass(frozen=True)
class Attempt:
    proof: Proof | None
    bound: ExtReal | None
    truncated: bool

    @property
    def derivable(self) -> bool:
        return self.proof is not None


def attempt(theory: Theory, seq: Sequent, cfg: ProverConfig | None = None) -> Attempt:
    """One saturation run: the proof of `seq` if found, the best bound and the truncation flag."""
    if isinstance(seq.body, Ok):
        term = seq.body.term
        state = saturate(theory, seq.context, cfg=cfg, goals=(term,), until=lambda s: s.is_ok(term))
        return Attempt(state.ok_proof(term), None, state.truncated)
    body = seq.body
    state = saturate(theory, seq.context, cfg=cfg, goals=(body.lhs, body.rhs))
    return Attempt(
        state.proof_at(body.lhs, body.rhs, body.bound),
        state.bound(body.lhs, body.rhs),
        state.truncated,
    )


def prove(theory: Theory, seq: Sequent, cfg: ProverConfig | None = None) -> Proof | None:
    """A proof concluding exactly `seq`, or None when saturation finds none."""
    return attempt(theory, seq, cfg).proof


# Countermodels


@dataclass(frozen=True)
class Countermodel:
    model: Model
    assignment: dict[str, Point]
    distance: ExtReal


@dataclass(frozen=True)
class NoneFound:
    examined: int
    exhausted: bool


def relevant_symbols(theory: Theory, terms: Iterable[Preterm]) -> set[str]:
    out: set[str] = set()
    for t in terms:
        out |= symbols(t)
    for ax in theory.axioms:
        if isinstance(ax, Concrete):
            for t in ax.sequent.terms():
                out |= symbols(t)
        elif isinstance(ax, Scaled):
            out |= symbols(ax.lhs) | symbols(ax.rhs)
        else:
            for node in (*template_nodes(ax.lhs), *template_nodes(ax.rhs)):
                if isinstance(node, SpreadApp | App | StreamApp):
                    out.add(node.symbol)
    return out


def separating_model(
    theory: Theory,
    context: Context,
    s: Preterm,
    t: Preterm,
    accept: Callable[[ExtReal], bool],
    cfg: ProverConfig,
) -> Countermodel | NoneFound:
    """Search models of the theory for a context-satisfying assignment with accept(d(s, t))."""
    names = sorted(set(context.variables()) | variables(s) | variables(t))
    only = relevant_symbols(theory, (s, t))
    examined = 0
    for size in range(1, cfg.model_size + 1):
        for carrier in enumerate_carriers(size, cfg.grid):
            for model in enumerate_models(theory.signature, carrier, only):
                examined += 1
                if examined > cfg.model_budget:
                    log.info("model search stopped after %s models", cfg.model_budget)
                    return NoneFound(cfg.model_budget, exhausted=False)
                if not is_model(model, theory, cfg.stream_prefix_cap):
                    continue
                for alpha in assignments(carrier, context, names):
                    cache: dict = {}
                    a, b = evaluate(model, s, alpha, cache), evaluate(model, t, alpha, cache)
                    if isinstance(a, Undefined) or isinstance(b, Undefined):
                        continue
                    d = carrier.d(a, b)
                    if accept(d):
                        log.info("separating model found after %s models", examined)
                        return Countermodel(model, alpha, d)
    log.info("no separating model among %s models", examined)
    return NoneFound(examined, exhausted=True)


def countermodel_search(
    theory: Theory,
    context: Context,
    s: Preterm,
    t: Preterm,
    eps: ExtReal,
    cfg: ProverConfig | None = None,
) -> Countermodel | NoneFound:
    """A model of the theory and an assignment with d(s, t) > eps."""
    return separating_model(theory, context, s, t, lambda d: d > eps, cfg or ProverConfig())


def refutes_below(upper: ExtReal) -> Callable[[ExtReal], bool]:
    """A distance that rules out every bound smaller than `upper`."""
    if upper.is_inf:
        return lambda d: d.is_inf
    return lambda d: d >= upper


@dataclass(frozen=True)
class DistanceReport:
    upper: ExtReal
    witness: Proof | None
    exact: bool
    truncated: bool = False
    certificate: Countermodel | None = None

    def __iter__(self) -> Iterator:
        return iter((self.upper, self.witness, self.exact))


def min_distance(
    theory: Theory,
    context: Context,
    s: Preterm,
    t: Preterm,
    cfg: ProverConfig | None = None,
) -> DistanceReport:
    cfg = cfg or ProverConfig()
    state = saturate(theory, context, cfg=cfg, goals=(s, t))
    for term in (s, t):
        if not state.is_ok(term):
            raise NotWellFormedError(f"{term} is not provably well-formed at depth {cfg.depth}")
    upper = state.bound(s, t)
    witness = state.witness(s, t)
    if upper == ZERO:
        return DistanceReport(upper, witness, True, state.truncated)
    found = separating_model(theory, context, s, t, refutes_below(upper), cfg)
    if isinstance(found, Countermodel):
        return DistanceReport(upper, witness, True, state.truncated, found)
    return DistanceReport(upper, witness, False, state.truncated)


# Translation of generator constants into variables


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def translate_sequent(theory: Theory, space: FinMetric, seq: Sequent) -> Sequent:
    """Replace each generator constant [a] by a fresh variable x_a, adding A's distances."""
    taken = set(seq.variables())
    names = {p: _fresh(f"x_{p}", taken) for p in space.points}
    replacement = {constant_name(p): Var(names[p]) for p in space.points}
    entries = list(seq.context.entries)
    entries.extend((names[p], names[p], ZERO) for p in space.points)
    for a, b, d in space.edges():
        entries.append((names[a], names[b], d))
    if isinstance(seq.body, Ok):
        body: Eq | Ok = Ok(replace_constants(seq.body.term, replacement))
    else:
        body = Eq(
            replace_constants(seq.body.lhs, replacement),
            replace_constants(seq.body.rhs, replacement),
            seq.body.bound,
        )
    return Sequent(Context(tuple(entries)), body)


def verdict(theory: Theory, seq: Sequent, cfg: ProverConfig) -> tuple[bool, ExtReal | None]:
    """(derivable, best bound) for an equation, or (derivable, None) for an ok judgment."""
    if isinstance(seq.body, Ok):
        return prove_ok(theory, seq.context, seq.body.term, cfg)[0], None
    state = saturate(theory, seq.context, cfg=cfg, goals=seq.terms())
    b = state.bound(seq.body.lhs, seq.body.rhs)
    return state.proof_at(seq.body.lhs, seq.body.rhs, seq.body.bound) is not None, b

