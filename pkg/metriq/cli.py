import json
import logging
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import click
import typer

from metriq.algebra import satisfies_axiom
from metriq.codec import CountermodelDoc, FreeModelDoc, dumps, load_model, load_proof, load_space, proof_to_doc
from metriq.config import ProverConfig
from metriq.demos import DEMO_CONFIG, DEMOS
from metriq.dsl import TheoryFile, parse_context, parse_sequent, parse_space, parse_term, parse_theory
from metriq.errors import EmptyUniverseError, MetriqError, NotWellFormedError, UnknownTheoryError
from metriq.freemodel import free_model
from metriq.kernel import Invalid, check_proof, render
from metriq.metric import FinMetric, fibers
from metriq.prover import Countermodel, attempt, countermodel_search, min_distance
from metriq.syntax import Context, Eq, Sequent
from metriq.theories import BUILTINS, Failed, builtin, check_axioms, with_generators

log = logging.getLogger("metriq")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_TRUNCATED = 2
EXIT_USAGE = 3

DEPTH_OPTION = typer.Option(None, "--depth", min=1, help="Term depth bound for this command; overrides the global --depth.")

app = typer.Typer(add_completion=False, help="Metric equational theories: check, prove, measure, build free models.")


@dataclass
class Settings:
    json: bool = False
    depth: int | None = None


@app.callback()
def main(
    ctx: typer.Context,
    json_output: bool = typer.Option(False, "--json", help="Machine-readable output on stdout."),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging."),
    depth: int | None = typer.Option(None, "--depth", min=1, help="Term depth bound (default 3, or METRIQ_DEPTH)."),
) -> None:
    if verbose:
        level = logging.DEBUG
    else:
        level = logging.WARNING if json_output else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", force=True)
    ctx.obj = Settings(json_output, depth)


def _settings(ctx: typer.Context) -> Settings:
    return ctx.obj if isinstance(ctx.obj, Settings) else Settings()


def _config(settings: Settings, depth: int | None = None, **overrides: object) -> ProverConfig:
    """A command's own --depth wins over the global one."""
    return ProverConfig.from_env(depth=settings.depth if depth is None else depth, **overrides)


def _emit(settings: Settings, payload: dict, lines: list[str]) -> None:
    if settings.json:
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


@contextmanager
def _reporting(settings: Settings) -> Iterator[None]:
    """Map library errors onto exit codes."""
    try:
        yield
    except MetriqError as exc:
        code = EXIT_FAILED if isinstance(exc, NotWellFormedError | EmptyUniverseError) else EXIT_USAGE
        if settings.json:
            print(json.dumps({"error": type(exc).__name__, "message": exc.message}))
        else:
            log.error("%s", exc.message)
        raise typer.Exit(code) from None


def _usage(settings: Settings, message: str) -> None:
    if settings.json:
        print(json.dumps({"error": "UsageError", "message": message}))
    else:
        log.error("%s", message)
    raise typer.Exit(EXIT_USAGE)


def _load(source: str) -> TheoryFile:
    path = Path(source)
    if path.is_file():
        return parse_theory(path.read_text(encoding="utf-8"))
    if source in BUILTINS:
        return TheoryFile(builtin(source))
    raise UnknownTheoryError(f"{source!r} is neither a theory file nor one of {', '.join(BUILTINS)}")


def _space(tf: TheoryFile, ref: str) -> FinMetric:
    """A generator space: a name declared in the file, a JSON file or an inline literal."""
    if ref in tf.spaces:
        return tf.spaces[ref]
    if ref.lstrip().startswith("{"):
        return parse_space(ref)
    return load_space(Path(ref))


def _goal(tf: TheoryFile, goal: str, extra_context: str) -> Sequent:
    if goal in tf.sequents:
        seq = tf.sequents[goal]
    else:
        seq = parse_sequent(goal if "|-" in goal else f"|- {goal}", tf.theory)
    extra = parse_context(extra_context)
    return Sequent(seq.context.union(extra.entries), seq.body) if len(extra) else seq


@app.command()
def check(
    ctx: typer.Context,
    theory: str = typer.Argument(..., help="Theory file or builtin name."),
    depth: int | None = DEPTH_OPTION,
) -> None:
    """Check that every axiom side is derivably well-formed."""
    settings = _settings(ctx)
    with _reporting(settings):
        tf = _load(theory)
        verdict = check_axioms(tf.theory, _config(settings, depth))
    if isinstance(verdict, Failed):
        _emit(
            settings,
            {"wellFormed": False, "axiom": verdict.axiom, "side": str(verdict.side), "reason": verdict.reason},
            [f"failed: axiom {verdict.axiom}: {verdict.reason}"],
        )
        raise typer.Exit(EXIT_FAILED)
    _emit(
        settings,
        {"wellFormed": True, "axioms": len(tf.theory.axioms), "witnesses": len(verdict.witnesses)},
        [f"well-formed: {len(tf.theory.axioms)} axioms, {len(verdict.witnesses)} witnesses"],
    )


@app.command()
def prove(
    ctx: typer.Context,
    theory: str = typer.Argument(..., help="Theory file or builtin name."),
    goal: str = typer.Option(..., "--goal", help="Sequent such as '{ x =[1] y } |- f(x) =[1] f(y)', or a named sequent."),
    context: str = typer.Option("", "--ctx", help="Extra context entries: 'x =[1] y, y =[2] z'."),
    out: Path | None = typer.Option(None, "--out", help="Write the proof JSON here."),
    depth: int | None = DEPTH_OPTION,
) -> None:
    """Derive a sequent and print its proof."""
    settings = _settings(ctx)
    with _reporting(settings):
        tf = _load(theory)
        seq = _goal(tf, goal, context)
        result = attempt(tf.theory, seq, _config(settings, depth))
    bound = None if result.bound is None else str(result.bound)
    if result.proof is None:
        _emit(
            settings,
            {"derivable": False, "bound": bound, "truncated": result.truncated},
            [f"not derivable at this depth{'' if bound is None else f' (best bound {bound})'}"],
        )
        raise typer.Exit(EXIT_TRUNCATED if result.truncated else EXIT_FAILED)
    doc = proof_to_doc(result.proof)
    if out is not None:
        out.write_text(dumps(doc), encoding="utf-8")
    lines = [f"derivable: {seq}"]
    if bound is not None:
        lines.append(f"best bound: {bound}")
    lines.extend(render(result.proof))
    _emit(
        settings,
        {"derivable": True, "bound": bound, "proof": doc.model_dump(exclude_none=True)},
        lines,
    )


@app.command("check-proof")
def check_proof_command(
    ctx: typer.Context,
    theory: str = typer.Argument(..., help="Theory file or builtin name."),
    proof: Path = typer.Argument(..., help="Proof JSON file."),
) -> None:
    """Re-check a serialized proof with the kernel."""
    settings = _settings(ctx)
    with _reporting(settings):
        tf = _load(theory)
        p = load_proof(proof)
        verdict = check_proof(tf.theory, p)
    if isinstance(verdict, Invalid):
        _emit(
            settings,
            {"valid": False, "node": str(verdict.node), "reason": verdict.reason},
            [f"invalid at {verdict.node}: {verdict.reason}"],
        )
        raise typer.Exit(EXIT_FAILED)
    _emit(settings, {"valid": True, "conclusion": str(p.conclusion)}, [f"valid: {p.conclusion}"])


@app.command()
def dist(
    ctx: typer.Context,
    theory: str = typer.Argument(..., help="Theory file or builtin name."),
    gens: str = typer.Option(..., "--gens", help="Generator space: declared name, JSON file or '{ a b : d(a,b)=1 }'."),
    t1: str = typer.Option(..., "--t1", help="First closed term, e.g. f('a, 'b)."),
    t2: str = typer.Option(..., "--t2", help="Second closed term."),
) -> None:
    """Least derivable distance between two terms over generators, with certificate."""
    settings = _settings(ctx)
    with _reporting(settings):
        tf = _load(theory)
        full = with_generators(tf.theory, _space(tf, gens))
        s = tf.terms.get(t1) or parse_term(t1, full)
        t = tf.terms.get(t2) or parse_term(t2, full)
        report = min_distance(full, Context(), s, t, _config(settings))
    label = "exact" if report.exact else "upper bound"
    _emit(
        settings,
        {"distance": str(report.upper), "exact": report.exact, "truncated": report.truncated},
        [f"{report.upper} ({label})" if report.exact else f"<= {report.upper} ({label})"],
    )
    if not report.exact:
        raise typer.Exit(EXIT_TRUNCATED)


@app.command()
def free(
    ctx: typer.Context,
    theory: str = typer.Argument(..., help="Theory file or builtin name."),
    gens: str = typer.Option(..., "--gens", help="Generator space: declared name, JSON file or literal."),
    out: Path | None = typer.Option(None, "--out", help="Write the free model JSON here."),
    certify: bool = typer.Option(True, "--certify/--no-certify", help="Search models for exactness certificates."),
    depth: int | None = DEPTH_OPTION,
) -> None:
    """Depth-bounded free model on a generator space."""
    settings = _settings(ctx)
    with _reporting(settings):
        tf = _load(theory)
        fm = free_model(tf.theory, _space(tf, gens), _config(settings, depth), certify=certify)
    doc = FreeModelDoc.of(fm)
    if out is not None:
        out.write_text(dumps(doc), encoding="utf-8")
    lines = [f"{len(fm)} classes at depth {fm.depth}{' (stabilized)' if fm.stabilized else ''}"]
    generated = fibers(fm.unit)
    for cid, rep in fm.reps.items():
        names = " ".join(str(p) for p in generated.get(cid, ()))
        lines.append(f"  {cid}: {rep}" + (f" <- {names}" if names else ""))
    for i, a in enumerate(fm.space.points):
        for b in fm.space.points[i + 1 :]:
            mark = "=" if fm.is_exact(a, b) else "<="  # type: ignore[arg-type]
            lines.append(f"  d({a}, {b}) {mark} {fm.distance(a, b)}")  # type: ignore[arg-type]
    if fm.truncated:
        lines.append("universe truncated: distances are upper bounds only")
    _emit(settings, doc.model_dump(exclude_none=True), lines)
    if fm.truncated:
        raise typer.Exit(EXIT_TRUNCATED)


@app.command()
def satisfy(
    ctx: typer.Context,
    theory: str = typer.Argument(..., help="Theory file or builtin name."),
    model: Path = typer.Option(..., "--model", help="Model JSON file."),
) -> None:
    """Report which axioms a finite model satisfies."""
    settings = _settings(ctx)
    with _reporting(settings):
        tf = _load(theory)
        m = load_model(model, tf.theory)
        cfg = _config(settings)
        results = {ax.name: satisfies_axiom(m, ax, cfg.stream_prefix_cap) for ax in tf.theory.axioms}
    _emit(
        settings,
        {"axioms": results, "model": all(results.values())},
        [f"{name}: {'satisfied' if ok else 'violated'}" for name, ok in results.items()],
    )
    if not all(results.values()):
        raise typer.Exit(EXIT_FAILED)


@app.command()
def countermodel(
    ctx: typer.Context,
    theory: str = typer.Argument(..., help="Theory file or builtin name."),
    goal: str = typer.Option(..., "--goal", help="Equation to refute, e.g. 'x =[1/2] y'."),
    context: str = typer.Option("", "--ctx", help="Extra context entries."),
    size: int = typer.Option(4, "--size", min=1, help="Largest carrier size."),
    grid: str = typer.Option("0,1/4,1/2,1,2,inf", "--grid", help="Comma-separated carrier distances."),
) -> None:
    """Search for a finite model violating an equation."""
    settings = _settings(ctx)
    with _reporting(settings):
        tf = _load(theory)
        seq = _goal(tf, goal, context)
        if not isinstance(seq.body, Eq):
            _usage(settings, "countermodels refute equations, not ok judgments")
        cfg = _config(settings, model_size=size, grid=grid)
        found = countermodel_search(tf.theory, seq.context, seq.body.lhs, seq.body.rhs, seq.body.bound, cfg)
    if isinstance(found, Countermodel):
        doc = CountermodelDoc.of(found)
        lines = [f"countermodel at distance {found.distance}", dumps(doc)]
        _emit(settings, doc.model_dump(exclude_none=True), lines)
        return
    _emit(
        settings,
        {"found": False, "examined": found.examined, "exhausted": found.exhausted},
        [f"none found among {found.examined} models{'' if found.exhausted else ' (budget reached)'}"],
    )
    raise typer.Exit(EXIT_FAILED if found.exhausted else EXIT_TRUNCATED)


@app.command()
def demo(
    ctx: typer.Context,
    name: str = typer.Argument(..., help=f"One of: {', '.join(DEMOS)}."),
) -> None:
    """Run a worked scenario and compare expected values with computed ones."""
    settings = _settings(ctx)
    with _reporting(settings):
        if name not in DEMOS:
            _usage(settings, f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
        cfg = DEMO_CONFIG if settings.depth is None else DEMO_CONFIG.with_depth(settings.depth)
        report = DEMOS[name](cfg)
    _emit(
        settings,
        {
            "demo": report.name,
            "passed": report.passed,
            "rows": [{"claim": r.claim, "expected": r.expected, "computed": r.computed} for r in report.rows],
        },
        [f"demo {report.name}", *report.table()],
    )
    if not report.passed:
        raise typer.Exit(EXIT_FAILED)


def run() -> None:
    """Console entry point; usage errors exit with 3 instead of click's 2."""
    try:
        code = app(standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        raise SystemExit(EXIT_USAGE) from None
    except click.Abort:
        raise SystemExit(EXIT_FAILED) from None
    raise SystemExit(code if isinstance(code, int) else EXIT_OK)

