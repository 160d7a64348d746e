"""Batch driver: load a program, pick a semantics, answer queries or
enumerate models, and emit deterministic text/JSON plus run stats.

Command shape:
    trilogic run <file.lp> [--semantics S] [--query 'lit'] [--models N|all]
                 [--naive] [--no-demand] [--max-term-depth D]
                 [--format text|json] [--stats FILE]
    trilogic corpus <dir>

Every flag can also be set through an environment variable prefixed
TRILOGIC_ (e.g. TRILOGIC_SEMANTICS=wfs, TRILOGIC_NO_DEMAND=1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import analysis, fixpoint, joineval, oracles, stable, syntax, wfs
from .errors import StratificationError, TrilogicError, UsageError
from .fixpoint import NAIVE, SEMI_NAIVE, EvalConfig
from .store import Database
from .syntax import Atom, Program, Rule, Variable

SEMANTICS = ("stratified", "wfs", "stable")


@dataclass
class RunConfig:
    path: str
    semantics: str = "stratified"
    query: str | None = None
    models: int | None = 1  # None means all
    naive: bool = False
    demand: bool = True
    max_term_depth: int = 16
    format: str = "text"
    stats_path: str | None = None


@dataclass
class RunResult:
    outcome: str
    text: str
    json_obj: dict
    stats: dict
    exit_code: int = 0
    db: Database | None = None
    ground_program: wfs.GroundProgram | None = None
    wf_model: wfs.WfModel | None = None
    stable_models: list[frozenset[int]] | None = None
    query_answers: list[dict] = field(default_factory=list)


def _eval_config(cfg: RunConfig) -> EvalConfig:
    return EvalConfig(
        mode=NAIVE if cfg.naive else SEMI_NAIVE,
        max_term_depth=cfg.max_term_depth,
        demand=cfg.demand,
    )


def _load_program(cfg: RunConfig) -> Program:
    try:
        text = Path(cfg.path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {cfg.path}: {exc}") from exc
    return syntax.validate_safety(syntax.desugar_paths(syntax.parse(text)))


def _query_bodies(cfg: RunConfig, program: Program) -> list[tuple]:
    if cfg.query is not None:
        return [syntax.parse_query(cfg.query)]
    return list(program.queries)


def _body_text(body) -> str:
    return ", ".join(syntax.literal_text(l) for l in body)


def _subst_term(term, binding):
    if isinstance(term, Variable):
        return binding[term.name]
    if isinstance(term, syntax.Compound):
        return syntax.Compound(
            term.functor, tuple(_subst_term(a, binding) for a in term.args)
        )
    return term


def _subst_literal(lit, binding):
    if isinstance(lit, Atom):
        return Atom(
            lit.pred,
            tuple(_subst_term(t, binding) for t in lit.args),
            negated=lit.negated,
        )
    if isinstance(lit, syntax.Comparison):
        return syntax.Comparison(
            lit.op, _subst_term(lit.left, binding), _subst_term(lit.right, binding)
        )
    return lit


QUERY_WRAPPER = "__query"


def _answer_body(program: Program, body: tuple, eval_cfg: EvalConfig) -> dict:
    """Answer one query body; non-atomic bodies run through a synthetic
    head predicate over the body's variables."""
    is_ground = all(
        not list(syntax.literal_variables(l)) for l in body
    )
    if len(body) == 1 and isinstance(body[0], Atom) and not body[0].negated:
        result = fixpoint.answer_query(program, body[0], eval_cfg)
        rows = [syntax.literal_text(a) for a in result.answers]
        return {
            "query": _body_text(body),
            "ground": is_ground,
            "rows": rows,
            "truth": bool(result.answers) if is_ground else None,
            "stats": result.stats,
            "relevant_tuples": result.relevant_tuples,
        }
    qvars = list(dict.fromkeys(v for l in body for v in syntax.literal_variables(l)))
    qatom = Atom(QUERY_WRAPPER, tuple(Variable(v) for v in qvars))
    wrapped = Program(
        rules=program.rules + [Rule(qatom, body)],
        facts=list(program.facts),
        queries=[],
        fact_origins=list(program.fact_origins),
        desugared=True,
        validated=True,
    )
    result = fixpoint.answer_query(wrapped, qatom, eval_cfg)
    rows = []
    for answer in result.answers:
        binding = dict(zip(qvars, answer.args))
        rows.append(_body_text(tuple(_subst_literal(l, binding) for l in body)))
    return {
        "query": _body_text(body),
        "ground": is_ground,
        "rows": rows,
        "truth": bool(result.answers) if is_ground else None,
        "stats": result.stats,
        "relevant_tuples": result.relevant_tuples,
    }


def _all_atoms_sorted(db: Database) -> list[str]:
    out = []
    for pred in db.sorted_preds():
        for tup in db.sorted_tuples(pred):
            out.append(db.atom_text(pred, tup))
    return out


def _query_instances(g: wfs.GroundProgram, query: Atom, atoms: frozenset[int]) -> list[str]:
    """Ground-atom texts in `atoms` matching the query pattern, sorted."""
    assert g.db is not None
    picked = []
    for i in g.by_pred.get(query.key, ()):
        if i not in atoms:
            continue
        binding: dict[str, int] = {}
        trail: list[str] = []
        if all(
            joineval.match_term(t, g.atom_args[i][pos], binding, trail, g.db.terms)
            for pos, t in enumerate(query.args)
        ):
            picked.append(i)
    return [g.atom_names[i] for i in sorted(picked)]


def run(cfg: RunConfig) -> RunResult:
    """Parse, desugar, validate, classify, and dispatch on the semantics."""
    if cfg.semantics not in SEMANTICS:
        raise UsageError(f"unknown semantics {cfg.semantics!r}")
    program = _load_program(cfg)
    eval_cfg = _eval_config(cfg)
    queries = _query_bodies(cfg, program)

    if cfg.semantics == "stratified":
        tier, strat = analysis.classify(analysis.build_graph(program))
        if strat is None:
            raise StratificationError(
                "constraint-tier program (negation or aggregation in a cycle) "
                "rejected under stratified semantics; use wfs or stable"
            )
        if not queries:
            result = fixpoint.evaluate(program, strat, eval_cfg)
            atoms = _all_atoms_sorted(result.db)
            stats = result.stats.as_dict()
            text = "".join(a + "\n" for a in atoms)
            return RunResult(
                outcome="model",
                text=text,
                json_obj={"outcome": "model", "atoms": atoms},
                stats=stats,
                db=result.db,
            )
        answers = [_answer_body(program, body, eval_cfg) for body in queries]
        stats = _merge_stats([a.pop("stats") for a in answers])
        stats["relevant_tuples"] = sum(a["relevant_tuples"] for a in answers)
        lines = []
        payload = []
        for a in answers:
            lines.append(f"?- {a['query']}.")
            if a["ground"]:
                lines.append("true" if a["truth"] else "false")
            else:
                lines.extend(a["rows"])
            payload.append(
                {"query": a["query"], "truth": a["truth"], "answers": a["rows"]}
            )
        return RunResult(
            outcome="answers",
            text="".join(l + "\n" for l in lines),
            json_obj={"outcome": "answers", "queries": payload},
            stats=stats,
            query_answers=answers,
        )

    if cfg.semantics == "wfs":
        g = wfs.ground(program, eval_cfg)
        model = wfs.well_founded(g)
        if queries:
            lines = []
            payload = []
            for body in queries:
                if len(body) != 1 or not isinstance(body[0], Atom) or body[0].negated:
                    raise UsageError(
                        "wfs queries must be a single positive atom"
                    )
                q = body[0]
                true_rows = _query_instances(g, q, model.true_set)
                undef_rows = _query_instances(g, q, model.undefined_set)
                lines.append(f"?- {_body_text(body)}.")
                lines.append("true:")
                lines.extend(true_rows)
                lines.append("undefined:")
                lines.extend(undef_rows)
                payload.append(
                    {
                        "query": _body_text(body),
                        "true": true_rows,
                        "undefined": undef_rows,
                    }
                )
            json_obj = {"outcome": "wf_model", "queries": payload}
        else:
            true_rows = [g.atom_names[i] for i in sorted(model.true_set)]
            undef_rows = [g.atom_names[i] for i in sorted(model.undefined_set)]
            lines = ["true:", *true_rows, "undefined:", *undef_rows]
            json_obj = {
                "outcome": "wf_model",
                "true": true_rows,
                "undefined": undef_rows,
            }
        return RunResult(
            outcome="wf_model",
            text="".join(l + "\n" for l in lines),
            json_obj=json_obj,
            stats={},
            ground_program=g,
            wf_model=model,
        )

    # stable
    if queries:
        raise UsageError(
            "queries are not supported under stable semantics; "
            "inspect the enumerated models instead"
        )
    g = wfs.ground(program, eval_cfg)
    models, solver_stats = stable.solve(g, max_models=cfg.models)
    lines = []
    payload = []
    for i, m in enumerate(models, start=1):
        atoms = [g.atom_names[a] for a in sorted(m)]
        lines.append(f"model {i}:")
        lines.extend(atoms)
        payload.append(atoms)
    return RunResult(
        outcome="models",
        text="".join(l + "\n" for l in lines),
        json_obj={"outcome": "models", "models": payload},
        stats=solver_stats.as_dict(),
        ground_program=g,
        stable_models=models,
    )


def _merge_stats(stats_list) -> dict:
    merged = fixpoint.EvalStats()
    for s in stats_list:
        merged.rule_firings += s.rule_firings
        merged.join_probes += s.join_probes
        merged.tuples_derived += s.tuples_derived
        merged.duplicates_suppressed += s.duplicates_suppressed
        merged.iterations_per_stratum.extend(s.iterations_per_stratum)
        merged.demand_fallbacks += s.demand_fallbacks
    return merged.as_dict()


# ------------------------------------------------------------------ corpus


@dataclass
class FixtureOutcome:
    name: str
    passed: bool
    detail: str = ""


def _parse_meta(path: Path) -> dict[str, str]:
    meta = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        meta[key.strip()] = value.strip()
    return meta


def _db_as_terms(db: Database) -> dict[tuple[str, int], set[tuple]]:
    out: dict[tuple[str, int], set[tuple]] = {}
    for pred, rel in db.relations.items():
        out[pred] = {
            tuple(db.terms.term(t) for t in tup) for tup in rel.tuples
        }
    return out


def _symbol_pairs(program: Program, name: str, arity: int = 2) -> set[tuple]:
    return {
        tuple(t.text for t in args)
        for args in oracles.fact_tuples(program, name, arity)
    }


def _check_reachability(meta, program, result) -> str | None:
    edge_pred = meta.get("edges", "is_parent")
    closure_pred = meta.get("closure", "is_ancestor")
    edges = _symbol_pairs(program, edge_pred)
    expected = oracles.reachability(edges)
    rel = result.db.relations.get((closure_pred, 2)) if result.db else None
    got = set()
    if rel is not None:
        got = {
            tuple(result.db.terms.text(t) for t in tup) for tup in rel.tuples
        }
    if got != expected:
        return (
            f"{closure_pred} mismatch: engine {len(got)} tuples, "
            f"oracle {len(expected)}"
        )
    return None


def _check_closure(meta, program, result) -> str | None:
    if result.db is None:
        return "no materialized model to compare"
    expected = oracles.ground_closure(program)
    got = _db_as_terms(result.db)
    for pred in sorted(set(expected) | set(got)):
        if expected.get(pred, set()) != got.get(pred, set()):
            return f"{pred[0]}/{pred[1]} differs from the closure oracle"
    return None


def _check_query_closure(meta, program, result) -> str | None:
    query_text = meta.get("_query")
    if not query_text:
        return "fixture has no query to check"
    q = syntax.parse_query(query_text)[0]
    if not isinstance(q, Atom) or q.negated:
        return "query_closure oracle needs a single positive atom query"
    expected = oracles.query_closure_answers(program, q)
    if not result.query_answers:
        return "run produced no query answers"
    got = result.query_answers[0]["rows"]
    if q.args and not any(
        isinstance(t, Variable) for t in q.args
    ):
        got = ["true"] if result.query_answers[0]["truth"] else []
        expected = ["true"] if expected else []
    if got != expected:
        return f"answers differ: engine {len(got)} rows, oracle {len(expected)}"
    return None


def _check_andersen(meta, program, result) -> str | None:
    if result.db is None:
        return "no materialized model to compare"
    expected = oracles.andersen_points_to(
        _symbol_pairs(program, "addr_of"),
        _symbol_pairs(program, "assign"),
        _symbol_pairs(program, "store"),
        _symbol_pairs(program, "load"),
    )
    rel = result.db.relations.get(("points_to", 2))
    got: dict = {}
    if rel is not None:
        for tup in rel.tuples:
            p, x = (result.db.terms.text(t) for t in tup)
            got.setdefault(p, set()).add(x)
    if got != expected:
        return "points_to differs from the four-rule closure oracle"
    return None


def _check_stable_brute(meta, program, result) -> str | None:
    g = result.ground_program
    if g is None or result.stable_models is None:
        return "no stable-model payload"
    if len(g.atom_names) > 16:
        return "universe too large for exhaustive enumeration"
    expected = oracles.brute_stable_models(g)
    got = sorted(result.stable_models, key=sorted)
    if got != expected:
        return f"solver found {len(got)} models, brute force {len(expected)}"
    return None


def _check_queens(meta, program, result) -> str | None:
    g = result.ground_program
    if g is None or result.stable_models is None:
        return "no stable-model payload"
    n = int(meta["n"])
    solutions = oracles.queens_solutions(n)
    if len(result.stable_models) != len(solutions):
        return (
            f"{len(result.stable_models)} models, oracle expects {len(solutions)}"
        )
    expected_placements = {
        frozenset((r + 1, c + 1) for r, c in enumerate(p)) for p in solutions
    }
    got_placements = set()
    for m in result.stable_models:
        placement = set()
        for a in m:
            if g.atom_pred[a] == ("queen", 2):
                r, c = (g.db.terms.term(t).value for t in g.atom_args[a])
                placement.add((r, c))
        got_placements.add(frozenset(placement))
    if got_placements != expected_placements:
        return "model placements differ from the permutation oracle"
    return None


ORACLE_CHECKS = {
    "reachability": _check_reachability,
    "closure": _check_closure,
    "query_closure": _check_query_closure,
    "andersen": _check_andersen,
    "stable_brute": _check_stable_brute,
    "queens": _check_queens,
}


def run_fixture(fixture: Path) -> FixtureOutcome:
    name = fixture.name
    program_path = fixture / "program.lp"
    if not program_path.is_file():
        return FixtureOutcome(name, False, "missing program.lp")
    meta_path = fixture / "meta.toml"
    meta = _parse_meta(meta_path) if meta_path.is_file() else {}
    query_path = fixture / "query.txt"
    query = (
        query_path.read_text(encoding="utf-8").strip() if query_path.is_file() else None
    )
    if query is not None:
        meta["_query"] = query
    models = meta.get("models", "1")
    cfg = RunConfig(
        path=str(program_path),
        semantics=meta.get("semantics", "stratified"),
        query=query,
        models=None if models == "all" else int(models),
        demand=meta.get("demand", "on") != "off",
        max_term_depth=int(meta.get("max_term_depth", "16")),
    )
    try:
        result = run(cfg)
    except TrilogicError as exc:
        return FixtureOutcome(name, False, f"error: {exc}")

    expected_path = fixture / "expected.txt"
    if expected_path.is_file():
        expected = expected_path.read_text(encoding="utf-8")
        if result.text != expected:
            return FixtureOutcome(name, False, "output differs from expected.txt")
    oracle = meta.get("oracle")
    if oracle:
        checker = ORACLE_CHECKS.get(oracle)
        if checker is None:
            return FixtureOutcome(name, False, f"unknown oracle {oracle!r}")
        try:
            program = _load_program(cfg)
            detail = checker(meta, program, result)
        except Exception as exc:  # oracle bugs should name themselves
            return FixtureOutcome(name, False, f"oracle error: {exc}")
        if detail:
            return FixtureOutcome(name, False, detail)
    if not expected_path.is_file() and not oracle:
        return FixtureOutcome(name, False, "fixture has neither golden nor oracle")
    return FixtureOutcome(name, True)


def run_corpus(directory: str | Path, only: list[str] | None = None) -> tuple[str, bool]:
    root = Path(directory)
    if not root.is_dir():
        raise UsageError(f"corpus directory {root} not found")
    fixtures = sorted(p for p in root.iterdir() if p.is_dir())
    if only:
        fixtures = [p for p in fixtures if p.name in set(only)]
    outcomes = [run_fixture(p) for p in fixtures]
    lines = [
        f"{'PASS' if o.passed else 'FAIL'} {o.name}"
        + (f" ({o.detail})" if o.detail else "")
        for o in outcomes
    ]
    passed = sum(o.passed for o in outcomes)
    lines.append(f"{passed}/{len(outcomes)} fixtures passed")
    return "\n".join(lines) + "\n", passed == len(outcomes)


# --------------------------------------------------------------------- main


def _env(name: str, default=None):
    return os.environ.get(f"TRILOGIC_{name}", default)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trilogic",
        description="Tiered logic-program evaluation: stratified Datalog, "
        "well-founded, and stable-model semantics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="evaluate one program file")
    runp.add_argument("file")
    runp.add_argument(
        "--semantics",
        choices=SEMANTICS,
        default=_env("SEMANTICS", "stratified"),
    )
    runp.add_argument("--query", default=_env("QUERY"))
    runp.add_argument("--models", default=_env("MODELS", "1"))
    runp.add_argument(
        "--naive", action="store_true", default=bool(_env("NAIVE"))
    )
    runp.add_argument(
        "--no-demand", action="store_true", default=bool(_env("NO_DEMAND"))
    )
    runp.add_argument(
        "--max-term-depth", type=int, default=int(_env("MAX_TERM_DEPTH", "16"))
    )
    runp.add_argument(
        "--format", choices=("text", "json"), default=_env("FORMAT", "text")
    )
    runp.add_argument("--stats", default=_env("STATS"))

    corpusp = sub.add_parser("corpus", help="run every corpus fixture")
    corpusp.add_argument("directory")
    corpusp.add_argument("--only", nargs="*", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0

    try:
        if args.command == "corpus":
            report, ok = run_corpus(args.directory, args.only)
            sys.stdout.write(report)
            return 0 if ok else 1

        models = args.models
        if models == "all":
            model_count = None
        else:
            try:
                model_count = int(models)
                if model_count <= 0:
                    raise ValueError
            except ValueError:
                raise UsageError(f"--models needs a positive integer or 'all'")
        cfg = RunConfig(
            path=args.file,
            semantics=args.semantics,
            query=args.query,
            models=model_count,
            naive=args.naive,
            demand=not args.no_demand,
            max_term_depth=args.max_term_depth,
            format=args.format,
            stats_path=args.stats,
        )
        started = time.perf_counter()
        result = run(cfg)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        if cfg.format == "json":
            obj = dict(result.json_obj)
            obj["stats"] = result.stats
            sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        else:
            sys.stdout.write(result.text)
        if cfg.stats_path:
            stats = dict(result.stats)
            stats["wall_time_ms"] = elapsed_ms
            Path(cfg.stats_path).write_text(
                json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        return 0
    except TrilogicError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
