"""Stratum-by-stratum bottom-up evaluation to the least fixed point.

Semi-naive mode (the default) evaluates every rule once unrestricted in a
stratum's first round; later rounds re-evaluate only rules with a positive
body atom of the current stratum, once per such atom restricted to that
relation's delta. Naive mode re-evaluates everything every round. Both
reach the same stratified model; the delta restriction only cuts repeated
join work.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import analysis, joineval, syntax
from .analysis import Stratification, Tier
from .errors import ResourceBoundError, UnknownPredicateError
from .store import Database
from .syntax import Atom, Program

PredKey = tuple[str, int]

NAIVE = "naive"
SEMI_NAIVE = "semi-naive"


@dataclass
class EvalConfig:
    mode: str = SEMI_NAIVE
    max_term_depth: int = 16
    max_iterations: int | None = None
    demand: bool = True


@dataclass
class EvalStats:
    rule_firings: int = 0
    join_probes: int = 0
    tuples_derived: int = 0
    duplicates_suppressed: int = 0
    iterations_per_stratum: list[int] = field(default_factory=list)
    demand_fallbacks: int = 0

    def as_dict(self) -> dict:
        return {
            "rule_firings": self.rule_firings,
            "join_probes": self.join_probes,
            "tuples_derived": self.tuples_derived,
            "duplicates_suppressed": self.duplicates_suppressed,
            "iterations_per_stratum": list(self.iterations_per_stratum),
            "demand_fallbacks": self.demand_fallbacks,
        }


@dataclass
class EvalResult:
    db: Database
    stats: EvalStats


def evaluate(
    program: Program, strat: Stratification, cfg: EvalConfig | None = None
) -> EvalResult:
    """Materialize the stratified model of a validated join/recursion-tier
    program: the least set of facts closed under the rules, with negations
    and aggregates reading fully evaluated lower strata."""
    assert program.validated, "evaluate needs a validated program"
    cfg = cfg or EvalConfig()
    db = Database()
    stats = EvalStats()

    for fact in program.facts:
        rel = db.relation(fact.key)
        rel.insert(tuple(db.terms.intern(t) for t in fact.args))
    for rule in program.rules:
        db.relation(rule.head.key)
        for lit in rule.body:
            for atom in _body_atoms(lit):
                db.relation(atom.key)

    by_level: dict[int, list[syntax.Rule]] = {}
    for rule in program.rules:
        by_level.setdefault(strat.level.get(rule.head.key, 0), []).append(rule)

    n_levels = len(strat.strata) if strat.strata else 1
    for level in range(n_levels):
        rules = by_level.get(level, [])
        stratum_rels = [
            db.relation(p) for p in sorted(strat.strata[level])
        ] if level < len(strat.strata) else []
        level_preds = strat.strata[level] if level < len(strat.strata) else set()
        recursive = [
            r
            for r in rules
            if any(
                a.key in level_preds
                for lit in r.body
                for a in _body_atoms(lit)
                if not a.negated and isinstance(lit, Atom)
            )
        ]
        iterations = 0
        first_round = True
        while True:
            iterations += 1
            if cfg.max_iterations is not None and iterations > cfg.max_iterations:
                raise ResourceBoundError(
                    f"iteration bound {cfg.max_iterations} exceeded in stratum {level}"
                )
            for rel in stratum_rels:
                rel.advance_iteration()
            inserted = 0
            batch = rules if first_round else recursive
            for rule in batch:
                rule_plan = joineval.plan(rule, db)
                if first_round or cfg.mode == NAIVE:
                    variants: list[int | None] = [None]
                else:
                    variants = [
                        i
                        for i in rule_plan.atom_indexes
                        if rule.body[i].key in level_preds
                    ]
                derived: set[tuple[int, ...]] = set()
                for delta_atom in variants:
                    derived |= joineval.eval_rule(
                        rule,
                        rule_plan,
                        db,
                        delta_atom=delta_atom,
                        stats=stats,
                        max_term_depth=cfg.max_term_depth,
                    )
                rel = db.relation(rule.head.key)
                for tup in derived:
                    if rel.insert(tup):
                        inserted += 1
                        stats.tuples_derived += 1
                    else:
                        stats.duplicates_suppressed += 1
            if inserted == 0:
                break
            if cfg.mode != NAIVE:
                first_round = False
        stats.iterations_per_stratum.append(iterations)
        for rel in stratum_rels:
            rel.advance_iteration()

    return EvalResult(db, stats)


def _body_atoms(lit: syntax.Literal):
    if isinstance(lit, Atom):
        yield lit
    elif isinstance(lit, syntax.Aggregate):
        for inner in lit.body:
            if isinstance(inner, Atom):
                yield inner


def evaluate_program(program: Program, cfg: EvalConfig | None = None) -> EvalResult:
    """classify + evaluate; the program must be join or recursion tier."""
    from .errors import StratificationError

    tier, strat = analysis.classify(analysis.build_graph(program))
    if strat is None:
        raise StratificationError(
            "program is constraint tier (negation or aggregation in a cycle); "
            "use the wfs or stable semantics"
        )
    return evaluate(program, strat, cfg)


@dataclass
class QueryResult:
    answers: list[Atom]  # ground instances of the query atom, sorted
    stats: EvalStats
    db: Database
    relevant_tuples: int
    demand_applied: bool


def _relevant_count(db: Database, adorned_map: dict[PredKey, PredKey]) -> int:
    """Distinct tuples projected back onto the original predicates; magic
    bookkeeping relations are excluded."""
    buckets: dict[PredKey, set] = {}
    for key, rel in db.relations.items():
        if key[0].startswith(analysis.MAGIC_PREFIX):
            continue
        original = adorned_map.get(key, key)
        buckets.setdefault(original, set()).update(rel.tuples)
    return sum(len(v) for v in buckets.values())


def answer_query(
    program: Program, query: Atom, cfg: EvalConfig | None = None
) -> QueryResult:
    """Ground instances of `query`, via the demand-rewritten program when
    demand is on, else by filtering the fully evaluated model."""
    cfg = cfg or EvalConfig()
    if query.key not in analysis.known_predicates(program):
        raise UnknownPredicateError(
            f"unknown predicate {query.pred}/{query.arity}"
        )
    adorned_map: dict[PredKey, PredKey] = {}
    answer_pred = query.key
    demand_applied = False
    if cfg.demand:
        magic = analysis.magic_transform(program, query)
        target = magic.program
        answer_pred = magic.answer_pred
        adorned_map = magic.adorned_to_original
        demand_applied = magic.applied
        result = evaluate_program(target, cfg)
        if magic.fallback:
            result.stats.demand_fallbacks += 1
    else:
        result = evaluate_program(program, cfg)

    db = result.db
    answers: list[tuple] = []
    rel = db.relations.get(answer_pred)
    if rel is not None:
        for tup in rel.tuples:
            binding: dict[str, int] = {}
            trail: list[str] = []
            if all(
                joineval.match_term(t, tup[i], binding, trail, db.terms)
                for i, t in enumerate(query.args)
            ):
                answers.append(tup)
    answers = sorted(set(answers), key=db.terms.tuple_key)
    ground_answers = [
        Atom(query.pred, tuple(db.terms.term(t) for t in tup)) for tup in answers
    ]
    return QueryResult(
        answers=ground_answers,
        stats=result.stats,
        db=db,
        relevant_tuples=_relevant_count(db, adorned_map),
        demand_applied=demand_applied,
    )
