"""Rule-body evaluation: join planning and index-backed nested-loop joins
with negation, comparison, and aggregate conditions.

A plan orders the positive atoms greedily (smallest estimated match count
first, then most already-bound argument positions) and slots each
condition at the earliest point where its variables are bound. Evaluation
walks the plan, probing lazily built indexes and unifying stored ground
tuples against the atom's argument patterns.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace
from typing import Callable, Mapping

from . import syntax
from .errors import AggregateTypeError, ResourceBoundError
from .store import Database, TermStore
from .syntax import Aggregate, Atom, Comparison, Compound, Integer, Rule, Variable

PredKey = tuple[str, int]
NegCtx = Callable[[PredKey, tuple[int, ...]], bool]


@dataclass(frozen=True)
class JoinPlan:
    steps: tuple[tuple[str, int], ...]  # ("atom"|"neg"|"cmp"|"agg", body index)
    atom_indexes: tuple[int, ...]  # positive atoms in evaluation order


def _fresh_stats():
    return SimpleNamespace(join_probes=0, rule_firings=0)


# ------------------------------------------------------------- resolution


def resolve(term: syntax.Term, binding: dict[str, int], terms: TermStore) -> int | None:
    """Ground id of `term` under `binding`, or None while a variable is free."""
    if isinstance(term, Variable):
        return binding.get(term.name)
    if isinstance(term, Compound):
        args = []
        for a in term.args:
            tid = resolve(a, binding, terms)
            if tid is None:
                return None
            args.append(terms.term(tid))
        return terms.intern(Compound(term.functor, tuple(args)))
    return terms.intern(term)


def match_term(
    pattern: syntax.Term,
    tid: int,
    binding: dict[str, int],
    trail: list[str],
    terms: TermStore,
) -> bool:
    """One-way unification of an argument pattern against a ground term."""
    if isinstance(pattern, Variable):
        cur = binding.get(pattern.name)
        if cur is None:
            binding[pattern.name] = tid
            trail.append(pattern.name)
            return True
        return cur == tid
    if isinstance(pattern, Compound):
        children = terms.children(tid)
        if children is None or len(children) != len(pattern.args):
            return False
        stored = terms.term(tid)
        if stored.functor != pattern.functor:
            return False
        return all(
            match_term(p, c, binding, trail, terms)
            for p, c in zip(pattern.args, children)
        )
    return terms.intern(pattern) == tid


def eval_comparison(cmp: Comparison, binding: dict[str, int], terms: TermStore) -> bool:
    left = resolve(cmp.left, binding, terms)
    right = resolve(cmp.right, binding, terms)
    assert left is not None and right is not None, "comparison on unbound variable"
    if cmp.op == "=":
        return left == right
    if cmp.op == "!=":
        return left != right
    lk, rk = terms.order_key(left), terms.order_key(right)
    if cmp.op == "<":
        return lk < rk
    if cmp.op == "<=":
        return lk <= rk
    if cmp.op == ">":
        return lk > rk
    return lk >= rk


# --------------------------------------------------------------- planning


def _estimate(atom: Atom, sizes) -> int:
    """Expected match count: index count on statically ground argument
    positions when a Database is available, else the relation size."""
    if isinstance(sizes, Database):
        rel = sizes.relations.get(atom.key)
        if rel is None:
            return 0
        mask = 0
        key = []
        for i, t in enumerate(atom.args):
            if syntax.term_is_ground(t):
                mask |= 1 << i
                key.append(sizes.terms.intern(t))
        return rel.count_matching(mask, tuple(key))
    if isinstance(sizes, Mapping):
        return sizes.get(atom.key, 0)
    raise TypeError("sizes must be a Database or a per-predicate mapping")


def _condition_requirements(lit) -> set[str]:
    if isinstance(lit, Atom):
        return set(syntax.literal_variables(lit))
    if isinstance(lit, Comparison):
        return set(syntax.literal_variables(lit))
    inner = set()
    for l in lit.body:
        inner.update(syntax.literal_variables(l))
    return inner - {lit.local.name}


def plan(rule: Rule, sizes) -> JoinPlan:
    """Greedy join order with conditions placed at their earliest point
    where all their variables are bound; deterministic for fixed inputs."""
    body = rule.body
    atom_idx = [
        i for i, l in enumerate(body) if isinstance(l, Atom) and not l.negated
    ]
    cond_idx = [i for i in range(len(body)) if i not in set(atom_idx)]
    est = {i: _estimate(body[i], sizes) for i in atom_idx}

    order: list[int] = []
    bound: set[str] = set()
    steps: list[tuple[str, int]] = []
    pending = list(cond_idx)

    def flush():
        progressed = True
        while progressed:
            progressed = False
            for i in list(pending):
                lit = body[i]
                if _condition_requirements(lit) <= bound:
                    pending.remove(i)
                    progressed = True
                    if isinstance(lit, Aggregate):
                        steps.append(("agg", i))
                        bound.add(lit.result.name)
                    elif isinstance(lit, Comparison):
                        steps.append(("cmp", i))
                    else:
                        steps.append(("neg", i))

    def bound_positions(i: int) -> int:
        return sum(
            1
            for t in body[i].args
            if set(syntax.term_variables(t)) <= bound
        )

    flush()
    remaining = list(atom_idx)
    while remaining:
        if not order:
            pick = min(remaining, key=lambda i: (est[i], i))
        else:
            pick = max(remaining, key=lambda i: (bound_positions(i), -est[i], -i))
        remaining.remove(pick)
        order.append(pick)
        steps.append(("atom", pick))
        bound.update(syntax.literal_variables(body[pick]))
        flush()

    assert not pending, "condition with unbound variables survived validation"
    assert len(steps) == len(body)
    return JoinPlan(tuple(steps), tuple(order))


def plan_with_order(rule: Rule, atom_order: list[int]) -> JoinPlan:
    """Plan with a forced positive-atom order; used by the plan-independence
    property tests."""
    body = rule.body
    steps: list[tuple[str, int]] = []
    bound: set[str] = set()
    pending = [
        i
        for i in range(len(body))
        if not (isinstance(body[i], Atom) and not body[i].negated)
    ]

    def flush():
        progressed = True
        while progressed:
            progressed = False
            for i in list(pending):
                lit = body[i]
                if _condition_requirements(lit) <= bound:
                    pending.remove(i)
                    progressed = True
                    if isinstance(lit, Aggregate):
                        steps.append(("agg", i))
                        bound.add(lit.result.name)
                    elif isinstance(lit, Comparison):
                        steps.append(("cmp", i))
                    else:
                        steps.append(("neg", i))

    flush()
    for i in atom_order:
        steps.append(("atom", i))
        bound.update(syntax.literal_variables(body[i]))
        flush()
    assert not pending
    return JoinPlan(tuple(steps), tuple(atom_order))


# ------------------------------------------------------------- evaluation


def eval_aggregate(
    agg: Aggregate,
    binding: dict[str, int],
    db: Database,
    stats=None,
    rule: Rule | None = None,
) -> int | None:
    """Value id of the aggregate under the outer binding, or None when the
    aggregate fails (min/max over an empty collection).

    Collected local values are deduplicated (set semantics); count/sum over
    the empty set are 0; sum/min/max require integer values.
    """
    stats = stats if stats is not None else _fresh_stats()
    terms = db.terms
    atoms = [l for l in agg.body if isinstance(l, Atom)]
    cmps = [l for l in agg.body if isinstance(l, Comparison)]
    collected: set[int] = set()

    inner = {v: binding[v] for v in _condition_requirements(agg) if v in binding}

    def ready_cmps(done: set[int]) -> bool:
        for ci, c in enumerate(cmps):
            if ci in done:
                continue
            if all(v in inner for v in syntax.literal_variables(c)):
                done.add(ci)
                if not eval_comparison(c, inner, terms):
                    return False
        return True

    def walk(i: int, done: set[int]):
        if not ready_cmps(done):
            return
        if i == len(atoms):
            collected.add(inner[agg.local.name])
            return
        atom = atoms[i]
        rel = db.relations.get(atom.key)
        stats.join_probes += 1
        if rel is None:
            return
        mask = 0
        key = []
        free: list[tuple[int, syntax.Term]] = []
        for pos, t in enumerate(atom.args):
            tid = resolve(t, inner, terms)
            if tid is None:
                free.append((pos, t))
            else:
                mask |= 1 << pos
                key.append(tid)
        candidates = rel.lookup(mask, tuple(key))
        stats.join_probes += len(candidates)
        for tup in candidates:
            trail: list[str] = []
            if all(match_term(t, tup[pos], inner, trail, terms) for pos, t in free):
                walk(i + 1, set(done))
            for name in trail:
                del inner[name]

    walk(0, set())

    where = f" in rule {syntax.rule_text(rule)}" if rule else ""
    if agg.func == "count":
        return terms.intern(Integer(len(collected)))
    values = []
    for tid in collected:
        t = terms.term(tid)
        if not isinstance(t, Integer):
            raise AggregateTypeError(
                f"{agg.func} over non-integer value {terms.text(tid)}{where}"
            )
        values.append(t.value)
    if agg.func == "sum":
        return terms.intern(Integer(sum(values)))
    if not values:
        return None
    pick = min(values) if agg.func == "min" else max(values)
    return terms.intern(Integer(pick))


def eval_rule(
    rule: Rule,
    join_plan: JoinPlan,
    db: Database,
    negctx: NegCtx | None = None,
    delta_atom: int | None = None,
    stats=None,
    max_term_depth: int | None = None,
) -> set[tuple[int, ...]]:
    """All ground head tuples derivable for `rule` under the plan.

    `delta_atom` restricts that body atom to its relation's delta set
    (semi-naive mode). Negations are checked against `negctx`, defaulting
    to closed-world membership in `db`.
    """
    stats = stats if stats is not None else _fresh_stats()
    terms = db.terms
    if negctx is None:
        negctx = db.atom_true
    body = rule.body
    steps = join_plan.steps
    results: set[tuple[int, ...]] = set()
    binding: dict[str, int] = {}

    def build_head() -> None:
        out = []
        for t in rule.head.args:
            tid = resolve(t, binding, terms)
            assert tid is not None, "unsafe head variable escaped validation"
            if (
                max_term_depth is not None
                and isinstance(t, Compound)
                and terms.term_depth(tid) > max_term_depth
            ):
                raise ResourceBoundError(
                    f"term depth bound {max_term_depth} exceeded deriving "
                    f"{terms.text(tid)} in rule {syntax.rule_text(rule)}"
                )
            out.append(tid)
        stats.rule_firings += 1
        results.add(tuple(out))

    def walk(step_i: int) -> None:
        if step_i == len(steps):
            build_head()
            return
        kind, idx = steps[step_i]
        lit = body[idx]
        if kind == "atom":
            rel = db.relations.get(lit.key)
            stats.join_probes += 1
            if rel is None:
                return
            mask = 0
            key = []
            free: list[tuple[int, syntax.Term]] = []
            for pos, t in enumerate(lit.args):
                tid = resolve(t, binding, terms)
                if tid is None:
                    free.append((pos, t))
                else:
                    mask |= 1 << pos
                    key.append(tid)
            use_delta = idx == delta_atom
            candidates = rel.lookup(mask, tuple(key), use_delta=use_delta)
            # a probe's cost is the candidates the inner loop scans
            stats.join_probes += len(candidates)
            for tup in candidates:
                trail: list[str] = []
                if all(
                    match_term(t, tup[pos], binding, trail, terms) for pos, t in free
                ):
                    walk(step_i + 1)
                for name in trail:
                    del binding[name]
        elif kind == "neg":
            ids = tuple(resolve(t, binding, terms) for t in lit.args)
            assert all(i is not None for i in ids), "negation on unbound variable"
            if not negctx(lit.key, ids):
                walk(step_i + 1)
        elif kind == "cmp":
            if eval_comparison(lit, binding, terms):
                walk(step_i + 1)
        else:  # agg
            value = eval_aggregate(lit, binding, db, stats=stats, rule=rule)
            if value is None:
                return
            prev = binding.get(lit.result.name)
            if prev is None:
                binding[lit.result.name] = value
                walk(step_i + 1)
                del binding[lit.result.name]
            elif prev == value:
                walk(step_i + 1)

    walk(0)
    return results
