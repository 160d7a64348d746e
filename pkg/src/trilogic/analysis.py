"""Program analysis: predicate dependency graph, tier classification,
stratification, and demand-driven specialization (relevance pruning and
magic-set rewriting)."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

from . import syntax
from .errors import UnknownPredicateError
from .syntax import Aggregate, Atom, Comparison, Program, Rule, Variable

PredKey = tuple[str, int]

POSITIVE, NEGATIVE, AGGREGATE = "positive", "negative", "aggregate"


@dataclass
class DependencyGraph:
    nodes: set[PredKey]
    edges: set[tuple[PredKey, PredKey, str]]  # (head, body, polarity)

    def successors(self, pred: PredKey) -> set[PredKey]:
        return {b for h, b, _ in self.edges if h == pred}

    def reachable_from(self, start: PredKey) -> set[PredKey]:
        seen = {start}
        stack = [start]
        succ: dict[PredKey, set[PredKey]] = {}
        for h, b, _ in self.edges:
            succ.setdefault(h, set()).add(b)
        while stack:
            for nxt in succ.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen


class Tier(enum.Enum):
    JOIN = "join"
    RECURSION = "recursion"
    CONSTRAINT = "constraint"


@dataclass
class Stratification:
    strata: list[set[PredKey]]
    level: dict[PredKey, int]


def _body_deps(body: tuple[syntax.Literal, ...]):
    for lit in body:
        if isinstance(lit, Atom):
            yield lit.key, (NEGATIVE if lit.negated else POSITIVE)
        elif isinstance(lit, Aggregate):
            for inner in lit.body:
                if isinstance(inner, Atom):
                    yield inner.key, AGGREGATE


def build_graph(program: Program) -> DependencyGraph:
    nodes: set[PredKey] = set()
    edges: set[tuple[PredKey, PredKey, str]] = set()
    for fact in program.facts:
        nodes.add(fact.key)
    for rule in program.rules:
        nodes.add(rule.head.key)
        for dep, polarity in _body_deps(rule.body):
            nodes.add(dep)
            edges.add((rule.head.key, dep, polarity))
    return DependencyGraph(nodes, edges)


def sccs(graph: DependencyGraph) -> list[set[PredKey]]:
    """Tarjan, iterative; components come out in reverse topological order
    (dependencies before dependents)."""
    succ: dict[PredKey, list[PredKey]] = {n: [] for n in graph.nodes}
    for h, b, _ in sorted(graph.edges):
        succ[h].append(b)
    index: dict[PredKey, int] = {}
    low: dict[PredKey, int] = {}
    on_stack: set[PredKey] = set()
    stack: list[PredKey] = []
    counter = itertools.count()
    components: list[set[PredKey]] = []

    for root in sorted(graph.nodes):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            node, child_i = work.pop()
            if child_i == 0:
                index[node] = low[node] = next(counter)
                stack.append(node)
                on_stack.add(node)
            advanced = False
            children = succ[node]
            for i in range(child_i, len(children)):
                child = children[i]
                if child not in index:
                    work.append((node, i + 1))
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    comp.add(member)
                    if member == node:
                        break
                components.append(comp)
    return components


def classify(graph: DependencyGraph) -> tuple[Tier, Stratification | None]:
    """Tier per the dependency cycles: join when acyclic, constraint when a
    negative or aggregate edge closes a cycle, recursion otherwise. For the
    first two tiers, stratify by longest-path levels counting negative and
    aggregate edges."""
    comps = sccs(graph)
    comp_of: dict[PredKey, int] = {}
    for i, comp in enumerate(comps):
        for pred in comp:
            comp_of[pred] = i

    self_loops = {h for h, b, _ in graph.edges if h == b}
    cyclic = any(
        len(comp) > 1 or next(iter(comp)) in self_loops for comp in comps
    )
    for h, b, polarity in graph.edges:
        if polarity != POSITIVE and comp_of[h] == comp_of[b]:
            return Tier.CONSTRAINT, None
    tier = Tier.RECURSION if cyclic else Tier.JOIN

    # components arrive dependencies-first, so one pass suffices
    comp_level = [0] * len(comps)
    for i, comp in enumerate(comps):
        for h, b, polarity in graph.edges:
            if comp_of[h] == i and comp_of[b] != i:
                weight = 0 if polarity == POSITIVE else 1
                comp_level[i] = max(comp_level[i], comp_level[comp_of[b]] + weight)
    level = {pred: comp_level[comp_of[pred]] for pred in graph.nodes}
    n = max(comp_level, default=0) + 1 if graph.nodes else 0
    strata = [set() for _ in range(n)]
    for pred, lv in level.items():
        strata[lv].add(pred)
    return tier, Stratification(strata, level)


def known_predicates(program: Program) -> set[PredKey]:
    known = {f.key for f in program.facts}
    for rule in program.rules:
        known.add(rule.head.key)
        for dep, _ in _body_deps(rule.body):
            known.add(dep)
    return known


def relevance_prune(program: Program, query: Atom) -> Program:
    """Keep only the rules and facts of predicates the query predicate
    transitively depends on (any polarity)."""
    if query.key not in known_predicates(program):
        raise UnknownPredicateError(
            f"unknown predicate {query.pred}/{query.arity}"
        )
    graph = build_graph(program)
    keep = graph.reachable_from(query.key) if query.key in graph.nodes else {query.key}
    facts, origins = [], []
    for fact, origin in zip(program.facts, program.fact_origins or
                            [(0, 0)] * len(program.facts)):
        if fact.key in keep:
            facts.append(fact)
            origins.append(origin)
    return Program(
        rules=[r for r in program.rules if r.head.key in keep],
        facts=facts,
        queries=[],
        fact_origins=origins,
        desugared=program.desugared,
        validated=program.validated,
    )


# ----------------------------------------------------------- magic sets

MAGIC_PREFIX = "__magic_"


@dataclass
class MagicResult:
    program: Program
    answer_pred: PredKey  # where the query's instances land
    adorned_to_original: dict[PredKey, PredKey]
    applied: bool  # False when the rewrite fell back to relevance pruning
    fallback: bool = field(default=False)


def _adornment(args: tuple[syntax.Term, ...], bound_vars: set[str]) -> str:
    out = []
    for t in args:
        fv = set(syntax.term_variables(t))
        out.append("b" if fv <= bound_vars else "f")
    return "".join(out)


def _bound_args(args, adorn):
    return tuple(t for t, a in zip(args, adorn) if a == "b")


def _adorned_name(pred: str, adorn: str) -> str:
    return f"{pred}__{adorn}" if adorn else f"{pred}__0"


def _magic_atom(pred: str, adorn: str, args) -> Atom:
    return Atom(f"{MAGIC_PREFIX}{pred}__{adorn or '0'}", tuple(args))


def magic_transform(program: Program, query: Atom) -> MagicResult:
    """Rewrite so that bottom-up evaluation derives only facts demanded by
    the query's bound arguments. Applies to query cones made of rules
    without negation and without aggregates; otherwise falls back to
    relevance pruning."""
    pruned = relevance_prune(program, query)
    for rule in pruned.rules:
        for lit in rule.body:
            if isinstance(lit, Aggregate) or (isinstance(lit, Atom) and lit.negated):
                return MagicResult(pruned, query.key, {}, applied=False, fallback=True)

    rules_of: dict[PredKey, list[Rule]] = {}
    for rule in pruned.rules:
        rules_of.setdefault(rule.head.key, []).append(rule)
    facts_of: dict[PredKey, list[Atom]] = {}
    for fact in pruned.facts:
        facts_of.setdefault(fact.key, []).append(fact)

    def is_idb(key: PredKey) -> bool:
        return key in rules_of or key == query.key

    query_adorn = _adornment(query.args, set())
    out_rules: list[Rule] = []
    out_facts: list[Atom] = []
    adorned_map: dict[PredKey, PredKey] = {}
    seen: set[tuple[PredKey, str]] = set()
    work: list[tuple[PredKey, str]] = [(query.key, query_adorn)]
    seen.add(work[0])

    def demand(key: PredKey, adorn: str) -> None:
        if (key, adorn) not in seen:
            seen.add((key, adorn))
            work.append((key, adorn))

    while work:
        key, adorn = work.pop(0)
        name, arity = key
        adorned = (_adorned_name(name, adorn), arity)
        adorned_map[adorned] = key
        magic_key_arity = adorn.count("b")
        for fact in facts_of.get(key, ()):
            guard = _magic_atom(name, adorn, _bound_args(fact.args, adorn))
            out_rules.append(Rule(Atom(adorned[0], fact.args), (guard,)))
        for rule in rules_of.get(key, ()):
            head_bound = set()
            for t, a in zip(rule.head.args, adorn):
                if a == "b":
                    head_bound.update(syntax.term_variables(t))
            guard = _magic_atom(name, adorn, _bound_args(rule.head.args, adorn))
            new_body: list[syntax.Literal] = [guard]
            prefix: list[syntax.Literal] = [guard]
            bound = set(head_bound)
            for lit in rule.body:
                if isinstance(lit, Comparison):
                    new_body.append(lit)
                    continue
                assert isinstance(lit, Atom) and not lit.negated
                if is_idb(lit.key):
                    sub_adorn = _adornment(lit.args, bound)
                    demand(lit.key, sub_adorn)
                    if "b" in sub_adorn:
                        out_rules.append(
                            Rule(
                                _magic_atom(
                                    lit.pred, sub_adorn, _bound_args(lit.args, sub_adorn)
                                ),
                                tuple(prefix),
                            )
                        )
                    else:
                        out_rules.append(
                            Rule(_magic_atom(lit.pred, sub_adorn, ()), tuple(prefix))
                        )
                    renamed = Atom(_adorned_name(lit.pred, sub_adorn), lit.args)
                    new_body.append(renamed)
                    prefix.append(renamed)
                else:
                    new_body.append(lit)
                    prefix.append(lit)
                bound.update(syntax.term_variables(lit))
            out_rules.append(
                Rule(Atom(adorned[0], rule.head.args), tuple(new_body), origin=rule.origin)
            )

    # EDB facts referenced by the rewritten rules stay as-is
    needed_edb = {
        lit.key
        for rule in out_rules
        for lit in rule.body
        if isinstance(lit, Atom) and lit.key in facts_of and not is_idb(lit.key)
    }
    for key in sorted(needed_edb):
        out_facts.extend(facts_of[key])
    # seed the demand from the query's bound arguments
    out_facts.append(_magic_atom(query.pred, query_adorn, _bound_args(query.args, query_adorn)))

    rewritten = Program(
        rules=out_rules,
        facts=out_facts,
        queries=[],
        fact_origins=[(0, 0)] * len(out_facts),
        desugared=True,
        validated=True,
    )
    answer = (_adorned_name(query.pred, query_adorn), query.arity)
    return MagicResult(rewritten, answer, adorned_map, applied=True)
