"""Grounding and the well-founded (3-valued) model.

Grounding evaluates the positive envelope (the program with negations
deleted) to bound the relevant ground atom universe, then instantiates
each rule over envelope-backed substitutions; ground comparisons are
eliminated and ground aggregates are evaluated against the envelope and
replaced. The well-founded model comes from the alternating fixed point
of the reduct operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import analysis, fixpoint, joineval, syntax
from .errors import StratificationError, UnsupportedInModeError
from .fixpoint import EvalConfig
from .store import Database
from .syntax import Aggregate, Atom, Comparison, Program, Rule, Variable

PredKey = tuple[str, int]


@dataclass(frozen=True)
class GroundRule:
    head: int
    pos: tuple[int, ...]
    neg: tuple[int, ...]


@dataclass
class GroundProgram:
    atom_names: list[str]
    atom_pred: list[PredKey]
    atom_args: list[tuple[int, ...]]
    rules: list[GroundRule]
    db: Database | None = None
    by_pred: dict[PredKey, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.by_pred:
            for i, pred in enumerate(self.atom_pred):
                self.by_pred.setdefault(pred, []).append(i)

    def __len__(self) -> int:
        return len(self.atom_names)

    def atom_text(self, i: int) -> str:
        return self.atom_names[i]

    @classmethod
    def from_test_rules(
        cls,
        rules: list[tuple[str, list[str], list[str]]],
        extra_atoms: list[str] | None = None,
    ) -> "GroundProgram":
        """Build a propositional program from (head, positive, negative)
        triples of atom names; handy for tests."""
        names: set[str] = set(extra_atoms or [])
        for head, pos, neg in rules:
            names.add(head)
            names.update(pos)
            names.update(neg)
        ordered = sorted(names)
        index = {name: i for i, name in enumerate(ordered)}
        ground_rules = [
            GroundRule(
                index[head],
                tuple(sorted({index[a] for a in pos})),
                tuple(sorted({index[a] for a in neg})),
            )
            for head, pos, neg in rules
        ]
        return cls(
            atom_names=ordered,
            atom_pred=[(n, 0) for n in ordered],
            atom_args=[() for _ in ordered],
            rules=sorted(set(ground_rules), key=lambda r: (r.head, r.pos, r.neg)),
        )


def _open_compound(term: syntax.Term) -> bool:
    return isinstance(term, syntax.Compound) and not syntax.term_is_ground(term)


def _check_function_free(program: Program) -> None:
    for rule in program.rules:
        literals = [rule.head, *rule.body]
        for lit in literals:
            args: tuple[syntax.Term, ...] = ()
            if isinstance(lit, Atom):
                args = lit.args
            elif isinstance(lit, Comparison):
                args = (lit.left, lit.right)
            else:
                for inner in lit.body:
                    if isinstance(inner, Atom):
                        args += inner.args
                    else:
                        args += (inner.left, inner.right)
            for t in args:
                if _open_compound(t):
                    raise UnsupportedInModeError(
                        "function symbols with variables are not supported "
                        f"under wfs/stable semantics: {syntax.term_text(t)} "
                        f"in rule {syntax.rule_text(rule)}"
                    )


def _check_aggregate_cycles(program: Program) -> None:
    graph = analysis.build_graph(program)
    comps = analysis.sccs(graph)
    comp_of = {}
    for i, comp in enumerate(comps):
        for pred in comp:
            comp_of[pred] = i
    for h, b, polarity in sorted(graph.edges):
        if polarity == analysis.AGGREGATE and comp_of[h] == comp_of[b]:
            cycle = ", ".join(f"{p}/{a}" for p, a in sorted(comps[comp_of[h]]))
            raise StratificationError(
                f"aggregate inside a recursive cycle through {{{cycle}}}"
            )


def _rule_scope_vars(rule: Rule) -> list[str]:
    seen: dict[str, None] = {}
    for t in rule.head.args:
        for v in syntax.term_variables(t):
            seen.setdefault(v)
    for lit in rule.body:
        if isinstance(lit, Aggregate):
            seen.setdefault(lit.result.name)
            for inner in lit.body:
                for v in syntax.literal_variables(inner):
                    if v != lit.local.name:
                        seen.setdefault(v)
        else:
            for v in syntax.literal_variables(lit):
                seen.setdefault(v)
    return list(seen)


def ground(program: Program, cfg: EvalConfig | None = None) -> GroundProgram:
    """Instantiate a validated function-free program over its positive
    envelope; compound ground terms in facts act as opaque constants."""
    assert program.validated, "ground needs a validated program"
    cfg = cfg or EvalConfig()
    _check_function_free(program)
    _check_aggregate_cycles(program)

    envelope_rules = []
    for rule in program.rules:
        body = tuple(
            lit
            for lit in rule.body
            if not (isinstance(lit, Atom) and lit.negated)
        )
        envelope_rules.append(Rule(rule.head, body, origin=rule.origin))
    envelope = Program(
        rules=envelope_rules,
        facts=list(program.facts),
        queries=[],
        fact_origins=list(program.fact_origins),
        desugared=True,
        validated=True,
    )
    env = fixpoint.evaluate_program(envelope, cfg).db

    GroundAtom = tuple[PredKey, tuple[int, ...]]
    instances: list[tuple[GroundAtom, tuple[GroundAtom, ...], tuple[GroundAtom, ...]]] = []
    universe: set[GroundAtom] = set()
    for pred in env.sorted_preds():
        for tup in env.sorted_tuples(pred):
            universe.add((pred, tup))

    for fact in program.facts:
        ids = tuple(env.terms.intern(t) for t in fact.args)
        instances.append(((fact.key, ids), (), ()))

    for rule in program.rules:
        scope = _rule_scope_vars(rule)
        probe_head = Atom("__inst", tuple(Variable(v) for v in scope))
        probe_body = tuple(
            lit
            for lit in rule.body
            if not (isinstance(lit, Atom) and lit.negated)
        )
        probe = Rule(probe_head, probe_body)
        probe_plan = joineval.plan(probe, env)
        neg_literals = [
            lit for lit in rule.body if isinstance(lit, Atom) and lit.negated
        ]
        for tup in sorted(joineval.eval_rule(probe, probe_plan, env)):
            binding = dict(zip(scope, tup))

            def ground_atom(lit: Atom) -> GroundAtom:
                ids = tuple(
                    joineval.resolve(t, binding, env.terms) for t in lit.args
                )
                return (lit.key, ids)

            head = ground_atom(rule.head)
            assert head in universe, "instantiated head missing from envelope"
            pos = tuple(
                ground_atom(lit)
                for lit in rule.body
                if isinstance(lit, Atom) and not lit.negated
            )
            neg = tuple(ground_atom(lit) for lit in neg_literals)
            # negated instance atoms join the universe even when the
            # envelope cannot derive them; they are simply false there
            universe.update(neg)
            instances.append((head, pos, neg))

    ordered = sorted(
        universe, key=lambda a: (a[0], env.terms.tuple_key(a[1]))
    )
    atom_ids = {atom: i for i, atom in enumerate(ordered)}
    rules = {
        GroundRule(
            atom_ids[head],
            tuple(sorted({atom_ids[a] for a in pos})),
            tuple(sorted({atom_ids[a] for a in neg})),
        )
        for head, pos, neg in instances
    }
    return GroundProgram(
        atom_names=[env.atom_text(pred, tup) for pred, tup in ordered],
        atom_pred=[pred for pred, _ in ordered],
        atom_args=[tup for _, tup in ordered],
        rules=sorted(rules, key=lambda r: (r.head, r.pos, r.neg)),
        db=env,
    )


# --------------------------------------------------------- reduct operator


def reduct_least_model(g: GroundProgram, assumed_true: set[int]) -> set[int]:
    """Least model of the reduct w.r.t. `assumed_true`: rules whose negated
    atoms avoid the set survive with negations stripped, then definite
    propagation closes them."""
    kept: list[GroundRule] = [
        r for r in g.rules if not any(a in assumed_true for a in r.neg)
    ]
    pending = []
    counts = []
    occ: dict[int, list[int]] = {}
    for ri, r in enumerate(kept):
        counts.append(len(r.pos))
        if not r.pos:
            pending.append(r.head)
        for a in r.pos:
            occ.setdefault(a, []).append(ri)
    true: set[int] = set()
    while pending:
        atom = pending.pop()
        if atom in true:
            continue
        true.add(atom)
        for ri in occ.get(atom, ()):
            counts[ri] -= 1
            if counts[ri] == 0:
                pending.append(kept[ri].head)
    return true


@dataclass
class WfModel:
    true_set: frozenset[int]
    undefined_set: frozenset[int]
    program: GroundProgram

    def value(self, atom: int) -> str:
        if atom in self.true_set:
            return "true"
        if atom in self.undefined_set:
            return "undefined"
        return "false"


def well_founded(g: GroundProgram) -> WfModel:
    """Alternating fixed point: underestimate and overestimate converge
    from below and above; the gap is the undefined set."""
    lower: set[int] = set()
    upper: set[int] = set(range(len(g.atom_names)))
    while True:
        assert lower <= upper
        next_lower = reduct_least_model(g, upper)
        next_upper = reduct_least_model(g, lower)
        assert lower <= next_lower and next_upper <= upper
        if next_lower == lower and next_upper == upper:
            break
        lower, upper = next_lower, next_upper
    return WfModel(frozenset(lower), frozenset(upper - lower), g)
