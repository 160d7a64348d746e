"""Independent reference oracles for the corpus runner and the test suite.

Everything here recomputes results from first principles (brute-force
ground instantiation, closure loops, permutation filters, exhaustive
model enumeration) without touching the engine's join, fixpoint, or
search machinery, so engine bugs cannot hide behind shared code.
"""

from __future__ import annotations

import itertools

from . import syntax
from .stable import check_stable
from .syntax import Aggregate, Atom, Comparison, Program, Term
from .wfs import GroundProgram

PredKey = tuple[str, int]
FactMap = dict[PredKey, set[tuple[Term, ...]]]


def term_sort_key(term: Term):
    if isinstance(term, syntax.Integer):
        return (0, term.value)
    if isinstance(term, (syntax.Symbol, syntax.String)):
        return (1, term.text)
    if isinstance(term, syntax.Compound):
        return (2, term.functor, len(term.args), *(term_sort_key(a) for a in term.args))
    raise TypeError(f"not a ground term: {term!r}")


def _compare(op: str, left: Term, right: Term) -> bool:
    lk, rk = term_sort_key(left), term_sort_key(right)
    return {
        "=": lk == rk,
        "!=": lk != rk,
        "<": lk < rk,
        "<=": lk <= rk,
        ">": lk > rk,
        ">=": lk >= rk,
    }[op]


def fact_tuples(program: Program, name: str, arity: int) -> set[tuple[Term, ...]]:
    return {f.args for f in program.facts if f.key == (name, arity)}


def _subst(term: Term, env: dict[str, Term]) -> Term:
    if isinstance(term, syntax.Variable):
        return env[term.name]
    if isinstance(term, syntax.Compound):
        return syntax.Compound(term.functor, tuple(_subst(a, env) for a in term.args))
    return term


def ground_closure(program: Program) -> FactMap:
    """Least model by repeated ground instantiation over the active domain.

    Supports comparisons and negation restricted to predicates that never
    occur in a rule head (so their extension is fixed by the facts);
    aggregates are out of scope here.
    """
    facts: FactMap = {}
    for f in program.facts:
        facts.setdefault(f.key, set()).add(f.args)
    head_preds = {r.head.key for r in program.rules}

    constants: set[Term] = set()
    for f in program.facts:
        constants.update(f.args)
    for rule in program.rules:
        for lit in (rule.head, *rule.body):
            if isinstance(lit, Atom):
                constants.update(t for t in lit.args if syntax.term_is_ground(t))
            elif isinstance(lit, Comparison):
                for t in (lit.left, lit.right):
                    if syntax.term_is_ground(t):
                        constants.add(t)
    domain = sorted(constants, key=term_sort_key)

    def body_holds(body, env) -> bool:
        for lit in body:
            if isinstance(lit, Atom):
                tup = tuple(_subst(t, env) for t in lit.args)
                present = tup in facts.get(lit.key, set())
                if lit.negated:
                    assert lit.key not in head_preds, (
                        "closure oracle only negates fact-defined predicates"
                    )
                    if present:
                        return False
                elif not present:
                    return False
            elif isinstance(lit, Comparison):
                if not _compare(lit.op, _subst(lit.left, env), _subst(lit.right, env)):
                    return False
            else:
                raise AssertionError("closure oracle does not handle aggregates")
        return True

    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            assert not any(isinstance(l, Aggregate) for l in rule.body)
            varnames = sorted(
                {v for l in (rule.head, *rule.body) for v in syntax.literal_variables(l)}
            )
            for combo in itertools.product(domain, repeat=len(varnames)):
                env = dict(zip(varnames, combo))
                if body_holds(rule.body, env):
                    tup = tuple(_subst(t, env) for t in rule.head.args)
                    bucket = facts.setdefault(rule.head.key, set())
                    if tup not in bucket:
                        bucket.add(tup)
                        changed = True
    return facts


def query_closure_answers(program: Program, query: Atom) -> list[str]:
    """Rendered ground instances of `query` in the brute-force closure,
    sorted by the term order."""
    closure = ground_closure(program)
    rows = []
    for tup in closure.get(query.key, set()):
        env: dict[str, Term] = {}
        ok = True
        for pat, val in zip(query.args, tup):
            if isinstance(pat, syntax.Variable):
                if env.setdefault(pat.name, val) != val:
                    ok = False
                    break
            elif pat != val:
                ok = False
                break
        if ok:
            rows.append(tup)
    rows.sort(key=lambda t: tuple(map(term_sort_key, t)))
    return [syntax.literal_text(Atom(query.pred, t)) for t in rows]


def reachability(edges: set[tuple]) -> set[tuple]:
    """Transitive closure of a binary relation by saturation."""
    closure = set(edges)
    changed = True
    while changed:
        changed = False
        for (a, b) in list(closure):
            for (c, d) in edges:
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
    return closure


def queens_solutions(n: int) -> list[tuple[int, ...]]:
    """All placements, one queen per row, as column permutations with no
    shared diagonal."""
    out = []
    for perm in itertools.permutations(range(n)):
        if all(
            abs(perm[i] - perm[j]) != j - i
            for i in range(n)
            for j in range(i + 1, n)
        ):
            out.append(perm)
    return out


def andersen_points_to(
    addr: set[tuple], assign: set[tuple], store: set[tuple], load: set[tuple]
) -> dict:
    """Closure over the four assignment forms: p = &x, p = q, *p = q, p = *q."""
    pts: dict = {}
    for p, x in addr:
        pts.setdefault(p, set()).add(x)
    changed = True
    while changed:
        changed = False

        def extend(target, values):
            nonlocal changed
            bucket = pts.setdefault(target, set())
            before = len(bucket)
            bucket.update(values)
            if len(bucket) != before:
                changed = True

        for p, q in assign:
            extend(p, pts.get(q, ()))
        for p, q in store:
            for t in list(pts.get(p, ())):
                extend(t, pts.get(q, ()))
        for p, q in load:
            for t in list(pts.get(q, ())):
                extend(p, pts.get(t, ()))
    return {k: v for k, v in pts.items() if v}


def brute_stable_models(g: GroundProgram) -> list[frozenset[int]]:
    """Every subset of the atom universe that passes the reduct check."""
    n = len(g.atom_names)
    out = []
    for bits in range(1 << n):
        m = frozenset(i for i in range(n) if bits >> i & 1)
        if check_stable(g, m):
            out.append(m)
    return sorted(out, key=sorted)
