from __future__ import annotations

import itertools
import random

import pytest

from trilogic.errors import AggregateTypeError
from trilogic.fixpoint import evaluate_program
from trilogic.joineval import (
    eval_aggregate,
    eval_rule,
    match_term,
    plan,
    plan_with_order,
    resolve,
)
from trilogic.store import Database
from trilogic.syntax import Atom, Symbol, load, parse


def _db_from_facts(text: str) -> tuple[Database, object]:
    program = load(text)
    db = Database()
    for fact in program.facts:
        db.relation(fact.key).insert(
            tuple(db.terms.intern(t) for t in fact.args)
        )
    return db, program


def _texts(db: Database, tuples) -> set[tuple[str, ...]]:
    return {tuple(db.terms.text(t) for t in tup) for tup in tuples}


CHAIN_RULE = "chain(X,Y) :- link1(X,U,red), link2(U,V,green), link3(V,Y,blue)."


def test_plan_starts_with_scarce_colored_atom():
    facts = []
    for i in range(100):
        facts.append(f"link(a{i},b{i},red).")
        facts.append(f"link(c{i},d{i},blue).")
    db, _ = _db_from_facts("".join(facts))
    rule = load(
        "".join(facts)
        + "chain(X,Y) :- link(X,U,red), link(U,V,green), link(V,Y,blue)."
    ).rules[0]
    jp = plan(rule, db)
    # the green atom (estimated 0 matches) leads the order
    assert jp.atom_indexes[0] == 1


def test_plan_single_atom_identity():
    rule = load("p(a). q(X) :- p(X).").rules[0]
    jp = plan(rule, {("p", 1): 1})
    assert jp.atom_indexes == (0,)
    assert jp.steps == (("atom", 0),)


def test_plan_textual_tie_break():
    rule = load("r(X,Y) :- p(X,Z), q(Z,Y). p(a,b). q(b,c).").rules[0]
    jp = plan(rule, {("p", 2): 5, ("q", 2): 5})
    assert jp.atom_indexes == (0, 1)


def test_plan_is_body_permutation():
    rule = load(
        "s(X) :- p(X), not r(X), X != c, q(X). p(a). q(a). r(b)."
    ).rules[0]
    jp = plan(rule, {("p", 1): 1, ("q", 1): 1, ("r", 1): 1})
    assert sorted(i for _, i in jp.steps) == [0, 1, 2, 3]
    # conditions sit after their variables are bound
    pos = {i: n for n, (_, i) in enumerate(jp.steps)}
    assert pos[1] > pos[0] and pos[2] > pos[0]


GRANDFATHER_FACTS = "is_father(dan,bob). is_father(bob,amy)."


def test_eval_rule_grandfather():
    db, _ = _db_from_facts(GRANDFATHER_FACTS)
    # is_parent mirrors is_father
    parent = db.relation(("is_parent", 2))
    for tup in db.relation(("is_father", 2)).tuples:
        parent.insert(tup)
    rule = load(
        GRANDFATHER_FACTS
        + " is_grandfather(X,Y) :- is_father(X,Z), is_parent(Z,Y)."
    ).rules[0]
    out = eval_rule(rule, plan(rule, db), db)
    assert _texts(db, out) == {("dan", "amy")}


def test_eval_rule_sibling_reflexive_pairs():
    db, _ = _db_from_facts("is_parent(bob,amy). is_parent(bob,ann).")
    rule = load(
        "is_parent(a,b). sibling(X,Y) :- is_parent(Z,X), is_parent(Z,Y)."
    ).rules[0]
    out = eval_rule(rule, plan(rule, db), db)
    assert _texts(db, out) == {
        ("amy", "amy"), ("amy", "ann"), ("ann", "amy"), ("ann", "ann")
    }


def test_eval_rule_mother_negation():
    db, _ = _db_from_facts("is_parent(bob,amy). is_parent(eve,amy). male(bob).")
    rule = load(
        "is_parent(a,b). male(a). is_mother(X,Y) :- is_parent(X,Y), not male(X)."
    ).rules[0]
    out = eval_rule(rule, plan(rule, db), db)
    assert _texts(db, out) == {("eve", "amy")}


def test_eval_rule_ground_negation_zero_vars():
    db, _ = _db_from_facts("p(a).")
    rule = load("p(a). good(zak) :- not absent.").rules[0]
    out = eval_rule(rule, plan(rule, db), db)
    assert _texts(db, out) == {("zak",)}


def _nested_loop_reference(db, rule):
    """Brute-force evaluation over full scans; no indexes, no planning."""
    atoms = [l for l in rule.body if isinstance(l, Atom) and not l.negated]
    results = set()

    def walk(i, binding):
        if i == len(atoms):
            for lit in rule.body:
                if isinstance(lit, Atom) and lit.negated:
                    ids = tuple(resolve(t, binding, db.terms) for t in lit.args)
                    if db.atom_true(lit.key, ids):
                        return
            results.add(
                tuple(resolve(t, binding, db.terms) for t in rule.head.args)
            )
            return
        rel = db.relations.get(atoms[i].key)
        for tup in (rel.tuples if rel else ()):
            trail = []
            b2 = dict(binding)
            if all(
                match_term(t, tup[k], b2, trail, db.terms)
                for k, t in enumerate(atoms[i].args)
            ):
                walk(i + 1, b2)

    walk(0, {})
    return results


def test_plan_independence_and_index_equivalence():
    rng = random.Random(11)
    db, _ = _db_from_facts(
        "e(a,b). e(b,c). e(c,a). e(a,c). f(b). f(c). g(a,b). g(c,b)."
    )
    rules = load(
        """
        e(a,b). f(b). g(a,b).
        out1(X,Y) :- e(X,Z), e(Z,Y), not f(Y).
        out2(X) :- e(X,Y), f(Y), g(X,Y).
        out3(X,Y) :- e(X,Y), X != Y, not g(X,Y).
        """
    ).rules
    for rule in rules:
        reference = _nested_loop_reference(db, rule)
        n_atoms = sum(
            1 for l in rule.body if isinstance(l, Atom) and not l.negated
        )
        default = eval_rule(rule, plan(rule, db), db)
        assert default == reference
        for perm in itertools.permutations(range(len(rule.body))):
            order = [i for i in perm if i < n_atoms or rule.body[i] in ()]
            # keep only positive atom indexes, preserving permutation order
            order = [
                i for i in perm
                if isinstance(rule.body[i], Atom) and not rule.body[i].negated
            ]
            out = eval_rule(rule, plan_with_order(rule, order), db)
            assert out == reference


def test_eval_aggregate_count_children():
    db, _ = _db_from_facts("is_parent(bob,amy). is_parent(bob,ann).")
    agg = load("p(N) :- q(bob), N = count { X : is_parent(bob,X) }. q(bob).").rules[0].body[1]
    value = eval_aggregate(agg, {}, db)
    assert db.terms.text(value) == "2"


def test_eval_aggregate_empty_count_and_sum():
    db, _ = _db_from_facts("q(a).")
    count = load("p(N) :- q(X), N = count { Y : r(X,Y) }. q(a).").rules[0].body[1]
    total = load("p(N) :- q(X), N = sum { Y : r(X,Y) }. q(a).").rules[0].body[1]
    a = db.terms.intern(Symbol("a"))
    assert db.terms.text(eval_aggregate(count, {"X": a}, db)) == "0"
    assert db.terms.text(eval_aggregate(total, {"X": a}, db)) == "0"


def test_eval_aggregate_min_empty_fails():
    db, _ = _db_from_facts("q(a).")
    agg = load("p(N) :- q(X), N = min { Y : r(X,Y) }. q(a).").rules[0].body[1]
    a = db.terms.intern(Symbol("a"))
    assert eval_aggregate(agg, {"X": a}, db) is None


def test_eval_aggregate_deduplicates_values():
    db, _ = _db_from_facts("r(a,1). r(b,1). r(a,2).")
    agg = load("p(N) :- s(K), N = count { V : r(K,V) }. s(a).").rules[0].body[1]
    # inner variable K is outer-bound; bind it per call
    a = db.terms.intern(Symbol("a"))
    b = db.terms.intern(Symbol("b"))
    assert db.terms.text(eval_aggregate(agg, {"K": a}, db)) == "2"
    assert db.terms.text(eval_aggregate(agg, {"K": b}, db)) == "1"


def test_eval_aggregate_sum_type_error():
    db, _ = _db_from_facts("r(a,one).")
    agg = load("p(N) :- q(X), N = sum { Y : r(X,Y) }. q(a).").rules[0].body[1]
    a = db.terms.intern(Symbol("a"))
    with pytest.raises(AggregateTypeError):
        eval_aggregate(agg, {"X": a}, db)


def test_existential_count_encoding_matches_direct_atom():
    base = "e(a,b). e(b,c). f(c)."
    direct = evaluate_program(load(base + " ok(X) :- e(X,Y), f(Y)."))
    encoded = evaluate_program(
        load(base + " ok(X) :- e(X,Y), N = count { Z : e(X,Z), f(Z) }, N > 0.")
    )
    key = ("ok", 1)
    assert _texts(direct.db, direct.db.relations[key].tuples) == _texts(
        encoded.db, encoded.db.relations[key].tuples
    )


def test_comparisons_follow_global_term_order():
    db, _ = _db_from_facts("v(1). v(amy). v(zed).")
    rule = load("v(1). below(X,Y) :- v(X), v(Y), X < Y.").rules[0]
    out = eval_rule(rule, plan(rule, db), db)
    got = _texts(db, out)
    assert ("1", "amy") in got and ("amy", "zed") in got
    assert ("zed", "amy") not in got
