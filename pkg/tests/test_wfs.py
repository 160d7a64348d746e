from __future__ import annotations

import random

import pytest

from trilogic.errors import StratificationError, UnsupportedInModeError
from trilogic.fixpoint import EvalConfig, evaluate_program
from trilogic.syntax import load, term_text
from trilogic.wfs import GroundProgram, ground, reduct_least_model, well_founded

from genprog import random_datalog

WIN = "win(X) :- move(X,Y), not win(Y)."


def _names(g, atoms) -> set[str]:
    return {g.atom_names[i] for i in atoms}


def test_ground_single_move_instance():
    g = ground(load("move(a,b). " + WIN))
    assert g.atom_names == ["move(a,b)", "win(a)", "win(b)"]
    bodies = [
        (g.atom_names[r.head], _names(g, r.pos), _names(g, r.neg))
        for r in g.rules
        if r.pos or r.neg
    ]
    assert bodies == [("win(a)", {"move(a,b)"}, {"win(b)"})]


def test_ground_empty_move_relation():
    g = ground(load("has_move :- move(X,Y). " + WIN + " move(X,Y) :- arc(X,Y)."))
    assert g.atom_names == []
    assert g.rules == []


def test_ground_comparison_elimination():
    g = ground(load("p(1). p(2). q(X) :- p(X), X < 2."))
    heads = {g.atom_names[r.head] for r in g.rules}
    assert "q(1)" in heads
    assert "q(2)" not in heads


def test_ground_rejects_open_function_symbols():
    with pytest.raises(UnsupportedInModeError):
        ground(load("p(1). p(succ(N)) :- p(N)."))


def test_ground_allows_opaque_compound_constants():
    g = ground(load("cert(id(amy)). holder(X) :- cert(X)."))
    assert "holder(id(amy))" in {g.atom_names[r.head] for r in g.rules}


def test_ground_rejects_aggregates_in_negative_cycles():
    src = "p(N) :- q(X), N = count { Y : p(Y) }. q(1). p(0)."
    with pytest.raises(StratificationError) as err:
        ground(load(src))
    assert "p/1" in str(err.value)


def test_ground_evaluates_stratified_aggregates():
    g = ground(
        load(
            """
            is_parent(bob,amy). is_parent(bob,ann).
            busy(P) :- is_parent(P,X), N = count { C : is_parent(P,C) }, N >= 2.
            """
        )
    )
    assert "busy(bob)" in {g.atom_names[r.head] for r in g.rules}


def test_well_founded_win_acyclic():
    g = ground(load("move(a,b). " + WIN))
    m = well_founded(g)
    assert _names(g, m.true_set) == {"move(a,b)", "win(a)"}
    assert not m.undefined_set
    assert m.value(g.atom_names.index("win(b)")) == "false"


def test_well_founded_win_self_loop():
    g = ground(load("move(a,a). " + WIN))
    m = well_founded(g)
    assert _names(g, m.undefined_set) == {"win(a)"}


def test_well_founded_win_two_cycle():
    g = ground(load("move(a,b). move(b,a). " + WIN))
    m = well_founded(g)
    assert _names(g, m.undefined_set) == {"win(a)", "win(b)"}
    assert _names(g, m.true_set) == {"move(a,b)", "move(b,a)"}


def test_well_founded_good_zak_undefined():
    g = ground(load("good(zak) :- not good(zak)."))
    m = well_founded(g)
    assert _names(g, m.undefined_set) == {"good(zak)"}


def test_gamma_on_negation_free_program_is_least_model():
    # the reduct operator applied to the empty set reproduces the least
    # model computed by the stratified fixpoint engine
    src = "e(a,b). e(b,c). t(X,Y) :- e(X,Y). t(X,Y) :- e(X,Z), t(Z,Y)."
    p = load(src)
    g = ground(p)
    gamma_empty = {g.atom_names[i] for i in reduct_least_model(g, set())}
    db = evaluate_program(p).db
    engine = {
        db.atom_text(pred, tup)
        for pred, rel in db.relations.items()
        for tup in rel.tuples
    }
    assert gamma_empty == engine


def test_wfs_agrees_with_stratified_on_random_programs():
    for seed in range(30):
        src = random_datalog(
            random.Random(300 + seed), max_preds=4, max_rules=6, max_facts=10,
            negation=True,
        )
        p = load(src)
        g = ground(p)
        m = well_founded(g)
        assert not m.undefined_set
        db = evaluate_program(p).db
        engine = {
            db.atom_text(pred, tup)
            for pred, rel in db.relations.items()
            for tup in rel.tuples
        }
        assert _names(g, m.true_set) == engine


def test_from_test_rules_round_trip():
    g = GroundProgram.from_test_rules(
        [("win_a", [], ["win_b"]), ("win_b", [], ["win_a"])]
    )
    m = well_founded(g)
    assert _names(g, m.undefined_set) == {"win_a", "win_b"}
