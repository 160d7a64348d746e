from __future__ import annotations

import random

import pytest

from trilogic.errors import ResourceBoundError, UnknownPredicateError
from trilogic.fixpoint import (
    NAIVE,
    SEMI_NAIVE,
    EvalConfig,
    EvalStats,
    answer_query,
    evaluate_program,
)
from trilogic.oracles import ground_closure
from trilogic.syntax import Atom, Variable, load, parse_query, term_text

from genprog import random_datalog

ANCESTOR_RULES = """
is_ancestor(X,Y) :- is_parent(X,Y).
is_ancestor(X,Y) :- is_parent(X,Z), is_ancestor(Z,Y).
"""


def _model(db) -> dict:
    return {
        pred: {
            tuple(term_text(db.terms.term(t)) for t in tup) for tup in rel.tuples
        }
        for pred, rel in db.relations.items()
        if rel.tuples
    }


def test_ancestor_chain():
    r = evaluate_program(load("is_parent(a,b). is_parent(b,c)." + ANCESTOR_RULES))
    assert _model(r.db)[("is_ancestor", 2)] == {
        ("a", "b"), ("b", "c"), ("a", "c")
    }


def test_ancestor_cycle_terminates():
    r = evaluate_program(load("is_parent(a,b). is_parent(b,a)." + ANCESTOR_RULES))
    assert _model(r.db)[("is_ancestor", 2)] == {
        ("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")
    }


def test_function_symbol_recursion_hits_depth_bound():
    p = load("is_positive(1). is_positive(succ(N)) :- is_positive(N).")
    with pytest.raises(ResourceBoundError) as err:
        evaluate_program(p, EvalConfig(max_term_depth=16))
    assert "16" in str(err.value)
    assert "is_positive" in str(err.value)  # names the rule


def test_max_iterations_bound():
    p = load("e(a,b). e(b,c). t(X,Y) :- e(X,Y). t(X,Y) :- e(X,Z), t(Z,Y).")
    with pytest.raises(ResourceBoundError):
        evaluate_program(p, EvalConfig(max_iterations=1))


def test_naive_equals_semi_naive_small():
    for seed in range(40):
        text = random_datalog(random.Random(seed), negation=True)
        p = load(text)
        semi = evaluate_program(p, EvalConfig(mode=SEMI_NAIVE))
        naive = evaluate_program(p, EvalConfig(mode=NAIVE))
        assert _model(semi.db) == _model(naive.db)


def _path_program(n: int) -> str:
    facts = "".join(f"is_parent(n{i},n{i+1})." for i in range(n - 1))
    return facts + ANCESTOR_RULES


def test_semi_naive_does_less_join_work():
    p = load(_path_program(24))
    semi = evaluate_program(p, EvalConfig(mode=SEMI_NAIVE))
    naive = evaluate_program(p, EvalConfig(mode=NAIVE))
    assert _model(semi.db) == _model(naive.db)
    assert semi.stats.join_probes < naive.stats.join_probes
    assert semi.stats.duplicates_suppressed <= naive.stats.duplicates_suppressed


def test_least_model_matches_closure_oracle_small():
    for seed in range(40):
        text = random_datalog(
            random.Random(100 + seed), max_preds=4, max_rules=6, max_facts=8,
            negation=False,
        )
        p = load(text)
        engine = _model(evaluate_program(p).db)
        oracle = {
            pred: {tuple(term_text(t) for t in tup) for tup in tuples}
            for pred, tuples in ground_closure(p).items()
            if tuples
        }
        assert engine == oracle


def test_stats_counters_are_consistent():
    p = load(_path_program(8))
    r = evaluate_program(p)
    s = r.stats
    assert s.rule_firings == s.tuples_derived + s.duplicates_suppressed
    assert s.join_probes > 0
    assert len(s.iterations_per_stratum) == 1


def test_stratum_closes_before_negation_reads_it():
    p = load(
        """
        e(a,b). e(b,c).
        t(X,Y) :- e(X,Y).
        t(X,Y) :- e(X,Z), t(Z,Y).
        unreachable(X,Y) :- e(X,a), e(b,Y), not t(X,Y).
        """
    )
    m = _model(evaluate_program(p).db)
    assert ("unreachable", 2) not in m or ("a", "c") not in m[("unreachable", 2)]


def test_aggregate_over_closed_stratum():
    p = load(
        """
        is_parent(bob,amy). is_parent(bob,ann). is_parent(eve,amy).
        kids(P,N) :- is_parent(P,X), N = count { C : is_parent(P,C) }.
        """
    )
    m = _model(evaluate_program(p).db)
    assert m[("kids", 2)] == {("bob", "2"), ("eve", "1")}


# ------------------------------------------------------------ answer_query


def test_answer_query_demand_terminates_function_symbols():
    p = load("is_positive(1). is_positive(succ(N)) :- is_positive(N).")
    q = parse_query("is_positive(succ(1))")[0]
    res = answer_query(p, q, EvalConfig(demand=True))
    assert [term_text(t) for a in res.answers for t in a.args] == ["succ(1)"]


def test_answer_query_open_variable():
    p = load("is_parent(a,b). is_parent(b,c)." + ANCESTOR_RULES)
    q = parse_query("is_ancestor(a,X)")[0]
    res = answer_query(p, q)
    assert [term_text(a.args[1]) for a in res.answers] == ["b", "c"]


def test_answer_query_unknown_predicate():
    p = load("q(a).")
    with pytest.raises(UnknownPredicateError):
        answer_query(p, Atom("p", (Variable("X"),)))


def test_answer_query_demand_off_matches_on():
    p = load("is_parent(a,b). is_parent(b,c). is_parent(c,d)." + ANCESTOR_RULES)
    q = parse_query("is_ancestor(X,d)")[0]
    on = answer_query(p, q, EvalConfig(demand=True))
    off = answer_query(p, q, EvalConfig(demand=False))
    assert [a.args for a in on.answers] == [a.args for a in off.answers]
    assert on.relevant_tuples <= off.relevant_tuples


def test_answers_sorted_by_term_order():
    p = load("v(10). v(2). v(amy). v('Big Name'). keep(X) :- v(X).")
    res = answer_query(p, parse_query("keep(X)")[0])
    assert [term_text(a.args[0]) for a in res.answers] == [
        "2", "10", "'Big Name'", "amy"
    ]
