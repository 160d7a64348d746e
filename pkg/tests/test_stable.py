from __future__ import annotations

import random

from trilogic.oracles import brute_stable_models
from trilogic.stable import Conflict, check_stable, propagate, solve
from trilogic.syntax import load
from trilogic.wfs import GroundProgram, ground, well_founded

from genprog import random_ground

WIN = "win(X) :- move(X,Y), not win(Y)."


def _idx(g, name: str) -> int:
    return g.atom_names.index(name)


def _model_names(g, m) -> set[str]:
    return {g.atom_names[a] for a in m}


# ------------------------------------------------------------- propagation


def test_propagate_forces_unsupported_then_rule():
    g = GroundProgram.from_test_rules([("win_a", [], ["win_b"])], ["win_b"])
    result = propagate(g)
    assert result == {_idx(g, "win_a"): True, _idx(g, "win_b"): False}


def test_propagate_leaves_self_support_open():
    g = GroundProgram.from_test_rules([("p", ["p"], [])])
    assert propagate(g) == {}


def test_propagate_empty_program():
    g = GroundProgram.from_test_rules([])
    assert propagate(g) == {}


def test_propagate_reports_conflict_with_both_reasons():
    # fact p plus an assumption p=false clash immediately
    g = GroundProgram.from_test_rules([("p", [], [])])
    conflict = propagate(g, {_idx(g, "p"): False})
    assert isinstance(conflict, Conflict)
    assert {conflict.reason_existing[0], conflict.reason_attempted[0]} <= {
        "rule", "given"
    }


def test_propagation_never_prunes_stable_models():
    for seed in range(60):
        g = random_ground(random.Random(seed), max_atoms=8)
        forced = propagate(g)
        if isinstance(forced, Conflict):
            assert brute_stable_models(g) == []
            continue
        for m in brute_stable_models(g):
            for atom, val in forced.items():
                assert (atom in m) == val


# ------------------------------------------------------------ check_stable


def test_check_stable_two_cycle():
    g = ground(load("move(a,b). move(b,a). " + WIN))
    move_ab, move_ba = _idx(g, "move(a,b)"), _idx(g, "move(b,a)")
    win_a, win_b = _idx(g, "win(a)"), _idx(g, "win(b)")
    assert check_stable(g, {move_ab, move_ba, win_a})
    assert check_stable(g, {move_ab, move_ba, win_b})
    assert not check_stable(g, {move_ab, move_ba})
    assert not check_stable(g, {move_ab, move_ba, win_a, win_b})


def test_check_stable_self_loop_has_no_model():
    g = ground(load("move(a,a). " + WIN))
    move, win = _idx(g, "move(a,a)"), _idx(g, "win(a)")
    assert not check_stable(g, {move, win})
    assert not check_stable(g, {move})


def test_check_stable_good_zak():
    g = ground(load("good(zak) :- not good(zak)."))
    atom = _idx(g, "good(zak)")
    assert not check_stable(g, set())
    assert not check_stable(g, {atom})


# ------------------------------------------------------------------- solve


def test_solve_win_acyclic_single_model():
    g = ground(load("move(a,b). " + WIN))
    models, stats = solve(g)
    assert [_model_names(g, m) for m in models] == [{"move(a,b)", "win(a)"}]


def test_solve_win_self_loop_no_models():
    g = ground(load("move(a,a). " + WIN))
    models, _ = solve(g, max_models=None)
    assert models == []


def test_solve_win_two_cycle_two_models():
    g = ground(load("move(a,b). move(b,a). " + WIN))
    models, _ = solve(g, max_models=None)
    assert [_model_names(g, m) - {"move(a,b)", "move(b,a)"} for m in models] == [
        {"win(b)"}, {"win(a)"}
    ]


def test_solve_respects_max_models():
    g = ground(load("move(a,b). move(b,a). " + WIN))
    models, _ = solve(g, max_models=1)
    assert len(models) == 1


def test_solve_matches_brute_force_enumeration():
    for seed in range(80):
        g = random_ground(random.Random(1000 + seed), max_atoms=9)
        models, _ = solve(g, max_models=None)
        assert sorted(models, key=sorted) == brute_stable_models(g)


def test_backjumping_preserves_model_list_and_saves_decisions():
    jumped_any = False
    for seed in range(60):
        g = random_ground(random.Random(2000 + seed), max_atoms=10)
        with_bj, stats_on = solve(g, max_models=None, backjump=True)
        without, stats_off = solve(g, max_models=None, backjump=False)
        assert with_bj == without
        assert stats_on.decisions <= stats_off.decisions
        jumped_any = jumped_any or stats_on.backjumps > 0
    assert jumped_any  # the suite actually exercises backjumps


def test_wfs_bounds_stable_models():
    for seed in range(40):
        g = random_ground(random.Random(3000 + seed), max_atoms=8)
        wf = well_founded(g)
        models, _ = solve(g, max_models=None)
        for m in models:
            assert wf.true_set <= m
            assert not (m & (set(range(len(g.atom_names))) - wf.true_set - wf.undefined_set))


def test_deterministic_enumeration_order():
    g = ground(load("move(a,b). move(b,a). move(b,c). " + WIN))
    first, _ = solve(g, max_models=None)
    second, _ = solve(g, max_models=None)
    assert first == second


def test_solver_stats_counters():
    g = ground(load("move(a,b). move(b,a). " + WIN))
    models, stats = solve(g, max_models=None)
    assert stats.stability_checks >= len(models)
    assert stats.decisions >= 1
