#!/usr/bin/env python3
"""Regenerate the corpus fixtures under corpus/.

Programs are written from the templates below; expected.txt goldens are
computed with the independent oracles in trilogic.oracles (never with the
engine) and rendered with the CLI's text conventions. Run from the repo
root: python3 tools/make_fixtures.py
"""

from __future__ import annotations

import random
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from trilogic import oracles, syntax  # noqa: E402

CORPUS = ROOT / "corpus"


def write_fixture(name: str, program: str, meta: dict, query: str | None = None,
                  expected: str | None = None):
    d = CORPUS / name
    if d.exists():
        shutil.rmtree(d)
    d.mkdir(parents=True)
    (d / "program.lp").write_text(program, encoding="utf-8")
    (d / "meta.toml").write_text(
        "".join(f"{k} = {v}\n" for k, v in meta.items()), encoding="utf-8"
    )
    if query is not None:
        (d / "query.txt").write_text(query + "\n", encoding="utf-8")
    if expected is not None:
        (d / "expected.txt").write_text(expected, encoding="utf-8")


# ---------------------------------------------------------------- rendering
# Mirrors the CLI text contract; the atom/answer SETS come from oracles.


def atom_line(pred: str, args: tuple) -> str:
    if not args:
        return pred
    return f"{pred}({','.join(syntax.term_text(t) for t in args)})"


def render_full_model(facts: dict) -> str:
    lines = []
    for pred in sorted(facts):
        for tup in sorted(facts[pred], key=lambda t: tuple(map(oracles.term_sort_key, t))):
            lines.append(atom_line(pred[0], tup))
    return "".join(l + "\n" for l in lines)


def render_query_answers(query_text: str, rows: list[str]) -> str:
    return "".join(l + "\n" for l in [f"?- {query_text}.", *rows])


def oracle_query_rows(program_text: str, query_text: str) -> list[str]:
    program = syntax.validate_safety(syntax.desugar_paths(syntax.parse(program_text)))
    q = syntax.parse_query(query_text)[0]
    return oracles.query_closure_answers(program, q)


def oracle_full_model(program_text: str) -> str:
    program = syntax.validate_safety(syntax.desugar_paths(syntax.parse(program_text)))
    return render_full_model(oracles.ground_closure(program))


# ----------------------------------------------------------------- fixtures

ANCESTOR_RULES = """\
is_ancestor(X,Y) :- is_parent(X,Y).
is_ancestor(X,Y) :- is_parent(X,Z), is_ancestor(Z,Y).
"""

ancestor_chain = """\
% four-generation chain
is_parent(a,b).
is_parent(b,c).
is_parent(c,d).
""" + ANCESTOR_RULES

ancestor_cycle = """\
% parenthood data forming a cycle; tabling must terminate the closure
is_parent(a,b).
is_parent(b,c).
is_parent(c,a).
""" + ANCESTOR_RULES

ancestor_tree = """\
% branching family tree, closure written with the path operator
is_parent(ann,bob).
is_parent(ann,cal).
is_parent(bob,dee).
is_parent(bob,eli).
is_parent(cal,fay).
is_parent(fay,gus).
is_ancestor(X,Y) :- is_parent+(X,Y).
"""

grandfather = """\
is_father(dan,bob).
is_father(bob,amy).
is_parent(X,Y) :- is_father(X,Y).
is_grandfather(X,Y) :- is_father(X,Z), is_parent(Z,Y).
"""

mother = """\
is_parent(bob,amy).
is_parent(eve,amy).
is_parent(bob,ann).
is_parent(eve,ann).
male(bob).
is_mother(X,Y) :- is_parent(X,Y), not male(X).
"""

chain_links = """\
% colored three-hop chains; green links are scarce
link(a1,b1,red).
link(a1,b2,red).
link(a2,b2,red).
link(a3,b3,red).
link(a4,b1,red).
link(b1,c1,green).
link(b3,c2,green).
link(c1,d1,blue).
link(c1,d2,blue).
link(c2,d3,blue).
link(c3,d4,blue).
chain(X,Y) :- link(X,U,red), link(U,V,green), link(V,Y,blue).
"""

rbac_core = """\
% core role-based access control: sessions activate roles, roles hold
% permissions; check_access joins the two
session_user(s1,alice).
session_user(s2,bob).
session_user(s3,carol).
session_role(s1,engineer).
session_role(s2,auditor).
session_role(s3,engineer).
session_role(s3,auditor).
user_role(alice,engineer).
user_role(bob,auditor).
user_role(carol,engineer).
user_role(carol,auditor).
perm_assign(engineer,read,file1).
perm_assign(engineer,write,file1).
perm_assign(engineer,read,spec1).
perm_assign(auditor,read,file1).
perm_assign(auditor,read,log1).
check_access(S,Op,Obj) :- session_role(S,R), perm_assign(R,Op,Obj).
user_permission(U,Op,Obj) :- user_role(U,R), perm_assign(R,Op,Obj).
"""

trust_delegation = """\
% delegation chains close transitively from the root of trust
root_key(ca).
delegates(ca,k1).
delegates(k1,k2).
delegates(k2,k3).
delegates(ca,k4).
delegates(k7,k8).
asserts(k3,doc1).
asserts(k4,doc2).
asserts(k8,doc3).
trusted(K) :- root_key(K).
trusted(K) :- trusted(D), delegates(D,K).
authorized(Doc) :- trusted(K), asserts(K,Doc).
"""

WIN_RULE = "win(X) :- move(X,Y), not win(Y).\n"

win_acyclic = "move(a,b).\n" + WIN_RULE
win_selfloop = "move(a,a).\n" + WIN_RULE
win_2cycle = "move(a,b).\nmove(b,a).\n" + WIN_RULE

good_zak = "good(zak) :- not good(zak).\n"

is_positive = """\
is_positive(1).
is_positive(succ(N)) :- is_positive(N).
"""


def andersen_program(n_vars: int = 25, n_statements: int = 200, seed: int = 2024) -> str:
    rng = random.Random(seed)
    names = [f"v{i}" for i in range(n_vars)]
    seen = set()
    lines = ["% generated pointer-assignment statements (seed 2024)"]
    while len(seen) < n_statements:
        kind = rng.choice(("addr_of", "assign", "store", "load"))
        a, b = rng.sample(names, 2)
        stmt = (kind, a, b)
        if stmt in seen:
            continue
        seen.add(stmt)
        lines.append(f"{kind}({a},{b}).")
    lines += [
        "points_to(P,X) :- addr_of(P,X).",
        "points_to(P,X) :- assign(P,Q), points_to(Q,X).",
        "points_to(T,X) :- store(P,Q), points_to(P,T), points_to(Q,X).",
        "points_to(P,X) :- load(P,Q), points_to(Q,T), points_to(T,X).",
    ]
    return "\n".join(lines) + "\n"


def queens_program(n: int) -> str:
    lines = [f"% {n}-queens: one queen per row, captures forbidden"]
    lines += [f"row({i})." for i in range(1, n + 1)]
    lines += [f"col({i})." for i in range(1, n + 1)]
    for r1 in range(1, n + 1):
        for r2 in range(r1 + 1, n + 1):
            d = r2 - r1
            for c1 in range(1, n + 1):
                for c2 in (c1 - d, c1 + d):
                    if 1 <= c2 <= n:
                        lines.append(f"diag({r1},{c1},{r2},{c2}).")
    lines += [
        "queen(R,C) :- row(R), col(C), not other(R,C).",
        "other(R,C) :- queen(R,C2), col(C), C != C2.",
        "bad :- queen(R1,C), queen(R2,C), R1 < R2, not bad.",
        "bad :- queen(R1,C1), queen(R2,C2), diag(R1,C1,R2,C2), not bad.",
    ]
    return "\n".join(lines) + "\n"


def main():
    CORPUS.mkdir(exist_ok=True)

    write_fixture(
        "ancestor-chain", ancestor_chain,
        {"semantics": "stratified", "oracle": "reachability"},
        expected=oracle_full_model(ancestor_chain),
    )
    write_fixture(
        "ancestor-cycle", ancestor_cycle,
        {"semantics": "stratified", "oracle": "reachability"},
        expected=oracle_full_model(ancestor_cycle),
    )
    write_fixture(
        "ancestor-tree", ancestor_tree,
        {"semantics": "stratified", "oracle": "reachability"},
        expected=oracle_full_model(ancestor_tree),
    )
    write_fixture(
        "grandfather", grandfather,
        {"semantics": "stratified", "oracle": "query_closure"},
        query="is_grandfather(X,Y)",
        expected=render_query_answers(
            "is_grandfather(X,Y)", oracle_query_rows(grandfather, "is_grandfather(X,Y)")
        ),
    )
    write_fixture(
        "mother", mother,
        {"semantics": "stratified", "oracle": "query_closure"},
        query="is_mother(X,Y)",
        expected=render_query_answers(
            "is_mother(X,Y)", oracle_query_rows(mother, "is_mother(X,Y)")
        ),
    )
    write_fixture(
        "chain-links", chain_links,
        {"semantics": "stratified", "oracle": "query_closure"},
        query="chain(X,Y)",
        expected=render_query_answers(
            "chain(X,Y)", oracle_query_rows(chain_links, "chain(X,Y)")
        ),
    )
    write_fixture(
        "rbac-core", rbac_core,
        {"semantics": "stratified", "oracle": "query_closure"},
        query="check_access(S,Op,Obj)",
        expected=render_query_answers(
            "check_access(S,Op,Obj)",
            oracle_query_rows(rbac_core, "check_access(S,Op,Obj)"),
        ),
    )
    write_fixture(
        "trust-delegation", trust_delegation,
        {"semantics": "stratified", "oracle": "closure"},
        expected=oracle_full_model(trust_delegation),
    )
    andersen = andersen_program()
    write_fixture(
        "andersen", andersen,
        {"semantics": "stratified", "oracle": "andersen"},
        expected=oracle_full_model(andersen),
    )

    # win/move cases: model blocks ordered by the documented search order
    # (decide false first, smallest atom id first), atoms sorted per block
    write_fixture(
        "win-acyclic", win_acyclic,
        {"semantics": "stable", "models": "all", "oracle": "stable_brute"},
        expected="model 1:\nmove(a,b)\nwin(a)\n",
    )
    write_fixture(
        "win-selfloop", win_selfloop,
        {"semantics": "stable", "models": "all", "oracle": "stable_brute"},
        expected="",
    )
    write_fixture(
        "win-2cycle", win_2cycle,
        {"semantics": "stable", "models": "all", "oracle": "stable_brute"},
        expected=(
            "model 1:\nmove(a,b)\nmove(b,a)\nwin(b)\n"
            "model 2:\nmove(a,b)\nmove(b,a)\nwin(a)\n"
        ),
    )
    write_fixture(
        "good-zak", good_zak,
        {"semantics": "stable", "models": "all", "oracle": "stable_brute"},
        expected="",
    )
    write_fixture(
        "is-positive-demand", is_positive,
        {"semantics": "stratified"},
        query="is_positive(succ(1))",
        expected="?- is_positive(succ(1)).\ntrue\n",
    )
    for n in range(4, 9):
        write_fixture(
            f"queens-{n}", queens_program(n),
            {"semantics": "stable", "models": "all", "oracle": "queens", "n": str(n)},
        )
    print(f"fixtures written under {CORPUS}")


if __name__ == "__main__":
    main()
