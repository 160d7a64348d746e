"""Seeded random program generators for the differential suites.

Programs are safe by construction: head, negated, and comparison
variables always come from the rule's positive atoms, and negation only
reaches predicates from strictly earlier layers, so generated programs
are always stratifiable.
"""

from __future__ import annotations

import random

from trilogic.syntax import (
    Atom,
    Comparison,
    Program,
    Rule,
    Symbol,
    Variable,
    program_text,
)
from trilogic.wfs import GroundProgram

VARS = ("X", "Y", "Z")


def _random_program(
    rng: random.Random,
    max_preds: int,
    max_rules: int,
    max_facts: int,
    negation: bool,
    comparisons: bool,
) -> tuple[Program, list[int]]:
    n_preds = rng.randint(2, max_preds)
    arities = [rng.randint(1, 2) for _ in range(n_preds)]
    consts = [Symbol(f"c{i}") for i in range(rng.randint(2, 5))]

    facts = []
    for _ in range(rng.randint(1, max_facts)):
        i = rng.randrange(n_preds)
        facts.append(
            Atom(f"p{i}", tuple(rng.choice(consts) for _ in range(arities[i])))
        )

    rules = []
    for _ in range(rng.randint(1, max_rules)):
        head_i = rng.randrange(n_preds)
        body = []
        body_vars: list[str] = []
        for _ in range(rng.randint(1, 3)):
            # positive atoms may reach any layer up to the head's
            j = rng.randrange(head_i + 1)
            args = []
            for _ in range(arities[j]):
                if rng.random() < 0.75:
                    v = rng.choice(VARS)
                    args.append(Variable(v))
                    if v not in body_vars:
                        body_vars.append(v)
                else:
                    args.append(rng.choice(consts))
            body.append(Atom(f"p{j}", tuple(args)))
        if negation and head_i > 0 and rng.random() < 0.4:
            j = rng.randrange(head_i)
            args = tuple(
                Variable(rng.choice(body_vars))
                if body_vars and rng.random() < 0.8
                else rng.choice(consts)
                for _ in range(arities[j])
            )
            body.append(Atom(f"p{j}", args, negated=True))
        if comparisons and body_vars and rng.random() < 0.3:
            left = Variable(rng.choice(body_vars))
            right = (
                Variable(rng.choice(body_vars))
                if rng.random() < 0.5
                else rng.choice(consts)
            )
            body.append(Comparison(rng.choice(("=", "!=", "<", "<=")), left, right))
        head_args = tuple(
            Variable(rng.choice(body_vars))
            if body_vars and rng.random() < 0.85
            else rng.choice(consts)
            for _ in range(arities[head_i])
        )
        rules.append(Rule(Atom(f"p{head_i}", head_args), tuple(body)))

    return Program(rules=rules, facts=facts, queries=[]), arities


def random_datalog(
    rng: random.Random,
    max_preds: int = 6,
    max_rules: int = 12,
    max_facts: int = 30,
    negation: bool = False,
    comparisons: bool = True,
) -> str:
    program, _ = _random_program(
        rng, max_preds, max_rules, max_facts, negation, comparisons
    )
    return program_text(program)


def random_positive_with_query(rng: random.Random) -> tuple[str, Atom]:
    """Positive Datalog text plus a query atom whose arguments mix bound
    constants and free variables."""
    program, arities = _random_program(
        rng, max_preds=5, max_rules=8, max_facts=12, negation=False, comparisons=False
    )
    target = rng.randrange(len(arities))
    consts = sorted(
        {t for f in program.facts for t in f.args}, key=lambda s: s.text
    ) or [Symbol("c0")]
    args = tuple(
        rng.choice(consts) if rng.random() < 0.5 else Variable(VARS[k])
        for k in range(arities[target])
    )
    return program_text(program), Atom(f"p{target}", args)


def random_ground(rng: random.Random, max_atoms: int = 12) -> GroundProgram:
    n = rng.randint(3, max_atoms)
    atoms = [f"a{i}" for i in range(n)]
    rules = []
    for _ in range(rng.randint(1, 2 * n)):
        head = rng.choice(atoms)
        pos = rng.sample(atoms, rng.randint(0, min(2, n)))
        neg = rng.sample(atoms, rng.randint(0, min(2, n)))
        rules.append((head, pos, neg))
    for _ in range(rng.randint(0, 2)):
        rules.append((rng.choice(atoms), [], []))
    return GroundProgram.from_test_rules(rules, extra_atoms=atoms)
