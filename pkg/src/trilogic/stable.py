"""Stable-model enumeration: backtracking search with completion-based
propagation, conflict-directed backjumping, and a stability check.

Propagation applies three sound closures to fixpoint: a rule whose body
literals are all satisfied forces its head true; an atom whose defining
rules are all falsified (or that has none) is forced false. Both rest on
stable models being supported models, so no stable model is ever pruned.
Candidates surviving to a total assignment are emitted iff the least
model of their reduct reproduces them exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .wfs import GroundProgram, reduct_least_model

TRUE, FALSE = 1, -1

# reasons: ("decision",) | ("given",) | ("rule", rule_idx)
#        | ("unsupported", falsifying_atoms)
Reason = tuple


@dataclass
class Conflict:
    atom: int
    value_existing: int
    reason_existing: Reason
    value_attempted: int
    reason_attempted: Reason


@dataclass
class SolveStats:
    decisions: int = 0
    conflicts: int = 0
    backjumps: int = 0
    stability_checks: int = 0

    def as_dict(self) -> dict:
        return {
            "decisions": self.decisions,
            "conflicts": self.conflicts,
            "backjumps": self.backjumps,
            "stability_checks": self.stability_checks,
        }


def check_stable(g: GroundProgram, model: set[int] | frozenset[int]) -> bool:
    """True iff the least model of the reduct w.r.t. `model` equals it."""
    return reduct_least_model(g, set(model)) == set(model)


class Solver:
    def __init__(self, g: GroundProgram, backjump: bool = True):
        self.g = g
        self.backjump_enabled = backjump
        n = len(g.atom_names)
        rules = g.rules
        self.value = [0] * n
        self.level = [0] * n
        self.reason: list[Reason | None] = [None] * n
        self.trail: list[int] = []
        self.unsat = [len(r.pos) + len(r.neg) for r in rules]
        self.falsifier: list[int | None] = [None] * len(rules)
        self.defs: list[list[int]] = [[] for _ in range(n)]
        self.occ_pos: list[list[int]] = [[] for _ in range(n)]
        self.occ_neg: list[list[int]] = [[] for _ in range(n)]
        for ri, r in enumerate(rules):
            self.defs[r.head].append(ri)
            for a in r.pos:
                self.occ_pos[a].append(ri)
            for a in r.neg:
                self.occ_neg[a].append(ri)
        self.alive = [len(self.defs[a]) for a in range(n)]
        score = [
            len(self.occ_pos[a]) + len(self.occ_neg[a]) + len(self.defs[a])
            for a in range(n)
        ]
        # decision order: most rule occurrences first, then smallest atom id
        self.order = sorted(range(n), key=lambda a: (-score[a], a))
        # decisions: [atom, value, flipped, trail_mark]
        self.decisions: list[list] = []
        self.queue: deque[tuple[int, int, Reason]] = deque()
        self.stats = SolveStats()
        self._seeded = False

    # ------------------------------------------------------- propagation

    def _seed(self) -> None:
        self._seeded = True
        for ri, r in enumerate(self.g.rules):
            if self.unsat[ri] == 0:
                self.queue.append((r.head, TRUE, ("rule", ri)))
        for a in range(len(self.value)):
            if self.alive[a] == 0:
                self.queue.append((a, FALSE, ("unsupported", ())))

    def _propagate(self) -> Conflict | None:
        rules = self.g.rules
        level = len(self.decisions)
        while self.queue:
            atom, val, reason = self.queue.popleft()
            cur = self.value[atom]
            if cur == val:
                continue
            if cur == -val:
                conflict = Conflict(atom, cur, self.reason[atom], val, reason)
                self.queue.clear()
                return conflict
            self.value[atom] = val
            self.level[atom] = level
            self.reason[atom] = reason
            self.trail.append(atom)
            if val == TRUE:
                for ri in self.occ_pos[atom]:
                    self.unsat[ri] -= 1
                    if self.unsat[ri] == 0 and self.falsifier[ri] is None:
                        self.queue.append((rules[ri].head, TRUE, ("rule", ri)))
                for ri in self.occ_neg[atom]:
                    if self.falsifier[ri] is None:
                        self.falsifier[ri] = atom
                        head = rules[ri].head
                        self.alive[head] -= 1
                        if self.alive[head] == 0:
                            self.queue.append(
                                (head, FALSE, ("unsupported", self._falsifiers(head)))
                            )
            else:
                for ri in self.occ_pos[atom]:
                    if self.falsifier[ri] is None:
                        self.falsifier[ri] = atom
                        head = rules[ri].head
                        self.alive[head] -= 1
                        if self.alive[head] == 0:
                            self.queue.append(
                                (head, FALSE, ("unsupported", self._falsifiers(head)))
                            )
                for ri in self.occ_neg[atom]:
                    self.unsat[ri] -= 1
                    if self.unsat[ri] == 0 and self.falsifier[ri] is None:
                        self.queue.append((rules[ri].head, TRUE, ("rule", ri)))
        return None

    def _falsifiers(self, head: int) -> tuple[int, ...]:
        return tuple(
            self.falsifier[ri] for ri in self.defs[head] if self.falsifier[ri] is not None
        )

    def _undo_to(self, mark: int) -> None:
        rules = self.g.rules
        while len(self.trail) > mark:
            atom = self.trail.pop()
            val = self.value[atom]
            self.value[atom] = 0
            self.reason[atom] = None
            if val == TRUE:
                for ri in self.occ_pos[atom]:
                    self.unsat[ri] += 1
                for ri in self.occ_neg[atom]:
                    if self.falsifier[ri] == atom:
                        self.falsifier[ri] = None
                        self.alive[rules[ri].head] += 1
            else:
                for ri in self.occ_pos[atom]:
                    if self.falsifier[ri] == atom:
                        self.falsifier[ri] = None
                        self.alive[rules[ri].head] += 1
                for ri in self.occ_neg[atom]:
                    self.unsat[ri] += 1
        self.queue.clear()

    # ------------------------------------------------------------ search

    def _decide(self) -> bool:
        for a in self.order:
            if self.value[a] == 0:
                self.decisions.append([a, FALSE, False, len(self.trail)])
                self.stats.decisions += 1
                # closed-world bias: try false first
                self.queue.append((a, FALSE, ("decision",)))
                return True
        return False

    def _flip(self, idx: int) -> None:
        atom, val, _, mark = self.decisions[idx]
        while len(self.decisions) > idx + 1:
            self.decisions.pop()
        self._undo_to(mark)
        self.decisions[idx] = [atom, -val, True, mark]
        self.queue.append((atom, -val, ("decision",)))

    def _unwind(self) -> bool:
        """Chronological step: flip the deepest unflipped decision."""
        while self.decisions:
            _, _, flipped, mark = self.decisions[-1]
            if flipped:
                self._undo_to(mark)
                self.decisions.pop()
                continue
            self._flip(len(self.decisions) - 1)
            return True
        return False

    def _conflict_levels(self, conflict: Conflict) -> set[int]:
        """Decision levels reachable from the conflict's reasons, following
        forced assignments transitively back to decisions."""
        rules = self.g.rules
        stack: list[int] = [conflict.atom]

        def antecedents(reason: Reason) -> None:
            if reason[0] == "rule":
                r = rules[reason[1]]
                stack.extend(r.pos)
                stack.extend(r.neg)
            elif reason[0] == "unsupported":
                stack.extend(reason[1])

        antecedents(conflict.reason_attempted)
        levels: set[int] = set()
        seen: set[int] = set()
        while stack:
            atom = stack.pop()
            if atom in seen:
                continue
            seen.add(atom)
            reason = self.reason[atom]
            if reason is None:
                continue
            if reason[0] == "decision":
                levels.add(self.level[atom])
            else:
                antecedents(reason)
        return levels

    def _resolve_conflict(self, conflict: Conflict) -> bool:
        self.stats.conflicts += 1
        if not self.backjump_enabled:
            return self._unwind()
        levels = self._conflict_levels(conflict)
        if not levels:
            # forced by level-0 assignments alone: no model anywhere below
            while self.decisions:
                _, _, _, mark = self.decisions[-1]
                self._undo_to(mark)
                self.decisions.pop()
            return False
        deepest = max(levels)
        atom, val, flipped, _ = self.decisions[deepest - 1]
        if flipped:
            # both polarities of that choice point failed; without stored
            # per-level conflict sets, unwinding chronologically keeps the
            # enumeration complete
            return self._unwind()
        # the conflict only involves `levels`: under the prefix up to the
        # second-highest one, the deepest decision always fails, so levels
        # between them are irrelevant and the flip asserts directly there
        rest = levels - {deepest}
        target = max(rest) if rest else 0
        if target < deepest - 1:
            self.stats.backjumps += 1
        while len(self.decisions) > target:
            _, _, _, mark = self.decisions[-1]
            self._undo_to(mark)
            self.decisions.pop()
        self.decisions.append([atom, -val, True, len(self.trail)])
        self.queue.append((atom, -val, ("decision",)))
        return True

    def solve(self, max_models: int | None = None) -> list[frozenset[int]]:
        models: list[frozenset[int]] = []
        n = len(self.value)
        if not self._seeded:
            self._seed()
        conflict = self._propagate()
        if conflict is not None:
            self.stats.conflicts += 1
            return models
        while True:
            if len(self.trail) == n:
                self.stats.stability_checks += 1
                candidate = frozenset(a for a in range(n) if self.value[a] == TRUE)
                if check_stable(self.g, candidate):
                    models.append(candidate)
                    if max_models is not None and len(models) >= max_models:
                        return models
                if not self._unwind():
                    return models
            else:
                self._decide()
            conflict = self._propagate()
            while conflict is not None:
                if not self._resolve_conflict(conflict):
                    return models
                conflict = self._propagate()


def propagate(
    g: GroundProgram, assignment: dict[int, bool] | None = None
) -> dict[int, bool] | Conflict:
    """Close a partial assignment under the three propagation rules;
    returns the extended assignment or the conflict that arose."""
    solver = Solver(g)
    solver._seed()
    for atom, val in (assignment or {}).items():
        solver.queue.append((atom, TRUE if val else FALSE, ("given",)))
    conflict = solver._propagate()
    if conflict is not None:
        return conflict
    return {
        a: solver.value[a] == TRUE
        for a in range(len(g.atom_names))
        if solver.value[a] != 0
    }


def solve(
    g: GroundProgram, max_models: int | None = None, backjump: bool = True
) -> tuple[list[frozenset[int]], SolveStats]:
    """Enumerate stable models in deterministic search order, stopping at
    `max_models` when given."""
    solver = Solver(g, backjump=backjump)
    return solver.solve(max_models), solver.stats
