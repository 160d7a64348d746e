"""Ground-term interning and relation storage.

Terms are interned to dense integer ids; relations are deduplicated sets
of id tuples with per-iteration delta sets and hash indexes built lazily
per binding pattern. A total order over all ground terms (integers by
value, then symbols/strings by text, then compounds by functor, arity,
and arguments) backs comparisons and sorted output.
"""

from __future__ import annotations

from typing import Iterable

from . import syntax

TupleIds = tuple[int, ...]
PredKey = tuple[str, int]

_EMPTY: frozenset = frozenset()


class TermStore:
    """Injective interner for ground terms."""

    def __init__(self):
        self._ids: dict[syntax.Term, int] = {}
        self._terms: list[syntax.Term] = []
        self._depths: list[int] = []
        self._keys: list[tuple] = []
        self._children: list[tuple[int, ...] | None] = []

    def __len__(self) -> int:
        return len(self._terms)

    def intern(self, term: syntax.Term) -> int:
        tid = self._ids.get(term)
        if tid is not None:
            return tid
        if isinstance(term, syntax.Compound):
            children = tuple(self.intern(a) for a in term.args)
            tid = self._ids.get(term)  # children interning cannot add term itself
            depth = 1 + max(self._depths[c] for c in children)
            key = (2, term.functor, len(children), *(self._keys[c] for c in children))
        elif isinstance(term, syntax.Integer):
            children = None
            depth = 1
            key = (0, term.value)
        elif isinstance(term, (syntax.Symbol, syntax.String)):
            if isinstance(term, syntax.String):
                # identifier-shaped strings are the same constant as the symbol
                norm = syntax.make_constant(term.text)
                if norm != term:
                    return self.intern(norm)
            children = None
            depth = 1
            key = (1, term.text)
        else:
            raise ValueError(f"cannot intern non-ground term {term!r}")
        tid = len(self._terms)
        self._ids[term] = tid
        self._terms.append(term)
        self._depths.append(depth)
        self._keys.append(key)
        self._children.append(children)
        return tid

    def term(self, tid: int) -> syntax.Term:
        return self._terms[tid]

    def term_depth(self, tid: int) -> int:
        return self._depths[tid]

    def order_key(self, tid: int) -> tuple:
        return self._keys[tid]

    def children(self, tid: int) -> tuple[int, ...] | None:
        return self._children[tid]

    def tuple_key(self, ids: TupleIds) -> tuple:
        return tuple(self._keys[t] for t in ids)

    def text(self, tid: int) -> str:
        return syntax.term_text(self._terms[tid])

    def compare(self, a: int, b: int) -> int:
        if a == b:
            return 0
        return -1 if self._keys[a] < self._keys[b] else 1


def _positions(mask: int, arity: int) -> tuple[int, ...]:
    return tuple(i for i in range(arity) if mask >> i & 1)


class Relation:
    """Deduplicated tuple set for one predicate.

    `delta` holds the tuples that became current at the latest
    advance_iteration call; `added` accumulates inserts made since then.
    Indexes map a bound-column bitmask to {key -> set of tuples}.
    """

    __slots__ = ("name", "arity", "tuples", "delta", "added", "indexes")

    def __init__(self, name: str, arity: int):
        self.name = name
        self.arity = arity
        self.tuples: set[TupleIds] = set()
        self.delta: set[TupleIds] = set()
        self.added: set[TupleIds] = set()
        self.indexes: dict[int, dict[TupleIds, set[TupleIds]]] = {}

    def __len__(self) -> int:
        return len(self.tuples)

    @property
    def key(self) -> PredKey:
        return (self.name, self.arity)

    def insert(self, tup: TupleIds) -> bool:
        if len(tup) != self.arity:
            raise AssertionError(
                f"arity mismatch inserting {tup} into {self.name}/{self.arity}"
            )
        if tup in self.tuples:
            return False
        self.tuples.add(tup)
        self.added.add(tup)
        for mask, index in self.indexes.items():
            pos = _positions(mask, self.arity)
            index.setdefault(tuple(tup[i] for i in pos), set()).add(tup)
        return True

    def advance_iteration(self) -> None:
        self.delta = self.added
        self.added = set()

    def _index_for(self, mask: int) -> dict[TupleIds, set[TupleIds]]:
        index = self.indexes.get(mask)
        if index is None:
            pos = _positions(mask, self.arity)
            index = {}
            for tup in self.tuples:
                index.setdefault(tuple(tup[i] for i in pos), set()).add(tup)
            self.indexes[mask] = index
        return index

    def lookup(
        self, mask: int, bound: TupleIds, use_delta: bool = False
    ) -> Iterable[TupleIds]:
        """Tuples whose columns selected by `mask` equal `bound`; restricted
        to the delta set when `use_delta`. Equals the brute-force scan."""
        if use_delta:
            if mask == 0:
                return self.delta
            pos = _positions(mask, self.arity)
            return [t for t in self.delta if tuple(t[i] for i in pos) == bound]
        if mask == 0:
            return self.tuples
        return self._index_for(mask).get(bound, _EMPTY)

    def count_matching(self, mask: int, bound: TupleIds) -> int:
        if mask == 0:
            return len(self.tuples)
        return len(self._index_for(mask).get(bound, _EMPTY))


class Database:
    """One engine run's materialized store: a term interner plus the
    relation per predicate. Confined to a single run; safe to share
    read-only once materialized."""

    def __init__(self):
        self.terms = TermStore()
        self.relations: dict[PredKey, Relation] = {}

    def relation(self, pred: PredKey) -> Relation:
        rel = self.relations.get(pred)
        if rel is None:
            rel = Relation(pred[0], pred[1])
            self.relations[pred] = rel
        return rel

    def atom_true(self, pred: PredKey, ids: TupleIds) -> bool:
        rel = self.relations.get(pred)
        return rel is not None and ids in rel.tuples

    def intern_constant(self, term: syntax.Term) -> int:
        return self.terms.intern(term)

    def sorted_tuples(self, pred: PredKey) -> list[TupleIds]:
        rel = self.relations.get(pred)
        if rel is None:
            return []
        return sorted(rel.tuples, key=self.terms.tuple_key)

    def sorted_preds(self) -> list[PredKey]:
        return sorted(self.relations)

    def atom_text(self, pred: PredKey, ids: TupleIds) -> str:
        if not ids:
            return pred[0]
        return f"{pred[0]}({','.join(self.terms.text(t) for t in ids)})"
