"""Finite interaction systems and constructive simulation strategies.

An interaction system describes a two-character protocol: at every state the
Angel picks an action, the Demon answers with a reaction, and the system moves
to a successor state.  A simulation between two systems is a relation on
states together with a translation of actions (left to right) and reactions
(right back to left) that re-establishes the relation.  Everything here is
explicitly finite, so the alternating-quantifier simulation condition is
decided by exhaustive enumeration and every witness is an actual table.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping


class StructureError(ValueError):
    """A system, relation or strategy references identifiers outside its scope."""


def canon_key(value) -> tuple:
    """Total order on state/action/reaction values.

    Supports the value shapes produced anywhere in the library: plain tokens
    (str, int), tuples (pair states, translation mechanisms) and multisets.
    """
    if isinstance(value, (bool, int)):
        return (0, value)
    if isinstance(value, str):
        return (1, value)
    if isinstance(value, tuple):
        return (2, tuple(canon_key(v) for v in value))
    if isinstance(value, Multiset):
        return (3, tuple(canon_key(v) for v in value))
    raise TypeError(f"no canonical order for {type(value).__name__}")


def render_value(value) -> str:
    """Deterministic human-readable rendering of nested state/action values."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, int)):
        return str(value)
    if isinstance(value, tuple):
        return "(" + ",".join(render_value(v) for v in value) + ")"
    if isinstance(value, Multiset):
        return "[" + ",".join(render_value(v) for v in value) + "]"
    raise TypeError(f"cannot render {type(value).__name__}")


class Multiset:
    """Finite multiset with a canonical sorted representation.

    Two multisets are equal exactly when their canonical (sorted) element
    tuples are equal; hashing and iteration follow the same order.  Sum is
    concatenation followed by re-sorting.
    """

    __slots__ = ("_items",)

    def __init__(self, items: Iterable = ()):
        self._items = tuple(sorted(items, key=canon_key))

    @property
    def items(self) -> tuple:
        return self._items

    def __add__(self, other: "Multiset") -> "Multiset":
        if not isinstance(other, Multiset):
            return NotImplemented
        return Multiset(self._items + other._items)

    def without(self, element) -> "Multiset":
        """Remove one occurrence of `element` (which must be present)."""
        items = list(self._items)
        items.remove(element)
        return Multiset(items)

    def distinct(self) -> tuple:
        """The distinct elements, in canonical order."""
        return tuple(dict.fromkeys(self._items))

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator:
        return iter(self._items)

    def __contains__(self, element) -> bool:
        return element in self._items

    def __eq__(self, other) -> bool:
        return isinstance(other, Multiset) and self._items == other._items

    def __hash__(self) -> int:
        return hash(("Multiset", self._items))

    def __repr__(self) -> str:
        return "[" + ", ".join(repr(x) for x in self._items) + "]"


EMPTY_MULTISET = Multiset()


def multisets_upto(values: Iterable, k: int) -> tuple:
    """All multisets over `values` of size at most k, smallest first."""
    if k < 0:
        raise ValueError("width bound must be >= 0")
    base = sorted(values, key=canon_key)
    out = []
    for size in range(k + 1):
        for combo in itertools.combinations_with_replacement(base, size):
            out.append(Multiset(combo))
    return tuple(out)


@dataclass(frozen=True)
class InteractionSystem:
    """A finite state-indexed alternating transition structure.

    `actions` maps each state to its ordered tuple of Angel actions,
    `reactions` maps each (state, action) to the ordered tuple of Demon
    reactions, and `next` maps each (state, action, reaction) to the successor
    state.  Empty action or reaction tuples are allowed (they deadlock the
    Angel or the Demon respectively).  Values are immutable by convention
    after construction; all operations on systems are pure.
    """

    states: tuple
    actions: Mapping[Any, tuple]
    reactions: Mapping[Any, tuple]
    next: Mapping[Any, Any]
    initial: Any = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        states = set(self.states)
        if len(states) != len(self.states):
            raise StructureError("duplicate states")
        if set(self.actions) != states:
            raise StructureError("actions must be total on states")
        expected_reactions = {
            (s, a) for s in self.states for a in self.actions[s]
        }
        if set(self.reactions) != expected_reactions:
            raise StructureError("reactions must be total on (state, action)")
        expected_next = {
            (s, a, d)
            for (s, a), ds in self.reactions.items()
            for d in ds
        }
        if set(self.next) != expected_next:
            raise StructureError("next must be total on (state, action, reaction)")
        for target in self.next.values():
            if target not in states:
                raise StructureError(f"successor {target!r} is not a state")
        if self.initial is not None and self.initial not in states:
            raise StructureError(f"initial state {self.initial!r} is not a state")

    def acts(self, s) -> tuple:
        return self.actions[s]

    def reacts(self, s, a) -> tuple:
        return self.reactions[(s, a)]

    def step(self, s, a, d):
        return self.next[(s, a, d)]


@dataclass(frozen=True)
class Relation:
    """A set of (left-state, right-state) pairs between two systems."""

    pairs: frozenset

    @classmethod
    def of(cls, pairs: Iterable) -> "Relation":
        return cls(frozenset((l, r) for l, r in pairs))

    def converse(self) -> "Relation":
        return Relation(frozenset((r, l) for l, r in self.pairs))

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def __iter__(self) -> Iterator:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def sorted_pairs(self) -> list:
        return sorted(self.pairs, key=lambda p: (canon_key(p[0]), canon_key(p[1])))


def identity_relation(w: InteractionSystem) -> Relation:
    return Relation(frozenset((s, s) for s in w.states))


def total_relation(w1: InteractionSystem, w2: InteractionSystem) -> Relation:
    return Relation(frozenset(itertools.product(w1.states, w2.states)))


def compose_relations(outer: Relation, inner: Relation) -> Relation:
    """Relational composite: (a, c) related iff some b links inner and outer."""
    by_left = {}
    for b, c in outer.pairs:
        by_left.setdefault(b, []).append(c)
    pairs = {
        (a, c)
        for a, b in inner.pairs
        for c in by_left.get(b, ())
    }
    return Relation(frozenset(pairs))


def union(relations: Iterable[Relation],
          w1: InteractionSystem | None = None,
          w2: InteractionSystem | None = None) -> Relation:
    """Set union of relations; validates membership when systems are given."""
    result = Relation(frozenset().union(*(r.pairs for r in relations), frozenset()))
    if w1 is not None and w2 is not None:
        _validate_relation(w1, w2, result)
    return result


def _validate_relation(w1: InteractionSystem, w2: InteractionSystem, r: Relation) -> None:
    s1 = set(w1.states)
    s2 = set(w2.states)
    for left, right in r.pairs:
        if left not in s1:
            raise StructureError(f"relation mentions unknown left state {left!r}")
        if right not in s2:
            raise StructureError(f"relation mentions unknown right state {right!r}")


@dataclass(frozen=True)
class Counterexample:
    """First (s1, s2, a1) at which the simulation condition fails."""

    s1: Any
    s2: Any
    a1: Any

    def __str__(self) -> str:
        return (f"no simulating action: state pair ({self.s1!r}, {self.s2!r}), "
                f"action {self.a1!r}")


@dataclass(frozen=True)
class SimulationStrategy:
    """A simulation relation plus constructive witness tables.

    `act` maps (s1, s2, a1) to the simulating action a2; `react` maps
    (s1, s2, a1, d2) back to a reaction d1.  Both tables are total on the
    relation and closed: playing them always lands back inside the relation.
    """

    source: InteractionSystem
    target: InteractionSystem
    relation: Relation
    act: Mapping[Any, Any]
    react: Mapping[Any, Any]

    def validate(self) -> None:
        _validate_relation(self.source, self.target, self.relation)
        for s1, s2 in self.relation.pairs:
            for a1 in self.source.acts(s1):
                if (s1, s2, a1) not in self.act:
                    raise StructureError(f"act undefined at ({s1!r}, {s2!r}, {a1!r})")
                a2 = self.act[(s1, s2, a1)]
                if a2 not in self.target.acts(s2):
                    raise StructureError(f"act value {a2!r} is not an action at {s2!r}")
                for d2 in self.target.reacts(s2, a2):
                    if (s1, s2, a1, d2) not in self.react:
                        raise StructureError(
                            f"react undefined at ({s1!r}, {s2!r}, {a1!r}, {d2!r})")
                    d1 = self.react[(s1, s2, a1, d2)]
                    if d1 not in self.source.reacts(s1, a1):
                        raise StructureError(
                            f"react value {d1!r} is not a reaction to {a1!r}")
                    successor = (self.source.step(s1, a1, d1),
                                 self.target.step(s2, a2, d2))
                    if successor not in self.relation.pairs:
                        raise StructureError(
                            f"strategy leaves the relation at {successor!r}")


def _pair_ok(w1, w2, s1, s2, pairs) -> Any:
    """None if (s1, s2) satisfies the one-step condition, else the bad a1.

    w1 and w2 only need acts/reacts/step, so the same enumeration runs on
    explicit systems and on lazily computed dynamics.
    """
    for a1 in w1.acts(s1):
        if _simulating_action(w1, w2, s1, s2, a1, pairs) is None:
            return a1
    return None


def _simulating_action(w1, w2, s1, s2, a1, pairs) -> Any:
    """Least a2 (in declared order) simulating a1 at (s1, s2), or None."""
    successors1 = [w1.step(s1, a1, d1) for d1 in w1.reacts(s1, a1)]
    for a2 in w2.acts(s2):
        for d2 in w2.reacts(s2, a2):
            t2 = w2.step(s2, a2, d2)
            if not any((t1, t2) in pairs for t1 in successors1):
                break
        else:
            return a2
    return None


def _synthesize_tables(w1, w2, ordered_pairs, pairs):
    """Witness tables over the given pair order, or the first Counterexample."""
    act = {}
    react = {}
    for s1, s2 in ordered_pairs:
        for a1 in w1.acts(s1):
            a2 = _simulating_action(w1, w2, s1, s2, a1, pairs)
            if a2 is None:
                return Counterexample(s1, s2, a1)
            act[(s1, s2, a1)] = a2
            for d2 in w2.reacts(s2, a2):
                t2 = w2.step(s2, a2, d2)
                for d1 in w1.reacts(s1, a1):
                    if (w1.step(s1, a1, d1), t2) in pairs:
                        react[(s1, s2, a1, d2)] = d1
                        break
    return act, react


def _sorted_by_declaration(w1, w2, pairs) -> list:
    idx1 = {s: i for i, s in enumerate(w1.states)}
    idx2 = {s: i for i, s in enumerate(w2.states)}
    return sorted(pairs, key=lambda p: (idx1[p[0]], idx2[p[1]]))


def check_simulation(w1: InteractionSystem, w2: InteractionSystem, r: Relation) -> bool:
    """Decide whether r is a simulation from w1 to w2.

    True iff for every related pair and every left action there is a right
    action such that every right reaction translates back to some left
    reaction landing the successor pair inside r.
    """
    _validate_relation(w1, w2, r)
    for s1, s2 in _sorted_by_declaration(w1, w2, r.pairs):
        if _pair_ok(w1, w2, s1, s2, r.pairs) is not None:
            return False
    return True


def synthesize_strategy(w1: InteractionSystem, w2: InteractionSystem,
                        r: Relation) -> SimulationStrategy | Counterexample:
    """Skolemize the simulation condition into explicit witness tables.

    Ties are broken towards the least identifier in the declared order, so
    synthesized strategies are deterministic.  If r is not a simulation the
    first failing (s1, s2, a1) in declaration order is returned instead.
    """
    _validate_relation(w1, w2, r)
    tables = _synthesize_tables(w1, w2, _sorted_by_declaration(w1, w2, r.pairs),
                                r.pairs)
    if isinstance(tables, Counterexample):
        return tables
    return SimulationStrategy(w1, w2, r, tables[0], tables[1])


def greatest_simulation(w1: InteractionSystem, w2: InteractionSystem) -> Relation:
    """The largest simulation from w1 to w2, by fixpoint refinement.

    Starts from the full product and deletes pairs violating the one-step
    condition until stable.  Simulations form a sup-lattice, so the result
    contains every simulation between the two systems.
    """
    pairs = set(itertools.product(w1.states, w2.states))
    changed = True
    while changed:
        changed = False
        for pair in _sorted_by_declaration(w1, w2, pairs):
            if _pair_ok(w1, w2, pair[0], pair[1], pairs) is not None:
                pairs.discard(pair)
                changed = True
    return Relation(frozenset(pairs))


def copycat(w: InteractionSystem) -> SimulationStrategy:
    """The identity strategy: replay actions and reactions unchanged."""
    act = {}
    react = {}
    for s in w.states:
        for a in w.acts(s):
            act[(s, s, a)] = a
            for d in w.reacts(s, a):
                react[(s, s, a, d)] = d
    return SimulationStrategy(w, w, identity_relation(w), act, react)


def compose(outer: SimulationStrategy, inner: SimulationStrategy) -> SimulationStrategy:
    """Compose strategies: inner from w1 to w2, outer from w2 to w3.

    The relation is the relational composite; the tables thread translations
    through the least middle-state witness (in w2's declared order).
    """
    if inner.target is not outer.source and inner.target != outer.source:
        raise StructureError("middle systems of the strategies differ")
    w1, w2, w3 = inner.source, inner.target, outer.target
    relation = compose_relations(outer.relation, inner.relation)

    inner_rights = {}
    for a, b in inner.relation.pairs:
        inner_rights.setdefault(a, set()).add(b)
    outer_rights = {}
    for b, c in outer.relation.pairs:
        outer_rights.setdefault(b, set()).add(c)

    idx2 = {s: i for i, s in enumerate(w2.states)}
    witness = {}
    for s1, s3 in relation.pairs:
        middles = [b for b in inner_rights.get(s1, ())
                   if s3 in outer_rights.get(b, ())]
        witness[(s1, s3)] = min(middles, key=lambda b: idx2[b])

    act = {}
    react = {}
    for (s1, s3), s2 in witness.items():
        for a1 in w1.acts(s1):
            a2 = inner.act[(s1, s2, a1)]
            a3 = outer.act[(s2, s3, a2)]
            act[(s1, s3, a1)] = a3
            for d3 in w3.reacts(s3, a3):
                d2 = outer.react[(s2, s3, a2, d3)]
                d1 = inner.react[(s1, s2, a1, d2)]
                react[(s1, s3, a1, d3)] = d1
    return SimulationStrategy(w1, w3, relation, act, react)
