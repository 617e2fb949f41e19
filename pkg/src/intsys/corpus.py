"""Seeded random instance generation for the property-test corpus."""

from __future__ import annotations

import random
from typing import Iterator

from .core import InteractionSystem, Relation


def random_system(rng: random.Random, max_states: int = 3,
                  max_actions: int = 2, max_reactions: int = 2,
                  min_actions: int = 0, min_reactions: int = 0) -> InteractionSystem:
    """A small random system; empty action/reaction sets are allowed."""
    n = rng.randint(1, max_states)
    states = tuple(f"s{i}" for i in range(n))
    actions = {}
    reactions = {}
    nxt = {}
    for s in states:
        acts = tuple(f"a{j}" for j in range(rng.randint(min_actions, max_actions)))
        actions[s] = acts
        for a in acts:
            ds = tuple(f"d{m}" for m in range(rng.randint(min_reactions, max_reactions)))
            reactions[(s, a)] = ds
            for d in ds:
                nxt[(s, a, d)] = rng.choice(states)
    return InteractionSystem(states, actions, reactions, nxt)


def random_relation(rng: random.Random, w1: InteractionSystem,
                    w2: InteractionSystem, density: float = 0.5) -> Relation:
    return Relation(frozenset(
        (s1, s2)
        for s1 in w1.states
        for s2 in w2.states
        if rng.random() < density
    ))


def system_pairs(seed: int, count: int, **kwargs) -> Iterator[tuple]:
    """Deterministic stream of (rng, w1, w2) instances."""
    rng = random.Random(seed)
    for _ in range(count):
        yield rng, random_system(rng, **kwargs), random_system(rng, **kwargs)
