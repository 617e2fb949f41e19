"""Built-in example systems used by the CLI and the test suite."""

from __future__ import annotations

import itertools

from .core import InteractionSystem
from .connectives import abort, magic, skip


def stack_system(depth: int = 2) -> InteractionSystem:
    """A finite boolean stack interface, truncated at `depth`.

    Every state offers push(t), push(f) and pop.  Popping the empty stack and
    pushing onto a full one answer "error" and stay put; everything else
    answers "*" and moves.  State names list the stack top-first.
    """
    contents = [
        seq
        for size in range(depth + 1)
        for seq in itertools.product("tf", repeat=size)
    ]
    name = {seq: "[" + ",".join(seq) + "]" for seq in contents}
    states = tuple(name[seq] for seq in contents)
    action_list = ("push(t)", "push(f)", "pop")

    actions = {s: action_list for s in states}
    reactions = {}
    nxt = {}
    for seq in contents:
        s = name[seq]
        for bit in "tf":
            a = f"push({bit})"
            if len(seq) < depth:
                reactions[(s, a)] = ("*",)
                nxt[(s, a, "*")] = name[(bit,) + seq]
            else:
                reactions[(s, a)] = ("error",)
                nxt[(s, a, "error")] = s
        if seq:
            reactions[(s, "pop")] = ("*",)
            nxt[(s, "pop", "*")] = name[seq[1:]]
        else:
            reactions[(s, "pop")] = ("error",)
            nxt[(s, "pop", "error")] = s
    return InteractionSystem(states, actions, reactions, nxt, initial="[]")


def four_state_cycle() -> InteractionSystem:
    """Four states with one action and one reaction each, cycling s1-s2-s3.

    Small enough that the doubly iterated exponential at width 3 stays
    enumerable, which is what the worked comultiplication example needs.
    """
    states = ("s1", "s2", "s3", "t1")
    actions = {"s1": ("a1",), "s2": ("a2",), "s3": ("a3",), "t1": ("b1",)}
    reactions = {
        ("s1", "a1"): ("d1",),
        ("s2", "a2"): ("d2",),
        ("s3", "a3"): ("d3",),
        ("t1", "b1"): ("e1",),
    }
    nxt = {
        ("s1", "a1", "d1"): "s2",
        ("s2", "a2", "d2"): "s3",
        ("s3", "a3", "d3"): "s1",
        ("t1", "b1", "e1"): "t1",
    }
    return InteractionSystem(states, actions, reactions, nxt, initial="s1")


FIXTURES = {
    "stack": stack_system,
    "skip": skip,
    "abort": abort,
    "magic": magic,
}


def fixture(name: str) -> InteractionSystem:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; "
                       f"choose from {', '.join(sorted(FIXTURES))}") from None
