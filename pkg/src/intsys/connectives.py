"""Multiplicative-exponential connectives on interaction systems.

Builds the unit Skip (and its Angel/Demon deadlocking cousins Abort and
Magic), the synchronous product, the linear arrow whose actions are explicit
translation mechanisms, width-n multithreading, and the width-bounded
exponential with its counit, comultiplication and comonad-law checks.

Each construction is split into a per-state dynamics (functions computing
actions, reactions and successors for one state) and an assembly step that
materializes an explicit InteractionSystem, either over a full state
enumeration or over the reachable closure of a seed set.  The dynamics are
shared with the semantics module, which needs them at states of systems far
too large to enumerate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, Iterable, NamedTuple

from .core import (
    EMPTY_MULTISET,
    Counterexample,
    InteractionSystem,
    Multiset,
    Relation,
    SimulationStrategy,
    StructureError,
    canon_key,
    check_simulation,
    compose_relations,
    identity_relation,
    multisets_upto,
)

DEFAULT_ACTION_CAP = 10 ** 6


class SizeCapError(RuntimeError):
    """An enumerated arrow action space exceeds the configured cap."""


# ---------------------------------------------------------------------------
# constants

def skip() -> InteractionSystem:
    """The one-state system with trivial interaction (tensor unit)."""
    return InteractionSystem(
        states=("*",),
        actions={"*": ("*",)},
        reactions={("*", "*"): ("*",)},
        next={("*", "*", "*"): "*"},
        initial="*",
    )


def abort() -> InteractionSystem:
    """One state, no Angel actions: deadlocks the Angel."""
    return InteractionSystem(
        states=("*",),
        actions={"*": ()},
        reactions={},
        next={},
        initial="*",
    )


def magic() -> InteractionSystem:
    """One state, one action with no reactions: deadlocks the Demon."""
    return InteractionSystem(
        states=("*",),
        actions={"*": ("*",)},
        reactions={("*", "*"): ()},
        next={},
        initial="*",
    )


# ---------------------------------------------------------------------------
# per-state dynamics and assembly

class Dyn(NamedTuple):
    """Per-state transition structure: actions, reactions, successor."""

    acts: Callable[[Any], tuple]
    reacts: Callable[[Any, Any], tuple]
    step: Callable[[Any, Any, Any], Any]


def _cached(fn):
    cache = {}

    def wrapped(*key):
        try:
            return cache[key]
        except KeyError:
            cache[key] = value = fn(*key)
            return value

    return wrapped


def dyn_of(w: InteractionSystem) -> Dyn:
    return Dyn(w.acts, w.reacts, w.step)


def tensor_dyn(d1: Dyn, d2: Dyn) -> Dyn:
    """Synchronous product dynamics on pair states."""

    def acts(s):
        a1s = d1.acts(s[0])
        a2s = d2.acts(s[1])
        return tuple((a1, a2) for a1 in a1s for a2 in a2s)

    def reacts(s, a):
        r1s = d1.reacts(s[0], a[0])
        r2s = d2.reacts(s[1], a[1])
        return tuple((x, y) for x in r1s for y in r2s)

    def step(s, a, d):
        return (d1.step(s[0], a[0], d[0]), d2.step(s[1], a[1], d[1]))

    return Dyn(_cached(acts), _cached(reacts), step)


def list_dyn(d: Dyn) -> Dyn:
    """Componentwise dynamics on list (tuple) states of any width."""

    def acts(s):
        return tuple(itertools.product(*(d.acts(x) for x in s)))

    def reacts(s, a):
        return tuple(itertools.product(*(d.reacts(x, ax) for x, ax in zip(s, a))))

    def step(s, a, ds):
        return tuple(d.step(x, ax, dx) for x, ax, dx in zip(s, a, ds))

    return Dyn(_cached(acts), _cached(reacts), step)


def bang_dyn(d: Dyn, faithful: bool = False) -> Dyn:
    """Exponential dynamics on multiset states.

    Canonical mode indexes actions by the sorted representative only: an
    action is a tuple of component actions aligned with the multiset's
    canonical order.  Faithful mode follows the indexed-sum definition
    literally, pairing every distinct list representative with its action
    tuple; it exists as a test oracle for the canonical mode.
    """

    def acts(mu):
        rep = tuple(mu)
        if not faithful:
            return tuple(itertools.product(*(d.acts(s) for s in rep)))
        reps = sorted(set(itertools.permutations(rep)), key=canon_key)
        return tuple(
            (r, a)
            for r in reps
            for a in itertools.product(*(d.acts(s) for s in r))
        )

    def reacts(mu, action):
        rep, a = (action if faithful else (tuple(mu), action))
        return tuple(itertools.product(*(d.reacts(s, ax) for s, ax in zip(rep, a))))

    def step(mu, action, ds):
        rep, a = (action if faithful else (tuple(mu), action))
        return Multiset(d.step(s, ax, dx) for s, ax, dx in zip(rep, a, ds))

    return Dyn(_cached(acts), _cached(reacts), step)


def lollipop_dyn(d1: Dyn, d2: Dyn, cap: int = DEFAULT_ACTION_CAP) -> Dyn:
    """Linear-arrow dynamics on pair states.

    An action at (s1, s2) is a translation mechanism (f, G): f maps each left
    action to a right action, and G translates, per left action, the right
    reactions back to left reactions.  Both are stored as tuples aligned with
    the declared orders of the sets they map.  A reaction to (f, G) is a pair
    (a1, d2); the successor applies G to push d2 back to the left.
    """

    def _options(s1, s2, a1):
        # all (b, g) choices for one left action: b right action, g aligned
        # with the reactions to b
        out = []
        for b in d2.acts(s2):
            codomain = d1.reacts(s1, a1)
            for g in itertools.product(codomain, repeat=len(d2.reacts(s2, b))):
                out.append((b, g))
        return out

    def count_acts(s) -> int:
        s1, s2 = s
        total = 1
        left = d1.reacts
        right = d2.reacts
        for a1 in d1.acts(s1):
            per = 0
            n1 = len(left(s1, a1))
            for b in d2.acts(s2):
                per += n1 ** len(right(s2, b))
            total *= per
        return total

    def acts(s):
        s1, s2 = s
        n = count_acts(s)
        if n > cap:
            raise SizeCapError(
                f"arrow action count {n} at state {s!r} exceeds cap {cap}")
        option_lists = [_options(s1, s2, a1) for a1 in d1.acts(s1)]
        out = []
        for combo in itertools.product(*option_lists):
            f = tuple(b for b, _ in combo)
            g = tuple(gg for _, gg in combo)
            out.append((f, g))
        return tuple(out)

    def reacts(s, action):
        s1, s2 = s
        f, _ = action
        out = []
        for i, a1 in enumerate(d1.acts(s1)):
            for e in d2.reacts(s2, f[i]):
                out.append((a1, e))
        return tuple(out)

    def step(s, action, reaction):
        s1, s2 = s
        f, g = action
        a1, e = reaction
        i = d1.acts(s1).index(a1)
        j = d2.reacts(s2, f[i]).index(e)
        d1_value = g[i][j]
        return (d1.step(s1, a1, d1_value), d2.step(s2, f[i], e))

    return Dyn(_cached(acts), _cached(reacts), step)


def assemble(states: Iterable, dyn: Dyn, initial=None) -> InteractionSystem:
    """Materialize explicit tables for `dyn` over an enumerated state set."""
    states = tuple(states)
    actions = {}
    reactions = {}
    nxt = {}
    for s in states:
        acts = dyn.acts(s)
        actions[s] = acts
        for a in acts:
            ds = dyn.reacts(s, a)
            reactions[(s, a)] = ds
            for d in ds:
                nxt[(s, a, d)] = dyn.step(s, a, d)
    return InteractionSystem(states, actions, reactions, nxt, initial)


def assemble_reachable(seeds: Iterable, dyn: Dyn,
                       max_states: int = 500_000) -> InteractionSystem:
    """Materialize `dyn` over the transition closure of `seeds`."""
    from collections import deque

    queue = deque(sorted(set(seeds), key=canon_key))
    seen = set(queue)
    actions = {}
    reactions = {}
    nxt = {}
    order = []
    while queue:
        s = queue.popleft()
        order.append(s)
        acts = dyn.acts(s)
        actions[s] = acts
        for a in acts:
            ds = dyn.reacts(s, a)
            reactions[(s, a)] = ds
            for d in ds:
                t = dyn.step(s, a, d)
                nxt[(s, a, d)] = t
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
                    if len(seen) > max_states:
                        raise SizeCapError(
                            f"reachable closure exceeds {max_states} states")
    return InteractionSystem(tuple(order), actions, reactions, nxt)


# ---------------------------------------------------------------------------
# tensor

def tensor(w1: InteractionSystem, w2: InteractionSystem) -> InteractionSystem:
    """Synchronous parallel composition on the product of the state sets."""
    states = tuple(itertools.product(w1.states, w2.states))
    initial = None
    if w1.initial is not None and w2.initial is not None:
        initial = (w1.initial, w2.initial)
    return assemble(states, tensor_dyn(dyn_of(w1), dyn_of(w2)), initial)


def tensor_morphism(r: Relation, r_prime: Relation) -> Relation:
    """Componentwise conjunction of two relations, on the product systems."""
    return Relation(frozenset(
        ((s1, t1), (s2, t2))
        for s1, s2 in r.pairs
        for t1, t2 in r_prime.pairs
    ))


def tensor_strategy(left: SimulationStrategy,
                    right: SimulationStrategy) -> SimulationStrategy:
    """Pair two strategies componentwise on the tensored systems."""
    source = tensor(left.source, right.source)
    target = tensor(left.target, right.target)
    relation = tensor_morphism(left.relation, right.relation)
    act = {}
    react = {}
    for (s1, t1), (s2, t2) in relation.pairs:
        for a1 in left.source.acts(s1):
            for b1 in right.source.acts(t1):
                a2 = left.act[(s1, s2, a1)]
                b2 = right.act[(t1, t2, b1)]
                act[((s1, t1), (s2, t2), (a1, b1))] = (a2, b2)
                for d2 in left.target.reacts(s2, a2):
                    for e2 in right.target.reacts(t2, b2):
                        react[((s1, t1), (s2, t2), (a1, b1), (d2, e2))] = (
                            left.react[(s1, s2, a1, d2)],
                            right.react[(t1, t2, b1, e2)],
                        )
    return SimulationStrategy(source, target, relation, act, react)


# ---------------------------------------------------------------------------
# linear arrow and the adjunction

def lollipop(w1: InteractionSystem, w2: InteractionSystem,
             cap: int = DEFAULT_ACTION_CAP) -> InteractionSystem:
    """The linear arrow: actions are explicit translation mechanisms.

    Enumerated eagerly; raises SizeCapError when the action count at any
    state exceeds `cap`.
    """
    states = tuple(itertools.product(w1.states, w2.states))
    return assemble(states, lollipop_dyn(dyn_of(w1), dyn_of(w2), cap))


def curry(strategy: SimulationStrategy,
          w1: InteractionSystem, w2: InteractionSystem, w3: InteractionSystem,
          cap: int = DEFAULT_ACTION_CAP) -> SimulationStrategy:
    """Transport a strategy tensor(w1, w2) -> w3 to w1 -> lollipop(w2, w3).

    The witness tables are Skolemized: fixing a left action a1, the input's
    act/react columns over w2 become one translation mechanism (f, G).
    """
    if strategy.source != tensor(w1, w2) or strategy.target != w3:
        raise StructureError("strategy is not from tensor(w1, w2) to w3")
    target = lollipop(w2, w3, cap)
    relation = Relation(frozenset(
        (s1, (s2, s3)) for ((s1, s2), s3) in strategy.relation.pairs))
    act = {}
    react = {}
    for (s1, s2), s3 in strategy.relation.pairs:
        for a1 in w1.acts(s1):
            f = []
            g = []
            for a2 in w2.acts(s2):
                a3 = strategy.act[((s1, s2), s3, (a1, a2))]
                f.append(a3)
                g.append(tuple(
                    strategy.react[((s1, s2), s3, (a1, a2), d3)][1]
                    for d3 in w3.reacts(s3, a3)))
            mechanism = (tuple(f), tuple(g))
            act[(s1, (s2, s3), a1)] = mechanism
            for i, a2 in enumerate(w2.acts(s2)):
                for d3 in w3.reacts(s3, f[i]):
                    d1 = strategy.react[((s1, s2), s3, (a1, a2), d3)][0]
                    react[(s1, (s2, s3), a1, (a2, d3))] = d1
    return SimulationStrategy(w1, target, relation, act, react)


def uncurry(strategy: SimulationStrategy,
            w1: InteractionSystem, w2: InteractionSystem, w3: InteractionSystem,
            cap: int = DEFAULT_ACTION_CAP) -> SimulationStrategy:
    """Transport a strategy w1 -> lollipop(w2, w3) to tensor(w1, w2) -> w3."""
    lol = lollipop(w2, w3, cap)
    if strategy.source != w1 or strategy.target != lol:
        raise StructureError("strategy is not from w1 to lollipop(w2, w3)")
    source = tensor(w1, w2)
    relation = Relation(frozenset(
        ((s1, s2), s3) for (s1, (s2, s3)) in strategy.relation.pairs))
    act = {}
    react = {}
    for s1, (s2, s3) in strategy.relation.pairs:
        a2s = w2.acts(s2)
        for a1 in w1.acts(s1):
            f, g = strategy.act[(s1, (s2, s3), a1)]
            for i, a2 in enumerate(a2s):
                act[((s1, s2), s3, (a1, a2))] = f[i]
                d3s = w3.reacts(s3, f[i])
                for j, d3 in enumerate(d3s):
                    d1 = strategy.react[(s1, (s2, s3), a1, (a2, d3))]
                    react[((s1, s2), s3, (a1, a2), d3)] = (d1, g[i][j])
    return SimulationStrategy(source, w3, relation, act, react)


# ---------------------------------------------------------------------------
# multithreading and the exponential

def multithread(w: InteractionSystem, n: int) -> InteractionSystem:
    """Synchronous multithreading: length-n lists of states, componentwise."""
    if n < 0:
        raise ValueError("width must be >= 0")
    states = tuple(itertools.product(w.states, repeat=n))
    return assemble(states, list_dyn(dyn_of(w)))


def bang(w: InteractionSystem, k: int, faithful: bool = False) -> InteractionSystem:
    """The exponential, truncated to multisets of size at most k.

    Transitions preserve multiset cardinality, so the truncated state space
    is closed.  See bang_dyn for the two action-indexing modes.
    """
    states = multisets_upto(w.states, k)
    return assemble(states, bang_dyn(dyn_of(w), faithful))


def counit(w: InteractionSystem, k: int) -> SimulationStrategy:
    """The singleton-dropping strategy from bang(w, k) to w."""
    source = bang(w, k)
    relation = Relation(frozenset(
        (mu, tuple(mu)[0]) for mu in source.states if len(mu) == 1))
    act = {}
    react = {}
    for mu, s in relation.pairs:
        for action in source.acts(mu):
            a = action[0]
            act[(mu, s, action)] = a
            for d in w.reacts(s, a):
                react[(mu, s, action, d)] = (d,)
    return SimulationStrategy(source, w, relation, act, react)


def _flatten_order(outer: Multiset) -> tuple:
    """Positions in the concatenated canonical reps, sorted canonically.

    order[j] is the index, in the concatenation of the inner canonical
    representatives, of the j-th element of the concatenated multiset's own
    canonical representative.  Stable, so repeated elements keep their
    relative order.
    """
    concat = [elem for inner in outer for elem in inner]
    return tuple(sorted(range(len(concat)), key=lambda i: (canon_key(concat[i]), i)))


def _concat(outer: Multiset) -> Multiset:
    return Multiset(elem for inner in outer for elem in inner)


def comultiplication(w: InteractionSystem, k: int) -> SimulationStrategy:
    """The concatenation strategy from bang(bang(w, k), k) to bang(w, k*k).

    Relates a multiset of multisets to its sum; actions flatten along the
    canonical alignment and reactions un-flatten back.  The target width k*k
    is exactly what concatenation of k multisets of size k requires.
    """
    inner = bang(w, k)
    source = bang(inner, k)
    target = bang(w, k * k)
    relation = Relation(frozenset((m, _concat(m)) for m in source.states))
    act = {}
    react = {}
    for m in source.states:
        flat = _concat(m)
        order = _flatten_order(m)
        lengths = [len(inner_mu) for inner_mu in m]
        for action in source.acts(m):
            concatenated = [a for inner_action in action for a in inner_action]
            flat_action = tuple(concatenated[i] for i in order)
            act[(m, flat, action)] = flat_action
            for reaction in target.reacts(flat, flat_action):
                unflattened = [None] * len(order)
                for j, d in enumerate(reaction):
                    unflattened[order[j]] = d
                split = []
                pos = 0
                for length in lengths:
                    split.append(tuple(unflattened[pos:pos + length]))
                    pos += length
                react[(m, flat, action, reaction)] = tuple(split)
    return SimulationStrategy(source, target, relation, act, react)


def bang_morphism(r: Relation, k: int) -> Relation:
    """Multiset lifting of a relation: equal sizes admitting an r-pairing."""
    lefts = sorted({l for l, _ in r.pairs}, key=canon_key)
    rights = sorted({x for _, x in r.pairs}, key=canon_key)
    by_left = {}
    for l, x in r.pairs:
        by_left.setdefault(l, set()).add(x)

    def pairable(ls, rs) -> bool:
        if not ls:
            return not rs
        head, *rest = ls
        remaining = list(rs)
        for i, candidate in enumerate(remaining):
            if candidate in by_left.get(head, ()):
                if pairable(rest, remaining[:i] + remaining[i + 1:]):
                    return True
        return False

    pairs = set()
    for mu1 in multisets_upto(lefts, k):
        for mu2 in multisets_upto(rights, k):
            if len(mu1) == len(mu2) and pairable(list(mu1), list(mu2)):
                pairs.add((mu1, mu2))
    return Relation(frozenset(pairs))


# ---------------------------------------------------------------------------
# comonad laws

def _count_multisets_upto(n: int, k: int) -> int:
    return sum(math.comb(n + i - 1, i) for i in range(k + 1))


@dataclass(frozen=True)
class ComonadLawReport:
    """Outcome of the three comonad-law relation equalities at one bound."""

    width: int
    status: str  # "ok", "failed" or "insufficient-width"
    counit_after_comult: bool | None = None
    bang_counit_after_comult: bool | None = None
    coassociativity: bool | None = None
    detail: str = ""

    @property
    def holds(self) -> bool:
        return self.status == "ok"

    def as_dict(self) -> dict:
        return {
            "width": self.width,
            "status": self.status,
            "counit_after_comult": self.counit_after_comult,
            "bang_counit_after_comult": self.bang_counit_after_comult,
            "coassociativity": self.coassociativity,
            "detail": self.detail,
        }


def check_comonad_laws(w: InteractionSystem, k: int,
                       max_states: int = 250_000) -> ComonadLawReport:
    """Verify the comonad laws as relation equalities on bounded spaces.

    The comultiplication is the graph of concatenation out of the iterated
    exponential; the law composites use its converse, which re-partitions a
    multiset.  The equalities only involve the underlying sets and relations,
    never the simulation conditions.  Widths are chosen per law so both sides
    are expressible (the first counit square needs outer width at least 1 for
    the singleton partitions, even at k = 0).  If the iterated state spaces
    outgrow `max_states` an insufficient-width report is returned instead of
    a verdict.
    """
    n = len(w.states)
    n1 = _count_multisets_upto(n, k)
    n2 = _count_multisets_upto(n1, max(1, k))
    n3 = _count_multisets_upto(n2, k)
    if max(n1, n2, n3) > max_states:
        return ComonadLawReport(
            width=k, status="insufficient-width",
            detail=(f"bound {k} needs {max(n1, n2, n3)} enumerated states, "
                    f"budget is {max_states}"))

    inner = bang(w, k)
    identity = identity_relation(inner)
    delta = comultiplication(w, k).relation           # {(M, concat M)}

    # counit after comultiplication: re-partition into one block, drop it
    outer1 = multisets_upto(inner.states, max(1, k))
    delta1_hat = Relation(frozenset((_concat(m), m) for m in outer1))
    eps_bang = counit(inner, 1).relation              # {([mu], mu)}
    law1 = compose_relations(eps_bang, delta1_hat).pairs == identity.pairs

    # promoted counit after comultiplication: re-partition into singletons
    bang_eps = bang_morphism(counit(w, k).relation, k)
    law2 = compose_relations(bang_eps, delta.converse()).pairs == identity.pairs

    # coassociativity, in the concat orientation: flattening the outer two
    # levels first agrees with flattening every inner block first
    triple_states = multisets_upto(multisets_upto(inner.states, k), k)
    side_a = set()
    side_b = set()
    for t in triple_states:
        side_a.add((t, _concat(_concat(t))))
        side_b.add((t, _concat(Multiset(_concat(p) for p in t))))
    law3 = side_a == side_b

    ok = law1 and law2 and law3
    return ComonadLawReport(
        width=k,
        status="ok" if ok else "failed",
        counit_after_comult=law1,
        bang_counit_after_comult=law2,
        coassociativity=law3,
    )
