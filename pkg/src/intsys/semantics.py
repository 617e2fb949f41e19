"""Width-bounded relational semantics for the typed differential calculus.

A type denotes an interaction system: base types through a valuation, arrows
through the exponential and the linear arrow.  A term denotes a set of
(environment, point) pairs computed by structural recursion, with every
multiset truncated to a width bound k; the result under-approximates the full
denotation and grows monotonically in k.  Because transitions of the
interpreting systems never change multiset cardinalities, the truncated
denotation is still a simulation relation, which is what the verifiers check
by exhaustive enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Iterator, Mapping

from .core import (
    EMPTY_MULTISET,
    Counterexample,
    InteractionSystem,
    Multiset,
    Relation,
    _pair_ok,
    _synthesize_tables,
    canon_key,
    check_simulation,
    multisets_upto,
    render_value,
)
from .connectives import (
    DEFAULT_ACTION_CAP,
    Dyn,
    SizeCapError,
    assemble_reachable,
    bang,
    bang_dyn,
    dyn_of,
    lollipop,
    lollipop_dyn,
    skip,
    tensor_dyn,
)
from .terms import (
    Arrow,
    Base,
    Context,
    Term,
    TypeExpr,
    typecheck,
    term_to_str,
    type_to_str,
)

Valuation = Mapping[str, InteractionSystem]


class SemanticsError(ValueError):
    """A base type is unbound or the inputs do not fit together."""


# ---------------------------------------------------------------------------
# points and environments

def states_of(ty: TypeExpr, rho: Valuation, k: int) -> tuple:
    """All points of a type, with every internal multiset of size <= k.

    At base type these are exactly the states of the valuation's system; at
    arrow type, pairs of a multiset of argument points and a result point,
    matching the states of the interpreting system.
    """
    if isinstance(ty, Base):
        if ty.name not in rho:
            raise SemanticsError(f"unbound base type {ty.name!r}")
        return rho[ty.name].states
    arg_points = states_of(ty.arg, rho, k)
    res_points = states_of(ty.res, rho, k)
    return tuple(
        (mu, p)
        for mu in multisets_upto(arg_points, k)
        for p in res_points
    )


def interpret_type(ty: TypeExpr, rho: Valuation, k: int,
                   cap: int = DEFAULT_ACTION_CAP) -> InteractionSystem:
    """The interaction system interpreting a type, built eagerly."""
    if isinstance(ty, Base):
        if ty.name not in rho:
            raise SemanticsError(f"unbound base type {ty.name!r}")
        return rho[ty.name]
    return lollipop(bang(interpret_type(ty.arg, rho, k, cap), k),
                    interpret_type(ty.res, rho, k, cap), cap)


def _type_dyn(ty: TypeExpr, rho: Valuation, k: int, cap: int,
              cache: dict) -> Dyn:
    if ty in cache:
        return cache[ty]
    if isinstance(ty, Base):
        if ty.name not in rho:
            raise SemanticsError(f"unbound base type {ty.name!r}")
        dyn = dyn_of(rho[ty.name])
    else:
        dyn = lollipop_dyn(bang_dyn(_type_dyn(ty.arg, rho, k, cap, cache)),
                           _type_dyn(ty.res, rho, k, cap, cache), cap)
    cache[ty] = dyn
    return dyn


def _empty_env(n: int) -> tuple:
    return tuple(EMPTY_MULTISET for _ in range(n))


def _env_add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _env_fits(env: tuple, k: int) -> bool:
    return all(len(m) <= k for m in env)


def format_environment(ctx: Context, env: tuple) -> str:
    """Render an environment in the "x1:=mu1, ... xn:=mun" notation."""
    if not env:
        return "()"
    return ", ".join(
        f"{name}:={render_value(mu)}"
        for (name, _), mu in zip(ctx.entries, env)
    )


def format_point(p) -> str:
    return render_value(p)


# ---------------------------------------------------------------------------
# denotations

@dataclass(frozen=True)
class Denotation:
    """The width-k denotation: a finite set of (environment, point) pairs."""

    pairs: frozenset
    width: int

    def __iter__(self) -> Iterator:
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def union(self, other: "Denotation") -> "Denotation":
        return Denotation(self.pairs | other.pairs, max(self.width, other.width))

    def points(self) -> frozenset:
        return frozenset(p for _, p in self.pairs)


def denote(ctx: Context, t: Term, rho: Valuation, k: int) -> Denotation:
    """Evaluate the relational denotation of t at width bound k.

    All existential witnesses (application multisets, environment splits, the
    extra differential copy) range over width <= k as well, so the result is
    computable and monotone in k.  Sub-denotations are memoized per call.
    """
    typecheck(ctx, t)
    if k < 0:
        raise ValueError("width bound must be >= 0")
    memo: dict = {}

    def var_type(entries: tuple, name: str) -> tuple:
        for i in range(len(entries) - 1, -1, -1):
            if entries[i][0] == name:
                return i, entries[i][1]
        raise SemanticsError(f"unbound variable {name!r}")

    def go(entries: tuple, term: Term) -> frozenset:
        key = (entries, term)
        if key in memo:
            return memo[key]
        n = len(entries)
        out = set()
        kind = type(term).__name__
        if kind == "Var":
            i, ty = var_type(entries, term.name)
            for s in states_of(ty, rho, k):
                env = list(_empty_env(n))
                env[i] = Multiset((s,))
                out.add((tuple(env), s))
        elif kind == "Lam":
            sub = go(entries + ((term.var, term.var_type),), term.body)
            for env, p in sub:
                out.add((env[:-1], (env[-1], p)))
        elif kind == "App":
            fn_pairs = go(entries, term.fn)
            arg_pairs = go(entries, term.arg)
            by_point: dict = {}
            for env, p in arg_pairs:
                by_point.setdefault(p, []).append(env)
            for env0, fp in fn_pairs:
                mu, result = fp
                pools = [by_point.get(s, ()) for s in mu]
                if any(not pool for pool in pools):
                    continue
                for assignment in itertools.product(*pools):
                    env = env0
                    for extra in assignment:
                        env = _env_add(env, extra)
                    if _env_fits(env, k):
                        out.add((env, result))
        elif kind == "Zero":
            pass
        elif kind == "Sum":
            for m in term.members:
                out |= go(entries, m)
        else:  # Diff
            fn_pairs = go(entries, term.fn)
            arg_pairs = go(entries, term.arg)
            by_point: dict = {}
            for env, p in arg_pairs:
                by_point.setdefault(p, []).append(env)
            for env1, fp in fn_pairs:
                nu, result = fp
                if len(nu) == 0:
                    continue
                for s in nu.distinct():
                    mu = nu.without(s)
                    for env2 in by_point.get(s, ()):
                        env = _env_add(env1, env2)
                        if _env_fits(env, k):
                            out.add((env, (mu, result)))
        result_set = frozenset(out)
        memo[key] = result_set
        return result_set

    return Denotation(go(ctx.entries, t), k)


# ---------------------------------------------------------------------------
# the denotation as a simulation relation

def _nest(parts: list):
    if not parts:
        return "*"
    state = parts[0]
    for p in parts[1:]:
        state = (state, p)
    return state


def _context_source(coord_types: list, relation_states, rho: Valuation,
                    k: int, cap: int, max_states: int,
                    cache: dict) -> InteractionSystem:
    """The tensor of exponentials over the coordinates, materialized on the
    reachable closure of the states actually related."""
    if not coord_types:
        return skip()
    dyns = [bang_dyn(_type_dyn(ty, rho, k, cap, cache)) for ty in coord_types]
    dyn = dyns[0]
    for nxt in dyns[1:]:
        dyn = tensor_dyn(dyn, nxt)
    return assemble_reachable(relation_states, dyn, max_states)


@dataclass(frozen=True)
class DenotationRelation:
    """The denotation re-expressed between interpreting systems."""

    source: InteractionSystem
    target: InteractionSystem
    relation: Relation


def denotation_as_relation(ctx: Context, t: Term, rho: Valuation, k: int, *,
                           cap: int = DEFAULT_ACTION_CAP,
                           max_states: int = 500_000) -> DenotationRelation:
    """Re-express denote(ctx, t) as a relation from the context system to the
    result-type system.

    The source is the tensor of the exponentials of the context coordinates
    (Skip for closed terms); environments become (nested pair) states.  Both
    systems are materialized over the reachable closure of the related
    states, which is all the simulation check inspects.  Raises SizeCapError
    when an arrow action space along the way exceeds `cap`.
    """
    den = denote(ctx, t, rho, k)
    ty = typecheck(ctx, t)
    cache: dict = {}
    pairs = frozenset((_nest(list(env)), p) for env, p in den.pairs)
    coord_types = [entry_ty for _, entry_ty in ctx.entries]
    source = _context_source(coord_types, sorted({s for s, _ in pairs},
                                                 key=canon_key),
                             rho, k, cap, max_states, cache)
    if isinstance(ty, Base):
        target = rho[ty.name]
    else:
        target_dyn = _type_dyn(ty, rho, k, cap, cache)
        target = assemble_reachable(sorted({p for _, p in pairs}, key=canon_key),
                                    target_dyn, max_states)
    return DenotationRelation(source, target, Relation(pairs))


# ---------------------------------------------------------------------------
# proposition checks

@dataclass(frozen=True)
class CorrectnessReport:
    """Outcome of the soundness check for one term at one width."""

    term: str
    type: str
    width: int
    relation_size: int
    passed: bool
    transpose_passed: bool
    direct_passed: bool | None  # None when the direct arrow spaces are capped
    synthesis_agrees: bool
    counterexample: str | None = None

    def as_dict(self) -> dict:
        return {
            "term": self.term,
            "type": self.type,
            "width": self.width,
            "relation_size": self.relation_size,
            "passed": self.passed,
            "transpose_passed": self.transpose_passed,
            "direct_passed": self.direct_passed,
            "synthesis_agrees": self.synthesis_agrees,
            "counterexample": self.counterexample,
        }


def verify_correctness(ctx: Context, t: Term, rho: Valuation, k: int, *,
                       cap: int = DEFAULT_ACTION_CAP,
                       max_states: int = 500_000) -> CorrectnessReport:
    """Check that the denotation is a simulation from the context to the type.

    The verdict comes from the fully uncurried transpose: result arrows are
    peeled into extra exponential coordinates on the source side, so the
    target is a base system and the existential action search stays finite.
    The transpose runs straight on the per-state dynamics, since the
    simulation condition only ever inspects related states and successor
    membership.  The un-peeled relation between materialized systems is
    checked too whenever its arrow action spaces fit under `cap`; for
    higher-order types they outgrow any practical bound and only the
    transpose is decidable.
    """
    den = denote(ctx, t, rho, k)
    ty = typecheck(ctx, t)
    cache: dict = {}

    arg_types = []
    res = ty
    while isinstance(res, Arrow):
        arg_types.append(res.arg)
        res = res.res
    if res.name not in rho:
        raise SemanticsError(f"unbound base type {res.name!r}")
    target_dyn = dyn_of(rho[res.name])

    pairs = set()
    for env, p in den.pairs:
        parts = list(env)
        point = p
        for _ in arg_types:
            mu, point = point
            parts.append(mu)
        pairs.add((_nest(parts), point))
    pairs = frozenset(pairs)
    ordered = sorted(pairs, key=lambda pr: (canon_key(pr[0]), canon_key(pr[1])))

    coord_types = [entry_ty for _, entry_ty in ctx.entries] + arg_types
    dyns = [bang_dyn(_type_dyn(cty, rho, k, cap, cache)) for cty in coord_types]
    if dyns:
        source_dyn = dyns[0]
        for nxt in dyns[1:]:
            source_dyn = tensor_dyn(source_dyn, nxt)
    else:
        source_dyn = dyn_of(skip())

    transpose_ok = all(
        _pair_ok(source_dyn, target_dyn, s1, s2, pairs) is None
        for s1, s2 in ordered
    )
    tables = _synthesize_tables(source_dyn, target_dyn, ordered, pairs)
    synthesized = not isinstance(tables, Counterexample)
    agrees = synthesized == transpose_ok
    counterexample = None if synthesized else str(tables)

    # the un-peeled form: for a base-type result it coincides with the
    # transpose, otherwise rebuild between materialized systems if affordable
    direct_ok: bool | None
    if not arg_types:
        direct_ok = transpose_ok
    else:
        try:
            direct = denotation_as_relation(ctx, t, rho, k, cap=cap,
                                            max_states=max_states)
            direct_ok = check_simulation(direct.source, direct.target,
                                         direct.relation)
        except SizeCapError:
            direct_ok = None

    passed = transpose_ok and agrees and direct_ok is not False
    return CorrectnessReport(
        term=term_to_str(t),
        type=type_to_str(ty),
        width=k,
        relation_size=len(pairs),
        passed=passed,
        transpose_passed=transpose_ok,
        direct_passed=direct_ok,
        synthesis_agrees=agrees,
        counterexample=counterexample,
    )


@dataclass(frozen=True)
class InvarianceReport:
    """Outcome of a denotational equality check between two terms."""

    left: str
    right: str
    width: int
    equal: bool
    left_size: int
    right_size: int
    only_left: tuple = ()
    only_right: tuple = ()

    def as_dict(self) -> dict:
        return {
            "left": self.left,
            "right": self.right,
            "width": self.width,
            "equal": self.equal,
            "left_size": self.left_size,
            "right_size": self.right_size,
            "only_left": list(self.only_left),
            "only_right": list(self.only_right),
        }


def verify_invariance(redex: Term, reduct: Term, ctx: Context,
                      rho: Valuation, k: int,
                      max_reported: int = 5) -> InvarianceReport:
    """Exact set equality of the two denotations at width k.

    Any symmetric difference is reported as formatted (environment, point)
    pairs, truncated to `max_reported` per side.
    """
    left_ty = typecheck(ctx, redex)
    right_ty = typecheck(ctx, reduct)
    if left_ty != right_ty:
        raise SemanticsError(
            f"terms have different types: {type_to_str(left_ty)} "
            f"vs {type_to_str(right_ty)}")
    left = denote(ctx, redex, rho, k)
    right = denote(ctx, reduct, rho, k)

    def fmt(pairs):
        rendered = sorted(
            f"({format_environment(ctx, env)}) |- {format_point(p)}"
            for env, p in pairs
        )
        return tuple(rendered[:max_reported])

    only_left = left.pairs - right.pairs
    only_right = right.pairs - left.pairs
    return InvarianceReport(
        left=term_to_str(redex),
        right=term_to_str(reduct),
        width=k,
        equal=not only_left and not only_right,
        left_size=len(left),
        right_size=len(right),
        only_left=fmt(only_left),
        only_right=fmt(only_right),
    )
