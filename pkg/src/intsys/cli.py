"""Command-line surface: load systems and terms, run the library, report.

Systems travel as JSON documents with exactly the keys `states`, `actions`,
`reactions`, `next` and optionally `initial`; relations as `{"pairs": [...]}`.
Terms are plain text in the lambda grammar (see the terms module).  All
machine output is emitted with sorted keys and canonical ordering, so two
runs with identical inputs and seed are byte-identical.

Exit codes: 0 the property holds or the operation succeeded, 1 the property
fails (counterexample on stdout), 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .core import (
    Counterexample,
    InteractionSystem,
    Relation,
    SimulationStrategy,
    StructureError,
    canon_key,
    check_simulation,
    compose,
    greatest_simulation,
    identity_relation,
    render_value,
    synthesize_strategy,
    total_relation,
)
from .connectives import (
    DEFAULT_ACTION_CAP,
    SizeCapError,
    bang,
    check_comonad_laws,
    curry,
    lollipop,
    tensor,
    uncurry,
)
from .fixtures import FIXTURES, fixture
from .terms import (
    Arrow,
    Base,
    Context,
    ParseError,
    TypeCheckError,
    normalize,
    parse_context,
    parse_term,
    term_to_str,
    type_to_str,
    typecheck,
)
from .semantics import (
    SemanticsError,
    denote,
    format_environment,
    format_point,
    verify_correctness,
    verify_invariance,
)


class CliError(ValueError):
    """Bad usage or malformed input; maps to exit code 2."""


# ---------------------------------------------------------------------------
# serialization

SYSTEM_KEYS = {"states", "actions", "reactions", "next"}


def system_to_dict(w: InteractionSystem) -> dict:
    states = [render_value(s) for s in w.states]
    actions = {
        render_value(s): [render_value(a) for a in w.acts(s)]
        for s in w.states
    }
    reactions: dict = {}
    nxt: dict = {}
    for s in w.states:
        s_name = render_value(s)
        reactions[s_name] = {}
        nxt[s_name] = {}
        for a in w.acts(s):
            a_name = render_value(a)
            reactions[s_name][a_name] = [render_value(d) for d in w.reacts(s, a)]
            nxt[s_name][a_name] = {
                render_value(d): render_value(w.step(s, a, d))
                for d in w.reacts(s, a)
            }
    out = {"states": states, "actions": actions, "reactions": reactions,
           "next": nxt}
    if w.initial is not None:
        out["initial"] = render_value(w.initial)
    return out


def system_from_dict(doc: dict) -> InteractionSystem:
    if not isinstance(doc, dict):
        raise CliError("system file must hold a JSON object")
    unknown = set(doc) - SYSTEM_KEYS - {"initial"}
    if unknown:
        raise CliError(f"unknown keys in system file: {', '.join(sorted(unknown))}")
    missing = SYSTEM_KEYS - set(doc)
    if missing:
        raise CliError(f"missing keys in system file: {', '.join(sorted(missing))}")
    states = tuple(doc["states"])
    actions = {s: tuple(acts) for s, acts in doc["actions"].items()}
    reactions = {}
    nxt = {}
    for s, per_action in doc["reactions"].items():
        for a, ds in per_action.items():
            reactions[(s, a)] = tuple(ds)
    for s, per_action in doc["next"].items():
        for a, per_reaction in per_action.items():
            for d, target in per_reaction.items():
                nxt[(s, a, d)] = target
    try:
        return InteractionSystem(states, actions, reactions, nxt,
                                 doc.get("initial"))
    except StructureError as exc:
        raise CliError(f"invalid system: {exc}") from exc


def relation_to_dict(r: Relation) -> dict:
    return {"pairs": [[render_value(l), render_value(x)]
                      for l, x in r.sorted_pairs()]}


def relation_from_dict(doc: dict, w1: InteractionSystem,
                       w2: InteractionSystem) -> Relation:
    if not isinstance(doc, dict) or set(doc) != {"pairs"}:
        raise CliError('relation file must hold exactly {"pairs": [...]}')
    left = {render_value(s): s for s in w1.states}
    right = {render_value(s): s for s in w2.states}
    pairs = set()
    for entry in doc["pairs"]:
        if not isinstance(entry, list) or len(entry) != 2:
            raise CliError(f"relation pair {entry!r} is not a two-element list")
        l, x = entry
        if l not in left:
            raise CliError(f"unknown left state {l!r} in relation")
        if x not in right:
            raise CliError(f"unknown right state {x!r} in relation")
        pairs.add((left[l], right[x]))
    return Relation(frozenset(pairs))


def strategy_to_dict(strategy: SimulationStrategy) -> dict:
    act = [
        [render_value(s1), render_value(s2), render_value(a1), render_value(a2)]
        for (s1, s2, a1), a2 in strategy.act.items()
    ]
    react = [
        [render_value(s1), render_value(s2), render_value(a1),
         render_value(d2), render_value(d1)]
        for (s1, s2, a1, d2), d1 in strategy.react.items()
    ]
    return {
        "relation": relation_to_dict(strategy.relation)["pairs"],
        "act": sorted(act),
        "react": sorted(react),
    }


def load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed JSON in {path}: {exc}") from exc


def load_system(spec: str) -> InteractionSystem:
    if spec in FIXTURES:
        return fixture(spec)
    return system_from_dict(load_json(spec))


def load_term(path: str):
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    return parse_term(text)


# ---------------------------------------------------------------------------
# output helpers

def emit(args, payload: dict, human: list) -> None:
    if args.json:
        payload = dict(payload)
        payload["seed"] = args.seed
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in human:
            print(line)


def _collect_base_names(ctx: Context, *terms) -> set:
    names: set = set()

    def from_type(ty):
        if isinstance(ty, Base):
            names.add(ty.name)
        else:
            from_type(ty.arg)
            from_type(ty.res)

    def from_term(t):
        kind = type(t).__name__
        if kind == "Lam":
            from_type(t.var_type)
            from_term(t.body)
        elif kind in ("App", "Diff"):
            from_term(t.fn)
            from_term(t.arg)
        elif kind == "Sum":
            for m in t.members:
                from_term(m)
        elif kind == "Zero":
            from_type(t.ty)

    for _, ty in ctx.entries:
        from_type(ty)
    for t in terms:
        from_term(t)
    return names


def build_valuation(binds: list | None, ctx: Context, *terms) -> dict:
    """Explicit NAME=SYSTEM bindings; unmentioned base types mean Skip."""
    rho = {}
    for entry in binds or ():
        name, eq, target = entry.partition("=")
        if not eq or not name or not target:
            raise CliError(f"malformed --bind {entry!r}, expected NAME=SYSTEM")
        rho[name] = load_system(target)
    for name in _collect_base_names(ctx, *terms):
        rho.setdefault(name, fixture("skip"))
    return rho


def _two_systems(args) -> tuple:
    names = list(args.systems)
    if args.fixture:
        names.insert(0, args.fixture)
    if len(names) == 1:
        names = names * 2
    if len(names) != 2:
        raise CliError("expected two systems (positional or via --fixture)")
    return load_system(names[0]), load_system(names[1])


def _pick_relation(args, w1, w2) -> Relation:
    given = [bool(args.relation), args.identity, args.total]
    if sum(given) != 1:
        raise CliError("choose exactly one of --relation, --identity, --total")
    if args.identity:
        if w1.states != w2.states:
            raise CliError("--identity needs systems with equal state sets")
        return identity_relation(w1)
    if args.total:
        return total_relation(w1, w2)
    return relation_from_dict(load_json(args.relation), w1, w2)


# ---------------------------------------------------------------------------
# subcommands

def cmd_check(args) -> int:
    w1, w2 = _two_systems(args)
    r = _pick_relation(args, w1, w2)
    outcome = synthesize_strategy(w1, w2, r)
    ok = isinstance(outcome, SimulationStrategy)
    if ok:
        emit(args, {"command": "check", "holds": True, "pairs": len(r)},
             [f"simulation holds on {len(r)} pair(s)"])
        return 0
    emit(args, {"command": "check", "holds": False,
                "counterexample": [render_value(outcome.s1),
                                   render_value(outcome.s2),
                                   render_value(outcome.a1)],
                "relation": relation_to_dict(r)["pairs"]},
         [f"not a simulation: {outcome}"])
    return 1


def cmd_synth(args) -> int:
    w1, w2 = _two_systems(args)
    r = _pick_relation(args, w1, w2)
    outcome = synthesize_strategy(w1, w2, r)
    if isinstance(outcome, Counterexample):
        emit(args, {"command": "synth", "holds": False,
                    "counterexample": [render_value(outcome.s1),
                                       render_value(outcome.s2),
                                       render_value(outcome.a1)],
                    "relation": relation_to_dict(r)["pairs"]},
             [f"not a simulation: {outcome}"])
        return 1
    payload = {"command": "synth", "holds": True}
    payload.update(strategy_to_dict(outcome))
    emit(args, payload,
         [f"strategy with {len(outcome.act)} act and "
          f"{len(outcome.react)} react entries"])
    return 0


def cmd_greatest(args) -> int:
    w1, w2 = _two_systems(args)
    r = greatest_simulation(w1, w2)
    emit(args, {"command": "greatest", "relation": relation_to_dict(r)["pairs"]},
         [f"greatest simulation has {len(r)} pair(s)"]
         + [f"  {l}  ~  {x}" for l, x in
            ((render_value(a), render_value(b)) for a, b in r.sorted_pairs())])
    return 0


def cmd_compose(args) -> int:
    w1 = load_system(args.systems[0])
    w2 = load_system(args.systems[1])
    w3 = load_system(args.systems[2])
    r1 = relation_from_dict(load_json(args.rel1), w1, w2)
    r2 = relation_from_dict(load_json(args.rel2), w2, w3)
    inner = synthesize_strategy(w1, w2, r1)
    if isinstance(inner, Counterexample):
        emit(args, {"command": "compose", "holds": False, "stage": "first",
                    "counterexample": [render_value(inner.s1),
                                       render_value(inner.s2),
                                       render_value(inner.a1)]},
             [f"first relation is not a simulation: {inner}"])
        return 1
    outer = synthesize_strategy(w2, w3, r2)
    if isinstance(outer, Counterexample):
        emit(args, {"command": "compose", "holds": False, "stage": "second",
                    "counterexample": [render_value(outer.s1),
                                       render_value(outer.s2),
                                       render_value(outer.a1)]},
             [f"second relation is not a simulation: {outer}"])
        return 1
    composed = compose(outer, inner)
    payload = {"command": "compose", "holds": True}
    payload.update(strategy_to_dict(composed))
    emit(args, payload,
         [f"composite relation has {len(composed.relation)} pair(s)"])
    return 0


def _emit_system(args, name: str, w: InteractionSystem, note: str) -> int:
    if args.json:
        payload = {"command": name, "system": system_to_dict(w), "seed": args.seed}
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(note)
        print(json.dumps(system_to_dict(w), indent=2, sort_keys=True))
    return 0


def cmd_tensor(args) -> int:
    w1, w2 = load_system(args.systems[0]), load_system(args.systems[1])
    w = tensor(w1, w2)
    return _emit_system(args, "tensor", w,
                        f"tensor with {len(w.states)} states")


def cmd_lollipop(args) -> int:
    w1, w2 = load_system(args.systems[0]), load_system(args.systems[1])
    w = lollipop(w1, w2, args.cap)
    return _emit_system(args, "lollipop", w,
                        f"linear arrow with {len(w.states)} states")


def cmd_bang(args) -> int:
    w1 = load_system(args.systems[0]) if args.systems else fixture(args.fixture)
    w = bang(w1, args.bound, faithful=args.faithful)
    return _emit_system(args, "bang", w,
                        f"exponential at width {args.bound} "
                        f"with {len(w.states)} states")


def cmd_curry(args) -> int:
    w1 = load_system(args.systems[0])
    w2 = load_system(args.systems[1])
    w3 = load_system(args.systems[2])
    big = tensor(w1, w2)
    r = relation_from_dict(load_json(args.relation), big, w3)
    strategy = synthesize_strategy(big, w3, r)
    if isinstance(strategy, Counterexample):
        emit(args, {"command": "curry", "holds": False,
                    "counterexample": [render_value(strategy.s1),
                                       render_value(strategy.s2),
                                       render_value(strategy.a1)]},
             [f"input is not a simulation: {strategy}"])
        return 1
    curried = curry(strategy, w1, w2, w3, cap=args.cap)
    payload = {"command": "curry", "holds": True}
    payload.update(strategy_to_dict(curried))
    emit(args, payload,
         [f"curried strategy on {len(curried.relation)} pair(s)"])
    return 0


def cmd_uncurry(args) -> int:
    w1 = load_system(args.systems[0])
    w2 = load_system(args.systems[1])
    w3 = load_system(args.systems[2])
    lol = lollipop(w2, w3, args.cap)
    r = relation_from_dict(load_json(args.relation), w1, lol)
    strategy = synthesize_strategy(w1, lol, r)
    if isinstance(strategy, Counterexample):
        emit(args, {"command": "uncurry", "holds": False,
                    "counterexample": [render_value(strategy.s1),
                                       render_value(strategy.s2),
                                       render_value(strategy.a1)]},
             [f"input is not a simulation: {strategy}"])
        return 1
    flat = uncurry(strategy, w1, w2, w3, cap=args.cap)
    payload = {"command": "uncurry", "holds": True}
    payload.update(strategy_to_dict(flat))
    emit(args, payload,
         [f"uncurried strategy on {len(flat.relation)} pair(s)"])
    return 0


def cmd_laws(args) -> int:
    w1 = load_system(args.systems[0]) if args.systems else fixture(args.fixture)
    report = check_comonad_laws(w1, args.bound)
    emit(args, {"command": "laws", **report.as_dict()},
         [f"comonad laws at width {report.width}: {report.status}",
          f"  counitform: {report.counit_after_comult}",
          f"  promoted counit: {report.bang_counit_after_comult}",
          f"  coassociativity: {report.coassociativity}"])
    return 0 if report.status != "failed" else 1


def cmd_typecheck(args) -> int:
    term = load_term(args.term)
    ctx = parse_context(args.ctx) if args.ctx else Context()
    try:
        ty = typecheck(ctx, term)
    except TypeCheckError as exc:
        emit(args, {"command": "typecheck", "well_typed": False,
                    "error": str(exc)},
             [f"ill-typed: {exc}"])
        return 1
    emit(args, {"command": "typecheck", "well_typed": True,
                "term": term_to_str(term), "type": type_to_str(ty)},
         [type_to_str(ty)])
    return 0


def cmd_normalize(args) -> int:
    term = load_term(args.term)
    ctx = parse_context(args.ctx) if args.ctx else Context()
    typecheck(ctx, term)
    result = normalize(term, ctx, max_steps=args.max_steps)
    emit(args, {"command": "normalize", "input": term_to_str(term),
                "normal_form": term_to_str(result)},
         [term_to_str(result)])
    return 0


def cmd_denote(args) -> int:
    term = load_term(args.term)
    ctx = parse_context(args.ctx) if args.ctx else Context()
    rho = build_valuation(args.bind, ctx, term)
    den = denote(ctx, term, rho, args.bound)
    rendered = sorted(
        [format_environment(ctx, env), format_point(p)]
        for env, p in den.pairs
    )
    emit(args, {"command": "denote", "term": term_to_str(term),
                "width": args.bound, "size": len(den),
                "elements": rendered},
         [f"{len(den)} element(s) at width {args.bound}"]
         + [f"  ({env}) |- {p}" for env, p in rendered])
    return 0


def cmd_verify_correctness(args) -> int:
    term = load_term(args.term)
    ctx = parse_context(args.ctx) if args.ctx else Context()
    rho = build_valuation(args.bind, ctx, term)
    report = verify_correctness(ctx, term, rho, args.bound, cap=args.cap)
    emit(args, {"command": "verify-correctness", **report.as_dict()},
         [f"{'PASS' if report.passed else 'FAIL'}: {report.term} : "
          f"{report.type} at width {report.width} "
          f"({report.relation_size} pairs)"]
         + ([f"counterexample: {report.counterexample}"]
            if report.counterexample else []))
    return 0 if report.passed else 1


def cmd_verify_invariance(args) -> int:
    redex = load_term(args.redex)
    reduct = load_term(args.reduct)
    ctx = parse_context(args.ctx) if args.ctx else Context()
    rho = build_valuation(args.bind, ctx, redex, reduct)
    report = verify_invariance(redex, reduct, ctx, rho, args.bound)
    emit(args, {"command": "verify-invariance", **report.as_dict()},
         [f"{'EQUAL' if report.equal else 'DIFFERENT'} at width "
          f"{report.width}: {report.left_size} vs {report.right_size} "
          f"element(s)"]
         + [f"  only left: {entry}" for entry in report.only_left]
         + [f"  only right: {entry}" for entry in report.only_right])
    return 0 if report.equal else 1


def cmd_examples(args) -> int:
    if args.json:
        payload = {
            "command": "examples",
            "fixtures": {name: system_to_dict(FIXTURES[name]())
                         for name in sorted(FIXTURES)},
            "seed": args.seed,
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for name in sorted(FIXTURES):
            w = FIXTURES[name]()
            print(f"{name}: {len(w.states)} state(s), "
                  f"{sum(len(w.acts(s)) for s in w.states)} action(s)")
    return 0


# ---------------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true",
                        help="machine-readable output")
    common.add_argument("--seed", type=int, default=0,
                        help="seed recorded in reports")
    common.add_argument("--bound", type=int, default=2,
                        help="width bound for exponentials and denotations")
    common.add_argument("--cap", type=int, default=DEFAULT_ACTION_CAP,
                        help="arrow action-count guard")
    common.add_argument("--faithful", action="store_true",
                        help="index exponential actions by all representatives")

    parser = argparse.ArgumentParser(
        prog="intsys",
        description="finite interaction systems, simulations, connectives, "
                    "and the bounded relational lambda-calculus model")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, **kwargs):
        p = sub.add_parser(name, parents=[common], **kwargs)
        p.set_defaults(fn=fn)
        return p

    for name, fn in (("check", cmd_check), ("synth", cmd_synth)):
        p = add(name, fn, help=f"{name} a simulation relation")
        p.add_argument("systems", nargs="*",
                       help="two systems (paths or fixture names)")
        p.add_argument("--fixture", choices=sorted(FIXTURES),
                       help="use a built-in system")
        p.add_argument("--relation", help="relation JSON file")
        p.add_argument("--identity", action="store_true",
                       help="use the identity relation")
        p.add_argument("--total", action="store_true",
                       help="use the total relation")

    p = add("greatest", cmd_greatest, help="largest simulation between two systems")
    p.add_argument("systems", nargs="*")
    p.add_argument("--fixture", choices=sorted(FIXTURES))

    p = add("compose", cmd_compose, help="compose two synthesized strategies")
    p.add_argument("systems", nargs=3, metavar=("W1", "W2", "W3"))
    p.add_argument("--rel1", required=True, help="relation from W1 to W2")
    p.add_argument("--rel2", required=True, help="relation from W2 to W3")

    p = add("tensor", cmd_tensor, help="synchronous product of two systems")
    p.add_argument("systems", nargs=2)

    p = add("lollipop", cmd_lollipop, help="linear arrow between two systems")
    p.add_argument("systems", nargs=2)

    p = add("bang", cmd_bang, help="width-bounded exponential of a system")
    p.add_argument("systems", nargs="*")
    p.add_argument("--fixture", choices=sorted(FIXTURES))

    p = add("curry", cmd_curry, help="transport tensor(W1,W2)->W3 to W1->(W2-oW3)")
    p.add_argument("systems", nargs=3, metavar=("W1", "W2", "W3"))
    p.add_argument("--relation", required=True)

    p = add("uncurry", cmd_uncurry, help="transport W1->(W2-oW3) to tensor(W1,W2)->W3")
    p.add_argument("systems", nargs=3, metavar=("W1", "W2", "W3"))
    p.add_argument("--relation", required=True)

    p = add("laws", cmd_laws, help="check the comonad laws at a width bound")
    p.add_argument("systems", nargs="*")
    p.add_argument("--fixture", choices=sorted(FIXTURES))

    p = add("typecheck", cmd_typecheck, help="type a term")
    p.add_argument("term", help="term file")
    p.add_argument("--ctx", help='typing context, e.g. "x:X, y:X->X"')

    p = add("normalize", cmd_normalize, help="normalize a term")
    p.add_argument("term")
    p.add_argument("--ctx")
    p.add_argument("--max-steps", type=int, default=10_000)

    p = add("denote", cmd_denote, help="enumerate a bounded denotation")
    p.add_argument("term")
    p.add_argument("--ctx")
    p.add_argument("--bind", action="append",
                   help="base-type binding NAME=SYSTEM (default: skip)")

    p = add("verify-correctness", cmd_verify_correctness,
            help="check the denotation is a simulation")
    p.add_argument("term")
    p.add_argument("--ctx")
    p.add_argument("--bind", action="append")

    p = add("verify-invariance", cmd_verify_invariance,
            help="check two terms denote the same set")
    p.add_argument("redex")
    p.add_argument("reduct")
    p.add_argument("--ctx")
    p.add_argument("--bind", action="append")

    add("examples", cmd_examples, help="list the built-in fixtures")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (CliError, ParseError, StructureError, SizeCapError,
            SemanticsError, TypeCheckError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
