"""Typed lambda-calculus and differential lambda-calculus syntax.

Terms are Church-style (binders carry their type) and extended with the
differential constructs: the empty sum 0, idempotent formal sums t + u, and
the linear application D t . u.  Application is written in Krivine style,
``(t)u``.  Sums are kept in a canonical flattened form: members are pairwise
distinct non-sum terms, literal zeros are dropped, and a one-member sum
collapses to the member.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union


class ParseError(ValueError):
    """Syntax error, with a line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class TypeCheckError(ValueError):
    """The term does not admit a type in the given context."""


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class Base:
    name: str


@dataclass(frozen=True)
class Arrow:
    arg: "TypeExpr"
    res: "TypeExpr"


TypeExpr = Union[Base, Arrow]


def type_to_str(ty: TypeExpr) -> str:
    if isinstance(ty, Base):
        return ty.name
    arg = type_to_str(ty.arg)
    if isinstance(ty.arg, Arrow):
        arg = f"({arg})"
    return f"{arg} -> {type_to_str(ty.res)}"


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    var: str
    var_type: TypeExpr
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Zero:
    ty: TypeExpr


@dataclass(frozen=True)
class Sum:
    members: tuple  # canonically sorted, >= 2 distinct non-sum, non-zero terms


@dataclass(frozen=True)
class Diff:
    fn: "Term"
    arg: "Term"


Term = Union[Var, Lam, App, Zero, Sum, Diff]


def _type_key(ty: TypeExpr) -> tuple:
    if isinstance(ty, Base):
        return (0, ty.name)
    return (1, _type_key(ty.arg), _type_key(ty.res))


def term_key(t: Term) -> tuple:
    """Structural sort key; fixes the canonical order of sum members."""
    if isinstance(t, Var):
        return (0, t.name)
    if isinstance(t, Zero):
        return (1, _type_key(t.ty))
    if isinstance(t, Lam):
        return (2, t.var, _type_key(t.var_type), term_key(t.body))
    if isinstance(t, App):
        return (3, term_key(t.fn), term_key(t.arg))
    if isinstance(t, Diff):
        return (4, term_key(t.fn), term_key(t.arg))
    return (5, tuple(term_key(m) for m in t.members))


def make_sum(members: Iterable[Term], ty: TypeExpr | None = None) -> Term:
    """Smart constructor enforcing the canonical sum form.

    Flattens nested sums, drops literal zeros (remembering their type), and
    deduplicates.  An empty result needs a type, either from a dropped zero
    or from the `ty` argument.
    """
    flat: list[Term] = []
    zero_type = ty
    for m in members:
        if isinstance(m, Sum):
            flat.extend(m.members)
        elif isinstance(m, Zero):
            zero_type = m.ty
        else:
            flat.append(m)
    unique = sorted(set(flat), key=term_key)
    if not unique:
        if zero_type is None:
            raise ValueError("empty sum needs a type annotation")
        return Zero(zero_type)
    if len(unique) == 1:
        return unique[0]
    return Sum(tuple(unique))


def free_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.var}
    if isinstance(t, (App, Diff)):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, Sum):
        return frozenset().union(*(free_vars(m) for m in t.members))
    return frozenset()


# ---------------------------------------------------------------------------
# printing

def term_to_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Zero):
        return f"0:{type_to_str(t.ty)}"
    if isinstance(t, Lam):
        return f"\\{t.var}:{type_to_str(t.var_type)}. {term_to_str(t.body)}"
    if isinstance(t, App):
        return f"({term_to_str(t.fn)}){_item_str(t.arg)}"
    if isinstance(t, Diff):
        fn = term_to_str(t.fn)
        if isinstance(t.fn, (Lam, Sum)):
            fn = f"({fn})"
        return f"D {fn} . {_item_str(t.arg)}"
    return " + ".join(_member_str(m) for m in t.members)


def _item_str(t: Term) -> str:
    s = term_to_str(t)
    return f"({s})" if isinstance(t, Sum) else s


def _member_str(t: Term) -> str:
    s = term_to_str(t)
    return f"({s})" if isinstance(t, Lam) else s


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"->|[\\().:+]|0|D(?![A-Za-z0-9_'])|[A-Za-z_][A-Za-z0-9_']*")
_SKIP = re.compile(r"(?:[ \t\r\n]+|#[^\n]*)*")


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, int]] = []
        while True:
            self.pos = _SKIP.match(text, self.pos).end()
            if self.pos >= len(text):
                break
            m = _TOKEN.match(text, self.pos)
            if m is None:
                line, col = self._line_col(self.pos)
                raise ParseError(f"unexpected character {text[self.pos]!r}", line, col)
            self.tokens.append((m.group(), m.start()))
            self.pos = m.end()
        self.index = 0

    def _line_col(self, offset: int) -> tuple[int, int]:
        line = self.text.count("\n", 0, offset) + 1
        start = self.text.rfind("\n", 0, offset) + 1
        return line, offset - start + 1

    def peek(self) -> str | None:
        if self.index < len(self.tokens):
            return self.tokens[self.index][0]
        return None

    def next(self) -> str:
        token = self.peek()
        if token is None:
            self.error("unexpected end of input")
        self.index += 1
        return token

    def expect(self, token: str) -> None:
        got = self.peek()
        if got != token:
            self.error(f"expected {token!r}, found {got!r}" if got is not None
                       else f"expected {token!r}, found end of input")
        self.index += 1

    def error(self, message: str):
        if self.index < len(self.tokens):
            offset = self.tokens[self.index][1]
        else:
            offset = len(self.text)
        line, col = self._line_col(offset)
        raise ParseError(message, line, col)


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")


def _is_ident(token: str | None) -> bool:
    return token is not None and token != "D" and _IDENT.match(token) is not None


def _parse_type(ts: _Tokens) -> TypeExpr:
    left = _parse_type_atom(ts)
    if ts.peek() == "->":
        ts.next()
        return Arrow(left, _parse_type(ts))
    return left


def _parse_type_atom(ts: _Tokens) -> TypeExpr:
    token = ts.peek()
    if token == "(":
        ts.next()
        ty = _parse_type(ts)
        ts.expect(")")
        return ty
    if _is_ident(token):
        return Base(ts.next())
    ts.error("expected a type")


_ITEM_START = {"\\", "(", "0", "D"}


def _starts_item(token: str | None) -> bool:
    return token in _ITEM_START or _is_ident(token)


def _parse_term(ts: _Tokens) -> Term:
    item = _parse_item(ts)
    if ts.peek() != "+":
        return item
    members = [item]
    while ts.peek() == "+":
        ts.next()
        members.append(_parse_item(ts))
    return make_sum(members)


def _parse_item(ts: _Tokens) -> Term:
    token = ts.peek()
    if token == "\\":
        ts.next()
        name = ts.next()
        if not _is_ident(name):
            ts.error("expected a variable name after '\\'")
        ts.expect(":")
        ty = _parse_type(ts)
        ts.expect(".")
        return Lam(name, ty, _parse_term(ts))
    if token == "D":
        ts.next()
        fn = _parse_item(ts)
        ts.expect(".")
        return Diff(fn, _parse_item(ts))
    return _parse_app(ts)


def _parse_app(ts: _Tokens) -> Term:
    token = ts.peek()
    if token == "0":
        ts.next()
        ts.expect(":")
        return Zero(_parse_type(ts))
    if _is_ident(token):
        return Var(ts.next())
    if token == "(":
        ts.next()
        inner = _parse_term(ts)
        ts.expect(")")
        if _starts_item(ts.peek()):
            return App(inner, _parse_item(ts))
        return inner
    ts.error("expected a term")


def parse_term(text: str) -> Term:
    ts = _Tokens(text)
    term = _parse_term(ts)
    if ts.peek() is not None:
        ts.error(f"trailing input {ts.peek()!r}")
    return term


def parse_type(text: str) -> TypeExpr:
    ts = _Tokens(text)
    ty = _parse_type(ts)
    if ts.peek() is not None:
        ts.error(f"trailing input {ts.peek()!r}")
    return ty


# ---------------------------------------------------------------------------
# typing

@dataclass(frozen=True)
class Context:
    """Ordered typing context; later entries shadow earlier ones."""

    entries: tuple = ()

    @classmethod
    def of(cls, pairs: Iterable) -> "Context":
        entries = tuple(pairs)
        names = [n for n, _ in entries]
        if len(set(names)) != len(names):
            raise TypeCheckError("duplicate names in context")
        return cls(entries)

    def extend(self, name: str, ty: TypeExpr) -> "Context":
        return Context(self.entries + ((name, ty),))

    def lookup(self, name: str) -> TypeExpr:
        for n, ty in reversed(self.entries):
            if n == name:
                return ty
        raise TypeCheckError(f"unbound variable {name!r}")

    def names(self) -> tuple:
        return tuple(n for n, _ in self.entries)

    def __iter__(self) -> Iterator:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def parse_context(text: str) -> Context:
    """Parse "x:X, y:X->Y" into a Context."""
    text = text.strip()
    if not text:
        return Context()
    pairs = []
    for chunk in text.split(","):
        name, _, ty = chunk.partition(":")
        if not _IDENT.match(name.strip()) or not ty.strip():
            raise ParseError(f"malformed context entry {chunk.strip()!r}", 1, 1)
        pairs.append((name.strip(), parse_type(ty)))
    return Context.of(pairs)


def typecheck(ctx: Context, t: Term) -> TypeExpr:
    """The unique type of t in ctx, or TypeCheckError."""
    if isinstance(t, Var):
        return ctx.lookup(t.name)
    if isinstance(t, Zero):
        return t.ty
    if isinstance(t, Lam):
        return Arrow(t.var_type, typecheck(ctx.extend(t.var, t.var_type), t.body))
    if isinstance(t, App):
        fn_ty = typecheck(ctx, t.fn)
        if not isinstance(fn_ty, Arrow):
            raise TypeCheckError(
                f"applied term has type {type_to_str(fn_ty)}, not an arrow")
        arg_ty = typecheck(ctx, t.arg)
        if arg_ty != fn_ty.arg:
            raise TypeCheckError(
                f"argument has type {type_to_str(arg_ty)}, "
                f"expected {type_to_str(fn_ty.arg)}")
        return fn_ty.res
    if isinstance(t, Diff):
        fn_ty = typecheck(ctx, t.fn)
        if not isinstance(fn_ty, Arrow):
            raise TypeCheckError(
                f"differentiated term has type {type_to_str(fn_ty)}, not an arrow")
        arg_ty = typecheck(ctx, t.arg)
        if arg_ty != fn_ty.arg:
            raise TypeCheckError(
                f"differential argument has type {type_to_str(arg_ty)}, "
                f"expected {type_to_str(fn_ty.arg)}")
        return fn_ty
    types = {typecheck(ctx, m) for m in t.members}
    if len(types) != 1:
        raise TypeCheckError("sum members have different types")
    return types.pop()


# ---------------------------------------------------------------------------
# substitution and reduction

def _fresh(base: str, taken) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


def substitute(t: Term, x: str, u: Term) -> Term:
    """Capture-avoiding substitution of u for x, distributing over sums."""
    if isinstance(t, Var):
        return u if t.name == x else t
    if isinstance(t, Zero):
        return t
    if isinstance(t, Lam):
        if t.var == x:
            return t
        if t.var in free_vars(u) and x in free_vars(t.body):
            fresh = _fresh(t.var, free_vars(u) | free_vars(t.body) | {x})
            body = substitute(t.body, t.var, Var(fresh))
            return Lam(fresh, t.var_type, substitute(body, x, u))
        return Lam(t.var, t.var_type, substitute(t.body, x, u))
    if isinstance(t, App):
        return App(substitute(t.fn, x, u), substitute(t.arg, x, u))
    if isinstance(t, Diff):
        return Diff(substitute(t.fn, x, u), substitute(t.arg, x, u))
    return make_sum(substitute(m, x, u) for m in t.members)


def diff_substitute(ctx: Context, t: Term, x: str, u: Term) -> Term:
    """Linear substitution: replace exactly one occurrence of x in t by u.

    Produces a formal sum over the choice of occurrence.  Derivatives of
    variables other than x are literal zeros at the variable's type, so the
    context must type every free variable of t.
    """
    if isinstance(t, Var):
        return u if t.name == x else Zero(ctx.lookup(t.name))
    if isinstance(t, Zero):
        return t
    if isinstance(t, Lam):
        if t.var == x:
            return Zero(typecheck(ctx, t))
        if t.var in free_vars(u):
            fresh = _fresh(t.var, free_vars(u) | free_vars(t.body) | {x})
            body = substitute(t.body, t.var, Var(fresh))
            return diff_substitute(ctx, Lam(fresh, t.var_type, body), x, u)
        inner = ctx.extend(t.var, t.var_type)
        return Lam(t.var, t.var_type, diff_substitute(inner, t.body, x, u))
    if isinstance(t, App):
        return make_sum(
            [App(diff_substitute(ctx, t.fn, x, u), t.arg),
             App(Diff(t.fn, diff_substitute(ctx, t.arg, x, u)), t.arg)],
            ty=typecheck(ctx, t))
    if isinstance(t, Diff):
        return make_sum(
            [Diff(diff_substitute(ctx, t.fn, x, u), t.arg),
             Diff(t.fn, diff_substitute(ctx, t.arg, x, u))],
            ty=typecheck(ctx, t))
    return make_sum((diff_substitute(ctx, m, x, u) for m in t.members),
                    ty=typecheck(ctx, t))


def _step(ctx: Context, t: Term) -> Term | None:
    if isinstance(t, App):
        if isinstance(t.fn, Lam):
            return substitute(t.fn.body, t.fn.var, t.arg)
        fn = _step(ctx, t.fn)
        if fn is not None:
            return App(fn, t.arg)
        arg = _step(ctx, t.arg)
        if arg is not None:
            return App(t.fn, arg)
        return None
    if isinstance(t, Diff):
        if isinstance(t.fn, Lam):
            lam = t.fn
            inner = ctx.extend(lam.var, lam.var_type)
            return Lam(lam.var, lam.var_type,
                       diff_substitute(inner, lam.body, lam.var, t.arg))
        fn = _step(ctx, t.fn)
        if fn is not None:
            return Diff(fn, t.arg)
        arg = _step(ctx, t.arg)
        if arg is not None:
            return Diff(t.fn, arg)
        return None
    if isinstance(t, Lam):
        body = _step(ctx.extend(t.var, t.var_type), t.body)
        if body is not None:
            return Lam(t.var, t.var_type, body)
        return None
    if isinstance(t, Sum):
        for i, m in enumerate(t.members):
            stepped = _step(ctx, m)
            if stepped is not None:
                rest = t.members[:i] + t.members[i + 1:]
                return make_sum(rest + (stepped,), ty=typecheck(ctx, m))
        return None
    return None


def reduce(t: Term, ctx: Context = Context()) -> Term:
    """One leftmost-outermost beta or differential step; t itself if normal."""
    stepped = _step(ctx, t)
    return t if stepped is None else stepped


def is_normal(t: Term, ctx: Context = Context()) -> bool:
    return _step(ctx, t) is None


def normalize(t: Term, ctx: Context = Context(), max_steps: int = 10_000) -> Term:
    """Iterate reduce to normal form, with a step watchdog."""
    for _ in range(max_steps):
        stepped = _step(ctx, t)
        if stepped is None:
            return t
        t = stepped
    raise RuntimeError(f"no normal form within {max_steps} steps")
