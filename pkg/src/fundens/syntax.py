"""Abstract syntax shared by Fun, the target language and the surface layer.

One set of node classes covers three layers:

* core Fun: ``Var`` ... ``Fail`` plus ``Plate`` and ``Index`` for arrays;
* target-only forms: ``Integral``, ``Iverson``, ``PdfOf``, ``LogPdfOf``,
  ``ProdBy``, ``LogProdBy``, ``Log``, ``Exp`` and the compiler-internal
  ``FromL``/``FromR``/``IsL``/``IsR``;
* surface sugar removed by :mod:`fundens.desugar` (see ``SURFACE_NODES``).

Every node carries an optional source ``span`` that is ignored by equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional, Tuple

from .errors import ImpureSubstitutionRange, Span
from .types import FunType


def _span():
    return field(default=None, compare=False, repr=False)


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()

    def children(self):
        return [getattr(self, f.name) for f in fields(self) if isinstance(getattr(self, f.name), Expr)]


@dataclass(frozen=True)
class Var(Expr):
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: Any  # int, float or () -- never bool
    span: Optional[Span] = _span()

    # 1 and 1.0 are different constants; -0.0 and 0.0 are not told apart
    def __eq__(self, other):
        return (type(other) is Const and type(self.value) is type(other.value)
                and self.value == other.value)

    def __hash__(self):
        return hash((type(self.value), self.value))


@dataclass(frozen=True)
class Pair(Expr):
    fst: Expr
    snd: Expr
    span: Optional[Span] = _span()
    labels: Optional[Tuple[str, ...]] = field(default=None, compare=False)  # record fields


@dataclass(frozen=True)
class Fst(Expr):
    arg: Expr
    label: Optional[str] = field(default=None, compare=False)
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Snd(Expr):
    arg: Expr
    label: Optional[str] = field(default=None, compare=False)
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Inl(Expr):
    arg: Expr
    other: Optional[FunType]  # the right summand; None only before elaboration
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Inr(Expr):
    arg: Expr
    other: Optional[FunType]  # the left summand
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Match(Expr):
    scrut: Expr
    left_var: str
    left: Expr
    right_var: str
    right: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Let(Expr):
    var: str
    bound: Expr
    body: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Prim(Expr):
    op: str
    args: Tuple[Expr, ...]
    span: Optional[Span] = _span()

    def children(self):
        return list(self.args)


@dataclass(frozen=True)
class Random(Expr):
    dist: str
    arg: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Fail(Expr):
    type: Optional[FunType]
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Plate(Expr):
    """``[| for var in 0..size-1 -> body |]``; ``var`` has type int."""
    var: str
    size: int
    body: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ArrayLit(Expr):
    items: Tuple[Expr, ...]
    span: Optional[Span] = _span()

    def children(self):
        return list(self.items)


@dataclass(frozen=True)
class Index(Expr):
    arr: Expr
    index: Expr
    span: Optional[Span] = _span()


# compiler-internal deterministic operations


@dataclass(frozen=True)
class FromL(Expr):
    arg: Expr
    type: Optional[FunType] = field(default=None, compare=False)  # result type, for 0_t
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class FromR(Expr):
    arg: Expr
    type: Optional[FunType] = field(default=None, compare=False)
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class IsL(Expr):
    arg: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class IsR(Expr):
    arg: Expr
    span: Optional[Span] = _span()


# target-only forms


@dataclass(frozen=True)
class Integral(Expr):
    binders: Tuple[Tuple[str, FunType], ...]
    body: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Iverson(Expr):
    pred: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class PdfOf(Expr):
    dist: str
    arg: Expr
    point: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class LogPdfOf(Expr):
    dist: str
    arg: Expr
    point: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class ProdBy(Expr):
    """Product of ``body`` over ``var`` in ``0..size-1``."""
    var: str
    size: int
    body: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class LogProdBy(Expr):
    """Sum of the log-density ``body`` over ``var`` in ``0..size-1``."""
    var: str
    size: int
    body: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Log(Expr):
    """Logarithm of a non-negative density term; ``Log(0) = -inf``."""
    arg: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Exp(Expr):
    """Exponential of a log-density term; ``Exp(-inf) = 0``."""
    arg: Expr
    span: Optional[Span] = _span()


# surface-only forms (removed by desugar)


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Tuple_(Expr):
    items: Tuple[Expr, ...]
    span: Optional[Span] = _span()

    def children(self):
        return list(self.items)


@dataclass(frozen=True)
class Record(Expr):
    fields: Tuple[Tuple[str, Expr], ...]
    span: Optional[Span] = _span()

    def children(self):
        return [e for _, e in self.fields]


@dataclass(frozen=True)
class Field(Expr):
    arg: Expr
    name: str
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Comprehension(Expr):
    """``[| for var in source -> body |]``; ``source`` is a Range or an array."""
    var: str
    source: Expr
    body: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Range(Expr):
    lo: Expr
    hi: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class LetTuple(Expr):
    vars: Tuple[str, ...]
    bound: Expr
    body: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Seq(Expr):
    first: Expr
    then: Expr
    span: Optional[Span] = _span()


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: Tuple[Expr, ...]
    span: Optional[Span] = _span()

    def children(self):
        return list(self.args)


@dataclass(frozen=True)
class Ascribe(Expr):
    expr: Expr
    type: FunType
    span: Optional[Span] = _span()


SURFACE_NODES = (If, Tuple_, Record, Field, Comprehension, Range, LetTuple, Seq, Call, Ascribe)
TARGET_NODES = (Integral, Iverson, PdfOf, LogPdfOf, ProdBy, LogProdBy, Log, Exp)
INTERNAL_NODES = (FromL, FromR, IsL, IsR)

def true_expr():
    from .types import UNIT
    return Inl(Const(()), UNIT)


def false_expr():
    from .types import UNIT
    return Inr(Const(()), UNIT)


def if_expr(cond, then, orelse):
    """Core encoding of ``if``: a match whose binders are unused."""
    return Match(cond, "_", then, "_", orelse)


def mul(a, b):
    return Prim("mul", (a, b))


def add(a, b):
    return Prim("add", (a, b))


def sub(a, b):
    return Prim("sub", (a, b))


def div(a, b):
    return Prim("div", (a, b))


# ---------------------------------------------------------------------------
# names


class NameSupply:
    """Fresh names in the reserved ``$`` namespace (unparseable by the surface grammar)."""

    def __init__(self, prefix="$"):
        self.prefix = prefix
        self._counter = itertools.count()

    def fresh(self, hint="v"):
        hint = hint.split("$")[0] or "v"
        return f"{hint}${next(self._counter)}"


def binders_of(e: Expr):
    """(name, body) pairs for the variables a node binds."""
    if isinstance(e, Let):
        return [(e.var, e.body)]
    if isinstance(e, Match):
        return [(e.left_var, e.left), (e.right_var, e.right)]
    if isinstance(e, (Plate, ProdBy, LogProdBy, Comprehension)):
        return [(e.var, e.body)]
    if isinstance(e, Integral):
        return [(x, e.body) for x, _ in e.binders]
    if isinstance(e, LetTuple):
        return [(x, e.body) for x in e.vars]
    return []


def free_vars(e: Expr) -> frozenset:
    """Free variables of ``e``."""
    return _fv(e)


def _fv(e):
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, Let):
        return _fv(e.bound) | (_fv(e.body) - {e.var})
    if isinstance(e, Match):
        return _fv(e.scrut) | (_fv(e.left) - {e.left_var}) | (_fv(e.right) - {e.right_var})
    if isinstance(e, (Plate, ProdBy, LogProdBy)):
        return _fv(e.body) - {e.var}
    if isinstance(e, Comprehension):
        return _fv(e.source) | (_fv(e.body) - {e.var})
    if isinstance(e, Integral):
        return _fv(e.body) - {x for x, _ in e.binders}
    if isinstance(e, LetTuple):
        return _fv(e.bound) | (_fv(e.body) - set(e.vars))
    out = frozenset()
    for c in e.children():
        out |= _fv(c)
    return out


def is_pure(e: Expr) -> bool:
    """True iff neither ``random`` nor ``fail`` occurs in ``e``."""
    if isinstance(e, (Random, Fail)):
        return False
    return all(is_pure(c) for c in e.children())


def occurs(name: str, e: Expr) -> bool:
    return name in free_vars(e)


def map_children(e: Expr, f):
    """Rebuild ``e`` with ``f`` applied to each immediate sub-expression."""
    changes = {}
    for fl in fields(e):
        v = getattr(e, fl.name)
        if isinstance(v, Expr):
            nv = f(v)
            if nv is not v:
                changes[fl.name] = nv
        elif isinstance(v, tuple) and v and fl.name in ("args", "items"):
            nv = tuple(f(x) for x in v)
            if any(a is not b for a, b in zip(nv, v)):
                changes[fl.name] = nv
        elif fl.name == "fields" and isinstance(e, Record):
            nv = tuple((n, f(x)) for n, x in v)
            if any(a[1] is not b[1] for a, b in zip(nv, v)):
                changes[fl.name] = nv
    return replace(e, **changes) if changes else e


_default_supply = NameSupply()


def substitute(e: Expr, s: dict, supply: Optional[NameSupply] = None, check_pure=True) -> Expr:
    """Capture-avoiding substitution ``e[x1 -> M1, ...]``.

    Bound variables that would capture a free variable of the range are
    renamed with names from ``supply``.
    """
    if not s:
        return e
    if check_pure:
        for k, v in s.items():
            if not is_pure(v):
                raise ImpureSubstitutionRange(f"substitution range for '{k}' is not pure")
    supply = supply or _default_supply
    range_fv = frozenset().union(*(free_vars(v) for v in s.values()))
    return _subst(e, dict(s), range_fv, supply)


def _rebind(var, body, s, range_fv, supply):
    """Handle one binder: drop it from ``s``; rename it if it would capture."""
    s = {k: v for k, v in s.items() if k != var}
    if not s:
        return var, body, s, range_fv
    if var in range_fv and any(k in free_vars(body) for k in s):
        new = supply.fresh(var)
        body = _subst(body, {var: Var(new)}, frozenset([new]), supply)
        var = new
    return var, body, s, range_fv


def _subst(e, s, range_fv, supply):
    if isinstance(e, Var):
        return s.get(e.name, e)
    if not s:
        return e
    if isinstance(e, Let):
        bound = _subst(e.bound, s, range_fv, supply)
        var, body, s2, _ = _rebind(e.var, e.body, s, range_fv, supply)
        return replace(e, var=var, bound=bound, body=_subst(body, s2, range_fv, supply))
    if isinstance(e, Match):
        scrut = _subst(e.scrut, s, range_fv, supply)
        lv, lb, s1, _ = _rebind(e.left_var, e.left, s, range_fv, supply)
        rv, rb, s2, _ = _rebind(e.right_var, e.right, s, range_fv, supply)
        return replace(e, scrut=scrut, left_var=lv, left=_subst(lb, s1, range_fv, supply),
                       right_var=rv, right=_subst(rb, s2, range_fv, supply))
    if isinstance(e, (Plate, ProdBy, LogProdBy)):
        var, body, s2, _ = _rebind(e.var, e.body, s, range_fv, supply)
        return replace(e, var=var, body=_subst(body, s2, range_fv, supply))
    if isinstance(e, Comprehension):
        source = _subst(e.source, s, range_fv, supply)
        var, body, s2, _ = _rebind(e.var, e.body, s, range_fv, supply)
        return replace(e, var=var, source=source, body=_subst(body, s2, range_fv, supply))
    if isinstance(e, Integral):
        body = e.body
        binders = []
        s2 = s
        for x, t in e.binders:
            x2, body, s2, _ = _rebind(x, body, s2, range_fv, supply)
            binders.append((x2, t))
        return replace(e, binders=tuple(binders), body=_subst(body, s2, range_fv, supply))
    if isinstance(e, LetTuple):
        bound = _subst(e.bound, s, range_fv, supply)
        body = e.body
        names = []
        s2 = s
        for x in e.vars:
            x2, body, s2, _ = _rebind(x, body, s2, range_fv, supply)
            names.append(x2)
        return replace(e, vars=tuple(names), bound=bound, body=_subst(body, s2, range_fv, supply))
    return map_children(e, lambda c: _subst(c, s, range_fv, supply))


def rename(e: Expr, old: str, new: str, supply: Optional[NameSupply] = None) -> Expr:
    if old == new:
        return e
    return substitute(e, {old: Var(new)}, supply, check_pure=False)


def size(e: Expr) -> int:
    return 1 + sum(size(c) for c in e.children())


def walk(e: Expr):
    """Pre-order traversal."""
    yield e
    for c in e.children():
        yield from walk(c)
