"""Peephole simplification and the log-space rewrite of density code."""

from __future__ import annotations

import math

from .density import LINEAR, LOG, DensityFn
from .types import UNIT
from .syntax import (Const, Exp, Expr, Inl, Inr, Integral, IsL, IsR, Iverson, Let, Log,
                     LogPdfOf, LogProdBy, Match, PdfOf, Prim, ProdBy, Var, binders_of, free_vars,
                     map_children, substitute, walk)

NEG_INF = float("-inf")


def _is_const(e, v):
    return isinstance(e, Const) and type(e.value) in (int, float) and e.value == v


def _is_bool_literal(e, left):
    cls = Inl if left else Inr
    return isinstance(e, cls) and isinstance(e.arg, Const) and e.arg.value == ()


def nonnegative(e: Expr) -> bool:
    """Conservative syntactic test that ``e`` denotes a value >= 0."""
    if isinstance(e, (PdfOf, Iverson, Integral, ProdBy, Exp, IsL, IsR)):
        return True
    if isinstance(e, Const):
        return type(e.value) in (int, float) and e.value >= 0
    if isinstance(e, Prim):
        if e.op in ("mul", "add", "div"):
            return all(nonnegative(a) for a in e.args)
        return e.op in ("exp", "abs")
    if isinstance(e, Let):
        return nonnegative(e.body)
    if isinstance(e, Match):
        return nonnegative(e.left) and nonnegative(e.right)
    return False


def _inlinable(bound, body):
    # copies of variables and scalar literals; skipped if a binder in the
    # body would capture the copied name
    if isinstance(bound, Var):
        return all(x != bound.name for n in walk(body) for x, _ in binders_of(n))
    if isinstance(bound, Const):
        return True
    return _is_bool_literal(bound, True) or _is_bool_literal(bound, False)


def _rewrite(e: Expr) -> Expr:
    if isinstance(e, Let):
        if e.var not in free_vars(e.body):
            return e.body
        if _inlinable(e.bound, e.body):
            return substitute(e.body, {e.var: e.bound})
    if isinstance(e, Log):
        if isinstance(e.arg, Exp):
            return e.arg.arg
        if _is_const(e.arg, 1.0):
            return Const(0.0)
    if isinstance(e, Exp) and isinstance(e.arg, Log) and nonnegative(e.arg.arg):
        return e.arg.arg
    if isinstance(e, Prim) and len(e.args) == 2:
        a, b = e.args
        if e.op == "add":
            if _is_const(b, 0):
                return a
            if _is_const(a, 0):
                return b
        if e.op == "mul":
            if _is_const(b, 1):
                return a
            if _is_const(a, 1):
                return b
    if isinstance(e, Integral):
        if not e.binders:
            return e.body
        if (len(e.binders) == 1 and e.binders[0][1] == UNIT
                and e.binders[0][0] not in free_vars(e.body)):
            return e.body
    if isinstance(e, Iverson):
        if _is_bool_literal(e.pred, True):
            return Const(1.0)
        if _is_bool_literal(e.pred, False):
            return Const(0.0)
    return e


def peephole(e: Expr) -> Expr:
    """Rewrite ``e`` bottom-up to a fixed point of the peephole rules."""
    while True:
        new = _pass(e)
        if new == e:
            return new
        e = new


def _pass(e):
    e = map_children(e, _pass)
    prev = None
    while prev is not e:
        prev = e
        e = _rewrite(e)
    return e


def _lg(e: Expr) -> Expr:
    """A term equal to ``log e`` for a non-negative density term ``e``."""
    if isinstance(e, Prim):
        if e.op == "mul":
            return Prim("add", (_lg(e.args[0]), _lg(e.args[1])))
        if e.op == "add":
            return Prim("logsumexp", (_lg(e.args[0]), _lg(e.args[1])))
        if e.op == "exp":
            return e.args[0]
    if isinstance(e, PdfOf):
        return LogPdfOf(e.dist, e.arg, e.point, e.span)
    if isinstance(e, Iverson):
        return Match(e.pred, "_", Const(0.0), "_", Const(NEG_INF))
    if isinstance(e, Let):
        return Let(e.var, e.bound, _lg(e.body), e.span)
    if isinstance(e, Match):
        return Match(e.scrut, e.left_var, _lg(e.left), e.right_var, _lg(e.right), e.span)
    if isinstance(e, Integral) and not e.binders:
        return _lg(e.body)
    if isinstance(e, ProdBy):
        return LogProdBy(e.var, e.size, _lg(e.body), e.span)
    if isinstance(e, Exp):
        return e.arg
    if isinstance(e, Const) and type(e.value) is float:
        return Const(math.log(e.value) if e.value > 0 else NEG_INF)
    return Log(e)


def to_log_space(f: DensityFn) -> DensityFn:
    if f.space != LINEAR:
        raise ValueError("density is already in log space")
    return f.with_body(_lg(f.body), LOG)


def optimize(f: DensityFn) -> DensityFn:
    return f.with_body(peephole(f.body))
