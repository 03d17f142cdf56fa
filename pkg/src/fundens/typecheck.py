"""Type checking for core Fun and the target language.

The target language is Fun's pure fragment plus integration, Iverson
brackets, density primitives and plate products, so a single checker
covers both; :func:`typecheck` rejects the target-only forms unless
``target=True``.
"""

from __future__ import annotations

from typing import Mapping

from . import distributions, ops
from .errors import (BadDistributionArity, FunTypeError, IntegralBodyNotReal, TypeMismatch,
                     UnboundVariable)
from .syntax import (INTERNAL_NODES, SURFACE_NODES, TARGET_NODES, ArrayLit, Const, Exp, Expr,
                     Fail, FromL, FromR, Fst, Index, Inl, Inr, Integral, Iverson, Let, Log, LogPdfOf,
                     LogProdBy, Match, Pair, PdfOf, Plate, Prim, ProdBy, Random, Snd, Var)
from .types import BOOL, INT, REAL, UNIT, Array, FunType, Prod, Sum

TypeEnv = Mapping[str, FunType]


def typecheck(expr: Expr, env: TypeEnv = None, target: bool = False) -> FunType:
    """The unique type of ``expr`` under ``env``.

    Raises :class:`UnboundVariable`, :class:`TypeMismatch` or
    :class:`BadDistributionArity`.
    """
    return _Checker(target).check(expr, dict(env or {}))


def typecheck_target(expr: Expr, env: TypeEnv = None) -> FunType:
    return typecheck(expr, env, target=True)


def const_type(value) -> FunType:
    if isinstance(value, bool):
        raise TypeError("booleans are encoded as unit + unit, not as constants")
    if isinstance(value, int):
        return INT
    if isinstance(value, float):
        return REAL
    if value == ():
        return UNIT
    raise TypeError(f"not a scalar constant: {value!r}")


class _Checker:
    def __init__(self, target):
        self.target = target

    def check(self, e, env):
        span = getattr(e, "span", None)
        if isinstance(e, Var):
            try:
                return env[e.name]
            except KeyError:
                raise UnboundVariable(e.name, span) from None
        if isinstance(e, Const):
            try:
                return const_type(e.value)
            except TypeError as exc:
                raise FunTypeError(str(exc), span) from None
        if isinstance(e, Pair):
            return Prod(self.check(e.fst, env), self.check(e.snd, env), e.labels)
        if isinstance(e, (Fst, Snd)):
            t = self.check(e.arg, env)
            if not isinstance(t, Prod):
                raise TypeMismatch("a pair", t, "projection", span)
            return t.left if isinstance(e, Fst) else t.right
        if isinstance(e, Inl):
            if e.other is None:
                raise FunTypeError("inl is missing its type annotation", span)
            return Sum(self.check(e.arg, env), e.other)
        if isinstance(e, Inr):
            if e.other is None:
                raise FunTypeError("inr is missing its type annotation", span)
            return Sum(e.other, self.check(e.arg, env))
        if isinstance(e, Match):
            t = self.check(e.scrut, env)
            if not isinstance(t, Sum):
                raise TypeMismatch("a sum type", t, "match scrutinee", span)
            a = self.check(e.left, {**env, e.left_var: t.left})
            b = self.check(e.right, {**env, e.right_var: t.right})
            if a != b:
                raise TypeMismatch(a, b, "match branches", span)
            return a
        if isinstance(e, Let):
            t = self.check(e.bound, env)
            return self.check(e.body, {**env, e.var: t})
        if isinstance(e, Prim):
            if e.op == "logsumexp" and not self.target:
                raise FunTypeError("logsumexp is a target-language operation", span)
            arg_types = tuple(self.check(a, env) for a in e.args)
            try:
                return ops.signature(e.op, arg_types)
            except TypeError as exc:
                raise FunTypeError(str(exc), span) from None
        if isinstance(e, Random):
            d = self._family(e.dist, span)
            t = self.check(e.arg, env)
            self._check_args(d, t, span)
            return d.result
        if isinstance(e, Fail):
            if e.type is None:
                raise FunTypeError("fail is missing its type annotation", span)
            return e.type
        if isinstance(e, Plate):
            if e.size < 1:
                raise FunTypeError("arrays must have at least one element", span)
            return Array(self.check(e.body, {**env, e.var: INT}), e.size)
        if isinstance(e, ArrayLit):
            if not e.items:
                raise FunTypeError("empty array literal", span)
            ts = [self.check(x, env) for x in e.items]
            for t in ts[1:]:
                if t != ts[0]:
                    raise TypeMismatch(ts[0], t, "array element", span)
            return Array(ts[0], len(ts))
        if isinstance(e, Index):
            t = self.check(e.arr, env)
            if not isinstance(t, Array):
                raise TypeMismatch("an array", t, "indexing", span)
            i = self.check(e.index, env)
            if i != INT:
                raise TypeMismatch(INT, i, "array index", span)
            return t.elem
        if isinstance(e, INTERNAL_NODES):
            t = self.check(e.arg, env)
            if not isinstance(t, Sum):
                raise TypeMismatch("a sum type", t, type(e).__name__, span)
            if isinstance(e, FromL):
                return t.left
            if isinstance(e, FromR):
                return t.right
            return REAL
        if isinstance(e, TARGET_NODES):
            if not self.target:
                raise FunTypeError(f"{type(e).__name__} only occurs in target code", span)
            return self._check_target(e, env, span)
        if isinstance(e, SURFACE_NODES):
            raise FunTypeError(f"{type(e).__name__} must be desugared before type checking", span)
        raise FunTypeError(f"unknown expression {e!r}", span)

    def _check_target(self, e, env, span):
        if isinstance(e, Integral):
            inner = dict(env)
            for x, t in e.binders:
                inner[x] = t
            t = self.check(e.body, inner)
            if t != REAL:
                raise IntegralBodyNotReal(f"integrand has type {t}, expected real", span)
            return REAL
        if isinstance(e, Iverson):
            t = self.check(e.pred, env)
            if t != BOOL:
                raise TypeMismatch(BOOL, t, "Iverson bracket", span)
            return REAL
        if isinstance(e, (PdfOf, LogPdfOf)):
            d = self._family(e.dist, span)
            self._check_args(d, self.check(e.arg, env), span)
            p = self.check(e.point, env)
            if p != d.result:
                raise TypeMismatch(d.result, p, f"{e.dist} density point", span)
            return REAL
        if isinstance(e, (ProdBy, LogProdBy)):
            t = self.check(e.body, {**env, e.var: INT})
            if t != REAL:
                raise TypeMismatch(REAL, t, "indexed product", span)
            return REAL
        if isinstance(e, (Log, Exp)):
            t = self.check(e.arg, env)
            if t != REAL:
                raise TypeMismatch(REAL, t, type(e).__name__, span)
            return REAL
        raise FunTypeError(f"unknown target expression {e!r}", span)

    @staticmethod
    def _family(name, span):
        try:
            return distributions.family(name)
        except KeyError as exc:
            raise FunTypeError(str(exc.args[0]), span) from None

    @staticmethod
    def _check_args(d, t, span):
        if t == d.arg_type:
            return
        got = 1
        u = t
        while isinstance(u, Prod):
            got += 1
            u = u.right
        if got != d.arity:
            raise BadDistributionArity(
                f"{d.name} takes {d.arity} argument(s), got {got} (type {t})", span)
        raise TypeMismatch(d.arg_type, t, f"{d.name} arguments", span)
