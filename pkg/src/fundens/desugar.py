"""Elaboration of surface syntax into core Fun.

Besides removing sugar (``if``, n-tuples, records, comprehensions,
sequencing, function calls), this pass fills in the type annotations of
``inl``/``inr``/``fail`` from context where the program omits them.
Types are propagated locally: an expected type flows into ``let`` bodies,
branches, tuple components and ascriptions, and a branch whose type
cannot be synthesised is checked against the type of its sibling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping

from .errors import (DuplicateRecordField, FunError, FunTypeError, TypeMismatch, UnboundVariable,
                     UnknownArraySize)
from .syntax import (ArrayLit, Const, Exp, Expr, Fail, FromL, FromR, Fst, Index, Inl,
                     Inr, Integral, IsL, IsR, Iverson, Let, Log, LogPdfOf, LogProdBy, Match, NameSupply, Pair,
                     PdfOf, Plate, Prim, ProdBy, Random, Range, Snd, Var, free_vars)
from .typecheck import const_type, typecheck
from .types import BOOL, INT, REAL, UNIT, Array, FunType, Prod, Sum

FLIP = "flip"


class NeedsAnnotation(FunTypeError):
    """The type of a sub-expression cannot be determined locally."""


@dataclass
class Scope:
    """Global definitions visible while desugaring.

    ``constants`` maps named constants to their values (used to resolve
    comprehension bounds) and ``functions`` maps names to
    :class:`fundens.parser.FunDef`.
    """
    functions: Dict[str, object] = field(default_factory=dict)
    constants: Dict[str, object] = field(default_factory=dict)
    constant_types: Dict[str, FunType] = field(default_factory=dict)
    unroll: bool = False


def desugar(e: Expr, env: Mapping[str, FunType] = None, scope: Scope = None,
            expected: FunType = None, supply: NameSupply = None) -> Expr:
    """Core expression for the surface expression ``e``."""
    core, _ = desugar_typed(e, env, scope, expected, supply)
    return core


def desugar_typed(e, env=None, scope=None, expected=None, supply=None):
    d = _Desugarer(scope or Scope(), supply or NameSupply())
    full_env = dict((scope or Scope()).constant_types)
    full_env.update(env or {})
    return d.go(e, full_env, expected)


def _tuple(items, span=None):
    out = items[-1]
    for x in reversed(items[:-1]):
        out = Pair(x, out, span=span)
    return out


def _mismatch(expected, actual, span, what="expression"):
    return TypeMismatch(expected, actual, what, span)


class _Desugarer:
    def __init__(self, scope: Scope, supply: NameSupply):
        self.scope = scope
        self.supply = supply
        self.inlining = []

    def go(self, e, env, expected=None):
        core, t = self._go(e, env, expected)
        if expected is not None and t != expected:
            raise _mismatch(expected, t, e.span)
        return core, t

    def check(self, core, env):
        return typecheck(core, env, target=True)

    def _go(self, e, env, expected):
        m = getattr(self, "_d_" + type(e).__name__, None)
        if m is None:
            raise FunError(f"cannot desugar {type(e).__name__}", e.span)
        return m(e, env, expected)

    # -- leaves ----------------------------------------------------------------

    def _d_Var(self, e, env, expected):
        if e.name not in env:
            if e.name in self.scope.functions:
                raise FunError(f"function '{e.name}' must be applied to arguments", e.span)
            raise UnboundVariable(e.name, e.span)
        return e, env[e.name]

    def _d_Const(self, e, env, expected):
        if expected == REAL and type(e.value) is int:
            return Const(float(e.value), span=e.span), REAL
        return e, const_type(e.value)

    def _d_Fail(self, e, env, expected):
        t = e.type or expected
        if t is None:
            raise NeedsAnnotation("cannot infer the type of fail; write fail:t", e.span)
        return Fail(t, span=e.span), t

    # -- sums -----------------------------------------------------------------

    def _d_Inl(self, e, env, expected):
        other = e.other
        exp_arg = None
        if isinstance(expected, Sum):
            other = other or expected.right
            exp_arg = expected.left
        if other is None:
            raise NeedsAnnotation("cannot infer the type of inl; write inl:t", e.span)
        arg, t = self.go(e.arg, env, exp_arg)
        return Inl(arg, other, span=e.span), Sum(t, other)

    def _d_Inr(self, e, env, expected):
        other = e.other
        exp_arg = None
        if isinstance(expected, Sum):
            other = other or expected.left
            exp_arg = expected.right
        if other is None:
            raise NeedsAnnotation("cannot infer the type of inr; write inr:t", e.span)
        arg, t = self.go(e.arg, env, exp_arg)
        return Inr(arg, other, span=e.span), Sum(other, t)

    def _branches(self, env_l, left, env_r, right, expected):
        """Desugar two branches that must agree on their type."""
        try:
            a, ta = self.go(left, env_l, expected)
        except NeedsAnnotation:
            if expected is not None:
                raise
            b, tb = self.go(right, env_r, None)
            a, ta = self.go(left, env_l, tb)
            return a, b, ta
        b, tb = self.go(right, env_r, ta)
        return a, b, ta

    def _d_If(self, e, env, expected):
        c, _ = self.go(e.cond, env, BOOL)
        a, b, t = self._branches(env, e.then, env, e.orelse, expected)
        return Match(c, "_", a, "_", b, span=e.span), t

    def _d_Match(self, e, env, expected):
        s, ts = self.go(e.scrut, env, None)
        if not isinstance(ts, Sum):
            raise FunTypeError(f"match on a value of type {ts}, which is not a sum", e.span)
        env_l = {**env, e.left_var: ts.left}
        env_r = {**env, e.right_var: ts.right}
        a, b, t = self._branches(env_l, e.left, env_r, e.right, expected)
        return Match(s, e.left_var, a, e.right_var, b, span=e.span), t

    # -- products and records --------------------------------------------------

    def _d_Pair(self, e, env, expected):
        el = er = None
        if isinstance(expected, Prod):
            el, er = expected.left, expected.right
        a, ta = self.go(e.fst, env, el)
        b, tb = self.go(e.snd, env, er)
        return Pair(a, b, span=e.span, labels=e.labels), Prod(ta, tb, e.labels)

    def _d_Tuple_(self, e, env, expected):
        items = list(e.items)
        if len(items) == 1:
            return self.go(items[0], env, expected)
        nested = items[-1]
        for x in reversed(items[:-1]):
            nested = Pair(x, nested, span=e.span)
        return self._go(nested, env, expected)

    def _d_Record(self, e, env, expected):
        names = [n for n, _ in e.fields]
        seen = set()
        for n in names:
            if n in seen:
                raise DuplicateRecordField(f"field '{n}' appears twice", e.span)
            seen.add(n)
        if len(names) < 2:
            raise FunError("a record needs at least two fields", e.span)
        exp_parts = [None] * len(names)
        if isinstance(expected, Prod) and expected.fields:
            from .types import record_components
            comps = dict(record_components(expected))
            exp_parts = [comps.get(n) for n in names]
        items, types = [], []
        for (n, x), et in zip(e.fields, exp_parts):
            c, t = self.go(x, env, et)
            items.append(c)
            types.append(t)
        core = _tuple(items, e.span)
        core = Pair(core.fst, core.snd, span=e.span, labels=tuple(names))
        from .types import record_type
        return core, record_type(zip(names, types))

    def _d_Field(self, e, env, expected):
        arg, t = self.go(e.arg, env, None)
        if not (isinstance(t, Prod) and t.fields):
            raise FunTypeError(f"field access .{e.name} on a value of type {t}", e.span)
        names = t.fields
        if e.name not in names:
            raise FunTypeError(f"type {t} has no field '{e.name}'", e.span)
        k = names.index(e.name)
        cur, ty = arg, t
        # inner projections are unlabelled ("") so that the access prints as arg.name
        for _ in range(k):
            cur = Snd(cur, label="", span=e.span)
            ty = ty.right
        if k < len(names) - 1:
            return Fst(cur, label=e.name, span=e.span), ty.left
        last = Snd(cur.arg, label=e.name, span=e.span)
        return last, ty

    def _d_Fst(self, e, env, expected):
        arg, t = self.go(e.arg, env, None)
        if not isinstance(t, Prod):
            raise FunTypeError(f"fst of a value of type {t}", e.span)
        return Fst(arg, label=e.label, span=e.span), t.left

    def _d_Snd(self, e, env, expected):
        arg, t = self.go(e.arg, env, None)
        if not isinstance(t, Prod):
            raise FunTypeError(f"snd of a value of type {t}", e.span)
        return Snd(arg, label=e.label, span=e.span), t.right

    # -- binding -------------------------------------------------------------

    def _d_Let(self, e, env, expected):
        bound, t = self.go(e.bound, env, None)
        body, tb = self.go(e.body, {**env, e.var: t}, expected)
        return Let(e.var, bound, body, span=e.span), tb

    def _d_Ascribe(self, e, env, expected):
        return self.go(e.expr, env, e.type)

    def _d_Seq(self, e, env, expected):
        first, _ = self.go(e.first, env, None)
        then, t = self.go(e.then, env, expected)
        return Let("_", first, then, span=e.span), t

    def _d_LetTuple(self, e, env, expected):
        names = list(e.vars)
        bound, t = self.go(e.bound, env, None)
        parts = []
        ty = t
        for _ in names[:-1]:
            if not isinstance(ty, Prod):
                raise FunTypeError(f"cannot bind {len(names)} names to a value of type {t}", e.span)
            parts.append(ty.left)
            ty = ty.right
        parts.append(ty)
        inner_env = dict(env)
        for n, pt in zip(names, parts):
            inner_env[n] = pt
        body, tb = self.go(e.body, inner_env, expected)
        # bind the components directly when the right-hand side is a literal tuple
        if isinstance(bound, Pair) and self._literal_arity(bound) >= len(names):
            comps = []
            cur = bound
            for _ in names[:-1]:
                comps.append(cur.fst)
                cur = cur.snd
            comps.append(cur)
            later = set()
            ok = True
            for n, c in zip(names, comps):
                if free_vars(c) & later:
                    ok = False
                later.add(n)
            if ok and len(set(names)) == len(names):
                out = body
                for n, c in reversed(list(zip(names, comps))):
                    out = Let(n, c, out, span=e.span)
                return out, tb
        tmp = self.supply.fresh("t")
        out = body
        cur = Var(tmp)
        projs = []
        for _ in names[:-1]:
            projs.append(Fst(cur))
            cur = Snd(cur)
        projs.append(cur)
        for n, p in reversed(list(zip(names, projs))):
            out = Let(n, p, out, span=e.span)
        return Let(tmp, bound, out, span=e.span), tb

    @staticmethod
    def _literal_arity(p):
        n = 1
        while isinstance(p, Pair):
            n += 1
            p = p.snd
        return n

    # -- primitives and distributions ------------------------------------------

    def _d_Prim(self, e, env, expected):
        args = []
        types = []
        # numeric literals adapt to the type of the other operand
        hint = None
        for a in e.args:
            if not isinstance(a, Const):
                try:
                    _, ta = self.go(a, env, None)
                    if ta in (INT, REAL):
                        hint = ta
                        break
                except FunError:
                    pass
        if hint is None and expected in (INT, REAL) and e.op in ("add", "sub", "mul", "div", "neg"):
            hint = expected
        for a in e.args:
            c, t = self.go(a, env, hint if isinstance(a, Const) and hint == REAL else None)
            args.append(c)
            types.append(t)
        core = Prim(e.op, tuple(args), span=e.span)
        return core, self.check(core, env)

    def _d_Random(self, e, env, expected):
        from . import distributions
        fam = distributions.family(e.dist)
        arg, _ = self.go(e.arg, env, fam.arg_type)
        return Random(e.dist, arg, span=e.span), fam.result

    # -- arrays ----------------------------------------------------------------

    def _static_int(self, e, env):
        """Value of a comprehension bound, which must be known statically."""
        from .evaluate import eval_target
        core, t = self.go(e, env, None)
        if t != INT:
            raise FunTypeError(f"array bound has type {t}, expected int", e.span)
        fv = free_vars(core)
        if not fv <= set(self.scope.constants):
            raise UnknownArraySize("array size depends on " + ", ".join(sorted(fv)), e.span)
        return eval_target(core, {k: self.scope.constants[k] for k in fv})

    def _d_Range(self, e, env, expected):
        from .evaluate import eval_target
        vals = []
        for x in (e.lo, e.hi):
            core, t = self.go(x, env, None)
            fv = free_vars(core)
            if not fv <= set(self.scope.constants):
                raise UnknownArraySize("range bounds must be constants", e.span)
            vals.append((eval_target(core, {k: self.scope.constants[k] for k in fv}), t))
        (lo, tl), (hi, th) = vals
        if tl == INT and th == INT:
            items = [Const(k) for k in range(lo, hi + 1)]
            et = INT
        else:
            lo, hi = float(lo), float(hi)
            n = int((hi - lo) // 1.0) + 1
            items = [Const(lo + k) for k in range(n)]
            et = REAL
        if not items:
            raise UnknownArraySize("empty range", e.span)
        return ArrayLit(tuple(items), span=e.span), Array(et, len(items))

    def _d_ArrayLit(self, e, env, expected):
        et = expected.elem if isinstance(expected, Array) else None
        items = []
        t0 = None
        for x in e.items:
            c, t = self.go(x, env, et or t0)
            t0 = t0 or t
            items.append(c)
        return ArrayLit(tuple(items), span=e.span), Array(t0, len(items))

    def _d_Index(self, e, env, expected):
        arr, ta = self.go(e.arr, env, None)
        idx, _ = self.go(e.index, env, INT)
        if not isinstance(ta, Array):
            raise FunTypeError(f"indexing a value of type {ta}", e.span)
        return Index(arr, idx, span=e.span), ta.elem

    def _d_Comprehension(self, e, env, expected):
        et = expected.elem if isinstance(expected, Array) else None
        src = e.source
        if isinstance(src, Range):
            lo = self._static_int(src.lo, env)
            hi = self._static_int(src.hi, env)
            n = hi - lo + 1
            if n < 1:
                raise UnknownArraySize("comprehension over an empty range", e.span)
            ivar = e.var if lo == 0 else self.supply.fresh("i")
            body_env = {**env, e.var: INT}
            body, tb = self.go(e.body, body_env, et)
            if self.scope.unroll:
                return self._unroll(e.var, [Const(lo + k) for k in range(n)], body, e.span), \
                    _unrolled_type(tb, n)
            if lo != 0:
                body = Let(e.var, Prim("add", (Var(ivar), Const(lo))), body)
            return Plate(ivar, n, body, span=e.span), Array(tb, n)
        arr, ta = self.go(src, env, None)
        if not isinstance(ta, Array):
            raise FunTypeError(f"comprehension over a value of type {ta}", src.span)
        body, tb = self.go(e.body, {**env, e.var: ta.elem}, et)
        n = ta.size
        if self.scope.unroll:
            return self._unroll(e.var, [Index(arr, Const(k)) for k in range(n)], body, e.span), \
                _unrolled_type(tb, n)
        ivar = self.supply.fresh("i")
        wrap = None
        if not isinstance(arr, Var):
            tmp = self.supply.fresh("xs")
            wrap = (tmp, arr)
            arr = Var(tmp)
        out = Plate(ivar, n, Let(e.var, Index(arr, Var(ivar)), body), span=e.span)
        if wrap:
            out = Let(wrap[0], wrap[1], out)
        return out, Array(tb, n)

    def _unroll(self, var, values, body, span):
        items = [Let(var, v, body) for v in values]
        if len(items) == 1:
            return items[0]
        return _tuple(items, span)

    # -- calls -----------------------------------------------------------------

    def _d_Call(self, e, env, expected):
        if e.func == FLIP:
            if len(e.args) != 1:
                raise FunError("flip takes one argument", e.span)
            return self._go(Random("Bernoulli", e.args[0], span=e.span), env, expected)
        if e.func not in self.scope.functions:
            raise UnboundVariable(e.func, e.span)
        if e.func in self.inlining:
            raise FunError(f"recursive call to '{e.func}'", e.span)
        d = self.scope.functions[e.func]
        if len(e.args) != len(d.params):
            raise FunError(f"'{e.func}' expects {len(d.params)} argument(s), got {len(e.args)}",
                           e.span)
        # bind every argument to a fresh name, then the parameters to those names
        binds = []
        body_env = dict(self.scope.constant_types)
        param_binds = []
        for p, a in zip(d.params, e.args):
            if p is None:
                c, t = self.go(a, env, UNIT)
                if not isinstance(c, Const):
                    binds.append((self.supply.fresh("u"), c))
                continue
            ann = d.annotations.get(p) if isinstance(p, str) else None
            c, t = self.go(a, env, ann)
            tmp = self.supply.fresh("arg")
            binds.append((tmp, c))
            if isinstance(p, str):
                param_binds.append((p, Var(tmp)))
                body_env[p] = t
            else:
                ty = t
                cur = Var(tmp)
                for name in p[:-1]:
                    if not isinstance(ty, Prod):
                        raise FunTypeError(f"argument of type {t} does not match pattern", a.span)
                    param_binds.append((name, Fst(cur)))
                    body_env[name] = ty.left
                    cur = Snd(cur)
                    ty = ty.right
                param_binds.append((p[-1], cur))
                body_env[p[-1]] = ty
        captured = (free_vars(d.body) & set(env)) - set(body_env) - set(self._param_names(d))
        if captured:
            raise FunError(f"'{e.func}' refers to {sorted(captured)[0]}, which is shadowed here",
                           e.span)
        self.inlining.append(e.func)
        try:
            body, t = self.go(d.body, body_env, expected)
        finally:
            self.inlining.pop()
        for name, v in reversed(param_binds):
            body = Let(name, v, body)
        for tmp, c in reversed(binds):
            body = Let(tmp, c, body)
        return body, t

    @staticmethod
    def _param_names(d):
        out = []
        for p in d.params:
            if isinstance(p, str):
                out.append(p)
            elif isinstance(p, tuple):
                out.extend(p)
        return out

    # -- target forms -----------------------------------------------------------

    def _d_Integral(self, e, env, expected):
        inner = dict(env)
        for x, t in e.binders:
            inner[x] = t
        body, _ = self.go(e.body, inner, REAL)
        return Integral(e.binders, body, span=e.span), REAL

    def _d_Iverson(self, e, env, expected):
        p, _ = self.go(e.pred, env, BOOL)
        return Iverson(p, span=e.span), REAL

    def _pdf(self, e, env, cls):
        from . import distributions
        fam = distributions.family(e.dist)
        arg, _ = self.go(e.arg, env, fam.arg_type)
        point, _ = self.go(e.point, env, fam.result)
        return cls(e.dist, arg, point, span=e.span), REAL

    def _d_PdfOf(self, e, env, expected):
        return self._pdf(e, env, PdfOf)

    def _d_LogPdfOf(self, e, env, expected):
        return self._pdf(e, env, LogPdfOf)

    def _plate_like(self, e, env, expected, cls):
        body, t = self.go(e.body, {**env, e.var: INT}, REAL if cls is not Plate else None)
        return cls(e.var, e.size, body, span=e.span), (REAL if cls is not Plate else Array(t, e.size))

    def _d_ProdBy(self, e, env, expected):
        return self._plate_like(e, env, expected, ProdBy)

    def _d_LogProdBy(self, e, env, expected):
        return self._plate_like(e, env, expected, LogProdBy)

    def _d_Plate(self, e, env, expected):
        return self._plate_like(e, env, expected, Plate)

    def _d_Log(self, e, env, expected):
        a, _ = self.go(e.arg, env, REAL)
        return Log(a, span=e.span), REAL

    def _d_Exp(self, e, env, expected):
        a, _ = self.go(e.arg, env, REAL)
        return Exp(a, span=e.span), REAL

    def _d_IsL(self, e, env, expected):
        a, _ = self.go(e.arg, env, None)
        return IsL(a, span=e.span), REAL

    def _d_IsR(self, e, env, expected):
        a, _ = self.go(e.arg, env, None)
        return IsR(a, span=e.span), REAL

    def _from(self, e, env, cls):
        a, t = self.go(e.arg, env, None)
        if not isinstance(t, Sum):
            raise FunTypeError(f"projection from a value of type {t}", e.span)
        rt = t.left if cls is FromL else t.right
        return cls(a, rt, span=e.span), rt

    def _d_FromL(self, e, env, expected):
        return self._from(e, env, FromL)

    def _d_FromR(self, e, env, expected):
        return self._from(e, env, FromR)


def _unrolled_type(t, n):
    from .types import tuple_type
    return tuple_type([t] * n)
