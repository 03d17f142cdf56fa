"""Evaluation of Fun and target expressions.

Expressions are compiled once into nested Python closures over a flat
frame of variable slots, then run many times.  The same compiler serves
two modes:

* density mode (the default): pure target code, ``Integral`` evaluated by
  stock integration (see :mod:`fundens.integrate`);
* sampling mode: core Fun with ``random`` drawing from an RNG stored in
  the frame and ``fail`` raising :class:`~fundens.distributions.Failure`.

Plate products (``ProdBy``/``LogProdBy``) first try to evaluate their body
once on the whole index vector ``0..n-1`` with numpy; bodies that cannot
be vectorised fall back to a loop.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from . import distributions, ops
from .distributions import Failure, sample_dist
from .errors import FunError, NotVectorizable, UnboundVariable
from .integrate import Integrator, Windows, find_hints
from .syntax import (Const, Expr, Fail, Integral, LogProdBy, Plate, ProdBy, Random, free_vars, walk)
from .values import FALSE, TRUE, ArrayV, InlV, InrV, default_value

NEG_INF = float("-inf")


@dataclass(frozen=True)
class EvalConfig:
    real_integration_method: str = "adaptive-quadrature"
    abs_tol: float = 1e-9
    rel_tol: float = 1e-7
    bounds_strategy: str = "density-windows"
    poisson_tail_tol: float = 1e-12
    max_subdivisions: int = 2000
    # quadrature results whose error estimate exceeds this (relative to
    # max(1, |value|)) count as non-convergent
    divergence_tol: float = 1e-4
    vectorize: bool = True
    cache_size: int = 4096

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "poisson_tail_tol", "divergence_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be positive")


DEFAULT_CONFIG = EvalConfig()

_NO_VECTOR = (Integral, ProdBy, LogProdBy, Plate, Random, Fail)


class Program:
    """A compiled expression with named inputs.

    Instances are immutable after construction and may be run from several
    threads at once: each run allocates its own frame.
    """

    def __init__(self, expr: Expr, inputs: Sequence[str], cfg: EvalConfig = None,
                 sampling: bool = False):
        self.expr = expr
        self.cfg = cfg or DEFAULT_CONFIG
        self.inputs = tuple(inputs)
        self.sampling = sampling
        c = _Compiler(self.cfg, sampling)
        scope = {}
        for name in self.inputs:
            scope[name] = c.slot()
        self._rng_slot = c.slot()
        c.rng_slot = self._rng_slot
        missing = sorted(free_vars(expr) - set(self.inputs))
        if missing:
            raise UnboundVariable(missing[0])
        self._code = c.compile(expr, scope)
        self._nslots = c.nslots
        self._input_slots = [scope[n] for n in self.inputs]

    def run(self, env: Mapping, rng=None):
        fr = [None] * self._nslots
        for name, s in zip(self.inputs, self._input_slots):
            try:
                fr[s] = env[name]
            except KeyError:
                raise UnboundVariable(name) from None
        fr[self._rng_slot] = rng
        return self._code(fr)

    def run_values(self, values: Sequence, rng=None):
        """Like :meth:`run`, with inputs given positionally."""
        fr = [None] * self._nslots
        for v, s in zip(values, self._input_slots):
            fr[s] = v
        fr[self._rng_slot] = rng
        return self._code(fr)


@lru_cache(maxsize=256)
def _program(expr, names, cfg, sampling):
    return Program(expr, names, cfg, sampling)


def eval_target(e: Expr, env: Mapping = None, cfg: EvalConfig = None):
    """Value of a closed-under-``env`` target expression."""
    env = dict(env or {})
    names = tuple(sorted(env))
    return _program(e, names, cfg or DEFAULT_CONFIG, False).run(env)


def run_sampler(e: Expr, env: Mapping, rng, cfg: EvalConfig = None):
    """One run of a Fun expression; raises ``Failure`` if it fails."""
    env = dict(env or {})
    names = tuple(sorted(env))
    return _program(e, names, cfg or DEFAULT_CONFIG, True).run(env, rng)


class _Compiler:
    def __init__(self, cfg, sampling):
        self.cfg = cfg
        self.sampling = sampling
        self.nslots = 0
        self.rng_slot = None
        self.integrator = Integrator(cfg)

    def slot(self):
        self.nslots += 1
        return self.nslots - 1

    def compile(self, e, scope):
        m = getattr(self, "_c_" + type(e).__name__, None)
        if m is None:
            raise FunError(f"cannot evaluate {type(e).__name__} nodes", getattr(e, "span", None))
        return m(e, scope)

    # -- core ------------------------------------------------------------

    def _c_Var(self, e, scope):
        try:
            i = scope[e.name]
        except KeyError:
            raise UnboundVariable(e.name, e.span) from None
        return lambda fr: fr[i]

    def _c_Const(self, e, scope):
        v = e.value
        return lambda fr: v

    def _c_Pair(self, e, scope):
        a = self.compile(e.fst, scope)
        b = self.compile(e.snd, scope)
        return lambda fr: (a(fr), b(fr))

    def _c_Fst(self, e, scope):
        return self._proj(e, scope, 0)

    def _c_Snd(self, e, scope):
        return self._proj(e, scope, 1)

    def _proj(self, e, scope, k):
        a = self.compile(e.arg, scope)

        def f(fr):
            v = a(fr)
            if type(v) is not tuple:
                raise NotVectorizable("projection of a non-pair")
            return v[k]
        return f

    def _c_Inl(self, e, scope):
        a = self.compile(e.arg, scope)
        if isinstance(e.arg, Const) and e.arg.value == ():
            return lambda fr: TRUE
        return lambda fr: InlV(a(fr))

    def _c_Inr(self, e, scope):
        a = self.compile(e.arg, scope)
        if isinstance(e.arg, Const) and e.arg.value == ():
            return lambda fr: FALSE
        return lambda fr: InrV(a(fr))

    def _c_Match(self, e, scope):
        s = self.compile(e.scrut, scope)
        ls, rs = self.slot(), self.slot()
        left = self.compile(e.left, {**scope, e.left_var: ls})
        right = self.compile(e.right, {**scope, e.right_var: rs})
        binders_unused = (e.left_var not in free_vars(e.left)
                          and e.right_var not in free_vars(e.right))

        def f(fr):
            v = s(fr)
            if type(v) is InlV:
                fr[ls] = v.value
                return left(fr)
            if type(v) is InrV:
                fr[rs] = v.value
                return right(fr)
            if isinstance(v, np.ndarray) and binders_unused:
                fr[ls] = fr[rs] = ()
                a, b = left(fr), right(fr)
                if not (_numeric(a) and _numeric(b)):
                    raise NotVectorizable("match on an index vector with non-numeric branches")
                return np.where(v, a, b)
            raise NotVectorizable(f"match on {type(v).__name__}")
        return f

    def _c_Let(self, e, scope):
        b = self.compile(e.bound, scope)
        i = self.slot()
        body = self.compile(e.body, {**scope, e.var: i})

        def f(fr):
            fr[i] = b(fr)
            return body(fr)
        return f

    def _c_Prim(self, e, scope):
        impl = ops.IMPL[e.op]
        args = [self.compile(a, scope) for a in e.args]
        if len(args) == 1:
            (a,) = args
            return lambda fr: impl(a(fr))
        if len(args) == 2:
            a, b = args
            return lambda fr: impl(a(fr), b(fr))
        return lambda fr: impl(*[g(fr) for g in args])

    def _c_Random(self, e, scope):
        if not self.sampling:
            raise FunError("random occurs in target code", e.span)
        a = self.compile(e.arg, scope)
        name = e.dist
        r = self.rng_slot
        return lambda fr: sample_dist(name, a(fr), fr[r])

    def _c_Fail(self, e, scope):
        if not self.sampling:
            raise FunError("fail occurs in target code", e.span)

        def f(fr):
            raise Failure("fail")
        return f

    def _c_Plate(self, e, scope):
        i = self.slot()
        body = self.compile(e.body, {**scope, e.var: i})
        n = e.size

        def f(fr):
            out = []
            for k in range(n):
                fr[i] = k
                out.append(body(fr))
            return ArrayV(out)
        return f

    def _c_ArrayLit(self, e, scope):
        items = [self.compile(x, scope) for x in e.items]
        return lambda fr: ArrayV(g(fr) for g in items)

    def _c_Index(self, e, scope):
        a = self.compile(e.arr, scope)
        ix = self.compile(e.index, scope)

        def f(fr):
            arr = a(fr)
            i = ix(fr)
            if type(i) is int:
                if not 0 <= i < len(arr):
                    raise FunError(f"index {i} out of range for array of size {len(arr)}")
                return arr[i]
            if isinstance(i, np.ndarray) and isinstance(arr, ArrayV):
                num = arr.numeric()
                if num is None:
                    raise NotVectorizable("indexing a non-scalar array with a vector")
                return num[i]
            raise NotVectorizable("unsupported index")
        return f

    # -- internal ----------------------------------------------------------

    def _c_FromL(self, e, scope):
        return self._from(e, scope, InlV)

    def _c_FromR(self, e, scope):
        return self._from(e, scope, InrV)

    def _from(self, e, scope, cls):
        a = self.compile(e.arg, scope)
        dflt = default_value(e.type) if e.type is not None else None

        def f(fr):
            v = a(fr)
            if type(v) is cls:
                return v.value
            if type(v) in (InlV, InrV):
                if dflt is None:
                    raise FunError("projection from the wrong injection (missing type)")
                return dflt
            raise NotVectorizable("projection from a sum vector")
        return f

    def _c_IsL(self, e, scope):
        return self._is(e, scope, InlV, False)

    def _c_IsR(self, e, scope):
        return self._is(e, scope, InrV, True)

    def _is(self, e, scope, cls, negate):
        a = self.compile(e.arg, scope)

        def f(fr):
            v = a(fr)
            if isinstance(v, np.ndarray):
                b = v.astype(bool)
                return (~b if negate else b).astype(float)
            return 1.0 if type(v) is cls else 0.0
        return f

    # -- target ------------------------------------------------------------

    def _c_Iverson(self, e, scope):
        p = self.compile(e.pred, scope)

        def f(fr):
            v = p(fr)
            if isinstance(v, np.ndarray):
                return v.astype(float)
            return 1.0 if type(v) is InlV else 0.0
        return f

    def _c_PdfOf(self, e, scope):
        a = self.compile(e.arg, scope)
        x = self.compile(e.point, scope)
        name = e.dist
        pdf = distributions.pdf
        return lambda fr: pdf(name, a(fr), x(fr))

    def _c_LogPdfOf(self, e, scope):
        a = self.compile(e.arg, scope)
        x = self.compile(e.point, scope)
        name = e.dist
        lp = distributions.log_pdf
        return lambda fr: lp(name, a(fr), x(fr))

    def _c_Log(self, e, scope):
        a = self.compile(e.arg, scope)

        def f(fr):
            v = a(fr)
            if isinstance(v, np.ndarray):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), NEG_INF)
            return math.log(v) if v > 0 else NEG_INF
        return f

    def _c_Exp(self, e, scope):
        a = self.compile(e.arg, scope)
        exp = ops.IMPL["exp"]
        return lambda fr: exp(a(fr))

    def _c_ProdBy(self, e, scope):
        return self._plate_product(e, scope, log=False)

    def _c_LogProdBy(self, e, scope):
        return self._plate_product(e, scope, log=True)

    def _plate_product(self, e, scope, log):
        i = self.slot()
        body = self.compile(e.body, {**scope, e.var: i})
        n = e.size
        can_vector = [self.cfg.vectorize and not any(isinstance(x, _NO_VECTOR) for x in walk(e.body))]
        index = np.arange(n)
        lock = threading.Lock()

        def loop(fr):
            if log:
                acc = 0.0
                for k in range(n):
                    fr[i] = k
                    acc += body(fr)
                return acc
            acc = 1.0
            for k in range(n):
                fr[i] = k
                acc *= body(fr)
                if acc == 0.0:
                    return 0.0
            return acc

        def f(fr):
            if can_vector[0]:
                fr[i] = index
                try:
                    with np.errstate(all="ignore"):
                        v = body(fr)
                        v = np.broadcast_to(np.asarray(v, dtype=float), (n,))
                except (NotVectorizable, ValueError, TypeError, IndexError, FunError):
                    with lock:
                        can_vector[0] = False
                else:
                    if log:
                        return float(v.sum())
                    return float(np.prod(v))
            return loop(fr)
        return f

    def _c_Integral(self, e, scope):
        slots = [self.slot() for _ in e.binders]
        types = [t for _, t in e.binders]
        inner = dict(scope)
        for (x, _), s in zip(e.binders, slots):
            inner[x] = s
        body = self.compile(e.body, inner)

        # hint closures, compiled in the scope visible when binder k is bound
        hint_code = [[] for _ in e.binders]
        for h in find_hints(e):
            visible = dict(scope)
            for (x, _), s in list(zip(e.binders, slots))[: h.binder]:
                visible[x] = s
            try:
                arg = self.compile(h.arg, visible)
                operands = [self.compile(c, visible) if c is not None else (lambda fr: None)
                            for _, c in h.ops]
            except UnboundVariable:
                continue
            hint_code[h.binder].append((h, arg, operands))

        key_slots = [scope[x] for x in sorted(free_vars(e) & set(scope))]
        cache = {}
        cache_size = self.cfg.cache_size
        integrator = self.integrator
        tail_tol = self.cfg.poisson_tail_tol
        nb = len(slots)

        def windows(k, fr):
            w = Windows()
            for h, arg, operands in hint_code[k]:
                try:
                    params = arg(fr)
                    vals = [o(fr) for o in operands]
                    if h.kind == "pdf":
                        w.add_pdf(h.path, h.dist, params, h.ops, vals, tail_tol)
                    else:
                        w.add_point(h.path, params, h.ops, vals)
                except (FunError, TypeError, ValueError, ZeroDivisionError, OverflowError):
                    continue
            return w

        def level(k, fr):
            if k == nb:
                return body(fr)
            s = slots[k]

            def g(v):
                fr[s] = v
                return level(k + 1, fr)
            return integrator.over(types[k], g, windows(k, fr))

        def f(fr):
            try:
                key = tuple(fr[s] for s in key_slots)
                hit = cache.get(key)
            except TypeError:
                key = hit = None
            if hit is not None:
                return hit
            v = level(0, fr)
            if key is not None:
                if len(cache) >= cache_size:
                    cache.clear()
                cache[key] = v
            return v
        return f


def _numeric(v):
    if isinstance(v, np.ndarray):
        return v.dtype.kind in "biuf"
    return type(v) in (int, float) or isinstance(v, (np.floating, np.integer, np.bool_))
