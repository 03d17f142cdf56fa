"""The density compiler.

``dens(ctx, E, M)`` returns a pair ``(z, F)`` standing for the density
function ``fun z -> F`` of ``M`` in probability context ``ctx`` with
accumulated density expression ``E``; ``marg(ctx, X, E)`` integrates all
random variables of ``ctx`` outside ``X`` out of ``E``.  Rule dispatch is
syntax-directed and deterministic, so compiling the same program twice
gives identical code.

A few rules go beyond the core set; each is a semantics-preserving
reformulation of a case the core rules reject:

* impure tuple/array components and impure arguments of discrete
  operations are let-bound first (``(M, N)`` is ``let a = M in let b = N
  in (a, b)``), and ``random(D(M))`` with ``M`` pure but random is
  let-expanded when the density of ``M`` itself cannot be compiled;
* ``c + M``, ``M - c``, ``c - M``, ``M - N``, ``M * c``, ``M / c``,
  ``c / M`` and ``-M`` get their own change-of-variable rules;
* discrete parameters are treated like discrete constants;
* array comprehensions compile to an indexed product (``ProdBy``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

from . import distributions
from .density import DensityFn
from .errors import FunError, VarNotRandom
from .integrate import find_hints
from .optimize import peephole, to_log_space
from .syntax import (ArrayLit, Const, Expr, Fail, FromL, FromR, Fst, Index, Inl, Inr, Integral,
                     IsL, IsR, Iverson, Let, LogProdBy, Match, NameSupply, Pair, PdfOf, Plate,
                     Prim, ProdBy, Random, Snd, Var, add, div, false_expr, free_vars, is_pure, map_children,
                     mul, rename, sub, substitute, true_expr)
from .typecheck import typecheck, typecheck_target
from .types import INT, REAL, Array, FunType, IntT, Prod, Sum, is_discrete

NO_DENSITY = "NoDensity"
UNSUPPORTED = "UnsupportedExpr"
NON_INVERTIBLE = "NonInvertibleOp"
REAL_CONSTANT = "RealConstant"
TUPLE_NOT_VARS = "TupleNotVars"


class CompileError(FunError):
    """No compilation rule applies.

    ``kind`` is one of the module-level constants, ``rule`` the rule that
    was being attempted and ``trace`` the stack of enclosing rules.
    """

    def __init__(self, kind, message, span=None, subterm=None, rule=None, trace=()):
        super().__init__(message, span)
        self.kind = kind
        self.subterm = subterm
        self.rule = rule
        self.trace = tuple(trace)

    def __str__(self):
        loc = f"{self.span}: " if self.span is not None else ""
        return f"{loc}{self.kind}: {self.message}"


def explain_failure(err: CompileError) -> str:
    from .pretty import pretty

    lines = [str(err)]
    if err.subterm is not None:
        text = pretty(err.subterm)
        if len(text) > 200:
            text = text[:200] + " ..."
        lines.append(f"  offending term: {text}")
    if err.rule:
        lines.append(f"  while applying rule: {err.rule}")
    if err.trace:
        lines.append("  rule trace: " + " > ".join(err.trace))
    hint = {
        REAL_CONSTANT: ("the program puts positive probability on a single real value (a point"
                        " mass), so it has no density with respect to Lebesgue measure"),
        TUPLE_NOT_VARS: ("the tuple rule needs distinct random variables as components;"
                         " let-bind each component to a random draw first"),
        NON_INVERTIBLE: ("the change-of-variable rules only cover invertible operations with"
                         " a known Jacobian"),
        NO_DENSITY: "no density rule matches this term",
        UNSUPPORTED: "this construct is outside what the compiler handles",
    }.get(err.kind)
    if hint:
        lines.append(f"  note: {hint}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# probability contexts


@dataclass(frozen=True)
class RandEntry:
    name: str
    type: FunType


@dataclass(frozen=True)
class DetEntry:
    name: str
    defn: Expr
    type: FunType


class ProbContext:
    """Ordered random and deterministic variables."""

    def __init__(self, entries=()):
        self.entries = tuple(entries)
        self._by_name = {e.name: e for e in self.entries}
        self._sigma = None

    def extend(self, entry) -> "ProbContext":
        if entry.name in self._by_name:
            raise ValueError(f"variable '{entry.name}' already in context")
        return ProbContext(self.entries + (entry,))

    def lookup(self, name):
        return self._by_name.get(name)

    def rands(self):
        return [e.name for e in self.entries if isinstance(e, RandEntry)]

    def type_of(self, name):
        return self._by_name[name].type

    @property
    def sigma(self) -> Dict[str, Expr]:
        """Idempotent substitution giving each deterministic variable its value."""
        if self._sigma is None:
            s = {}
            for e in self.entries:
                if isinstance(e, DetEntry):
                    s[e.name] = substitute(e.defn, s, check_pure=False) if s else e.defn
            self._sigma = s
        return self._sigma

    def closed_fv(self, e: Expr):
        """Free variables of ``e`` after applying ``sigma``."""
        out = set()
        for x in free_vars(e):
            if x in self.sigma:
                out |= free_vars(self.sigma[x])
            else:
                out.add(x)
        return out

    def __repr__(self):
        return f"ProbContext({list(self.entries)!r})"


# ---------------------------------------------------------------------------
# helpers


ONE = Const(1.0)
ZERO = Const(0.0)


def _is_value(e):
    if isinstance(e, Const):
        return True
    if isinstance(e, (Inl, Inr)):
        return _is_value(e.arg)
    if isinstance(e, Pair):
        return _is_value(e.fst) and _is_value(e.snd)
    if isinstance(e, ArrayLit):
        return all(_is_value(x) for x in e.items)
    return False


def _contains_int(t):
    if isinstance(t, IntT):
        return True
    if isinstance(t, (Prod, Sum)):
        return _contains_int(t.left) or _contains_int(t.right)
    if isinstance(t, Array):
        return _contains_int(t.elem)
    return False


def _int_paths(t, path=()):
    if isinstance(t, IntT):
        return [path]
    if isinstance(t, Prod):
        return _int_paths(t.left, path + ("fst",)) + _int_paths(t.right, path + ("snd",))
    if isinstance(t, Sum):
        return _int_paths(t.left, path + ("L",)) + _int_paths(t.right, path + ("R",))
    if isinstance(t, Array):
        out = []
        for i in range(t.size):
            out += _int_paths(t.elem, path + (("idx", i),))
        return out
    return []


def _pair_leaves(e, path=()):
    if isinstance(e, Pair):
        return _pair_leaves(e.fst, path + ("fst",)) + _pair_leaves(e.snd, path + ("snd",))
    return [(path, e)]


def _project(z: Expr, path, shape=None):
    """The component of ``z`` at ``path``; ``shape`` is the tuple expression
    whose leaves the path came from, and its record labels name the steps."""
    i = 0
    while i < len(path):
        labels = shape.labels if isinstance(shape, Pair) else None
        if labels and path[i] in ("fst", "snd"):
            k = 0
            while k < len(labels) - 1 and i + k < len(path) and path[i + k] == "snd":
                k += 1
            last = k == len(labels) - 1
            if last or (i + k < len(path) and path[i + k] == "fst"):
                # inner projections are unlabelled so the access prints as z.name
                for _ in range(k - 1 if last else k):
                    z = Snd(z, label="")
                    shape = shape.snd
                if last:
                    z, shape = Snd(z, label=labels[k]), shape.snd
                    i += k
                else:
                    z, shape = Fst(z, label=labels[k]), shape.fst
                    i += k + 1
                continue
        step = path[i]
        if step == "fst":
            z = Fst(z)
        elif step == "snd":
            z = Snd(z)
        else:
            z = Index(z, Const(step[1]))
        if isinstance(shape, Pair) and step in ("fst", "snd"):
            shape = shape.fst if step == "fst" else shape.snd
        else:
            shape = None
        i += 1
    return z


def _rebuild_pair(e, repl, path=()):
    if isinstance(e, Pair):
        return Pair(_rebuild_pair(e.fst, repl, path + ("fst",)),
                    _rebuild_pair(e.snd, repl, path + ("snd",)), span=e.span, labels=e.labels)
    return repl.get(path, e)


# ---------------------------------------------------------------------------
# the compiler


class _Compiler:
    def __init__(self, params: Mapping[str, FunType], share_lets: bool):
        self.supply = NameSupply()
        self.params = dict(params)
        self.types = dict(params)
        self.share = share_lets
        self.rules = []
        self.spans = []

    # -- bookkeeping -----------------------------------------------------

    def fresh(self, hint, t=None):
        name = self.supply.fresh(hint)
        if t is not None:
            self.types[name] = t
        return name

    def type_of(self, e):
        return typecheck(e, self.types)

    def error(self, kind, message, subterm, rule=None):
        span = getattr(subterm, "span", None)
        if span is None:
            span = next((s for s in reversed(self.spans) if s is not None), None)
        return CompileError(kind, message, span, subterm, rule or (self.rules[-1] if self.rules else None),
                            self.rules)

    def close(self, e, ctx: ProbContext):
        """Apply the context's deterministic definitions to ``e``.

        Substitutes them (linear densities) or, with let-sharing, wraps
        ``e`` in the needed ``let`` bindings in context order.
        """
        fv = free_vars(e)
        if not any(x in ctx.sigma for x in fv):
            return e
        if not self.share:
            s = {x: v for x, v in ctx.sigma.items() if x in fv}
            return substitute(e, s, self.supply, check_pure=False)
        needed = set()
        todo = [x for x in fv if x in ctx.sigma]
        while todo:
            x = todo.pop()
            if x in needed:
                continue
            needed.add(x)
            todo.extend(y for y in free_vars(ctx.lookup(x).defn) if y in ctx.sigma)
        for entry in reversed(ctx.entries):
            if entry.name in needed:
                e = Let(entry.name, entry.defn, e)
        return e

    def is_const(self, m, ctx):
        rands = set(ctx.rands())
        return is_pure(m) and not (ctx.closed_fv(m) & rands)

    def check_enumerable(self, integral: Integral, rule):
        if not any(_contains_int(t) for _, t in integral.binders):
            return
        hints = find_hints(integral)
        for k, (x, t) in enumerate(integral.binders):
            for path in _int_paths(t):
                if not any(h.binder == k and h.path == path for h in hints):
                    raise self.error(
                        UNSUPPORTED,
                        f"cannot bound the support of int-valued random variable '{x}'"
                        " (no Poisson factor or equality constraint)", Var(x), rule)

    # -- judgments ---------------------------------------------------------

    def marg(self, ctx: ProbContext, xs, E):
        rands = ctx.rands()
        for x in xs:
            if x not in rands:
                raise VarNotRandom(f"'{x}' is not a random variable of the context")
        ys = tuple((y, ctx.type_of(y)) for y in rands if y not in xs)
        result = Integral(ys, self.close(E, ctx))
        self.check_enumerable(result, "Marginal")
        return result

    def dens(self, ctx: ProbContext, E, m) -> Tuple[str, Expr]:
        self.spans.append(getattr(m, "span", None))
        try:
            return self._dens(ctx, E, m)
        finally:
            self.spans.pop()

    def _rule(self, name):
        self.rules.append(name)

    def _done(self, result):
        self.rules.pop()
        return result

    def _dens(self, ctx, E, m):
        if isinstance(m, Var):
            return self._var(ctx, E, m)
        if isinstance(m, Fail):
            self._rule("Fail")
            return self._done((self.fresh("z"), ZERO))
        if _is_value(m):
            return self._constant(ctx, E, m, m)
        if isinstance(m, Random):
            return self._random(ctx, E, m)
        if isinstance(m, Pair):
            return self._tuple(ctx, E, m)
        if isinstance(m, (Fst, Snd)):
            return self._proj(ctx, E, m)
        if isinstance(m, Let):
            return self._let(ctx, E, m)
        if isinstance(m, (Inl, Inr)):
            return self._sum_con(ctx, E, m)
        if isinstance(m, Match):
            return self._match(ctx, E, m)
        if isinstance(m, (FromL, FromR)):
            return self._from(ctx, E, m)
        if isinstance(m, Plate):
            return self._plate(ctx, E, m)
        if isinstance(m, ArrayLit):
            return self._array(ctx, E, m)
        if isinstance(m, Prim):
            return self._prim(ctx, E, m)
        if isinstance(m, Index):
            t = self.type_of(m)
            if is_discrete(t) and is_pure(m):
                return self._discrete(ctx, E, m)
            if not is_pure(m):
                return self._let_expand_args(ctx, E, m, [m.arr, m.index],
                                             lambda a: Index(a[0], a[1], span=m.span))
            raise self.error(UNSUPPORTED, "density of a real-valued array element is not supported",
                             m, "Index")
        raise self.error(UNSUPPORTED, f"no density rule for {type(m).__name__}", m, "dispatch")

    # -- base cases ----------------------------------------------------------

    def _var(self, ctx, E, m):
        entry = ctx.lookup(m.name)
        if isinstance(entry, DetEntry):
            self._rule("Var Det")
            return self._done(self.dens(ctx, E, entry.defn))
        if isinstance(entry, RandEntry):
            self._rule("Var Rnd")
            return self._done((m.name, self.marg(ctx, [m.name], E)))
        # a parameter (or a variable bound outside the compiled fragment)
        return self._constant(ctx, E, m, m)

    def _constant(self, ctx, E, m, value):
        self._rule("Constant")
        t = self.type_of(m)
        if not is_discrete(t):
            from .pretty import pretty
            raise self.error(REAL_CONSTANT,
                             f"point mass at {pretty(m)} : {t} has no density", m, "Constant")
        z = self.fresh("z")
        F = self.marg(ctx, [], E)
        return self._done((z, mul(F, Iverson(Prim("eq", (Var(z), value))))))

    # -- random ----------------------------------------------------------------

    def _random(self, ctx, E, m):
        arg = m.arg
        if self.is_const(arg, ctx):
            self._rule("Random Const")
            z = self.fresh("z")
            F = self.marg(ctx, [], E)
            return self._done((z, mul(F, self.close(PdfOf(m.dist, arg, Var(z)), ctx))))
        self._rule("Random Rnd")
        try:
            w, F = self.dens(ctx, E, arg)
        except CompileError:
            if not is_pure(arg):
                raise
            # the parameters are a pure function of random variables: bind the draw
            self.rules.pop()
            self._rule("Random Let")
            v = self.fresh("r", family_result(m.dist))
            return self._done(self.dens(ctx, E, Let(v, m, Var(v), span=m.span)))
        z = self.fresh("z")
        t = distributions.family(m.dist).arg_type
        body = Integral(((w, t),), mul(F, PdfOf(m.dist, Var(w), Var(z))))
        return self._done((z, body))

    # -- tuples ----------------------------------------------------------------

    def _tuple(self, ctx, E, m):
        leaves = _pair_leaves(m)
        impure = [(p, e) for p, e in leaves if not is_pure(e)]
        rands = set(ctx.rands())
        if impure:
            bad = [e for _, e in leaves
                   if is_pure(e) and not (isinstance(e, Var) and e.name in rands)]
            if bad:
                raise self.error(NO_DENSITY,
                                 "tuple mixes deterministic and random components", m, "Tuple Var")
            self._rule("Tuple Let")
            names = {}
            binds = []
            for p, e in impure:
                v = self.fresh("t", self.type_of(e))
                names[p] = Var(v)
                binds.append((v, e))
            body = _rebuild_pair(m, names)
            for v, e in reversed(binds):
                body = Let(v, e, body, span=m.span)
            return self._done(self.dens(ctx, E, body))
        return self._tuple_var(ctx, E, m, leaves)

    def _tuple_var(self, ctx, E, m, leaves):
        self._rule("Tuple Var")
        rands = set(ctx.rands())
        names = []
        for _, e in leaves:
            if not (isinstance(e, Var) and e.name in rands) or e.name in names:
                raise self.error(TUPLE_NOT_VARS,
                                 "tuple components must be distinct random variables", m,
                                 "Tuple Var")
            names.append(e.name)
        F = self.marg(ctx, names, E)
        z = self.fresh("z")
        for (path, e) in reversed(leaves):
            F = Let(e.name, _project(Var(z), path, m), F)
        return self._done((z, F))

    def _proj(self, ctx, E, m):
        left = isinstance(m, Fst)
        self._rule("Tuple Proj L" if left else "Tuple Proj R")
        t = self.type_of(m.arg)
        w, F = self.dens(ctx, E, m.arg)
        z1 = self.fresh("z", t.left)
        z2 = self.fresh("z", t.right)
        if left:
            body = Integral(((z2, t.right),), Let(w, Pair(Var(z1), Var(z2)), F))
            self.check_enumerable(body, self.rules[-1])
            return self._done((z1, body))
        body = Integral(((z1, t.left),), Let(w, Pair(Var(z1), Var(z2)), F))
        self.check_enumerable(body, self.rules[-1])
        return self._done((z2, body))

    def _array(self, ctx, E, m):
        items = list(m.items)
        if any(not is_pure(x) for x in items):
            rands = set(ctx.rands())
            if any(is_pure(x) and not (isinstance(x, Var) and x.name in rands) for x in items):
                raise self.error(NO_DENSITY,
                                 "array mixes deterministic and random elements", m, "Array Var")
            self._rule("Array Let")
            binds = []
            new_items = []
            for x in items:
                if is_pure(x):
                    new_items.append(x)
                else:
                    v = self.fresh("a", self.type_of(x))
                    binds.append((v, x))
                    new_items.append(Var(v))
            body = ArrayLit(tuple(new_items), span=m.span)
            for v, x in reversed(binds):
                body = Let(v, x, body, span=m.span)
            return self._done(self.dens(ctx, E, body))
        leaves = [((("idx", i),), x) for i, x in enumerate(items)]
        self._rule("Array Var")
        rands = set(ctx.rands())
        names = []
        for _, x in leaves:
            if not (isinstance(x, Var) and x.name in rands) or x.name in names:
                raise self.error(TUPLE_NOT_VARS,
                                 "array elements must be distinct random variables", m, "Array Var")
            names.append(x.name)
        F = self.marg(ctx, names, E)
        z = self.fresh("z")
        for path, x in reversed(leaves):
            F = Let(x.name, _project(Var(z), path), F)
        return self._done((z, F))

    def _plate(self, ctx, E, m):
        self._rule("Plate")
        self.types[m.var] = INT
        w, Fb = self.dens(ProbContext(), ONE, m.body)
        z = self.fresh("z")
        P = ProdBy(m.var, m.size, Let(w, Index(Var(z), Var(m.var)), Fb))
        return self._done((z, self.marg(ctx, [], mul(E, P))))

    # -- let -------------------------------------------------------------------

    def _let(self, ctx, E, m):
        t = self.type_of(m.bound)
        self.types[m.var] = t
        if is_pure(m.bound):
            self._rule("Let Det")
            return self._done(self.dens(ctx.extend(DetEntry(m.var, m.bound, t)), E, m.body))
        self._rule("Let Rnd")
        x, F1 = self.dens(ProbContext(), ONE, m.bound)
        F1 = rename(F1, x, m.var, self.supply)
        return self._done(self.dens(ctx.extend(RandEntry(m.var, t)), mul(E, F1), m.body))

    # -- sums and match --------------------------------------------------------

    def _sum_con(self, ctx, E, m):
        left = isinstance(m, Inl)
        self._rule("Sum Con L" if left else "Sum Con R")
        z, F = self.dens(ctx, E, m.arg)
        w = self.fresh("w")
        if left:
            return self._done((w, Match(Var(w), z, F, "_", ZERO)))
        return self._done((w, Match(Var(w), "_", ZERO, z, F)))

    def _sum(self, l1, l2):
        z = self.fresh("z")
        F1 = rename(l1[1], l1[0], z, self.supply)
        F2 = rename(l2[1], l2[0], z, self.supply)
        return z, add(F1, F2)

    def _match(self, ctx, E, m):
        t = self.type_of(m.scrut)
        unused = m.left_var not in free_vars(m.left) and m.right_var not in free_vars(m.right)
        det = is_pure(m.scrut)
        from .types import BOOL
        if unused and (det or t == BOOL):
            if det:
                self._rule("If Det")
                l1 = self.dens(ctx, mul(E, IsL(m.scrut)), m.left)
                l2 = self.dens(ctx, mul(E, IsR(m.scrut)), m.right)
                return self._done(self._sum(l1, l2))
            self._rule("If Rnd")
            w, F = self.dens(ProbContext(), ONE, m.scrut)
            l1 = self.dens(ctx, mul(E, Let(w, true_expr(), F)), m.left)
            l2 = self.dens(ctx, mul(E, Let(w, false_expr(), F)), m.right)
            return self._done(self._sum(l1, l2))
        self.types[m.left_var] = t.left
        self.types[m.right_var] = t.right
        if det:
            self._rule("Match Det")
            c1 = ctx if m.left_var == "_" else ctx.extend(
                DetEntry(m.left_var, FromL(m.scrut, t.left), t.left))
            c2 = ctx if m.right_var == "_" else ctx.extend(
                DetEntry(m.right_var, FromR(m.scrut, t.right), t.right))
            l1 = self.dens(c1, mul(E, IsL(m.scrut)), m.left)
            l2 = self.dens(c2, mul(E, IsR(m.scrut)), m.right)
            return self._done(self._sum(l1, l2))
        self._rule("Match Rnd")
        w, F = self.dens(ProbContext(), ONE, m.scrut)
        x1 = m.left_var if m.left_var != "_" else self.fresh("x", t.left)
        x2 = m.right_var if m.right_var != "_" else self.fresh("x", t.right)
        l1 = self.dens(ctx.extend(RandEntry(x1, t.left)),
                       mul(E, Let(w, Inl(Var(x1), t.right), F)), m.left)
        l2 = self.dens(ctx.extend(RandEntry(x2, t.right)),
                       mul(E, Let(w, Inr(Var(x2), t.left), F)), m.right)
        return self._done(self._sum(l1, l2))

    def _from(self, ctx, E, m):
        left = isinstance(m, FromL)
        self._rule("fromL" if left else "fromR")
        t = self.type_of(m.arg)
        w, F = self.dens(ctx, E, m.arg)
        z = self.fresh("z")
        inj = Inl(Var(z), t.right) if left else Inr(Var(z), t.left)
        return self._done((z, Let(w, inj, F)))

    # -- primitive operations ---------------------------------------------------

    def _let_expand_args(self, ctx, E, m, args, rebuild):
        self._rule("Arg Let")
        new_args = []
        binds = []
        for a in args:
            if is_pure(a):
                new_args.append(a)
            else:
                v = self.fresh("a", self.type_of(a))
                binds.append((v, a))
                new_args.append(Var(v))
        body = rebuild(new_args)
        for v, a in reversed(binds):
            body = Let(v, a, body, span=m.span)
        return self._done(self.dens(ctx, E, body))

    def _discrete(self, ctx, E, m):
        self._rule("Discrete")
        rands = ctx.rands()
        fv = ctx.closed_fv(m)
        xs = [x for x in rands if x in fv]
        F = self.marg(ctx, xs, E)
        w = self.fresh("w")
        pred = self.close(Iverson(Prim("eq", (Var(w), m))), ctx)
        body = Integral(tuple((x, ctx.type_of(x)) for x in xs), mul(F, pred))
        self.check_enumerable(body, "Discrete")
        return self._done((w, body))

    def _prim(self, ctx, E, m):
        t = self.type_of(m)
        if is_discrete(t):
            if all(is_pure(a) for a in m.args):
                return self._discrete(ctx, E, m)
            return self._let_expand_args(ctx, E, m, list(m.args),
                                         lambda a: Prim(m.op, tuple(a), span=m.span))
        op = m.op
        if op == "add":
            return self._plus(ctx, E, m)
        if op == "sub":
            return self._minus(ctx, E, m)
        if op == "neg":
            self._rule("Negate")
            w, F = self.dens(ctx, E, m.args[0])
            z = self.fresh("z")
            return self._done((z, Let(w, Prim("neg", (Var(z),)), F)))
        if op == "mul":
            return self._times(ctx, E, m)
        if op == "div":
            return self._divide(ctx, E, m)
        if op == "exp":
            self._rule("Exp")
            w, F = self.dens(ctx, E, m.args[0])
            z = self.fresh("z")
            zv = Var(z)
            pos = Prim("gt", (zv, ZERO))
            body = Match(pos, "_", mul(Let(w, Prim("log", (zv,)), F), div(ONE, zv)), "_", ZERO)
            return self._done((z, body))
        if op == "log":
            self._rule("Log")
            w, F = self.dens(ctx, E, m.args[0])
            if not _nonneg_guard(F, w):
                raise self.error(NON_INVERTIBLE,
                                 "log(M) needs M to be non-negative wherever it has density; no"
                                 " support guard (Beta/Gamma/Uniform with lo >= 0, an exp, or"
                                 " [M >= 0]) was found", m, "Log")
            z = self.fresh("z")
            ez = Prim("exp", (Var(z),))
            return self._done((z, mul(Let(w, ez, F), ez)))
        if op == "abs":
            raise self.error(NON_INVERTIBLE, "abs is not invertible", m, "dispatch")
        if op == "real":
            raise self.error(NO_DENSITY,
                             "real(n) of an int takes countably many values: point masses", m,
                             "dispatch")
        raise self.error(UNSUPPORTED, f"no density rule for operator '{op}'", m, "dispatch")

    def _plus(self, ctx, E, m):
        a, b = m.args
        if self.is_const(b, ctx):
            self._rule("Plus Det")
            w, F = self.dens(ctx, E, a)
            z = self.fresh("z")
            return self._done((z, self.close(Let(w, sub(Var(z), b), F), ctx)))
        if self.is_const(a, ctx):
            self._rule("Plus Det")
            w, F = self.dens(ctx, E, b)
            z = self.fresh("z")
            return self._done((z, self.close(Let(w, sub(Var(z), a), F), ctx)))
        self._rule("Plus Rnd")
        w, F = self.dens(ctx, E, Pair(a, b, span=m.span))
        z = self.fresh("z")
        w1 = self.fresh("w", REAL)
        body = Integral(((w1, REAL),), Let(w, Pair(Var(w1), sub(Var(z), Var(w1))), F))
        return self._done((z, body))

    def _minus(self, ctx, E, m):
        a, b = m.args
        if self.is_const(b, ctx):
            self._rule("Minus Det")
            w, F = self.dens(ctx, E, a)
            z = self.fresh("z")
            return self._done((z, self.close(Let(w, add(Var(z), b), F), ctx)))
        if self.is_const(a, ctx):
            self._rule("Minus Det")
            w, F = self.dens(ctx, E, b)
            z = self.fresh("z")
            return self._done((z, self.close(Let(w, sub(a, Var(z)), F), ctx)))
        self._rule("Minus Rnd")
        w, F = self.dens(ctx, E, Pair(a, b, span=m.span))
        z = self.fresh("z")
        w1 = self.fresh("w", REAL)
        body = Integral(((w1, REAL),), Let(w, Pair(Var(w1), sub(Var(w1), Var(z))), F))
        return self._done((z, body))

    def _scale(self, ctx, E, c, operand):
        if isinstance(c, Const) and c.value == 0:
            raise self.error(NON_INVERTIBLE, "scaling by 0.0 is not invertible", c, "Scale")
        w, F = self.dens(ctx, E, operand)
        z = self.fresh("z")
        body = mul(Let(w, div(Var(z), c), F), div(ONE, Prim("abs", (c,))))
        return self._done((z, self.close(body, ctx)))

    def _times(self, ctx, E, m):
        a, b = m.args
        if self.is_const(a, ctx):
            self._rule("Scale")
            return self._scale(ctx, E, a, b)
        if self.is_const(b, ctx):
            self._rule("Scale")
            return self._scale(ctx, E, b, a)
        raise self.error(NON_INVERTIBLE, "product of two random quantities", m, "Scale")

    def _divide(self, ctx, E, m):
        a, b = m.args
        if self.is_const(a, ctx):
            self._rule("Inverse")
            w, F = self.dens(ctx, E, b)
            z = self.fresh("z")
            zv = Var(z)
            zz = mul(zv, zv)
            if isinstance(a, Const) and a.value == 1.0:
                body = mul(Let(w, div(ONE, zv), F), div(ONE, zz))
            else:
                body = mul(Let(w, div(a, zv), F), div(Prim("abs", (a,)), zz))
            return self._done((z, self.close(body, ctx)))
        if self.is_const(b, ctx):
            self._rule("Scale")
            if isinstance(b, Const) and b.value == 0:
                raise self.error(NON_INVERTIBLE, "division by 0.0", m, "Scale")
            w, F = self.dens(ctx, E, a)
            z = self.fresh("z")
            body = mul(Let(w, mul(Var(z), b), F), Prim("abs", (b,)))
            return self._done((z, self.close(body, ctx)))
        raise self.error(NON_INVERTIBLE, "quotient of two random quantities", m, "Inverse")


def family_result(name):
    return distributions.family(name).result


# ---------------------------------------------------------------------------
# the Log rule's side condition


_NONNEG_FAMILIES = ("Beta", "Gamma", "Poisson")


def _nonneg_guard(F, w, aliases=None):
    """Does every summand of ``F`` vanish when ``w`` is negative?

    A sound syntactic under-approximation: looks for a multiplicative
    density factor or bracket that forces ``w >= 0``.
    """
    names = aliases or {w}

    def is_w(e):
        return isinstance(e, Var) and e.name in names

    if isinstance(F, Const):
        return type(F.value) is float and F.value == 0.0
    if isinstance(F, Prim):
        if F.op == "mul":
            return _nonneg_guard(F.args[0], w, names) or _nonneg_guard(F.args[1], w, names)
        if F.op == "add":
            return _nonneg_guard(F.args[0], w, names) and _nonneg_guard(F.args[1], w, names)
        return False
    if isinstance(F, Let):
        inner = set(names)
        if is_w(F.bound):
            inner.add(F.var)
        else:
            inner.discard(F.var)
        return _nonneg_guard(F.body, w, inner)
    if isinstance(F, Integral):
        inner = set(names) - {x for x, _ in F.binders}
        return _nonneg_guard(F.body, w, inner)
    if isinstance(F, Match):
        p = F.scrut
        if (isinstance(p, Prim) and p.op in ("gt", "ge") and is_w(p.args[0])
                and isinstance(p.args[1], Const) and p.args[1].value >= 0
                and _nonneg_guard(F.right, w, names)):
            return True
        l_names = set(names) - {F.left_var}
        r_names = set(names) - {F.right_var}
        return _nonneg_guard(F.left, w, l_names) and _nonneg_guard(F.right, w, r_names)
    if isinstance(F, PdfOf) and is_w(F.point):
        if F.dist in _NONNEG_FAMILIES:
            return True
        if F.dist == "Uniform" and isinstance(F.arg, Pair) and isinstance(F.arg.fst, Const):
            return F.arg.fst.value >= 0
        return False
    if isinstance(F, Iverson):
        p = F.pred
        if isinstance(p, Prim) and p.op in ("ge", "gt") and is_w(p.args[0]) \
                and isinstance(p.args[1], Const) and p.args[1].value >= 0:
            return True
        if isinstance(p, Prim) and p.op in ("le", "lt") and is_w(p.args[1]) \
                and isinstance(p.args[0], Const) and p.args[0].value >= 0:
            return True
    return False


# ---------------------------------------------------------------------------
# entry points


def uniquify(e: Expr, taken, supply: NameSupply) -> Expr:
    """Rename binders so that every bound name is distinct and not in ``taken``.

    Match binders that are unused in their branch become ``_``.
    """
    taken = set(taken)

    def pick(name):
        if name != "_" and name not in taken and "$" not in name:
            taken.add(name)
            return name
        new = supply.fresh(name if name != "_" else "u")
        taken.add(new)
        return new

    def go(e, env):
        if isinstance(e, Var):
            return Var(env.get(e.name, e.name), span=e.span)
        if isinstance(e, Let):
            bound = go(e.bound, env)
            v = pick(e.var)
            return Let(v, bound, go(e.body, {**env, e.var: v}), span=e.span)
        if isinstance(e, Match):
            scrut = go(e.scrut, env)
            out = []
            for var, body in ((e.left_var, e.left), (e.right_var, e.right)):
                if var not in free_vars(body):
                    out.append(("_", go(body, env)))
                else:
                    v = pick(var)
                    out.append((v, go(body, {**env, var: v})))
            return Match(scrut, out[0][0], out[0][1], out[1][0], out[1][1], span=e.span)
        if isinstance(e, (Plate, ProdBy, LogProdBy)):
            v = pick(e.var)
            return type(e)(v, e.size, go(e.body, {**env, e.var: v}), span=e.span)
        if isinstance(e, Integral):
            inner = dict(env)
            bs = []
            for x, t in e.binders:
                v = pick(x)
                inner[x] = v
                bs.append((v, t))
            return Integral(tuple(bs), go(e.body, inner), span=e.span)
        return map_children(e, lambda c: go(c, env))

    return go(e, env={})


def dens(ctx: ProbContext, E: Expr, m: Expr, types: Mapping[str, FunType],
         share_lets: bool = False) -> Tuple[str, Expr]:
    """One use of the compilation judgment, for tests and exploration."""
    c = _Compiler(types, share_lets)
    for entry in ctx.entries:
        c.types[entry.name] = entry.type
    return c.dens(ctx, E, m)


def marg(ctx: ProbContext, xs, E: Expr) -> Expr:
    c = _Compiler({}, False)
    return c.marg(ctx, list(xs), E)


def _compile(program: Expr, params: Mapping[str, FunType], share_lets: bool):
    params = dict(params or {})
    t = typecheck(program, params)
    c = _Compiler(params, share_lets)
    program = uniquify(program, set(params) | free_vars(program), c.supply)
    z, F = c.dens(ProbContext(), ONE, program)
    # use a fixed name for the bound variable when it is free
    if z not in params and "z" not in params and "z" not in _all_names(F):
        F = rename(F, z, "z", c.supply)
        z = "z"
    stray = free_vars(F) - set(params) - {z}
    if stray:
        raise CompileError(UNSUPPORTED, f"internal error: unbound {sorted(stray)} in density",
                           rule="post-check")
    f = DensityFn(z, t, F, tuple(sorted(params.items())))
    bt = typecheck_target(F, f.type_env())
    if bt != REAL:
        raise CompileError(UNSUPPORTED, f"internal error: density has type {bt}", rule="post-check")
    return f


def _all_names(e):
    from .syntax import binders_of, walk
    out = set()
    for x in walk(e):
        if isinstance(x, Var):
            out.add(x.name)
        for name, _ in binders_of(x):
            out.add(name)
    return out


def compile_pdf(program: Expr, params: Optional[Mapping[str, FunType]] = None,
                optimize: bool = True) -> DensityFn:
    """Density function of ``program`` with the parameters free in its body."""
    f = _compile(program, params, share_lets=False)
    if optimize:
        f = f.with_body(peephole(f.body))
    f.check_real()
    return f


def compile_logpdf(program: Expr, params: Optional[Mapping[str, FunType]] = None,
                   optimize: bool = True) -> DensityFn:
    """Log-density of ``program``; deterministic definitions are let-bound, not copied."""
    f = _compile(program, params, share_lets=True)
    if optimize:
        f = f.with_body(peephole(f.body))
    g = to_log_space(f)
    if optimize:
        g = g.with_body(peephole(g.body))
    g.check_real()
    return g
