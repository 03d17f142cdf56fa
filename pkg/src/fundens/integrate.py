"""Stock integration over Fun types.

The integrand of a compiled ``Integral`` usually carries density factors
for its binders.  Before integrating we look for them statically: every
``pdf_D(args, point)`` whose point is an invertible function of (a
component of) a binder yields an integration window for that binder
component, and ``[x = c]`` brackets over ints give finite support sets.
Those windows keep adaptive quadrature away from regions where the
integrand is numerically zero.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import integrate as sp_integrate

from . import distributions
from .errors import NonConvergentIntegral
from .syntax import (Const, Expr, FromL, FromR, Fst, Index, Inl, Inr, Integral, Iverson, Let,
                     LogPdfOf, LogProdBy, Match, Pair, PdfOf, Plate, Prim, ProdBy, Snd, Var,
                     free_vars, substitute)
from .types import Array, IntT, Prod, RealT, Sum, UnitT
from .values import ArrayV, InlV, InrV

OPAQUE = "$opaque"  # stands for variables whose value is unknown at window time


@dataclass(frozen=True)
class Hint:
    """A density factor or equality constraint on one binder component.

    ``ops`` lists the invertible operations mapping the component ``u`` to
    the point, outermost first; each is ``(name, operand_expr_or_None)``.
    """
    binder: int
    path: Tuple
    kind: str  # "pdf" or "point"
    dist: Optional[str]
    arg: Optional[Expr]  # pdf parameters, or the constant for "point"
    ops: Tuple


def find_hints(e: Integral):
    names = {x: k for k, (x, _) in enumerate(e.binders)}
    found = []
    _scan(e.body, {}, names, found)
    out = []
    seen = set()
    for h in found:
        if h not in seen:
            seen.add(h)
            out.append(h)
    return out


def _resolve(e, lets):
    if not lets:
        return e
    fv = free_vars(e)
    s = {k: v for k, v in lets.items() if k in fv}
    if not s:
        return e
    return substitute(e, s, check_pure=False)


def _scan(e, lets, names, out):
    if isinstance(e, Let):
        _scan(e.bound, lets, names, out)
        _scan(e.body, {**lets, e.var: _resolve(e.bound, lets)}, names, out)
        return
    if isinstance(e, Match):
        _scan(e.scrut, lets, names, out)
        s = _resolve(e.scrut, lets)
        _scan(e.left, {**lets, e.left_var: FromL(s)}, names, out)
        _scan(e.right, {**lets, e.right_var: FromR(s)}, names, out)
        return
    if isinstance(e, (Plate, ProdBy, LogProdBy)):
        _scan(e.body, {**lets, e.var: Var(OPAQUE)}, names, out)
        return
    if isinstance(e, Integral):
        inner = dict(lets)
        for x, _ in e.binders:
            inner[x] = Var(OPAQUE)
        _scan(e.body, inner, names, out)
        return
    if isinstance(e, (PdfOf, LogPdfOf)):
        h = _pdf_hint(e.dist, _resolve(e.arg, lets), _resolve(e.point, lets), names)
        if h is not None:
            out.append(h)
    if isinstance(e, Iverson) and isinstance(e.pred, Prim) and e.pred.op == "eq":
        a, b = (_resolve(x, lets) for x in e.pred.args)
        for p, c in ((a, b), (b, a)):
            hs = _point_hints(p, c, names)
            if hs:
                out.extend(hs)
                break
    for c in e.children():
        _scan(c, lets, names, out)


def _binder_refs(e, names):
    fv = free_vars(e)
    if OPAQUE in fv:
        return None
    return {names[x] for x in fv if x in names}


def _available(e, k, names):
    refs = _binder_refs(e, names)
    return refs is not None and all(j < k for j in refs)


def _leaf(p, names):
    if isinstance(p, Var):
        return (names[p.name], ()) if p.name in names else None
    if isinstance(p, (Fst, Snd)):
        if isinstance(p.arg, Pair):
            return _leaf(p.arg.fst if isinstance(p, Fst) else p.arg.snd, names)
        r = _leaf(p.arg, names)
        return r and (r[0], r[1] + ("fst" if isinstance(p, Fst) else "snd",))
    if isinstance(p, (FromL, FromR)):
        if isinstance(p.arg, Inl if isinstance(p, FromL) else Inr):
            return _leaf(p.arg.arg, names)
        r = _leaf(p.arg, names)
        return r and (r[0], r[1] + ("L" if isinstance(p, FromL) else "R",))
    if isinstance(p, Index) and isinstance(p.index, Const):
        i = p.index.value
        from .syntax import ArrayLit
        if isinstance(p.arr, ArrayLit):
            return _leaf(p.arr.items[i], names) if 0 <= i < len(p.arr.items) else None
        r = _leaf(p.arr, names)
        return r and (r[0], r[1] + (("idx", i),))
    return None


def _reduce(p):
    # projections of constructors, as left behind by let-bound tuples
    while True:
        if isinstance(p, Fst) and isinstance(p.arg, Pair):
            p = p.arg.fst
        elif isinstance(p, Snd) and isinstance(p.arg, Pair):
            p = p.arg.snd
        elif isinstance(p, FromL) and isinstance(p.arg, Inl):
            p = p.arg.arg
        elif isinstance(p, FromR) and isinstance(p.arg, Inr):
            p = p.arg.arg
        else:
            return p


def _analyse(p, names):
    """``(binder, path, ops)`` when ``p`` is an invertible image of a binder component."""
    p = _reduce(p)
    leaf = _leaf(p, names)
    if leaf is not None:
        return leaf[0], leaf[1], ()
    if not isinstance(p, Prim):
        return None
    if p.op in ("neg", "exp", "log"):
        r = _analyse(p.args[0], names)
        return r and (r[0], r[1], ((p.op, None),) + r[2])
    if p.op not in ("add", "sub", "mul", "div"):
        return None
    a, b = p.args
    r = _analyse(a, names)
    if r is not None and _available(b, r[0], names):
        return r[0], r[1], ((p.op, b),) + r[2]
    if p.op == "div":
        return None
    r = _analyse(b, names)
    if r is not None and _available(a, r[0], names):
        op = {"add": "add", "mul": "mul", "sub": "rsub"}[p.op]
        return r[0], r[1], ((op, a),) + r[2]
    return None


def _pdf_hint(dist, arg, point, names):
    r = _analyse(point, names)
    if r is None or not _available(arg, r[0], names):
        return None
    return Hint(r[0], r[1], "pdf", dist, arg, r[2])


def _point_hints(p, c, names):
    # an equality with a constructor constrains each component separately
    if isinstance(c, Inl):
        return _point_hints(FromL(p), c.arg, names)
    if isinstance(c, Inr):
        return _point_hints(FromR(p), c.arg, names)
    if isinstance(c, Pair):
        return _point_hints(Fst(p), c.fst, names) + _point_hints(Snd(p), c.snd, names)
    h = _point_hint(p, c, names)
    return [h] if h is not None else []


def _point_hint(p, c, names):
    r = _analyse(p, names)
    if r is None or not _available(c, r[0], names):
        return None
    if any(op not in ("add", "sub", "rsub", "neg") for op, _ in r[2]):
        return None
    return Hint(r[0], r[1], "point", None, c, r[2])


# ---------------------------------------------------------------------------
# windows at run time


def invert_interval(ops, operands, lo, hi):
    """Map an interval for the point back to one for the binder component."""
    for (op, _), c in zip(ops, operands):
        if op == "add":
            lo, hi = lo - c, hi - c
        elif op == "sub":
            lo, hi = lo + c, hi + c
        elif op == "rsub":
            lo, hi = c - hi, c - lo
        elif op == "neg":
            lo, hi = -hi, -lo
        elif op == "mul":
            if c == 0:
                return None
            lo, hi = sorted((lo / c, hi / c))
        elif op == "div":
            if c == 0:
                return None
            lo, hi = sorted((lo * c, hi * c))
        elif op == "exp":
            if hi <= 0:
                return None
            lo = math.log(lo) if lo > 0 else -math.inf
            hi = math.log(hi)
        elif op == "log":
            lo, hi = _safe_exp(lo), _safe_exp(hi)
        else:
            return None
    return lo, hi


def invert_point(ops, operands, v):
    for (op, _), c in zip(ops, operands):
        if op == "add":
            v = v - c
        elif op == "sub":
            v = v + c
        elif op == "rsub":
            v = c - v
        elif op == "neg":
            v = -v
    return v


def _safe_exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


class Windows:
    """Per-component integration hints for one binder at one evaluation."""

    def __init__(self):
        self.real = {}    # path -> list of (lo, hi, centre)
        self.points = {}  # path -> set of ints
        self.ranges = {}  # path -> list of (lo, hi) int ranges

    def add_pdf(self, path, dist, params, ops, operands, tail_tol):
        d = distributions.family(dist)
        if isinstance(d.result, IntT):
            if dist == "Poisson" and distributions.validate(dist, params):
                n = distributions.poisson_upper(params, tail_tol)
                iv = invert_interval(ops, operands, 0, n)
                if iv is not None and all(op in ("add", "sub", "rsub", "neg") for op, _ in ops):
                    self.ranges.setdefault(path, []).append(iv)
            return
        if not isinstance(d.result, RealT):
            return
        w = distributions.support_window(dist, params)
        if w is None:
            return
        lo, hi, centre = w
        iv = invert_interval(ops, operands, lo, hi)
        if iv is None:
            return
        c = invert_interval(ops, operands, centre, centre)
        mid = c[0] if c is not None and math.isfinite(c[0]) else None
        self.real.setdefault(path, []).append((iv[0], iv[1], mid))

    def add_point(self, path, value, ops, operands):
        v = invert_point(ops, operands, value)
        if isinstance(v, (int, np.integer)):
            self.points.setdefault(path, set()).add(int(v))


# ---------------------------------------------------------------------------
# integration over a type


class Integrator:
    def __init__(self, cfg):
        self.cfg = cfg

    def over(self, t, f, win: Windows, path=()):
        """``∫ f`` over type ``t`` w.r.t. its stock measure."""
        if isinstance(t, UnitT):
            return f(())
        if isinstance(t, Sum):
            return (self.over(t.left, lambda v: f(InlV(v)), win, path + ("L",))
                    + self.over(t.right, lambda v: f(InrV(v)), win, path + ("R",)))
        if isinstance(t, Prod):
            return self.over(
                t.left,
                lambda a: self.over(t.right, lambda b: f((a, b)), win, path + ("snd",)),
                win, path + ("fst",))
        if isinstance(t, Array):
            def rec(i, prefix):
                if i == t.size:
                    return f(ArrayV(prefix))
                return self.over(t.elem, lambda v: rec(i + 1, prefix + (v,)), win,
                                 path + (("idx", i),))
            return rec(0, ())
        if isinstance(t, IntT):
            return self._int(f, win, path)
        if isinstance(t, RealT):
            return self._real(f, win.real.get(path))
        raise TypeError(f"cannot integrate over {t!r}")

    def _int(self, f, win, path):
        pts = win.points.get(path)
        if pts:
            return math.fsum(f(n) for n in sorted(pts))
        ranges = win.ranges.get(path)
        if ranges:
            lo = int(math.floor(min(r[0] for r in ranges)))
            hi = int(math.ceil(max(r[1] for r in ranges)))
            return math.fsum(f(n) for n in range(lo, hi + 1))
        warnings.warn(NonConvergentIntegral(
            "integral over int has no finite support; evaluated as 0.0"), stacklevel=2)
        return 0.0

    def _real(self, f, wins):
        g = lambda x: f(float(x))
        if not wins:
            return self._quad(g, -math.inf, math.inf, None)
        lo = min(w[0] for w in wins)
        hi = max(w[1] for w in wins)
        if not lo < hi:
            return 0.0
        marks = set()
        for a, b, c in wins:
            for x in (a, b, c):
                if x is not None and math.isfinite(x):
                    marks.add(x)
        finite = sorted(marks)
        if not finite:
            return self._quad(g, lo, hi, None)
        a, b = finite[0], finite[-1]
        total = 0.0
        if a < b:
            inner = [x for x in finite if a < x < b]
            total += self._quad(g, a, b, inner or None)
        if lo < a:
            total += self._quad(g, lo, a, None)
        if b < hi:
            total += self._quad(g, b, hi, None)
        return total

    def _quad(self, g, a, b, points):
        cfg = self.cfg
        out = sp_integrate.quad(g, a, b, points=points, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
                                limit=max(cfg.max_subdivisions, 2 * len(points or ()) + 50),
                                full_output=1)
        y, err = out[0], out[1]
        msg = out[3] if len(out) > 3 else ""
        # quad's divergence verdict can come with a tiny error estimate
        bad = (not math.isfinite(y) or "divergent" in msg
               or (msg and err > cfg.divergence_tol * max(1.0, abs(y))))
        if bad:
            warnings.warn(NonConvergentIntegral(
                f"quadrature over [{a}, {b}] did not converge (value {y}, error {err});"
                " evaluated as 0.0"), stacklevel=3)
            return 0.0
        return y
