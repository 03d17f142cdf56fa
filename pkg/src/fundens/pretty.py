"""Deterministic pretty-printing of Fun and target code.

The output is valid concrete syntax: the parser reads it back (with
compiler-generated ``$`` names allowed) to an equal expression.
"""

from __future__ import annotations

import math

from .density import DensityFn
from .distributions import family
from .syntax import (ArrayLit, Const, Exp, Expr, Fail, FromL, FromR, Fst, Index, Inl, Inr,
                     Integral, IsL, IsR, Iverson, Let, Log, LogPdfOf, LogProdBy, Match, Pair,
                     PdfOf, Plate, Prim, ProdBy, Random, Snd, Var)
from .types import UNIT, FunType, Prod

# binding strength: higher binds tighter
P_LOW = 0     # let, if, match, integral, fun
P_OR = 1
P_AND = 2
P_CMP = 3
P_ADD = 4
P_MUL = 5
P_UNARY = 6
P_POSTFIX = 7
P_ATOM = 8

WIDTH = 90  # argument lists longer than this go one per line

BINARY = {
    "or": ("||", P_OR), "and": ("&&", P_AND),
    "lt": ("<", P_CMP), "le": ("<=", P_CMP), "eq": ("=", P_CMP), "gt": (">", P_CMP),
    "ge": (">=", P_CMP),
    "add": ("+", P_ADD), "sub": ("-", P_ADD), "mul": ("*", P_MUL), "div": ("/", P_MUL),
}


def format_type(t: FunType) -> str:
    return _atomic_type(t)


def _atomic_type(t):
    s = str(t)
    if isinstance(t, Prod) and not t.fields:
        return f"({s})"
    return s


def format_float(x: float) -> str:
    if math.isinf(x):
        return "infinity" if x > 0 else "-infinity"
    if math.isnan(x):
        return "nan"
    return repr(float(x))


def pretty(e: Expr) -> str:
    return _Printer().pp(e, P_LOW, 0)


def pretty_density(f: DensityFn) -> str:
    head = f"fun ({f.bound_var} : {f.bound_type}) ->"
    return head + "\n" + "  " + _Printer().pp(f.body, P_LOW, 2) + "\n"


class _Printer:
    def pp(self, e, prec, ind):
        s, p = self._pp(e, ind)
        if p < prec:
            inner, _ = self._pp(e, ind + 1)
            return "(" + inner + ")"
        return s

    def _args(self, items, ind):
        flat = ", ".join(self.pp(x, P_LOW, ind) for x in items)
        if "\n" not in flat and (len(items) < 2 or ind + len(flat) <= WIDTH):
            return flat
        # one argument per line when any of them spans several lines
        nl = "\n" + " " * (ind + 2)
        return nl + ("," + nl).join(self.pp(x, P_LOW, ind + 2) for x in items)

    def _pp(self, e, ind):
        nl = "\n" + " " * ind
        if isinstance(e, Var):
            return e.name, P_ATOM
        if isinstance(e, Const):
            v = e.value
            if v == ():
                return "()", P_ATOM
            if isinstance(v, float):
                s = format_float(v)
                return s, (P_UNARY if s.startswith("-") else P_ATOM)
            return str(v), (P_UNARY if v < 0 else P_ATOM)
        if isinstance(e, Pair):
            if e.labels:
                return self._record(e, ind), P_ATOM
            return f"({self._args([e.fst, e.snd], ind)})", P_ATOM
        if isinstance(e, (Fst, Snd)):
            if e.label:
                # inner projections of a record access carry the empty label
                base = e.arg
                while isinstance(base, (Fst, Snd)) and base.label == "":
                    base = base.arg
                return f"{self.pp(base, P_POSTFIX, ind)}.{e.label}", P_POSTFIX
            name = "fst" if isinstance(e, Fst) else "snd"
            return f"{name}({self.pp(e.arg, P_LOW, ind)})", P_ATOM
        if isinstance(e, (Inl, Inr)):
            left = isinstance(e, Inl)
            if e.other == UNIT and isinstance(e.arg, Const) and e.arg.value == ():
                return ("true" if left else "false"), P_ATOM
            name = "inl" if left else "inr"
            ann = ""
            if e.other is not None:
                ann = ":" + _atomic_type(e.other)
            return f"{name}{ann}({self.pp(e.arg, P_LOW, ind)})", P_ATOM
        if isinstance(e, Match):
            if e.left_var == "_" and e.right_var == "_":
                return (f"if {self.pp(e.scrut, P_LOW, ind)} then{nl}  "
                        f"{self.pp(e.left, P_LOW, ind + 2)}{nl}else{nl}  "
                        f"{self.pp(e.right, P_LOW, ind + 2)}"), P_LOW
            return (f"match {self.pp(e.scrut, P_LOW, ind)} with{nl}"
                    f"| inl {e.left_var} ->{nl}  {self.pp(e.left, P_LOW, ind + 2)}{nl}"
                    f"| inr {e.right_var} ->{nl}  {self.pp(e.right, P_LOW, ind + 2)}"), P_LOW
        if isinstance(e, Let):
            parts = []
            while isinstance(e, Let):
                parts.append(f"let {e.var} = {self.pp(e.bound, P_LOW, ind + 2)} in")
                e = e.body
            return nl.join(parts) + nl + self.pp(e, P_LOW, ind), P_LOW
        if isinstance(e, Prim):
            return self._prim(e, ind)
        if isinstance(e, Random):
            return f"random({self._dist_call(e.dist, e.arg, ind)})", P_ATOM
        if isinstance(e, Fail):
            return f"fail:{_atomic_type(e.type)}", P_ATOM
        if isinstance(e, Plate):
            return (f"[| for {e.var} in 0 .. {e.size - 1} -> "
                    f"{self.pp(e.body, P_LOW, ind + 2)} |]"), P_ATOM
        if isinstance(e, ArrayLit):
            return "[| " + "; ".join(self.pp(x, P_LOW, ind) for x in e.items) + " |]", P_ATOM
        if isinstance(e, Index):
            return f"{self.pp(e.arr, P_POSTFIX, ind)}.[{self.pp(e.index, P_LOW, ind)}]", P_POSTFIX
        if isinstance(e, (FromL, FromR, IsL, IsR, Log, Exp)):
            name = {FromL: "fromL", FromR: "fromR", IsL: "isL", IsR: "isR", Log: "Log",
                    Exp: "Exp"}[type(e)]
            return f"{name}({self.pp(e.arg, P_LOW, ind)})", P_ATOM
        if isinstance(e, Integral):
            bs = ", ".join(f"{x}:{t}" for x, t in e.binders)
            return f"integral ({bs}) ->{nl}  {self.pp(e.body, P_LOW, ind + 2)}", P_LOW
        if isinstance(e, Iverson):
            return f"[{self.pp(e.pred, P_LOW, ind)}]", P_ATOM
        if isinstance(e, (PdfOf, LogPdfOf)):
            name = ("pdf_" if isinstance(e, PdfOf) else "logpdf_") + e.dist
            args = self._dist_args(e.dist, e.arg) + [e.point]
            return f"{name}({self._args(args, ind)})", P_ATOM
        if isinstance(e, (ProdBy, LogProdBy)):
            name = "prodBy" if isinstance(e, ProdBy) else "logprodBy"
            return (f"{name}(fun {e.var} ->{nl}    {self.pp(e.body, P_LOW, ind + 4)}"
                    f",{nl}  {e.size})"), P_ATOM
        raise TypeError(f"cannot print {e!r}")

    def _record(self, e, ind):
        names = e.labels
        parts = []
        for name in names[:-1]:
            parts.append(f"{name} = {self.pp(e.fst, P_LOW, ind + 2)}")
            e = e.snd
        parts.append(f"{names[-1]} = {self.pp(e, P_LOW, ind + 2)}")
        return "{ " + "; ".join(parts) + " }"

    @staticmethod
    def _dist_args(name, arg):
        if family(name).arity == 2 and isinstance(arg, Pair):
            return [arg.fst, arg.snd]
        return [arg]

    def _dist_call(self, name, arg, ind):
        return f"{name}({self._args(self._dist_args(name, arg), ind)})"

    def _prim(self, e, ind):
        if e.op in BINARY:
            sym, p = BINARY[e.op]
            a, b = e.args
            # left-associative: the right operand needs strictly tighter binding
            rhs_prec = p + 1
            left, right = self.pp(a, p, ind), self.pp(b, rhs_prec, ind)
            long = p == P_ADD and ind + len(left) + len(right) + 3 > WIDTH
            if long or "\n" in left or "\n" in right:
                return f"{left}\n{' ' * ind}{sym} {right}", p
            return f"{left} {sym} {right}", p
        if e.op == "neg":
            a = e.args[0]
            if isinstance(a, Const) and type(a.value) in (int, float):
                # keep "-1.0" for the literal; negation of a literal is "-(1.0)"
                return f"-({self.pp(a, P_LOW, ind)})", P_UNARY
            return f"-{self.pp(a, P_POSTFIX, ind)}", P_UNARY
        return f"{e.op}({self._args(e.args, ind)})", P_ATOM
