"""Primitive operations: signatures and semantics.

Every operation is total: where it would be undefined it returns the
default value of its result type (``r / 0.0 = 0.0 = log(-1.0)``).  The
implementations accept either scalars or numpy arrays; in the array case
booleans are numpy bool arrays instead of ``InlV(())``/``InrV(())``.
"""

from __future__ import annotations

import math

import numpy as np

from .types import BOOL, INT, REAL, FunType, IntT, RealT
from .values import FALSE, TRUE, InlV, InrV

NEG_INF = float("-inf")

ARITH = {"add", "sub", "mul"}
COMPARE = {"lt", "le", "eq", "gt", "ge"}
LOGIC = {"and", "or"}
UNARY_REAL = {"exp", "log", "abs"}

SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "lt": "<", "le": "<=", "eq": "=",
           "gt": ">", "ge": ">=", "and": "&&", "or": "||"}
OPS = sorted(ARITH | COMPARE | LOGIC | UNARY_REAL | {"div", "neg", "not", "real", "logsumexp"})


def signature(op: str, arg_types) -> FunType:
    """Result type of ``op`` applied to ``arg_types``, or raise ``TypeError``."""
    n = len(arg_types)

    def need(k):
        if n != k:
            raise TypeError(f"operator '{op}' expects {k} argument(s), got {n}")

    if op in ARITH:
        need(2)
        a, b = arg_types
        if a == b and isinstance(a, (IntT, RealT)):
            return a
        raise TypeError(f"operator '{op}' needs two ints or two reals, got {a} and {b}")
    if op == "div":
        need(2)
        if arg_types == (REAL, REAL):
            return REAL
        raise TypeError(f"operator '/' needs two reals, got {arg_types[0]} and {arg_types[1]}")
    if op == "neg":
        need(1)
        if isinstance(arg_types[0], (IntT, RealT)):
            return arg_types[0]
        raise TypeError(f"negation needs int or real, got {arg_types[0]}")
    if op == "eq":
        need(2)
        a, b = arg_types
        if a == b:
            return BOOL
        raise TypeError(f"'=' compares values of one type, got {a} and {b}")
    if op in COMPARE:
        need(2)
        a, b = arg_types
        if a == b and isinstance(a, (IntT, RealT)):
            return BOOL
        raise TypeError(f"comparison needs two ints or two reals, got {a} and {b}")
    if op in LOGIC:
        need(2)
        if arg_types == (BOOL, BOOL):
            return BOOL
        raise TypeError(f"'{op}' needs two bools")
    if op == "not":
        need(1)
        if arg_types[0] == BOOL:
            return BOOL
        raise TypeError("'not' needs a bool")
    if op in UNARY_REAL:
        need(1)
        if arg_types[0] == REAL:
            return REAL
        raise TypeError(f"'{op}' needs a real, got {arg_types[0]}")
    if op == "real":
        need(1)
        if arg_types[0] == INT:
            return REAL
        raise TypeError(f"'real' converts an int, got {arg_types[0]}")
    if op == "logsumexp":
        need(2)
        if arg_types == (REAL, REAL):
            return REAL
        raise TypeError("'logsumexp' needs two reals")
    raise TypeError(f"unknown operator '{op}'")


def _arr(*xs):
    return any(isinstance(x, np.ndarray) for x in xs)


def as_bool_array(v):
    if isinstance(v, np.ndarray):
        return v.astype(bool)
    return np.bool_(isinstance(v, InlV))


def _bool(b):
    return TRUE if b else FALSE


def _div(a, b):
    if _arr(a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        ok = b != 0
        return np.where(ok, a / np.where(ok, b, 1.0), 0.0)
    return a / b if b != 0 else 0.0


def _log(a):
    if _arr(a):
        ok = a > 0
        return np.where(ok, np.log(np.where(ok, a, 1.0)), 0.0)
    return math.log(a) if a > 0 else 0.0


def _exp(a):
    if _arr(a):
        with np.errstate(over="ignore"):
            return np.exp(a)
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _abs(a):
    return np.abs(a) if _arr(a) else abs(a)


def _cmp(pyop, npop):
    def f(a, b):
        if _arr(a, b):
            return npop(a, b)
        return _bool(pyop(a, b))
    return f


def _eq(a, b):
    if _arr(a, b):
        if isinstance(a, (InlV, InrV)) or isinstance(b, (InlV, InrV)):
            return as_bool_array(a) == as_bool_array(b)
        return np.equal(a, b)
    return _bool(a == b)


def _and(a, b):
    if _arr(a, b):
        return np.logical_and(as_bool_array(a), as_bool_array(b))
    return _bool(isinstance(a, InlV) and isinstance(b, InlV))


def _or(a, b):
    if _arr(a, b):
        return np.logical_or(as_bool_array(a), as_bool_array(b))
    return _bool(isinstance(a, InlV) or isinstance(b, InlV))


def _not(a):
    if _arr(a):
        return np.logical_not(a)
    return _bool(not isinstance(a, InlV))


def _real(a):
    if _arr(a):
        return np.asarray(a, dtype=float)
    return float(a)


def logsumexp2(a, b):
    """``log(exp(a) + exp(b))`` with max-shift; ``-inf`` is the log of zero."""
    if _arr(a, b):
        return np.logaddexp(a, b)
    m = a if a > b else b
    if m == NEG_INF:
        return NEG_INF
    if m == math.inf:
        return math.inf
    return m + math.log1p(math.exp(-abs(a - b)))


IMPL = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": _div,
    "neg": lambda a: -a,
    "lt": _cmp(lambda a, b: a < b, np.less),
    "le": _cmp(lambda a, b: a <= b, np.less_equal),
    "gt": _cmp(lambda a, b: a > b, np.greater),
    "ge": _cmp(lambda a, b: a >= b, np.greater_equal),
    "eq": _eq,
    "and": _and,
    "or": _or,
    "not": _not,
    "exp": _exp,
    "log": _log,
    "abs": _abs,
    "real": _real,
    "logsumexp": logsumexp2,
}


def apply(op: str, *args):
    return IMPL[op](*args)
