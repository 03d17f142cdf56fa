"""Executable semantics of Fun.

``sample`` draws once from a program; ``exact_measure`` computes the
sub-probability measure of a discrete program by enumerating every
outcome of every random choice.  The two are independent of the density
compiler and serve as its test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Mapping

import numpy as np

from . import distributions
from .distributions import Failure
from .errors import FunError, NotFinitelyEnumerable
from .evaluate import EvalConfig, _program
from .ops import IMPL
from .syntax import (ArrayLit, Const, Expr, Fail, FromL, FromR, Fst, Index, Inl, Inr, IsL, IsR,
                     Let, Match, Pair, Plate, Prim, Random, Snd, Var)
from .values import FALSE, TRUE, ArrayV, InlV, InrV, default_value


@dataclass(frozen=True)
class Ok:
    value: object


class Failed:
    """The outcome of a failed run."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Failed"


FAILED = Failed()


class Sampler:
    """Repeated draws from one program under one environment."""

    def __init__(self, expr: Expr, env: Mapping = None, cfg: EvalConfig = None):
        self.env = dict(env or {})
        names = tuple(sorted(self.env))
        self._prog = _program(expr, names, cfg or EvalConfig(), True)
        self._values = [self.env[n] for n in names]

    def draw(self, rng):
        try:
            return Ok(self._prog.run_values(self._values, rng))
        except Failure:
            return FAILED


def sample(expr: Expr, env: Mapping = None, rng=None):
    """One draw from ``expr``: ``Ok(value)`` or ``FAILED``."""
    rng = rng if rng is not None else distributions.make_rng()
    return Sampler(expr, env).draw(rng)


def sample_many(expr: Expr, env: Mapping, n: int, rng):
    s = Sampler(expr, env)
    return [s.draw(rng) for _ in range(n)]


@dataclass
class EmpiricalCdf:
    """Sorted successful draws plus the observed failure fraction."""

    points: np.ndarray
    n: int
    failure_fraction: float

    def __call__(self, x):
        """Fraction of all ``n`` runs that succeeded with a value <= x."""
        return np.searchsorted(self.points, x, side="right") / self.n

    def steps(self):
        """``{value: cumulative fraction}`` at each distinct draw."""
        out = {}
        for k, v in enumerate(self.points):
            out[float(v)] = (k + 1) / self.n
        return out


def empirical_cdf(expr: Expr, params: Mapping = None, n: int = 10000, rng=None) -> EmpiricalCdf:
    rng = rng if rng is not None else distributions.make_rng()
    s = Sampler(expr, params)
    draws = []
    failed = 0
    for _ in range(n):
        out = s.draw(rng)
        if out is FAILED:
            failed += 1
        else:
            draws.append(float(out.value))
    return EmpiricalCdf(np.sort(np.asarray(draws, dtype=float)), n, failed / n if n else 0.0)


# ---------------------------------------------------------------------------
# exact measures of discrete programs


class DiscreteMeasure(dict):
    """Finite map from values to probabilities."""

    @property
    def mass(self):
        return math.fsum(self.values())

    def prob(self, v):
        return self.get(v, 0.0)


def exact_measure(expr: Expr, env: Mapping = None) -> DiscreteMeasure:
    """The measure of a program whose random choices all have finite support.

    Each outcome path contributes the product of its branch probabilities;
    equal results are merged.
    """
    out = DiscreteMeasure()
    for v, p in _enum(expr, dict(env or {})):
        if p > 0.0:
            out[v] = out.get(v, 0.0) + p
    return out


def _bind(dist, k):
    res = []
    for v, p in dist:
        if p == 0.0:
            continue
        for w, q in k(v):
            res.append((w, p * q))
    return res


def _enum_seq(items, env):
    """Joint outcomes of evaluating ``items`` left to right."""
    if not items:
        return [((), 1.0)]
    return _bind(_enum(items[0], env),
                 lambda v: [((v,) + rest, q) for rest, q in _enum_seq(items[1:], env)])


def _enum(e, env) -> List:
    if isinstance(e, Var):
        return [(env[e.name], 1.0)]
    if isinstance(e, Const):
        return [(e.value, 1.0)]
    if isinstance(e, Pair):
        return [((a, b), p) for (a, b), p in _enum_seq([e.fst, e.snd], env)]
    if isinstance(e, Fst):
        return [(v[0], p) for v, p in _enum(e.arg, env)]
    if isinstance(e, Snd):
        return [(v[1], p) for v, p in _enum(e.arg, env)]
    if isinstance(e, Inl):
        return [(InlV(v), p) for v, p in _enum(e.arg, env)]
    if isinstance(e, Inr):
        return [(InrV(v), p) for v, p in _enum(e.arg, env)]
    if isinstance(e, Match):
        def k(v):
            if isinstance(v, InlV):
                return _enum(e.left, {**env, e.left_var: v.value})
            return _enum(e.right, {**env, e.right_var: v.value})
        return _bind(_enum(e.scrut, env), k)
    if isinstance(e, Let):
        return _bind(_enum(e.bound, env), lambda v: _enum(e.body, {**env, e.var: v}))
    if isinstance(e, Prim):
        f = IMPL[e.op]
        return [(f(*args), p) for args, p in _enum_seq(list(e.args), env)]
    if isinstance(e, Fail):
        return []
    if isinstance(e, Random):
        return _bind(_enum(e.arg, env), lambda params: _choices(e, params))
    if isinstance(e, Plate):
        items = [Let(e.var, Const(i), e.body) for i in range(e.size)]
        return [(ArrayV(vs), p) for vs, p in _enum_seq(items, env)]
    if isinstance(e, ArrayLit):
        return [(ArrayV(vs), p) for vs, p in _enum_seq(list(e.items), env)]
    if isinstance(e, Index):
        def k(pair):
            arr, i = pair
            if not 0 <= i < len(arr):
                raise FunError(f"index {i} out of range for array of size {len(arr)}")
            return [(arr[i], 1.0)]
        return _bind(_enum_seq([e.arr, e.index], env), k)
    if isinstance(e, (FromL, FromR)):
        cls = InlV if isinstance(e, FromL) else InrV

        def k(v):
            if isinstance(v, cls):
                return [(v.value, 1.0)]
            return [(default_value(e.type), 1.0)]
        return _bind(_enum(e.arg, env), k)
    if isinstance(e, (IsL, IsR)):
        cls = InlV if isinstance(e, IsL) else InrV
        return [(1.0 if isinstance(v, cls) else 0.0, p) for v, p in _enum(e.arg, env)]
    raise NotFinitelyEnumerable(f"cannot enumerate {type(e).__name__}", getattr(e, "span", None))


def _choices(e: Random, params):
    if e.dist != "Bernoulli":
        raise NotFinitelyEnumerable(
            f"{e.dist} has infinite support; only Bernoulli choices can be enumerated", e.span)
    if not distributions.validate("Bernoulli", params):
        return []
    p = float(params)
    return [(TRUE, p), (FALSE, 1.0 - p)]
