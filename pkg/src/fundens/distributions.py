"""Primitive distribution families.

Parameters are Fun values: a bare float for one-argument families and a
pair ``(a, b)`` otherwise.  Densities are taken with respect to the stock
measure of the result type (counting measure for bool/int, Lebesgue for
real).  Invalid parameters give density 0, consistent with drawing from
them failing.

``pdf``/``log_pdf`` also accept numpy arrays for the parameters and the
point; this is what vectorised plate evaluation relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import special

from .errors import ArityMismatch
from .types import BOOL, INT, REAL, FunType, tuple_type
from .values import FALSE, TRUE, InlV

NEG_INF = float("-inf")
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class Failure(Exception):
    """A draw with invalid parameters: the semantics of ``fail``."""


@dataclass(frozen=True)
class DistFamily:
    name: str
    arg_names: Tuple[str, ...]
    arg_types: Tuple[FunType, ...]
    result: FunType
    _valid: Callable
    _log_pdf: Callable
    _sample: Callable

    @property
    def arity(self):
        return len(self.arg_names)

    @property
    def arg_type(self) -> FunType:
        return tuple_type(self.arg_types)


def _unpack(d: DistFamily, params):
    if d.arity == 1:
        if isinstance(params, tuple) and not isinstance(params, np.ndarray):
            raise ArityMismatch(f"{d.name} expects 1 argument, got {params!r}")
        return (params,)
    if not (isinstance(params, tuple) and len(params) == 2):
        raise ArityMismatch(f"{d.name} expects {d.arity} arguments, got {params!r}")
    return params


def _is_arr(*xs):
    return any(isinstance(x, np.ndarray) for x in xs)


# -- Bernoulli ---------------------------------------------------------------

def _bern_valid(p):
    return (0.0 <= p) & (p <= 1.0)


def _bern_log_pdf(x, p):
    if _is_arr(x, p):
        x = _bool_array(x)
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x, np.log(p), np.log1p(-p))
        return np.where(_bern_valid(p), out, NEG_INF)
    if not 0.0 <= p <= 1.0:
        return NEG_INF
    q = p if isinstance(x, InlV) else 1.0 - p
    return math.log(q) if q > 0.0 else NEG_INF


def _bool_array(x):
    if isinstance(x, np.ndarray):
        return x.astype(bool)
    return np.bool_(isinstance(x, InlV))


def _bern_sample(rng, p):
    return TRUE if rng.random() < p else FALSE


# -- Poisson -----------------------------------------------------------------

def _pois_valid(r):
    return r > 0.0


def _pois_log_pdf(n, r):
    if _is_arr(n, r):
        n = np.asarray(n, dtype=float)
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = special.xlogy(n, r) - r - special.gammaln(n + 1.0)
        return np.where((r > 0) & (n >= 0), out, NEG_INF)
    if not r > 0.0 or n < 0:
        return NEG_INF
    return n * math.log(r) - r - math.lgamma(n + 1.0)


def _pois_sample(rng, r):
    return int(rng.poisson(r))


# -- Gaussian (mean, standard deviation) ---------------------------------------

def _gauss_valid(m, s):
    return s > 0.0


def _gauss_log_pdf(x, m, s):
    if _is_arr(x, m, s):
        x, m, s = (np.asarray(v, dtype=float) for v in (x, m, s))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.log(s) - LOG_SQRT_2PI - 0.5 * ((x - m) / s) ** 2
        return np.where(s > 0, out, NEG_INF)
    if not s > 0.0:
        return NEG_INF
    d = (x - m) / s
    return -math.log(s) - LOG_SQRT_2PI - 0.5 * d * d


def _gauss_sample(rng, m, s):
    return float(rng.normal(m, s))


# -- Beta --------------------------------------------------------------------

def _beta_valid(a, b):
    return (a > 0.0) & (b > 0.0)


def _beta_log_pdf(x, a, b):
    if _is_arr(x, a, b):
        x, a, b = (np.asarray(v, dtype=float) for v in (x, a, b))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = special.xlogy(a - 1.0, x) + special.xlog1py(b - 1.0, -x) - special.betaln(a, b)
        return np.where((a > 0) & (b > 0) & (x >= 0) & (x <= 1), out, NEG_INF)
    if not (a > 0.0 and b > 0.0) or not 0.0 <= x <= 1.0:
        return NEG_INF
    return float(special.xlogy(a - 1.0, x) + special.xlog1py(b - 1.0, -x) - special.betaln(a, b))


def _beta_sample(rng, a, b):
    return float(rng.beta(a, b))


# -- Gamma (shape, scale) ------------------------------------------------------

def _gamma_valid(k, theta):
    return (k > 0.0) & (theta > 0.0)


def _gamma_log_pdf(x, k, theta):
    if _is_arr(x, k, theta):
        x, k, theta = (np.asarray(v, dtype=float) for v in (x, k, theta))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (special.xlogy(k - 1.0, x) - x / theta - special.gammaln(k)
                   - k * np.log(theta))
        return np.where((k > 0) & (theta > 0) & (x >= 0), out, NEG_INF)
    if not (k > 0.0 and theta > 0.0) or x < 0.0:
        return NEG_INF
    return float(special.xlogy(k - 1.0, x)) - x / theta - math.lgamma(k) - k * math.log(theta)


def _gamma_sample(rng, k, theta):
    return float(rng.gamma(k, theta))


# -- Uniform(lo, hi) -----------------------------------------------------------

def _unif_valid(lo, hi):
    return lo < hi


def _unif_log_pdf(x, lo, hi):
    if _is_arr(x, lo, hi):
        x, lo, hi = (np.asarray(v, dtype=float) for v in (x, lo, hi))
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -np.log(hi - lo)
        return np.where((lo < hi) & (x >= lo) & (x <= hi), out, NEG_INF)
    if not lo < hi or not lo <= x <= hi:
        return NEG_INF
    return -math.log(hi - lo)


def _unif_sample(rng, lo, hi):
    return float(rng.uniform(lo, hi))


FAMILIES = {
    d.name: d
    for d in [
        DistFamily("Bernoulli", ("bias",), (REAL,), BOOL, _bern_valid, _bern_log_pdf, _bern_sample),
        DistFamily("Poisson", ("rate",), (REAL,), INT, _pois_valid, _pois_log_pdf, _pois_sample),
        DistFamily("Gaussian", ("mean", "stdev"), (REAL, REAL), REAL,
                   _gauss_valid, _gauss_log_pdf, _gauss_sample),
        DistFamily("Beta", ("a", "b"), (REAL, REAL), REAL, _beta_valid, _beta_log_pdf, _beta_sample),
        DistFamily("Gamma", ("shape", "scale"), (REAL, REAL), REAL,
                   _gamma_valid, _gamma_log_pdf, _gamma_sample),
        DistFamily("Uniform", ("lo", "hi"), (REAL, REAL), REAL,
                   _unif_valid, _unif_log_pdf, _unif_sample),
    ]
}


def family(name: str) -> DistFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise KeyError(f"unknown distribution '{name}'") from None


def validate(name: str, params) -> bool:
    d = family(name)
    return bool(d._valid(*_unpack(d, params)))


def log_pdf(name: str, params, x):
    d = family(name)
    return d._log_pdf(x, *_unpack(d, params))


def pdf(name: str, params, x):
    if name == "Bernoulli" and not _is_arr(params, x):
        if not 0.0 <= params <= 1.0:
            return 0.0
        return params if isinstance(x, InlV) else 1.0 - params
    lp = log_pdf(name, params, x)
    if isinstance(lp, np.ndarray):
        return np.exp(lp)
    return math.exp(lp) if lp != NEG_INF else 0.0


def sample_dist(name: str, params, rng: np.random.Generator):
    """One draw; raises :class:`Failure` on invalid parameters."""
    d = family(name)
    args = _unpack(d, params)
    if not d._valid(*args):
        raise Failure(f"{name}{args} has invalid parameters")
    return d._sample(rng, *args)


def make_rng(seed=None) -> np.random.Generator:
    """A seedable deterministic stream of pseudo-random numbers."""
    return np.random.default_rng(seed)


def poisson_upper(rate: float, tail_tol: float = 1e-12) -> int:
    """Smallest N with P(n <= N) > 1 - tail_tol."""
    if not rate > 0.0:
        return 0
    total = 0.0
    n = 0
    logp = -rate
    while True:
        total += math.exp(logp)
        if total > 1.0 - tail_tol or n > rate + 50.0 * math.sqrt(rate) + 100:
            return n
        n += 1
        logp += math.log(rate) - math.log(n)


def support_window(name: str, params):
    """A closed interval carrying all but a negligible part of the mass.

    Returns ``(lo, hi, centre)`` for real-valued families, or ``None`` when
    the parameters are invalid.
    """
    d = family(name)
    args = _unpack(d, params)
    if not d._valid(*args):
        return None
    if name == "Gaussian":
        m, s = args
        return m - 10.0 * s, m + 10.0 * s, m
    if name == "Uniform":
        lo, hi = args
        return lo, hi, 0.5 * (lo + hi)
    if name == "Beta":
        a, b = args
        return 0.0, 1.0, a / (a + b)
    if name == "Gamma":
        k, theta = args
        from scipy.stats import gamma
        return 0.0, float(gamma.isf(1e-15, k, scale=theta)), k * theta
    return None
