"""Shared helpers for the test suite."""

import math
import warnings
from pathlib import Path

import numpy as np
from scipy import integrate

from fundens.compiler import compile_logpdf, compile_pdf
from fundens.desugar import desugar
from fundens.parser import parse_expr
from fundens.typecheck import const_type

MODELS = Path(__file__).resolve().parents[1] / "src" / "fundens" / "models"


def param_types(params):
    return {k: const_type(v) for k, v in params.items()}


def core(src, params=None):
    return desugar(parse_expr(src), param_types(params or {}))


def pdf_of(src, params=None, log=False, optimize=True):
    e = core(src, params)
    comp = compile_logpdf if log else compile_pdf
    return comp(e, param_types(params or {}), optimize=optimize)


def quad(g, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return integrate.quad(g, a, b, limit=500, epsabs=1e-10, epsrel=1e-9)[0]


def _stretch(g, a, b):
    # geometric breakpoints towards ``a`` catch narrow mass right next to it
    d = b - a
    cuts = [a + d * 2.0 ** -k for k in range(30, -1, -1)]
    return sum(quad(g, lo, hi) for lo, hi in zip([a] + cuts, cuts))


def quadrature_cdf(f, params, xs):
    """CDF of the density ``f`` at the increasing points ``xs`` plus its total mass.

    Integrates piecewise between consecutive points, with infinite tails at
    both ends.
    """
    g = lambda x: f.pdf(float(x), params)
    h = lambda x: g(-x)
    xs = list(xs)
    # finite stretches next to the outer points keep kinks there away from
    # the infinite-interval transform
    w = max(1.0, xs[-1] - xs[0])
    out = []
    acc = quad(g, -math.inf, xs[0] - w) + _stretch(h, -xs[0], -xs[0] + w)
    out.append(acc)
    for a, b in zip(xs, xs[1:]):
        acc += quad(g, a, b)
        out.append(acc)
    total = acc + _stretch(g, xs[-1], xs[-1] + w) + quad(g, xs[-1] + w, math.inf)
    return np.asarray(out), total


def ks_against_density(f, params, draws, n_total, n_grid=200):
    """KS distance between the draws (as a sub-distribution over ``n_total``
    runs) and the quadrature CDF of ``f``, measured at empirical quantiles."""
    draws = np.sort(np.asarray(draws, dtype=float))
    qs = np.unique(np.quantile(draws, np.linspace(0.0, 1.0, n_grid)))
    cdf, total = quadrature_cdf(f, params, qs)
    emp_right = np.searchsorted(draws, qs, side="right") / n_total
    emp_left = np.searchsorted(draws, qs, side="left") / n_total
    ks = max(np.max(np.abs(emp_right - cdf)), np.max(np.abs(emp_left - cdf)))
    return float(ks), float(total)
