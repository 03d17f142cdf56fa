"""The density compiler: rules, failures, determinism and soundness checks."""

import math

import numpy as np
import pytest
from scipy import stats

from fundens.compiler import (NO_DENSITY, NON_INVERTIBLE, REAL_CONSTANT, TUPLE_NOT_VARS,
                              CompileError, DetEntry, ProbContext, RandEntry, compile_logpdf,
                              compile_pdf, dens, explain_failure, marg)
from fundens.errors import VarNotRandom
from fundens.pretty import pretty, pretty_density
from fundens.sampler import exact_measure
from fundens.syntax import Const, Integral, LogProdBy, Prim, Var, walk
from fundens.types import BOOL, REAL
from fundens.values import enumerate_values

from corpus import CONTINUOUS, DISCRETE
from helpers import core, param_types, pdf_of

ALL = DISCRETE + CONTINUOUS


def gauss(m, s, x):
    return stats.norm(m, s).pdf(x)


# --- marg ---------------------------------------------------------------------

def test_marg_integrates_the_other_random_variables():
    ctx = ProbContext([RandEntry("branch", BOOL), RandEntry("temp", REAL),
                       DetEntry("result", Prim("add", (Var("temp"), Var("mB"))), REAL)])
    out = marg(ctx, ["temp"], Prim("mul", (Var("E"), Var("result"))))
    assert isinstance(out, Integral) and out.binders == (("branch", BOOL),)
    assert pretty(out.body) == "E * (temp + mB)"


def test_marg_without_anything_to_integrate():
    out = marg(ProbContext([RandEntry("x", REAL)]), ["x"], Var("E"))
    assert out == Integral((), Var("E"))
    assert marg(ProbContext(), [], Const(1.0)) == Integral((), Const(1.0))


def test_marg_rejects_deterministic_variables():
    ctx = ProbContext([RandEntry("x", REAL), DetEntry("y", Var("x"), REAL)])
    with pytest.raises(VarNotRandom):
        marg(ctx, ["y"], Const(1.0))


def test_dens_in_a_context():
    ctx = ProbContext([RandEntry("x", REAL)])
    z, F = dens(ctx, Const(1.0), Var("x"), {})
    assert z == "x" and F == Integral((), Const(1.0))


# --- the examples ---------------------------------------------------------------

def test_mixture_of_figure_one():
    f = pdf_of(open_model("fig1.fun"), {"mA": 0.0, "mB": 4.0})
    for z in np.linspace(-4.0, 8.0, 25):
        for mA, mB in ((0.0, 4.0), (1.0, -2.0)):
            want = 0.7 * gauss(mA, 1.0, z) + 0.3 * gauss(mB, 1.0, z)
            assert f.pdf(float(z), {"mA": mA, "mB": mB}) == pytest.approx(want, abs=1e-9)


def open_model(name):
    from helpers import MODELS
    text = (MODELS / name).read_text()
    # the model files declare their parameters on "param" lines
    return "\n".join(line for line in text.splitlines()
                     if not line.startswith(("param", "//")))


def test_fail_has_zero_density():
    f = pdf_of("fail:real")
    assert f.body == Const(0.0)
    assert compile_logpdf(core("fail:real")).pdf(0.3) == 0.0


def test_point_mass_is_rejected():
    with pytest.raises(CompileError) as ex:
        pdf_of("if flip 0.7 then random(Gaussian(0.0, 1.0)) else 4.0")
    assert ex.value.kind == REAL_CONSTANT
    with pytest.raises(CompileError) as ex:
        pdf_of("4.0")
    assert ex.value.kind == REAL_CONSTANT


def test_beta_bernoulli_is_piecewise_linear():
    f = pdf_of("let p = random(Beta(1.0, 1.0)) in let b = random(Bernoulli(p)) in"
               " if b then p + 1.0 else p")
    for z in np.linspace(-0.5, 2.5, 61):
        want = (z - 1.0 if 1.0 <= z <= 2.0 else 0.0) + (1.0 - z if 0.0 <= z <= 1.0 else 0.0)
        assert f.pdf(float(z)) == pytest.approx(want, abs=1e-9)


def test_shift_by_a_parameter():
    f = pdf_of("random(Gaussian(0.0, 1.0)) + r", {"r": 0.0})
    for r in (-2.0, 0.5, 3.0):
        for z in np.linspace(-5.0, 5.0, 21):
            assert f.pdf(float(z), {"r": r}) == pytest.approx(gauss(r, 1.0, z), rel=1e-12)


def test_iid_array_compiles_to_a_log_product():
    src = "[| for i in 0..9 -> random(Gaussian(mu, 1.0)) |]"
    g = pdf_of(src, {"mu": 0.0}, log=True)
    assert any(isinstance(n, LogProdBy) for n in walk(g.body))
    xs = np.linspace(-1.0, 2.0, 10)
    want = stats.norm(0.5, 1.0).logpdf(xs).sum()
    assert g(tuple(float(x) for x in xs), {"mu": 0.5}) == pytest.approx(want, rel=1e-12)


# --- failures and their explanations --------------------------------------------

@pytest.mark.parametrize("src,kind,phrase", [
    ("if flip 0.7 then random(Gaussian(0.0, 1.0)) else 4.0", REAL_CONSTANT, "point mass at 4.0"),
    ("let x = random(Gaussian(0.0, 1.0)) in let y = random(Gaussian(0.0, 1.0)) in (x, y + 3.0)",
     TUPLE_NOT_VARS, "distinct random variables"),
    ("(0.0, random(Uniform(0.0, 1.0)))", NO_DENSITY, "mixes deterministic and random"),
    ("log(random(Gaussian(0.0, 1.0)))", NON_INVERTIBLE, "non-negative"),
    ("random(Gaussian(0.0, 1.0)) * random(Gaussian(0.0, 1.0))", NON_INVERTIBLE, "product"),
])
def test_failures_are_explained(src, kind, phrase):
    with pytest.raises(CompileError) as ex:
        pdf_of(src)
    err = ex.value
    assert err.kind == kind and err.span is not None and err.rule
    text = explain_failure(err)
    assert phrase in text and "offending term" in text


# --- properties -----------------------------------------------------------------

@pytest.mark.parametrize("name,src,params", ALL, ids=[c[0] for c in ALL])
def test_compilation_is_deterministic(name, src, params):
    a = pretty_density(pdf_of(src, params))
    b = pretty_density(pdf_of(src, params))
    assert a == b
    assert pdf_of(src, params) == pdf_of(src, params)


@pytest.mark.parametrize("name,src,params", ALL, ids=[c[0] for c in ALL])
def test_type_preservation(name, src, params):
    for log in (False, True):
        for opt in (False, True):
            f = pdf_of(src, params, log=log, optimize=opt)
            f.check_real()


@pytest.mark.parametrize("name,src,params", DISCRETE, ids=[c[0] for c in DISCRETE])
def test_discrete_soundness(name, src, params):
    e = core(src, params)
    exact = exact_measure(e, params)
    f = compile_pdf(e, param_types(params))
    for v in enumerate_values(f.bound_type, ints=sorted({*range(-2, 12), *(
            x for x in exact if isinstance(x, int))})):
        assert f.pdf(v, params) == pytest.approx(exact.prob(v), abs=1e-9), v


def test_scale_rule():
    base = pdf_of("random(Gamma(2.0, 1.5))")
    for c in (2.0, -0.5, 3.0):
        f = pdf_of(f"{c!r} * random(Gamma(2.0, 1.5))")
        for z in np.linspace(-6.0, 6.0, 49):
            assert f.pdf(float(z)) == pytest.approx(base.pdf(z / c) / abs(c), rel=1e-12, abs=1e-300)


def test_exp_rule_is_zero_off_the_positive_axis():
    f = pdf_of("exp(random(Gaussian(0.0, 1.0)))")
    assert f.pdf(0.0) == 0.0 and f.pdf(-1.0) == 0.0
    for z in (0.1, 1.0, 4.0):
        assert f.pdf(z) == pytest.approx(stats.lognorm(1.0).pdf(z), rel=1e-12)


def test_log_rule_accepts_nonnegative_arguments():
    f = pdf_of("log(random(Gamma(2.0, 1.0)))")
    for z in (-2.0, 0.0, 1.5):
        want = stats.gamma(2.0).pdf(math.exp(z)) * math.exp(z)
        assert f.pdf(z) == pytest.approx(want, rel=1e-12)


def test_inverse_rule():
    f = pdf_of("1.0 / random(Gamma(3.0, 0.5))")
    for z in (0.2, 1.0, 5.0):
        assert f.pdf(z) == pytest.approx(stats.invgamma(3.0, scale=2.0).pdf(z), rel=1e-9)


def test_plus_rnd_rule_convolves():
    f = pdf_of("random(Gaussian(0.0, 1.0)) + random(Gaussian(1.0, 2.0))")
    for z in np.linspace(-6.0, 8.0, 15):
        assert f.pdf(float(z)) == pytest.approx(gauss(1.0, math.sqrt(5.0), z), rel=1e-6)


def test_match_density_is_the_sum_of_branch_densities():
    both = pdf_of("if flip 0.3 then random(Gaussian(-1.0, 0.5)) else random(Gamma(2.0, 1.0))")
    left = pdf_of("if flip 0.3 then random(Gaussian(-1.0, 0.5)) else fail")
    right = pdf_of("if flip 0.3 then fail else random(Gamma(2.0, 1.0))")
    for z in np.linspace(-3.0, 6.0, 37):
        assert both.pdf(float(z)) == pytest.approx(left.pdf(z) + right.pdf(z), rel=1e-12)


@pytest.mark.parametrize("name,src,params", ALL, ids=[c[0] for c in ALL])
def test_log_density_matches_density(name, src, params):
    f = pdf_of(src, params)
    g = pdf_of(src, params, log=True)
    rng = np.random.default_rng(4)
    for v in _points(f.bound_type, rng, 20):
        p = f.pdf(v, params)
        if p > 1e-300:
            assert math.exp(g(v, params)) == pytest.approx(p, rel=1e-9)
        else:
            assert g.pdf(v, params) == pytest.approx(p, abs=1e-300)


@pytest.mark.parametrize("name,src,params", ALL, ids=[c[0] for c in ALL])
def test_optimizer_preserves_densities(name, src, params):
    f = pdf_of(src, params)
    raw = pdf_of(src, params, optimize=False)
    rng = np.random.default_rng(5)
    for v in _points(f.bound_type, rng, 20):
        assert f.pdf(v, params) == pytest.approx(raw.pdf(v, params), rel=1e-9, abs=1e-300)


def _points(t, rng, n):
    if t == REAL:
        return [float(x) for x in rng.uniform(-3.0, 6.0, n)]
    return list(enumerate_values(t, ints=range(-1, 10)))
