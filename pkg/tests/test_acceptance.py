"""Acceptance criteria 1-11, each at its stated tolerance.

Each test carries a ``criterion`` marker; conftest prints one pass/fail
line per criterion at the end of the run.
"""

import math
import re
import time

import numpy as np
import pytest

from fundens import mcmc
from fundens.compiler import REAL_CONSTANT, CompileError, compile_logpdf, compile_pdf
from fundens.data import flatten, unflatten
from fundens.distributions import make_rng
from fundens.model import load_model, parse_and_elaborate, parse_bindings
from fundens.pretty import pretty_density
from fundens.sampler import FAILED, Sampler, empirical_cdf, exact_measure
from fundens.syntax import Exp, Log, walk
from fundens.types import REAL
from fundens.values import enumerate_values

from corpus import CONTINUOUS, DISCRETE
from helpers import MODELS, core, ks_against_density, param_types, quadrature_cdf
from test_cli import run

EXAMPLES = sorted(p.stem for p in MODELS.glob("*.fun") if p.stem != "point_mass")


def criterion(n, title):
    return pytest.mark.criterion(n, title)


def gauss(m, s, x):
    return math.exp(-0.5 * ((x - m) / s) ** 2) / (s * math.sqrt(2.0 * math.pi))


# --- 1 ------------------------------------------------------------------------

@criterion(1, "two-component mixture matches its closed form on [-4, 8]")
def test_c1_mixture_golden_density():
    t0 = time.perf_counter()
    f = load_model(MODELS / "fig1.fun").main.density()
    params = {"mA": 0.0, "mB": 4.0}
    zs = np.linspace(-4.0, 8.0, 121)
    got = [f.pdf(float(z), params) for z in zs]
    elapsed = time.perf_counter() - t0
    want = [0.7 * gauss(0.0, 1.0, z) + 0.3 * gauss(4.0, 1.0, z) for z in zs]
    dev = max(abs(a - b) for a, b in zip(got, want))
    print(f"max deviation {dev:.2e}, {elapsed:.3f} s")
    assert dev < 1e-6
    assert elapsed < 1.0


# --- 2 ------------------------------------------------------------------------

@criterion(2, "Beta/Bernoulli piecewise density")
def test_c2_beta_bernoulli():
    f = load_model(MODELS / "beta_bernoulli.fun").main.density()
    zs = [-0.5, 0.25, 0.75, 1.25, 1.75, 2.5]
    want = [0.0, 0.75, 0.25, 0.25, 0.75, 0.0]
    for z, w in zip(zs, want):
        assert abs(f.pdf(z) - w) < 1e-6, z


# --- 3 ------------------------------------------------------------------------

@criterion(3, "point-mass program is rejected with RealConstant, exit 1")
def test_c3_point_mass_rejected():
    m = load_model(MODELS / "point_mass.fun")
    with pytest.raises(CompileError) as ex:
        m.main.density()
    assert ex.value.kind == REAL_CONSTANT
    code, out, err = run("compile", MODELS / "point_mass.fun")
    assert code == 1 and out == "" and "RealConstant" in err


# --- 4 ------------------------------------------------------------------------

@criterion(4, "discrete corpus: compiled pmf equals the exact measure")
def test_c4_discrete_soundness():
    assert len(DISCRETE) >= 20
    assert any("depth6" in name for name, _, _ in DISCRETE)
    t0 = time.perf_counter()
    checked = 0
    for name, src, params in DISCRETE:
        e = core(src, params)
        exact = exact_measure(e, params)
        f = compile_pdf(e, param_types(params))
        ints = sorted({*range(-2, 12), *(x for x in exact if isinstance(x, int))})
        for v in enumerate_values(f.bound_type, ints=ints):
            assert abs(f.pdf(v, params) - exact.prob(v)) <= 1e-9, (name, v)
            checked += 1
    elapsed = time.perf_counter() - t0
    print(f"{len(DISCRETE)} programs, {checked} points, {elapsed:.2f} s")
    assert elapsed < 10.0


# --- 5 ------------------------------------------------------------------------

N_DRAWS = 100_000


def _continuous_case(name, src, params, seed):
    e = core(src, params)
    f = compile_pdf(e, param_types(params))
    c = empirical_cdf(e, params, N_DRAWS, make_rng(seed))
    ks, total = ks_against_density(f, params, c.points, c.n)
    return ks, total, 1.0 - c.failure_fraction


@criterion(5, "continuous corpus: KS < 0.01 and mass within 0.01")
def test_c5_continuous_soundness():
    names = {name for name, _, _ in CONTINUOUS}
    for rule in ("scale", "plus_det", "plus_rnd", "exp", "inverse"):
        assert rule in names
    passed = 0
    for k, (name, src, params) in enumerate(CONTINUOUS):
        ks, total, ok_mass = _continuous_case(name, src, params, 1000 + k)
        print(f"{name:20s} KS {ks:.4f}  mass {total:.4f} vs {ok_mass:.4f}")
        assert ks < 0.01, name
        assert abs(total - ok_mass) < 0.01, name
        passed += 1
    assert passed >= 10


# --- 6 ------------------------------------------------------------------------

@criterion(6, "every corpus density integrates to at most 1 + 1e-6")
def test_c6_normalization():
    for name, src, params in DISCRETE:
        f = compile_pdf(core(src, params), param_types(params))
        total = sum(f.pdf(v, params) for v in enumerate_values(f.bound_type, ints=range(-60, 61)))
        assert total <= 1.0 + 1e-6, name
    for k, (name, src, params) in enumerate(CONTINUOUS):
        e = core(src, params)
        f = compile_pdf(e, param_types(params))
        pts = empirical_cdf(e, params, 2000, make_rng(k)).points
        cuts = np.unique(np.quantile(pts, np.linspace(0.0, 1.0, 21))) if len(pts) else [0.0]
        _, total = quadrature_cdf(f, params, cuts)
        assert total <= 1.0 + 1e-6, name


# --- 7 ------------------------------------------------------------------------

@criterion(7, "compile output is byte-identical across 5 runs")
def test_c7_determinism():
    for name in EXAMPLES + ["point_mass"]:
        for flags in ([], ["--log"]):
            outs = {run("compile", *flags, MODELS / f"{name}.fun") for _ in range(5)}
            assert len(outs) == 1, name


# --- shared point sets for 8 and 9 ----------------------------------------------

def _model_points(name, n=100, seed=0):
    """(program, env, points) for every program of an example model.

    Points are sampler draws, half of them with every real leaf jittered so
    that some fall outside the support.
    """
    m = load_model(MODELS / f"{name}.fun")
    rng = np.random.default_rng(seed)
    out = []
    for prog in m.programs():
        env = {k: v for k, v in m.defaults.items() if k in prog.free_params}
        if prog is m.model:
            env[m.model_param] = mcmc.prior_drawer(m.prior.expr, m.constants)(rng)
        s = Sampler(prog.expr, {**m.constants, **env})
        pts = []
        while len(pts) < n:
            r = s.draw(rng)
            if r is FAILED:
                continue
            v = r.value
            if len(pts) % 2:
                cells = [c + rng.normal(0.0, 0.5) if isinstance(c, float) else c
                         for c in flatten(v, prog.type)]
                v = unflatten(cells, prog.type)
            pts.append(v)
        out.append((prog, env, pts))
    return out


def _pretty_has_trivial_terms(text):
    return re.search(r"\+ 0(\.0*)?(?![\d.e])", text) is not None or "log(exp(" in text


@criterion(8, "peephole optimizer preserves densities; MoG output is clean")
@pytest.mark.parametrize("name", EXAMPLES)
def test_c8_peephole_soundness(name):
    for prog, env, pts in _model_points(name):
        for log in (False, True):
            opt = prog.density(log=log)
            raw = prog.density(log=log, optimize=False)
            for v in pts:
                a, b = opt(v, env), raw(v, env)
                if log:
                    assert a == pytest.approx(b, rel=1e-9, abs=1e-12), (prog.name, v)
                else:
                    assert a == pytest.approx(b, rel=1e-9, abs=1e-300), (prog.name, v)
    if name == "mog":
        m = load_model(MODELS / "mog.fun")
        for prog in m.programs():
            for log in (False, True):
                f = prog.density(log=log)
                assert not any(isinstance(x, Log) and isinstance(x.arg, Exp) for x in walk(f.body))
                assert not _pretty_has_trivial_terms(pretty_density(f))


# --- 9 ------------------------------------------------------------------------

@criterion(9, "exp(logpdf) equals pdf for every example model")
@pytest.mark.parametrize("name", EXAMPLES)
def test_c9_log_space_consistency(name):
    compared = 0
    for prog, env, pts in _model_points(name, seed=1):
        f, g = prog.density(), prog.density(log=True)
        for v in pts:
            p = f(v, env)
            if p > 1e-300:
                assert math.exp(g(v, env)) == pytest.approx(p, rel=1e-9), (prog.name, v)
                compared += 1
    assert compared > 0


# --- 10 -----------------------------------------------------------------------

def _posterior(m, data):
    post = mcmc.build_posterior(m.prior.density(log=True), m.model.density(log=True), data,
                                m.model_param)
    space = mcmc.ParamSpace.from_prior(m.prior.expr, m.prior.type, m.constants)
    return post, space, mcmc.prior_drawer(m.prior.expr, m.constants)


def _synthetic(m, truth, seed):
    w = parse_bindings([f"{m.model_param}={truth}"], {m.model_param: m.model.params[m.model_param]})
    s = Sampler(m.model.expr, {**m.constants, **w})
    return s.draw(make_rng(seed)).value


@criterion(10, "inference recovers the generating parameters")
def test_c10a_linear_regression():
    t0 = time.perf_counter()
    m = load_model(MODELS / "linreg.fun")
    y = _synthetic(m, "{a=2.0; b=-1.0; noise=0.5}", seed=0)
    post, space, draw = _posterior(m, [y])
    (c,) = mcmc.run_chains(post, space, mcmc.McmcConfig(seed=11), draw)
    elapsed = time.perf_counter() - t0
    s = {x.name: x for x in mcmc.summarize(c)}
    print(mcmc.format_summary(list(s.values())), f"{elapsed:.1f} s")
    for k, truth in (("a", 2.0), ("b", -1.0), ("noise", 0.5)):
        assert abs(s[k].mean - truth) < 3 * s[k].sd, k
    # least squares on the same data: the posterior under flat priors centres there
    xs, ys = np.asarray(m.constants["xs"]), np.asarray(y)
    (a, b), *_ = np.linalg.lstsq(np.vstack([xs, np.ones_like(xs)]).T, ys, rcond=None)
    assert abs(s["a"].mean - a) < 0.5 * s["a"].sd
    assert abs(s["b"].mean - b) < 0.5 * s["b"].sd
    assert elapsed < 60.0


MOG_TRUTH = "{bias=0.7; mean=[|0.0; 4.0|]; sd=[|1.0; 1.0|]}"


@criterion(10, "inference recovers the generating parameters")
def test_c10b_mixture_of_gaussians():
    t0 = time.perf_counter()
    m = load_model(MODELS / "mog.fun")
    y = _synthetic(m, MOG_TRUTH, seed=20)
    post, space, draw = _posterior(m, [y])
    (c,) = mcmc.run_chains(post, space, mcmc.McmcConfig(seed=21), draw)
    elapsed = time.perf_counter() - t0
    s = {x.name: x.mean for x in mcmc.summarize(c)}
    means = (s["mean[0]"], s["mean[1]"])
    print(f"means {means[0]:.3f} {means[1]:.3f}, bias {s['bias']:.3f}, {elapsed:.1f} s")
    err = min(max(abs(means[0] - 0.0), abs(means[1] - 4.0)),
              max(abs(means[0] - 4.0), abs(means[1] - 0.0)))
    assert err < 0.5
    assert elapsed < 120.0


CONJUGATE = """
let prior () = random(Gaussian(0.0, 2.0))
let xs = [| for i in 1..50 -> () |]
let model mu = [| for x in xs -> random(Gaussian(mu, 1.0)) |]
"""


@criterion(10, "inference recovers the generating parameters")
def test_c10c_conjugate_gaussian_mean():
    m = parse_and_elaborate(CONJUGATE)
    y = _synthetic(m, "1.5", seed=30)
    post, space, draw = _posterior(m, [y])
    (c,) = mcmc.run_chains(post, space, mcmc.McmcConfig(samples=20_000, seed=31), draw)
    s = mcmc.summarize(c)[0]
    # closed form: prior N(0, 2^2), unit-variance likelihood, 50 points
    prec = 1.0 / 4.0 + 50.0
    mean, sd = sum(y) / prec, 1.0 / math.sqrt(prec)
    print(f"posterior {s.mean:.4f} +- {s.sd:.4f}, closed form {mean:.4f} +- {sd:.4f}")
    assert abs(s.mean - mean) <= 0.05 * abs(mean)
    assert abs(s.sd - sd) <= 0.05 * sd


# --- 11 -----------------------------------------------------------------------

@criterion(11, "every compiled density body typechecks as real")
def test_c11_type_preservation():
    count = 0
    for name, src, params in DISCRETE + CONTINUOUS:
        e = core(src, params)
        for comp in (compile_pdf, compile_logpdf):
            for opt in (False, True):
                f = comp(e, param_types(params), optimize=opt)
                assert f.typecheck() == REAL, name
                count += 1
    for name in EXAMPLES:
        for prog in load_model(MODELS / f"{name}.fun").programs():
            for log in (False, True):
                assert prog.density(log=log).typecheck() == REAL
                count += 1
    print(f"{count} densities typecheck as real")
