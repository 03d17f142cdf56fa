"""Adaptive Metropolis-Hastings: posteriors, chains and summaries."""

import math

import numpy as np
import pytest
from scipy import stats

from fundens import mcmc
from fundens.errors import EmptyChain, FunError, NoValidStartPoint, TypeMismatch
from fundens.mcmc import Chain, McmcConfig, ParamSpace, Slot
from fundens.model import parse_and_elaborate
from fundens.types import INT, REAL, Prod
from fundens.values import FALSE, TRUE, ArrayV

from helpers import pdf_of


def std_normal(w):
    return -0.5 * w * w


def test_gaussian_target_moments():
    space = ParamSpace([Slot("x")])
    cfg = McmcConfig(burnin=2000, samples=100_000, seed=1)
    c = mcmc.run_chain(std_normal, space, cfg, np.random.default_rng(1), start=0.0)
    x = c.draws[:, 0]
    assert abs(x.mean()) < 0.05
    assert abs(x.std() - 1.0) < 0.05
    s = mcmc.summarize(c)[0]
    assert abs(s.q50) < 0.05
    assert s.q025 <= s.q50 <= s.q975


def test_independent_slots_are_uncorrelated():
    space = ParamSpace([Slot("x"), Slot("y")], Prod(REAL, REAL))
    post = lambda w: -0.5 * (w[0] ** 2 + (w[1] - 3.0) ** 2 / 4.0)
    cfg = McmcConfig(burnin=2000, samples=50_000, seed=2)
    c = mcmc.run_chain(post, space, cfg, np.random.default_rng(2), start=(0.0, 3.0))
    r = np.corrcoef(c.draws[:, 0], c.draws[:, 1])[0, 1]
    assert abs(r) < 0.05
    assert abs(c.draws[:, 1].mean() - 3.0) < 0.1


def test_two_point_detailed_balance():
    # an int slot on {0, 1} with target probabilities 0.3 and 0.7
    space = ParamSpace([Slot("k", INT, 0, 1, 1.0)], INT)
    post = lambda k: math.log(0.3 if k == 0 else 0.7)
    cfg = McmcConfig(burnin=1000, samples=1_000_000, seed=3)
    c = mcmc.run_chain(post, space, cfg, np.random.default_rng(3), start=0)
    assert abs(np.mean(c.draws[:, 0] == 1.0) - 0.7) < 0.01


def test_reflection_keeps_draws_in_bounds():
    space = ParamSpace([Slot("p", REAL, 0.0, 1.0, 0.5)])
    post = lambda p: math.log(p) + 4.0 * math.log1p(-p) if 0.0 < p < 1.0 else -math.inf
    cfg = McmcConfig(burnin=1000, samples=20_000, seed=4)
    c = mcmc.run_chain(post, space, cfg, np.random.default_rng(4), start=0.3)
    x = c.draws[:, 0]
    assert x.min() >= 0.0 and x.max() <= 1.0
    assert abs(x.mean() - 2.0 / 7.0) < 0.02


def test_adaptation_only_during_burnin():
    space = ParamSpace([Slot("x", scale=100.0)])
    cfg = McmcConfig(burnin=3000, samples=3000, seed=5)
    c = mcmc.run_chain(std_normal, space, cfg, np.random.default_rng(5), start=0.0)
    assert len(c.scales) == cfg.burnin // cfg.adapt_interval + 1
    assert c.scales[-1][0] < 100.0  # shrank towards the acceptance band
    assert 0.15 < c.acceptance[0] < 0.5


def test_fixed_seed_gives_identical_chains():
    m = parse_and_elaborate(LINREG_SMALL)
    post, space, draw = _setup(m, _linreg_data(m, seed=0))
    cfg = McmcConfig(burnin=300, samples=300, seed=42, chains=2)
    a = mcmc.run_chains(post, space, cfg, draw)
    b = mcmc.run_chains(post, space, cfg, draw)
    assert [c.to_csv() for c in a] == [c.to_csv() for c in b]
    assert a[0].to_csv() != a[1].to_csv()


def test_no_valid_start_point():
    space = ParamSpace([Slot("x", REAL, 0.0, 1.0, 0.1)])
    with pytest.raises(NoValidStartPoint):
        mcmc.find_start(lambda w: -math.inf, space, None, np.random.default_rng(0), attempts=50)


def test_summaries():
    c = Chain(["x"], np.full((10, 1), 3.0), np.zeros(1), np.full(1, 10.0))
    s = mcmc.summarize(c)[0]
    assert (s.mean, s.sd, s.q025, s.q975) == (3.0, 0.0, 3.0, 3.0)
    with pytest.raises(EmptyChain):
        mcmc.summarize(Chain(["x"], np.zeros((0, 1)), np.zeros(1), np.zeros(1)))
    assert "parameter" in mcmc.format_summary([s])


def test_config_validation():
    with pytest.raises(FunError):
        McmcConfig(samples=0)
    with pytest.raises(FunError):
        McmcConfig(target_acceptance=1.0)
    with pytest.raises(FunError):
        Slot("x", REAL, 1.0, 1.0)


# --- posteriors -----------------------------------------------------------------

def test_empty_data_gives_the_prior():
    prior = pdf_of("random(Uniform(0.0, 1.0))", log=True)
    lik = pdf_of("flip w", {"w": 0.5}, log=True)
    post = mcmc.build_posterior(prior, lik, [])
    assert post(0.3) == 0.0 and post(2.0) == -math.inf


def test_bernoulli_likelihood():
    prior = pdf_of("random(Uniform(0.0, 1.0))", log=True)
    lik = pdf_of("flip w", {"w": 0.5}, log=True)
    post = mcmc.build_posterior(prior, lik, [TRUE])
    assert post(0.7) == pytest.approx(math.log(0.7))
    post = mcmc.build_posterior(prior, lik, [TRUE, FALSE, FALSE])
    assert post(0.7) == pytest.approx(math.log(0.7 * 0.3 * 0.3))


def test_posterior_rejects_mistyped_data():
    prior = pdf_of("random(Uniform(0.0, 1.0))", log=True)
    lik = pdf_of("flip w", {"w": 0.5}, log=True)
    with pytest.raises(TypeMismatch):
        mcmc.build_posterior(prior, lik, [1.5])
    other = pdf_of("(random(Uniform(0.0, 1.0)), random(Uniform(0.0, 1.0)))", log=True)
    with pytest.raises(TypeMismatch):
        mcmc.build_posterior(other, lik, [TRUE])


def test_conjugate_gaussian_posterior_shape():
    prior = pdf_of("random(Uniform(-1000.0, 1000.0))", log=True)
    lik = pdf_of("random(Gaussian(w, 1.0))", {"w": 0.0}, log=True)
    xs = np.random.default_rng(8).normal(1.3, 1.0, 100)
    post = mcmc.build_posterior(prior, lik, [float(x) for x in xs])
    ref = stats.norm(xs.mean(), 1.0 / math.sqrt(100))
    for a, b in ((0.9, 1.3), (1.1, 1.6), (-3.0, 5.0)):
        assert post(a) - post(b) == pytest.approx(ref.logpdf(a) - ref.logpdf(b), rel=1e-9)


def test_absorbing_minus_infinity():
    prior = pdf_of("random(Uniform(0.0, 1.0))", log=True)
    lik = pdf_of("random(Uniform(0.0, w))", {"w": 0.5}, log=True)
    post = mcmc.build_posterior(prior, lik, [0.2, 0.9])
    assert post(0.5) == -math.inf and post(0.95) > -math.inf


# --- parameter spaces -------------------------------------------------------------

LINREG_SMALL = """
let prior () =
  { a = random(Uniform(-10.0, 10.0))
    b = random(Uniform(-10.0, 10.0))
    noise = random(Uniform(0.01, 5.0)) }
let xs = [| for i in 0..20 -> real(i) / 10.0 - 1.0 |]
let model w = [| for x in xs -> random(Gaussian(w.a * x + w.b, w.noise)) |]
"""


def _setup(m, data):
    post = mcmc.build_posterior(m.prior.density(log=True), m.model.density(log=True), data,
                                m.model_param)
    space = ParamSpace.from_prior(m.prior.expr, m.prior.type, m.constants)
    return post, space, mcmc.prior_drawer(m.prior.expr, m.constants)


def _linreg_data(m, seed):
    rng = np.random.default_rng(seed)
    xs = np.asarray(m.constants["xs"])
    return [ArrayV(float(y) for y in 2.0 * xs - 1.0 + rng.normal(0.0, 0.5, len(xs)))]


def test_bounds_come_from_uniform_priors():
    m = parse_and_elaborate(LINREG_SMALL)
    space = ParamSpace.from_prior(m.prior.expr, m.prior.type, m.constants)
    assert space.names == ["a", "b", "noise"]
    assert [(s.lo, s.hi) for s in space.slots] == [(-10.0, 10.0), (-10.0, 10.0), (0.01, 5.0)]
    assert space.slots[0].scale == pytest.approx(2.0)


def test_array_slots_and_unbounded_priors():
    m = parse_and_elaborate("let prior () = { m = [| for i in 0..1 -> random(Gaussian(0.0, 1.0)) |];"
                            " s = random(Uniform(1.0, 2.0)) }\nlet model w = random(Gaussian(w.s, 1.0))")
    space = ParamSpace.from_prior(m.prior.expr, m.prior.type, m.constants)
    assert space.names == ["m[0]", "m[1]", "s"]
    assert [s.lo for s in space.slots] == [None, None, 1.0]
    assert space.slots[0].scale == 1.0
    v = space.value([0.5, -0.5, 1.5])
    assert space.flatten(v) == [0.5, -0.5, 1.5]


def test_small_linear_regression_recovers_truth():
    m = parse_and_elaborate(LINREG_SMALL)
    post, space, draw = _setup(m, _linreg_data(m, seed=0))
    cfg = McmcConfig(burnin=2000, samples=4000, seed=7)
    (c,) = mcmc.run_chains(post, space, cfg, draw)
    s = {x.name: x for x in mcmc.summarize(c)}
    # least-squares oracle on the same data
    xs = np.asarray(m.constants["xs"])
    ys = np.asarray(_linreg_data(m, seed=0)[0])
    A = np.vstack([xs, np.ones_like(xs)]).T
    (a, b), *_ = np.linalg.lstsq(A, ys, rcond=None)
    assert abs(s["a"].mean - a) < 3 * s["a"].sd
    assert abs(s["b"].mean - b) < 3 * s["b"].sd
