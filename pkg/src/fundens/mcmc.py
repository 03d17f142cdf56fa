"""Adaptive random-walk Metropolis-Hastings over compiled log-densities.

Parameters are flattened into scalar slots.  Each step proposes a
Gaussian move for every slot in turn (reflected at the slot's bounds) and
accepts it with the usual Metropolis ratio.  During burn-in every slot's
proposal scale is nudged towards a target acceptance band; afterwards the
scales are frozen so the retained draws come from a fixed kernel.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import data as datamod
from .density import DensityFn
from .errors import EmptyChain, FunError, NoValidStartPoint, TypeMismatch
from .evaluate import eval_target
from .sampler import FAILED, Sampler
from .syntax import ArrayLit, Expr, Let, Pair, Plate, Random, Var, free_vars, is_pure
from .types import REAL, Array, FunType, IntT, Prod, RealT
from .values import value_has_type

NEG_INF = float("-inf")
START_ATTEMPTS = 10_000


@dataclass
class Slot:
    name: str
    type: FunType = REAL
    lo: Optional[float] = None
    hi: Optional[float] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.lo is not None and self.hi is not None and not self.lo < self.hi:
            raise FunError(f"slot '{self.name}' has empty range [{self.lo}, {self.hi}]")

    @property
    def is_int(self):
        return isinstance(self.type, IntT)


@dataclass
class ParamSpace:
    """Scalar slots of a parameter value of type ``type``."""
    slots: List[Slot]
    type: FunType = REAL

    def __post_init__(self):
        if not self.slots:
            raise FunError("parameter space has no slots")

    @property
    def names(self):
        return [s.name for s in self.slots]

    def value(self, x: Sequence):
        cells = [int(round(v)) if s.is_int else float(v) for v, s in zip(x, self.slots)]
        return datamod.unflatten(cells, self.type)

    def flatten(self, v) -> List[float]:
        return [float(c) for c in datamod.flatten(v, self.type)]

    @classmethod
    def of_type(cls, t: FunType, bounds=None):
        leaves = datamod.leaves(t)
        for name, ty in leaves:
            if not isinstance(ty, (RealT, IntT)):
                raise FunError(f"parameter slot '{name}' has type {ty}; only real and int"
                               " parameters can be sampled")
        bounds = bounds or [None] * len(leaves)
        slots = []
        for (name, ty), b in zip(leaves, bounds):
            if b is None:
                slots.append(Slot(name, ty))
            else:
                lo, hi = b
                slots.append(Slot(name, ty, lo, hi, (hi - lo) / 10.0))
        return cls(slots, t)

    @classmethod
    def from_prior(cls, prior: Expr, t: FunType, constants=None):
        """Slots of the prior's output; ``Uniform(lo, hi)`` draws give bounds."""
        tree = _bounds_tree(prior, {}, dict(constants or {}))
        return cls.of_type(t, _flat_bounds(tree, t))


def _bounds_tree(e, env, constants):
    # mirrors the shape of the value e produces; leaves are (lo, hi) or None
    if isinstance(e, Random):
        if e.dist != "Uniform" or not is_pure(e.arg):
            return None
        if not free_vars(e.arg) <= set(constants):
            return None
        try:
            lo, hi = eval_target(e.arg, {k: constants[k] for k in free_vars(e.arg)})
        except FunError:
            return None
        lo, hi = float(lo), float(hi)
        return (lo, hi) if lo < hi else None
    if isinstance(e, Var):
        return env.get(e.name)
    if isinstance(e, Let):
        return _bounds_tree(e.body, {**env, e.var: _bounds_tree(e.bound, env, constants)},
                            constants)
    if isinstance(e, Pair):
        return ("pair", _bounds_tree(e.fst, env, constants), _bounds_tree(e.snd, env, constants))
    if isinstance(e, Plate):
        inner = _bounds_tree(e.body, {k: v for k, v in env.items() if k != e.var}, constants)
        return ("array", [inner] * e.size)
    if isinstance(e, ArrayLit):
        return ("array", [_bounds_tree(x, env, constants) for x in e.items])
    return None


def _flat_bounds(tree, t):
    if isinstance(t, (RealT, IntT)):
        return [tree if isinstance(tree, tuple) and len(tree) == 2
                and not isinstance(tree[0], str) else None]
    if isinstance(t, Prod):
        left, right = (tree[1], tree[2]) if tree and tree[0] == "pair" else (None, None)
        return _flat_bounds(left, t.left) + _flat_bounds(right, t.right)
    if isinstance(t, Array):
        items = tree[1] if tree and tree[0] == "array" else [None] * t.size
        out = []
        for x in items:
            out.extend(_flat_bounds(x, t.elem))
        return out
    return [None] * len(datamod.leaves(t))


@dataclass
class McmcConfig:
    burnin: int = 5000
    samples: int = 5000
    thin: int = 1
    seed: Optional[int] = None
    adapt_interval: int = 100
    target_acceptance: float = 0.3
    adapt_factor: float = 1.3
    chains: int = 1

    def __post_init__(self):
        for name in ("burnin", "samples", "thin", "adapt_interval", "chains"):
            if getattr(self, name) < 1:
                raise FunError(f"{name} must be at least 1")
        if not 0.0 < self.target_acceptance < 1.0:
            raise FunError("target acceptance must lie strictly between 0 and 1")

    @property
    def band(self):
        # scales move when the interval acceptance leaves [target - 0.1, target + 0.1]
        return max(self.target_acceptance - 0.1, 0.0), min(self.target_acceptance + 0.1, 1.0)


@dataclass
class Chain:
    names: List[str]
    draws: np.ndarray
    accepted: np.ndarray
    proposed: np.ndarray
    scales: List[List[float]] = field(default_factory=list)
    log_post: Optional[np.ndarray] = None

    @property
    def acceptance(self) -> np.ndarray:
        """Per-slot acceptance rate over the retained phase."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.proposed > 0, self.accepted / np.maximum(self.proposed, 1), 0.0)

    def to_csv(self, chain_index: Optional[int] = None) -> str:
        buf = io.StringIO()
        write_chains([self], buf, with_index=chain_index is not None, first=chain_index or 0)
        return buf.getvalue()


def write_chains(chains: Sequence[Chain], out, with_index: bool = False, first: int = 0):
    w = csv.writer(out, lineterminator="\n")
    w.writerow((["chain"] if with_index else []) + list(chains[0].names))
    for k, c in enumerate(chains):
        for row in c.draws:
            w.writerow(([first + k] if with_index else []) + [repr(float(x)) for x in row])


# ---------------------------------------------------------------------------
# posterior


def build_posterior(prior: DensityFn, lik: DensityFn, data: Sequence,
                    param: Optional[str] = None) -> Callable:
    """``w -> log prior(w) + sum_i log lik(data_i | w)``."""
    if param is None:
        open_params = lik.open_params
        if len(open_params) != 1:
            raise FunError("the likelihood must have exactly one open parameter, found "
                           + (", ".join(open_params) or "none"))
        param = open_params[0]
    if lik.param_types.get(param) is not None and lik.param_types[param] != prior.bound_type:
        raise TypeMismatch(prior.bound_type, lik.param_types[param], "model parameter")
    for d in data:
        if not value_has_type(d, lik.bound_type):
            raise TypeMismatch(lik.bound_type, _describe(d), "observed data")
    data = list(data)

    def post(w) -> float:
        lp = prior.logpdf(w)
        if lp == NEG_INF or math.isnan(lp):
            return NEG_INF
        env = {param: w}
        for d in data:
            ll = lik.logpdf(d, env)
            if ll == NEG_INF or math.isnan(ll):
                return NEG_INF
            lp += ll
        return lp

    return post


def _describe(v):
    if isinstance(v, tuple):
        return f"a value of {len(v)} components"
    return type(v).__name__


# ---------------------------------------------------------------------------
# sampling


def _reflect(x, lo, hi):
    if lo is None and hi is None:
        return x
    if lo is not None and hi is not None:
        width = hi - lo
        y = (x - lo) % (2.0 * width)
        return lo + (y if y <= width else 2.0 * width - y)
    if lo is not None:
        return x if x >= lo else 2.0 * lo - x
    return x if x <= hi else 2.0 * hi - x


def find_start(post, space: ParamSpace, draw_prior: Optional[Callable], rng,
               attempts: int = START_ATTEMPTS):
    """A point with finite log-posterior, from prior draws when available."""
    for _ in range(attempts):
        if draw_prior is not None:
            v = draw_prior(rng)
            if v is None:
                continue
            x = space.flatten(v)
        else:
            x = []
            for s in space.slots:
                if s.lo is not None and s.hi is not None:
                    x.append(rng.uniform(s.lo, s.hi))
                else:
                    x.append(rng.normal(0.0, s.scale))
            x = [round(v) if s.is_int else v for v, s in zip(x, space.slots)]
        lp = post(space.value(x))
        if lp > NEG_INF and not math.isnan(lp):
            return np.asarray(x, dtype=float), lp
    raise NoValidStartPoint(f"no starting point with nonzero posterior density in {attempts}"
                            " draws")


def run_chain(post: Callable, space: ParamSpace, cfg: McmcConfig, rng,
              draw_prior: Optional[Callable] = None, start=None) -> Chain:
    """One adaptive Metropolis-Hastings chain.

    ``post`` maps a parameter value to its log-posterior.  ``draw_prior``
    (``rng -> value or None``) supplies candidate starting points.
    """
    if start is None:
        x, lp = find_start(post, space, draw_prior, rng)
    else:
        x = np.asarray(space.flatten(start), dtype=float)
        lp = post(space.value(x))
        if not lp > NEG_INF:
            raise NoValidStartPoint("the given starting point has zero posterior density")
    slots = space.slots
    n = len(slots)
    scales = np.array([s.scale for s in slots], dtype=float)
    lo_band, hi_band = cfg.band
    acc_win = np.zeros(n)
    acc = np.zeros(n)
    prop = np.zeros(n)
    history = [scales.tolist()]
    rows = []
    lps = []
    total = cfg.burnin + cfg.samples
    for step in range(total):
        burning = step < cfg.burnin
        noise = rng.standard_normal(n)
        logu = np.log(rng.random(n))
        for k, s in enumerate(slots):
            old = x[k]
            new = old + scales[k] * noise[k]
            if s.is_int:
                new = float(round(new))
            new = _reflect(new, s.lo, s.hi)
            if s.is_int:
                new = float(round(new))
            x[k] = new
            lp_new = post(space.value(x))
            if lp_new > NEG_INF and logu[k] < lp_new - lp:
                lp = lp_new
                if burning:
                    acc_win[k] += 1
                else:
                    acc[k] += 1
            else:
                x[k] = old
            if not burning:
                prop[k] += 1
        if burning and (step + 1) % cfg.adapt_interval == 0:
            rate = acc_win / cfg.adapt_interval
            scales = np.where(rate > hi_band, scales * cfg.adapt_factor, scales)
            scales = np.where(rate < lo_band, scales / cfg.adapt_factor, scales)
            for k, s in enumerate(slots):
                if s.lo is not None and s.hi is not None:
                    scales[k] = min(scales[k], s.hi - s.lo)
            acc_win[:] = 0
            history.append(scales.tolist())
        if not burning and (step - cfg.burnin + 1) % cfg.thin == 0:
            rows.append(x.copy())
            lps.append(lp)
    draws = np.asarray(rows, dtype=float).reshape(len(rows), n)
    return Chain(space.names, draws, acc, prop, history, np.asarray(lps))


def run_chains(post: Callable, space: ParamSpace, cfg: McmcConfig,
               draw_prior: Optional[Callable] = None) -> List[Chain]:
    """``cfg.chains`` independent chains with seeds spawned from ``cfg.seed``."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    rngs = [np.random.default_rng(s) for s in seeds]
    if cfg.chains == 1:
        return [run_chain(post, space, cfg, rngs[0], draw_prior)]
    with ThreadPoolExecutor(max_workers=cfg.chains) as pool:
        futures = [pool.submit(run_chain, post, space, cfg, r, draw_prior) for r in rngs]
        return [f.result() for f in futures]


def prior_drawer(prior_expr: Expr, constants=None):
    """``rng -> value or None`` drawing from a prior program."""
    s = Sampler(prior_expr, {k: v for k, v in (constants or {}).items()
                             if k in free_vars(prior_expr)})

    def draw(rng):
        out = s.draw(rng)
        return None if out is FAILED else out.value
    return draw


# ---------------------------------------------------------------------------
# summaries


@dataclass
class SlotSummary:
    name: str
    mean: float
    sd: float
    q025: float
    q50: float
    q975: float
    acceptance: float


def summarize(chains) -> List[SlotSummary]:
    """Per-slot statistics over the retained rows of one or more chains."""
    if isinstance(chains, Chain):
        chains = [chains]
    rows = [c.draws for c in chains if len(c.draws)]
    if not rows:
        raise EmptyChain("the chain has no retained draws")
    draws = np.vstack(rows)
    acc = sum(c.accepted for c in chains)
    prop = sum(c.proposed for c in chains)
    out = []
    for k, name in enumerate(chains[0].names):
        col = draws[:, k]
        sd = float(np.std(col, ddof=1)) if len(col) > 1 else 0.0
        q = np.quantile(col, [0.025, 0.5, 0.975])
        out.append(SlotSummary(name, float(np.mean(col)), sd, float(q[0]), float(q[1]),
                               float(q[2]), float(acc[k] / prop[k]) if prop[k] else 0.0))
    return out


def format_summary(summary: Sequence[SlotSummary]) -> str:
    width = max([len("parameter")] + [len(s.name) for s in summary])
    head = (f"{'parameter':<{width}}  {'mean':>11} {'sd':>11} {'2.5%':>11} {'50%':>11}"
            f" {'97.5%':>11} {'accept':>7}")
    lines = [head]
    for s in summary:
        lines.append(f"{s.name:<{width}}  {s.mean:>11.5g} {s.sd:>11.5g} {s.q025:>11.5g}"
                     f" {s.q50:>11.5g} {s.q975:>11.5g} {s.acceptance:>7.3f}")
    return "\n".join(lines) + "\n"
