"""Command-line interface: check, compile, density, sample, infer.

Exit status is 0 on success, 1 for errors in the model, data or flags,
and 2 for internal errors.
"""

from __future__ import annotations

import argparse
import math
import sys
import traceback

from . import data as datamod
from . import mcmc
from .compiler import CompileError, explain_failure
from .distributions import make_rng
from .errors import FunError
from .model import Model, Program, load_model, parse_bindings
from .pretty import format_float, format_type, pretty_density
from .sampler import FAILED, Sampler
from .types import BOOL, IntT, RealT

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fundens",
                description="Compile probabilistic Fun programs to density functions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_arg(sp):
        sp.add_argument("file", help="model file (.fun)")
        sp.add_argument("--program", choices=("main", "prior", "model"),
                        help="which program of the file to use (default: the model, else the"
                             " main expression, else the prior)")

    sp = sub.add_parser("check", help="parse and typecheck a model file")
    sp.add_argument("file", help="model file (.fun)")

    sp = sub.add_parser("compile", help="print the compiled density")
    model_arg(sp)
    sp.add_argument("--log", action="store_true", help="emit the log-density")
    sp.add_argument("--no-opt", action="store_true", help="skip the peephole optimizer")

    sp = sub.add_parser("density", help="evaluate the density as CSV")
    model_arg(sp)
    sp.add_argument("--at", action="append", default=[],
                    help="grid lo:step:hi or comma-separated points (repeatable)")
    sp.add_argument("--data", help="CSV of values to evaluate the density at")
    sp.add_argument("--params", action="append", default=[], metavar="NAME=VALUE",
                    help="parameter binding (repeatable)")
    sp.add_argument("--log", action="store_true", help="report the log-density")

    sp = sub.add_parser("sample", help="draw synthetic data as CSV")
    model_arg(sp)
    sp.add_argument("--n", type=int, default=1, help="number of draws (default 1)")
    sp.add_argument("--seed", type=int, help="random seed")
    sp.add_argument("--params", action="append", default=[], metavar="NAME=VALUE",
                    help="parameter binding (repeatable)")

    sp = sub.add_parser("infer", help="run MCMC on observed data")
    sp.add_argument("file", help="model file with prior and model")
    sp.add_argument("--data", required=True, help="CSV of observations")
    sp.add_argument("--burnin", type=int, default=5000)
    sp.add_argument("--samples", type=int, default=5000)
    sp.add_argument("--thin", type=int, default=1)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--chains", type=int, default=1)
    sp.add_argument("--output", "-o", help="write the chain CSV here instead of stdout")
    return p


# ---------------------------------------------------------------------------
# helpers


def _program(m: Model, which) -> Program:
    if which is None:
        return m.primary()
    p = {"main": m.main, "prior": m.prior, "model": m.model}[which]
    if p is None:
        raise FunError(f"the file defines no {which} program")
    return p


def _bindings(m: Model, prog: Program, items):
    """Parameter values: declared defaults overridden by ``--params``."""
    types = prog.free_params
    env = {k: v for k, v in m.defaults.items() if k in types}
    env.update(parse_bindings(items, types))
    return env


def _missing(prog: Program, env):
    missing = [k for k in prog.free_params if k not in env]
    if missing:
        raise FunError("missing parameter value(s): " + ", ".join(missing)
                       + " (use --params NAME=VALUE)")


def parse_grid(spec: str, t) -> list:
    """Points of ``lo:step:hi`` (inclusive) or a comma-separated list."""
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise FunError(f"grid '{spec}' is not of the form lo:step:hi")
        try:
            lo, step, hi = (float(x) for x in parts)
        except ValueError:
            raise FunError(f"grid '{spec}' has a non-numeric bound") from None
        if not step > 0 or hi < lo:
            raise FunError(f"grid '{spec}' needs step > 0 and lo <= hi")
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        pts = [round(lo + k * step, 12) for k in range(n)]
        if isinstance(t, IntT):
            return sorted({int(round(x)) for x in pts})
        return pts
    return [datamod.parse_cell(x, t, "--at: ") for x in spec.split(",") if x.strip()]


def _fmt(x) -> str:
    if isinstance(x, float):
        return format_float(x)
    return datamod.format_cell(x)


# ---------------------------------------------------------------------------
# commands


def cmd_check(args, out, err):
    m = load_model(args.file)
    for name, t in m.constant_types.items():
        out.write(f"constant {name} : {format_type(t)}\n")
    for name, t in (m.main.free_params.items() if m.main else ()):
        d = f" = {_fmt(m.defaults[name])}" if name in m.defaults else ""
        out.write(f"param {name} : {format_type(t)}{d}\n")
    if m.prior is not None:
        out.write(f"prior : unit -> {format_type(m.prior.type)}\n")
    if m.model is not None:
        pt = m.model.params[m.model_param]
        out.write(f"model : {format_type(pt)} -> {format_type(m.model.type)}\n")
    if m.main is not None:
        out.write(f"main : {format_type(m.main.type)}\n")
    return EXIT_OK


def cmd_compile(args, out, err):
    m = load_model(args.file)
    progs = [_program(m, args.program)] if args.program else m.programs()
    texts = []
    for p in progs:
        f = p.density(log=args.log, optimize=not args.no_opt)
        head = f"// {'log-density' if args.log else 'density'} of {p.name}\n"
        texts.append(head + pretty_density(f))
    out.write("\n".join(texts))
    return EXIT_OK


def cmd_density(args, out, err):
    m = load_model(args.file)
    prog = _program(m, args.program)
    env = _bindings(m, prog, args.params)
    _missing(prog, env)
    f = prog.density(log=args.log)
    t = f.bound_type
    col = "logpdf" if args.log else "pdf"
    if args.data:
        if args.at:
            raise FunError("give either --at or --data, not both")
        values = datamod.read_values(args.data, t)
        out.write(f"index,{col}\n")
        for k, v in enumerate(values):
            out.write(f"{k},{_fmt(float(f(v, env)))}\n")
        return EXIT_OK
    if not (isinstance(t, (RealT, IntT)) or t == BOOL):
        raise FunError(f"the density is over {format_type(t)}; --at takes scalar points,"
                       " use --data for structured values")
    specs = args.at or []
    if not specs:
        raise FunError("give the evaluation points with --at lo:step:hi or --at x1,x2,...")
    points = [z for spec in specs for z in parse_grid(spec, t)]
    out.write(f"z,{col}\n")
    for z in points:
        out.write(f"{_fmt(z)},{_fmt(float(f(z, env)))}\n")
    return EXIT_OK


def cmd_sample(args, out, err):
    if args.n < 1:
        raise FunError("--n must be at least 1")
    m = load_model(args.file)
    prog = _program(m, args.program)
    env = _bindings(m, prog, args.params)
    rng = make_rng(args.seed)
    if (prog is m.model and m.model_param not in env and m.prior is not None):
        w = mcmc.prior_drawer(m.prior.expr, m.constants)(rng)
        if w is None:
            raise FunError("the prior failed while drawing a parameter")
        env[m.model_param] = w
        err.write(f"{m.model_param} drawn from the prior: "
                  + ", ".join(f"{n}={_fmt(x)}" for n, x in
                              zip((s for s, _ in datamod.leaves(m.prior.type)),
                                  datamod.flatten(w, m.prior.type))) + "\n")
    _missing(prog, env)
    full = {k: v for k, v in m.constants.items()}
    full.update(env)
    used = {k: v for k, v in full.items() if k in prog.params}
    s = Sampler(prog.expr, used)
    draws, failed = [], 0
    for _ in range(args.n):
        r = s.draw(rng)
        if r is FAILED:
            failed += 1
        else:
            draws.append(r.value)
    datamod.write_values(draws, prog.type, out, draw_column=args.n > 1)
    if failed:
        err.write(f"{failed} of {args.n} draws failed\n")
    return EXIT_OK


def cmd_infer(args, out, err):
    m = load_model(args.file)
    if m.prior is None or m.model is None:
        raise FunError("inference needs both 'let prior () = ...' and 'let model w = ...'")
    cfg = mcmc.McmcConfig(burnin=args.burnin, samples=args.samples, thin=args.thin,
                          seed=args.seed, chains=args.chains)
    observed = datamod.read_values(args.data, m.model.type)
    post = mcmc.build_posterior(m.prior.density(log=True), m.model.density(log=True),
                                observed, m.model_param)
    space = mcmc.ParamSpace.from_prior(m.prior.expr, m.prior.type, m.constants)
    chains = mcmc.run_chains(post, space, cfg, mcmc.prior_drawer(m.prior.expr, m.constants))
    summary = mcmc.format_summary(mcmc.summarize(chains))
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            mcmc.write_chains(chains, fh, with_index=len(chains) > 1)
        out.write(summary)
    else:
        mcmc.write_chains(chains, out, with_index=len(chains) > 1)
        err.write(summary)
    return EXIT_OK


COMMANDS = {"check": cmd_check, "compile": cmd_compile, "density": cmd_density,
            "sample": cmd_sample, "infer": cmd_infer}


def _attach_values(argv):
    # "--at -4:0.1:8" would read the grid as an option; glue it to its flag
    out = []
    it = iter(argv)
    for a in it:
        if a in ("--at", "--params"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(_attach_values(argv))
    except UsageError as e:
        err.write(f"{e}\n")
        return EXIT_USER
    except SystemExit as e:  # --help
        return EXIT_OK if not e.code else EXIT_USER
    try:
        return COMMANDS[args.command](args, out, err)
    except CompileError as e:
        err.write(f"{args.file}: cannot compile: {explain_failure(e)}\n")
        return EXIT_USER
    except FunError as e:
        err.write(f"{getattr(args, 'file', '')}: {type(e).__name__}: {e}\n")
        return EXIT_USER
    except OSError as e:
        err.write(f"error: {e}\n")
        return EXIT_USER
    except Exception:  # pragma: no cover - reported as an internal error
        err.write("internal error:\n" + traceback.format_exc())
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
