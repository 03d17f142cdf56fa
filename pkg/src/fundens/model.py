"""Elaborated model files.

A model file defines named constants (the inputs, e.g. ``xs``), helper
functions, and either a plain expression or a ``prior``/``model`` pair.
:func:`load_model` desugars everything and evaluates the constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from .compiler import compile_logpdf, compile_pdf
from .density import DensityFn
from .desugar import Scope, desugar_typed
from .errors import FunError, UnboundVariable
from .evaluate import eval_target
from .parser import ModelFile, parse_model
from .syntax import Expr, LetTuple, Var, free_vars, is_pure
from .types import REAL, FunType

MODEL_PARAM = "w"


@dataclass
class Program:
    """One compilable program with its parameter types and constant values."""
    name: str
    expr: Expr
    type: FunType
    params: Dict[str, FunType]
    constants: Dict[str, object] = field(default_factory=dict)

    @property
    def free_params(self) -> Dict[str, FunType]:
        """Parameters that are not named constants."""
        return {k: t for k, t in self.params.items() if k not in self.constants}

    def density(self, log: bool = False, optimize: bool = True) -> DensityFn:
        comp = compile_logpdf if log else compile_pdf
        f = comp(self.expr, self.params, optimize=optimize)
        used = {k: v for k, v in self.constants.items() if k in f.param_types}
        return f.bind(used) if used else f


@dataclass
class Model:
    source: ModelFile
    constants: Dict[str, object]
    constant_types: Dict[str, FunType]
    main: Optional[Program] = None
    prior: Optional[Program] = None
    model: Optional[Program] = None
    model_param: Optional[str] = None
    defaults: Dict[str, object] = field(default_factory=dict)

    def programs(self) -> List[Program]:
        return [p for p in (self.main, self.prior, self.model) if p is not None]

    def primary(self) -> Program:
        """The program that ``density`` and ``sample`` act on by default."""
        for p in (self.main, self.model, self.prior):
            if p is not None:
                return p
        raise FunError("model file defines nothing to compile")


def load_model(path) -> Model:
    text = Path(path).read_text(encoding="utf-8")
    return elaborate(parse_model(text))


def parse_and_elaborate(text: str) -> Model:
    return elaborate(parse_model(text))


def elaborate(mf: ModelFile) -> Model:
    scope = Scope(functions={k: v for k, v in mf.functions.items()
                             if k not in ("prior", "model")})
    constants, ctypes = {}, {}
    for name, e in mf.constants:
        core, t = desugar_typed(e, {}, scope)
        if not is_pure(core):
            raise FunError(f"constant '{name}' must be deterministic", e.span)
        unbound = free_vars(core) - set(constants)
        if unbound:
            raise UnboundVariable(sorted(unbound)[0], e.span)
        constants[name] = eval_target(core, {k: constants[k] for k in free_vars(core)})
        ctypes[name] = t
        scope.constants[name] = constants[name]
        scope.constant_types[name] = t
    m = Model(mf, constants, ctypes)
    for name, e in mf.param_defaults.items():
        core = desugar_typed(e, {}, scope, mf.params[name])[0]
        if not is_pure(core) or free_vars(core) - set(constants):
            raise FunError(f"default for parameter '{name}' must be a closed deterministic"
                           " expression", e.span)
        m.defaults[name] = eval_target(core, {k: constants[k] for k in free_vars(core)})

    if mf.prior is not None:
        d = mf.prior
        if d.params != [None]:
            raise FunError("prior must be declared as 'let prior () = ...'", d.span)
        core, t = desugar_typed(d.body, {}, scope)
        m.prior = Program("prior", core, t, dict(ctypes), constants)

    if mf.model is not None:
        d = mf.model
        if len(d.params) != 1 or d.params[0] is None:
            raise FunError("model must take exactly one parameter: 'let model w = ...'", d.span)
        p = d.params[0]
        pname = p if isinstance(p, str) else MODEL_PARAM
        ptype = d.annotations.get(pname) if isinstance(p, str) else None
        if ptype is None and m.prior is not None:
            ptype = m.prior.type
        if ptype is None:
            raise FunError("cannot determine the model's parameter type: define a prior or"
                           " annotate it as 'let model (w : t) = ...'", d.span)
        body = d.body if isinstance(p, str) else LetTuple(p, Var(pname), d.body, span=d.span)
        core, t = desugar_typed(body, {pname: ptype}, scope)
        if m.prior is not None and ptype != m.prior.type:
            raise FunError(f"model parameter has type {ptype} but the prior produces"
                           f" {m.prior.type}", d.span)
        m.model = Program("model", core, t, {**ctypes, pname: ptype}, constants)
        m.model_param = pname

    if mf.main is not None:
        params = dict(mf.params)
        # undeclared free variables of the main expression are real-valued parameters
        while True:
            try:
                core, t = desugar_typed(mf.main, params, scope)
                break
            except UnboundVariable as err:
                if err.name in params or err.name in ctypes:
                    raise
                params[err.name] = REAL
        used = {k: v for k, v in params.items() if k in free_vars(core)}
        m.main = Program("main", core, t, {**ctypes, **used}, constants)
    return m


def parse_bindings(items, types: Dict[str, FunType]) -> Dict[str, object]:
    """``name=value`` strings to values of the declared parameter types."""
    from .parser import parse_expr
    from .desugar import desugar

    out = {}
    for item in items or ():
        if "=" not in item:
            raise FunError(f"parameter binding '{item}' is not of the form name=value")
        name, text = item.split("=", 1)
        name = name.strip()
        if name not in types:
            raise FunError(f"unknown parameter '{name}'")
        core = desugar(parse_expr(text), {}, expected=types[name])
        out[name] = eval_target(core)
    return out


def default_bindings(types: Dict[str, FunType]) -> Dict[str, object]:
    from .values import default_value
    return {k: default_value(t) for k, t in types.items()}
