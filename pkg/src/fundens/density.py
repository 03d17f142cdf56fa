"""Compiled density functions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Tuple

from .evaluate import DEFAULT_CONFIG, EvalConfig, Program
from .syntax import Expr
from .typecheck import typecheck_target
from .types import REAL, FunType

LINEAR = "linear"
LOG = "log"


@dataclass(frozen=True)
class DensityFn:
    """``fun bound_var -> body``: the density (or log-density) of a program.

    ``free_params`` are the parameters the body may mention besides the
    bound variable; ``bindings`` fixes values for some of them (data
    arrays declared in a model file), the rest must be supplied when
    evaluating.
    """
    bound_var: str
    bound_type: FunType
    body: Expr
    free_params: Tuple[Tuple[str, FunType], ...] = ()
    space: str = LINEAR
    bindings: Tuple[Tuple[str, object], ...] = field(default=(), compare=False)

    @property
    def param_types(self):
        return dict(self.free_params)

    @property
    def open_params(self):
        """Parameter names that must be given at evaluation time."""
        bound = {k for k, _ in self.bindings}
        return [k for k, _ in self.free_params if k not in bound]

    def type_env(self):
        env = dict(self.free_params)
        env[self.bound_var] = self.bound_type
        return env

    def typecheck(self) -> FunType:
        return typecheck_target(self.body, self.type_env())

    def check_real(self):
        t = self.typecheck()
        if t != REAL:
            raise AssertionError(f"compiled density has type {t}, not real")

    @cached_property
    def _default_program(self):
        return self._make_program(DEFAULT_CONFIG)

    def _make_program(self, cfg):
        names = [k for k, _ in self.free_params if k != self.bound_var] + [self.bound_var]
        return Program(self.body, names, cfg)

    def program(self, cfg: Optional[EvalConfig] = None) -> Program:
        if cfg is None or cfg == DEFAULT_CONFIG:
            return self._default_program
        return self._make_program(cfg)

    def _env(self, z, params):
        env = dict(self.bindings)
        if params:
            env.update(params)
        env[self.bound_var] = z
        return env

    def __call__(self, z, params: Mapping = None, cfg: EvalConfig = None) -> float:
        """The body's value at ``z`` (a density or a log-density, per ``space``)."""
        return self.program(cfg).run(self._env(z, params))

    def pdf(self, z, params: Mapping = None, cfg: EvalConfig = None) -> float:
        v = self(z, params, cfg)
        if self.space == LOG:
            return math.exp(v) if v != float("-inf") else 0.0
        return v

    def logpdf(self, z, params: Mapping = None, cfg: EvalConfig = None) -> float:
        v = self(z, params, cfg)
        if self.space == LOG:
            return v
        return math.log(v) if v > 0 else float("-inf")

    def with_body(self, body: Expr, space: Optional[str] = None) -> "DensityFn":
        return DensityFn(self.bound_var, self.bound_type, body, self.free_params,
                         space or self.space, self.bindings)

    def bind(self, values: Mapping) -> "DensityFn":
        merged = dict(self.bindings)
        merged.update(values)
        return DensityFn(self.bound_var, self.bound_type, self.body, self.free_params,
                         self.space, tuple(sorted(merged.items())))
