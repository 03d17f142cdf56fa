"""Compile probabilistic Fun programs to (log-)density functions."""

from .compiler import CompileError, compile_logpdf, compile_pdf, explain_failure
from .density import DensityFn
from .desugar import desugar
from .errors import FunError
from .model import load_model, parse_and_elaborate
from .parser import parse_expr, parse_model
from .pretty import pretty, pretty_density
from .sampler import exact_measure, sample

__all__ = [
    "CompileError", "DensityFn", "FunError", "compile_logpdf", "compile_pdf", "desugar",
    "exact_measure", "explain_failure", "load_model", "parse_and_elaborate", "parse_expr",
    "parse_model", "pretty", "pretty_density", "sample",
]
__version__ = "0.1.0"
