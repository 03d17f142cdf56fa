"""Concrete syntax.

One grammar covers model files, plain Fun expressions and the target
code printed by :mod:`fundens.pretty`.  The syntax follows the F#-like
notation of the model listings: ``let x = M in N`` (the ``in`` may be
dropped when the body starts on a new, indented line), ``if``, ``match
... with | inl x -> ... | inr y -> ...``, records ``{ a = M; b = N }``,
array comprehensions ``[| for x in xs -> M |]`` and ranges ``[| lo .. hi |]``.

A model file is a sequence of top-level items, each starting in column 1::

    type W = {a: real; b: real}
    param r : real
    let xs = [| -1.0 .. 1.0 |]
    let f (a, b) = a + b
    let prior () = ...
    let model w = ...
    <expression>
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from . import distributions
from .errors import ParseError, Span
from .ops import IMPL
from .syntax import (ArrayLit, Ascribe, Call, Comprehension, Const, Exp, Expr, Fail, Field,
                     FromL, FromR, If, Index, Inl, Inr, Integral, IsL, IsR, Iverson, Let, LetTuple,
                     Log, LogPdfOf, LogProdBy, Match, PdfOf, Prim, ProdBy, Random, Range, Record,
                     Seq, Tuple_, Var)
from .types import BOOL, INT, REAL, UNIT, Array, FunType, Prod, Sum, record_type

KEYWORDS = {
    "let", "in", "if", "then", "else", "match", "with", "inl", "inr", "fun", "for", "fail",
    "random", "true", "false", "integral", "type", "param", "infinity",
}

# prefix operations written as function calls
PRIM_CALLS = {"exp", "log", "abs", "real", "not", "logsumexp", "fst", "snd"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<float>\d+\.(?!\.)\d*(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*(?:\$[0-9]+)?)
  | (?P<sym>\[\||\|\]|\.\[|\.\.|->|<=|>=|<>|&&|\|\||[-+*/()\[\]{},;:.=<>|])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str   # "int", "float", "ident", "kw", "sym", "eof"
    text: str
    line: int
    col: int
    first_on_line: bool

    @property
    def span(self):
        return Span(self.line, self.col)


def tokenize(text: str) -> List[Token]:
    out = []
    pos = 0
    line, line_start = 1, 0
    fresh_line = True
    n = len(text)
    while pos < n:
        if text.startswith("(*", pos):
            end = text.find("*)", pos + 2)
            if end < 0:
                raise ParseError("unterminated comment", Span(line, pos - line_start + 1))
            chunk = text[pos:end + 2]
            nls = chunk.count("\n")
            if nls:
                line += nls
                line_start = pos + chunk.rfind("\n") + 1
                fresh_line = True
            pos = end + 2
            continue
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", Span(line, pos - line_start + 1))
        kind = m.lastgroup
        col = pos - line_start + 1
        pos = m.end()
        if kind == "nl":
            line += 1
            line_start = pos
            fresh_line = True
            continue
        if kind in ("ws", "comment"):
            continue
        s = m.group()
        if kind == "ident" and s in KEYWORDS:
            kind = "kw"
        out.append(Token(kind, s, line, col, fresh_line))
        fresh_line = False
    out.append(Token("eof", "", line, pos - line_start + 1, True))
    return out


# ---------------------------------------------------------------------------
# model files


@dataclass
class FunDef:
    """``let name p1 p2 ... = body``.

    Each parameter is ``None`` (for ``()``), a name, or a tuple of names;
    ``annotations`` gives declared parameter types by name.
    """
    name: str
    params: List
    body: Expr
    annotations: Dict[str, FunType] = field(default_factory=dict)
    span: Optional[Span] = None


@dataclass
class ModelFile:
    types: Dict[str, FunType] = field(default_factory=dict)
    params: Dict[str, FunType] = field(default_factory=dict)
    param_defaults: Dict[str, Expr] = field(default_factory=dict)
    constants: List[Tuple[str, Expr]] = field(default_factory=list)
    functions: Dict[str, FunDef] = field(default_factory=dict)
    main: Optional[Expr] = None

    @property
    def prior(self) -> Optional[FunDef]:
        return self.functions.get("prior")

    @property
    def model(self) -> Optional[FunDef]:
        return self.functions.get("model")


def parse_model(text: str) -> ModelFile:
    p = _Parser(tokenize(text), target=False)
    return p.model_file()


def parse_expr(text: str, target: bool = False, types: Dict[str, FunType] = None,
               functions=()) -> Expr:
    """Parse a single expression.

    ``target=True`` admits the target-language forms and compiler-generated
    ``$`` names.
    """
    p = _Parser(tokenize(text), target=target, types=types, functions=functions)
    e = p.expr()
    p.expect_eof()
    return e


def parse_type(text: str, types: Dict[str, FunType] = None) -> FunType:
    p = _Parser(tokenize(text), target=True, types=types)
    t = p.type_()
    p.expect_eof()
    return t


def parse_density(text: str, types: Dict[str, FunType] = None):
    """Parse ``fun (z : t) -> body`` as printed by ``pretty_density``."""
    p = _Parser(tokenize(text), target=True, types=types)
    p.eat_kw("fun")
    p.eat_sym("(")
    z = p.ident()
    p.eat_sym(":")
    t = p.type_()
    p.eat_sym(")")
    p.eat_sym("->")
    body = p.expr()
    p.expect_eof()
    return z, t, body


class _Parser:
    def __init__(self, tokens, target, types=None, functions=()):
        self.toks = tokens
        self.i = 0
        self.target = target
        self.types = dict(types or {})
        self.functions = set(functions)
        self.depth = 0
        self._no_seq = False

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{msg} (found {found})", tok.span)

    def is_sym(self, s):
        return self.tok.kind == "sym" and self.tok.text == s

    def is_kw(self, s):
        return self.tok.kind == "kw" and self.tok.text == s

    def eat_sym(self, s):
        if not self.is_sym(s):
            raise self.error(f"expected '{s}'")
        return self.advance()

    def eat_kw(self, s):
        if not self.is_kw(s):
            raise self.error(f"expected '{s}'")
        return self.advance()

    def ident(self):
        t = self.tok
        if t.kind != "ident":
            raise self.error("expected an identifier")
        if "$" in t.text and not self.target:
            raise self.error("names containing '$' are reserved for generated code")
        self.advance()
        return t.text

    def binder(self):
        if self.tok.kind == "ident" and self.tok.text == "_":
            self.advance()
            return "_"
        return self.ident()

    def expect_eof(self):
        if self.tok.kind != "eof":
            raise self.error("unexpected input after expression")

    def at_toplevel_item(self):
        """A token in column 1 on a fresh line starts a new top-level item."""
        t = self.tok
        return t.kind == "eof" or (self.depth == 0 and t.first_on_line and t.col == 1
                                   and t.kind == "kw" and t.text in ("let", "type", "param"))

    # -- model files -----------------------------------------------------------

    def model_file(self) -> ModelFile:
        mf = ModelFile()
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind == "kw" and t.text == "type" and t.col == 1:
                self.advance()
                name = self.ident()
                self.eat_sym("=")
                self.types[name] = self.type_()
                mf.types[name] = self.types[name]
                continue
            if t.kind == "kw" and t.text == "param" and t.col == 1:
                self.advance()
                name = self.ident()
                self.eat_sym(":")
                mf.params[name] = self.type_()
                if self.is_sym("="):
                    self.advance()
                    mf.param_defaults[name] = self.expr()
                continue
            if t.kind == "kw" and t.text == "let" and t.col == 1 and self._is_fundef():
                d = self._fundef()
                if d.name in mf.functions:
                    raise ParseError(f"'{d.name}' is defined twice", d.span)
                mf.functions[d.name] = d
                self.functions.add(d.name)
                continue
            if t.kind == "kw" and t.text == "let" and t.col == 1:
                start = self.i
                self.advance()
                name = self.binder()
                if self.is_sym("="):
                    self.advance()
                    bound = self.expr()
                    if not self.is_kw("in") and self.at_toplevel_item():
                        mf.constants.append((name, bound))
                        continue
                self.i = start
            if mf.main is not None:
                raise self.error("only one main expression is allowed")
            mf.main = self.expr()
            if self.tok.kind != "eof" and not self.at_toplevel_item():
                raise self.error("unexpected input")
        return mf

    def _is_fundef(self):
        # let name <params> = ...   where at least one parameter precedes '='
        t1, t2 = self.peek(1), self.peek(2)
        if t1.kind != "ident":
            return False
        return not (t2.kind == "sym" and t2.text in ("=", ":"))

    def _fundef(self) -> FunDef:
        span = self.advance().span
        name = self.ident()
        params = []
        ann = {}
        while not self.is_sym("="):
            if self.tok.kind == "ident":
                params.append(self.ident())
                continue
            self.eat_sym("(")
            if self.is_sym(")"):
                self.advance()
                params.append(None)
                continue
            names = [self.binder()]
            if self.is_sym(":"):
                self.advance()
                ann[names[0]] = self.type_()
                self.eat_sym(")")
                params.append(names[0])
                continue
            while self.is_sym(","):
                self.advance()
                names.append(self.binder())
            self.eat_sym(")")
            params.append(tuple(names) if len(names) > 1 else names[0])
        self.eat_sym("=")
        body = self.expr()
        return FunDef(name, params, body, ann, span)

    # -- types -------------------------------------------------------------------

    def type_(self) -> FunType:
        t = self._type_atom_postfix()
        if self.is_sym("*"):
            items = [t]
            while self.is_sym("*"):
                self.advance()
                items.append(self._type_atom_postfix())
            out = items[-1]
            for x in reversed(items[:-1]):
                out = Prod(x, out)
            return out
        if self.is_sym("+"):
            self.advance()
            return Sum(t, self.type_())
        return t

    def _type_atom_postfix(self):
        t = self._type_atom()
        while self.is_sym("["):
            self.advance()
            if self.tok.kind != "int":
                raise self.error("expected an array size")
            n = int(self.advance().text)
            self.eat_sym("]")
            t = Array(t, n)
        return t

    def _type_atom(self):
        tok = self.tok
        if tok.kind == "ident":
            self.advance()
            simple = {"int": INT, "real": REAL, "unit": UNIT, "bool": BOOL}
            if tok.text in simple:
                return simple[tok.text]
            if tok.text in self.types:
                return self.types[tok.text]
            raise ParseError(f"unknown type '{tok.text}'", tok.span)
        if self.is_sym("("):
            self.advance()
            t = self.type_()
            self.eat_sym(")")
            return t
        if self.is_sym("{"):
            self.advance()
            items = []
            while not self.is_sym("}"):
                name = self.ident()
                self.eat_sym(":")
                items.append((name, self.type_()))
                if self.is_sym(";"):
                    self.advance()
            self.advance()
            if len(items) < 2:
                raise ParseError("a record type needs at least two fields", tok.span)
            if len({n for n, _ in items}) != len(items):
                raise ParseError("duplicate record field", tok.span)
            return record_type(items)
        raise self.error("expected a type")

    # -- expressions -------------------------------------------------------------

    def expr(self) -> Expr:
        e = self._expr_noseq()
        if self.is_sym(";") and not self._no_seq:
            span = self.advance().span
            return Seq(e, self.expr(), span=span)
        return e

    def nested(self, f, *args):
        """Parse inside brackets, where ';' sequencing is allowed again."""
        saved = self._no_seq
        self._no_seq = False
        self.depth += 1
        try:
            return f(*args)
        finally:
            self._no_seq = saved
            self.depth -= 1

    def _expr_noseq(self):
        t = self.tok
        if t.kind == "kw":
            if t.text == "let":
                return self._let()
            if t.text == "if":
                return self._if()
            if t.text == "match":
                return self._match()
            if t.text == "integral" and self.target:
                return self._integral()
        return self._or()

    def _let(self):
        span = self.eat_kw("let").span
        if self.is_sym("("):
            self.advance()
            names = [self.binder()]
            while self.is_sym(","):
                self.advance()
                names.append(self.binder())
            self.eat_sym(")")
            self.eat_sym("=")
            bound = self.expr()
            body = self._let_body()
            if len(names) == 1:
                return Let(names[0], bound, body, span=span)
            return LetTuple(tuple(names), bound, body, span=span)
        name = self.binder()
        ann = None
        if self.is_sym(":"):
            self.advance()
            ann = self.type_()
        self.eat_sym("=")
        bound = self.expr()
        if ann is not None:
            bound = Ascribe(bound, ann, span=span)
        return Let(name, bound, self._let_body(), span=span)

    def _let_body(self):
        if self.is_kw("in"):
            self.advance()
            return self.expr()
        t = self.tok
        if t.first_on_line and not self.at_toplevel_item() and t.kind != "eof":
            return self.expr()
        raise self.error("expected 'in' or an indented body on the next line")

    def _if(self):
        span = self.eat_kw("if").span
        c = self.expr()
        self.eat_kw("then")
        a = self.expr()
        self.eat_kw("else")
        b = self.expr()
        return If(c, a, b, span=span)

    def _match(self):
        span = self.eat_kw("match").span
        s = self.expr()
        self.eat_kw("with")
        if self.is_sym("|"):
            self.advance()
        self.eat_kw("inl")
        x = self.binder()
        self.eat_sym("->")
        a = self.expr()
        self.eat_sym("|")
        self.eat_kw("inr")
        y = self.binder()
        self.eat_sym("->")
        b = self.expr()
        return Match(s, x, a, y, b, span=span)

    def _integral(self):
        span = self.eat_kw("integral").span
        self.eat_sym("(")
        bs = []
        while not self.is_sym(")"):
            x = self.ident()
            self.eat_sym(":")
            bs.append((x, self.type_()))
            if self.is_sym(","):
                self.advance()
        self.advance()
        self.eat_sym("->")
        return Integral(tuple(bs), self.expr(), span=span)

    def _binary(self, sub, ops):
        e = sub()
        while self.tok.kind == "sym" and self.tok.text in ops:
            t = self.advance()
            e = Prim(ops[t.text], (e, sub()), span=t.span)
        return e

    def _or(self):
        return self._binary(self._and, {"||": "or"})

    def _and(self):
        return self._binary(self._cmp, {"&&": "and"})

    def _cmp(self):
        e = self._add()
        ops = {"<": "lt", "<=": "le", "=": "eq", ">": "gt", ">=": "ge", "<>": "ne"}
        if self.tok.kind == "sym" and self.tok.text in ops:
            t = self.advance()
            rhs = self._add()
            if t.text == "<>":
                return Prim("not", (Prim("eq", (e, rhs), span=t.span),), span=t.span)
            return Prim(ops[t.text], (e, rhs), span=t.span)
        return e

    def _add(self):
        return self._binary(self._mul, {"+": "add", "-": "sub"})

    def _mul(self):
        return self._binary(self._unary, {"*": "mul", "/": "div"})

    def _unary(self):
        if self.is_sym("-"):
            t = self.advance()
            if self.tok.kind in ("int", "float") and not self._postfix_follows():
                lit = self.advance()
                v = int(lit.text) if lit.kind == "int" else float(lit.text)
                return Const(-v, span=t.span)
            if self.is_kw("infinity"):
                self.advance()
                return Const(float("-inf"), span=t.span)
            return Prim("neg", (self._unary(),), span=t.span)
        t = self.tok
        if (t.kind == "ident" and t.text == "not" and self._starts_atom(self.peek(1))
                and self.peek(1).line == t.line):
            self.advance()
            return Prim("not", (self._unary(),), span=t.span)
        return self._app()

    def _postfix_follows(self):
        nxt = self.peek(1)
        return nxt.kind == "sym" and nxt.text in (".", ".[")

    def _app(self):
        t = self.tok
        if t.kind == "ident" and (t.text in self.functions or t.text == "flip"):
            nxt = self.peek(1)
            if self._starts_atom(nxt) and nxt.line == t.line:
                self.advance()
                args = []
                while self._starts_atom(self.tok) and self.tok.line == t.line:
                    args.append(self._postfix())
                return Call(t.text, tuple(args), span=t.span)
        return self._postfix()

    def _starts_atom(self, tok):
        if tok.kind in ("int", "float", "ident"):
            return True
        if tok.kind == "kw":
            return tok.text in ("true", "false", "random", "fail", "inl", "inr", "infinity")
        return tok.kind == "sym" and tok.text in ("(", "[|", "{") or (
            self.target and tok.kind == "sym" and tok.text == "[")

    def _postfix(self):
        e = self._atom()
        while True:
            if self.is_sym(".["):
                t = self.advance()
                i = self.nested(self.expr)
                self.eat_sym("]")
                e = Index(e, i, span=t.span)
            elif self.is_sym(".") and self.peek().kind == "ident":
                t = self.advance()
                e = Field(e, self.ident(), span=t.span)
            else:
                return e

    def _paren_list(self):
        self.eat_sym("(")
        items = self.nested(self._comma_items)
        self.eat_sym(")")
        return items

    def _comma_items(self):
        items = []
        if not self.is_sym(")"):
            items.append(self.expr())
            while self.is_sym(","):
                self.advance()
                items.append(self.expr())
        return items

    def _atom(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Const(int(t.text), span=t.span)
        if t.kind == "float":
            self.advance()
            return Const(float(t.text), span=t.span)
        if t.kind == "kw":
            return self._kw_atom(t)
        if t.kind == "ident":
            return self._ident_atom(t)
        if self.is_sym("("):
            return self._paren()
        if self.is_sym("[|"):
            return self._array()
        if self.is_sym("{"):
            return self._record()
        if self.target and self.is_sym("["):
            self.advance()
            p = self.nested(self.expr)
            self.eat_sym("]")
            return Iverson(p, span=t.span)
        raise self.error("expected an expression")

    def _paren(self):
        t = self.eat_sym("(")
        if self.is_sym(")"):
            self.advance()
            return Const((), span=t.span)
        first = self.nested(self.expr)
        if self.is_sym(":"):
            self.advance()
            ty = self.type_()
            self.eat_sym(")")
            return Ascribe(first, ty, span=t.span)
        items = [first]
        while self.is_sym(","):
            self.advance()
            items.append(self.nested(self.expr))
        self.eat_sym(")")
        if len(items) == 1:
            return first
        return Tuple_(tuple(items), span=t.span)

    def _annotation(self):
        """Optional ``:t`` after ``inl``/``inr``/``fail``."""
        if self.is_sym(":"):
            self.advance()
            return self._type_atom_postfix()
        return None

    def _kw_atom(self, t):
        if t.text in ("true", "false"):
            self.advance()
            from .syntax import false_expr, true_expr
            e = true_expr() if t.text == "true" else false_expr()
            return type(e)(e.arg, e.other, span=t.span)
        if t.text == "infinity":
            self.advance()
            return Const(float("inf"), span=t.span)
        if t.text == "fail":
            self.advance()
            return Fail(self._annotation(), span=t.span)
        if t.text in ("inl", "inr"):
            self.advance()
            other = self._annotation()
            arg = self._postfix()
            cls = Inl if t.text == "inl" else Inr
            return cls(arg, other, span=t.span)
        if t.text == "random":
            self.advance()
            self.eat_sym("(")
            name_tok = self.tok
            name = self.ident()
            e = self._dist_call(name, name_tok)
            self.eat_sym(")")
            return e
        raise self.error("expected an expression")

    def _dist_call(self, name, tok):
        try:
            fam = distributions.family(name)
        except Exception:
            raise ParseError(f"unknown distribution '{name}'", tok.span) from None
        args = self._paren_list()
        return Random(fam.name, _dist_arg(args, tok), span=tok.span)

    def _ident_atom(self, t):
        name = t.text
        nxt = self.peek()
        called = nxt.kind == "sym" and nxt.text == "("
        if name == "rand" and nxt.kind == "sym" and nxt.text == ".":
            self.advance()
            self.advance()
            dt = self.tok
            return self._dist_call(self.ident(), dt)
        if called and name in PRIM_CALLS:
            self.advance()
            args = self._paren_list()
            if name in ("fst", "snd"):
                if len(args) != 1:
                    raise ParseError(f"{name} takes one argument", t.span)
                from .syntax import Fst, Snd
                return (Fst if name == "fst" else Snd)(args[0], span=t.span)
            return Prim(name, tuple(args), span=t.span)
        if self.target and called:
            special = self._target_call(t)
            if special is not None:
                return special
        if called and (name in self.functions or name == "flip"):
            self.advance()
            args = self._paren_list()
            arg = args[0] if len(args) == 1 else Tuple_(tuple(args), span=t.span)
            if not args:
                arg = Const((), span=t.span)
            return Call(name, (arg,), span=t.span)
        self.advance()
        if "$" in name and not self.target:
            raise ParseError("names containing '$' are reserved for generated code", t.span)
        return Var(name, span=t.span)

    def _target_call(self, t):
        name = t.text
        unary = {"isL": IsL, "isR": IsR, "fromL": FromL, "fromR": FromR, "Log": Log, "Exp": Exp}
        if name in unary:
            self.advance()
            args = self._paren_list()
            if len(args) != 1:
                raise ParseError(f"{name} takes one argument", t.span)
            return unary[name](args[0], span=t.span)
        for prefix, cls in (("pdf_", PdfOf), ("logpdf_", LogPdfOf)):
            if name.startswith(prefix):
                self.advance()
                dist = name[len(prefix):]
                try:
                    distributions.family(dist)
                except Exception:
                    raise ParseError(f"unknown distribution '{dist}'", t.span) from None
                args = self._paren_list()
                if len(args) < 2:
                    raise ParseError(f"{name} needs parameters and a point", t.span)
                return cls(dist, _dist_arg(args[:-1], t), args[-1], span=t.span)
        if name in ("prodBy", "logprodBy"):
            self.advance()
            self.eat_sym("(")
            self.depth += 1
            self.eat_kw("fun")
            var = self.ident()
            self.eat_sym("->")
            body = self.expr()
            self.eat_sym(",")
            if self.tok.kind != "int":
                raise self.error("expected a size")
            n = int(self.advance().text)
            self.depth -= 1
            self.eat_sym(")")
            cls = ProdBy if name == "prodBy" else LogProdBy
            return cls(var, n, body, span=t.span)
        return None

    def _array(self):
        t = self.eat_sym("[|")
        self.depth += 1
        if self.is_sym("|]"):
            raise self.error("empty arrays are not supported")
        if self.is_kw("for"):
            self.advance()
            var = self.binder()
            self.eat_kw("in")
            src = self._or()
            if self.is_sym(".."):
                rt = self.advance()
                src = Range(src, self._or(), span=rt.span)
            self.eat_sym("->")
            body = self.expr()
            self.depth -= 1
            self.eat_sym("|]")
            return Comprehension(var, src, body, span=t.span)
        first = self._noseq_item()
        if self.is_sym(".."):
            self.advance()
            hi = self._or()
            self.depth -= 1
            self.eat_sym("|]")
            return Range(first, hi, span=t.span)
        items = [first]
        while self.is_sym(";"):
            self.advance()
            if self.is_sym("|]"):
                break
            items.append(self._noseq_item())
        self.depth -= 1
        self.eat_sym("|]")
        return ArrayLit(tuple(items), span=t.span)

    def _noseq_item(self):
        saved = self._no_seq
        self._no_seq = True
        try:
            return self.expr()
        finally:
            self._no_seq = saved

    def _record(self):
        t = self.eat_sym("{")
        self.depth += 1
        fields = []
        while not self.is_sym("}"):
            name = self.ident()
            self.eat_sym("=")
            e = self._noseq_item()
            fields.append((name, e))
            if self.is_sym(";"):
                self.advance()
            elif not (self.is_sym("}") or self.tok.first_on_line):
                raise self.error("expected ';' or '}' in record")
        self.depth -= 1
        self.eat_sym("}")
        return Record(tuple(fields), span=t.span)


def _dist_arg(args, tok):
    if not args:
        raise ParseError("distribution needs arguments", tok.span)
    if len(args) == 1:
        return args[0]
    return Tuple_(tuple(args), span=tok.span)


# the set of call-style primitive names must stay in step with the evaluator
assert PRIM_CALLS - {"fst", "snd"} <= set(IMPL)
