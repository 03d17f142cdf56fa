"""Types of the Fun language.

``Array`` is a fixed-size homogeneous product.  It is semantically the
right-nested tuple of its elements; keeping it as a separate constructor
lets plates compile to indexed products instead of unrolled code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class IntT:
    def __str__(self):
        return "int"


@dataclass(frozen=True)
class RealT:
    def __str__(self):
        return "real"


@dataclass(frozen=True)
class UnitT:
    def __str__(self):
        return "unit"


@dataclass(frozen=True)
class Prod:
    """Pair type.  ``fields`` names the components of a record encoded as
    the right-nested tuple starting here; it does not affect equality."""
    left: "FunType"
    right: "FunType"
    fields: Optional[Tuple[str, ...]] = field(default=None, compare=False)

    def __str__(self):
        if self.fields:
            parts = record_components(self)
            return "{" + "; ".join(f"{n}: {t}" for n, t in parts) + "}"
        return f"{_atom(self.left, prod=True)} * {_atom(self.right)}"


@dataclass(frozen=True)
class Sum:
    left: "FunType"
    right: "FunType"

    def __str__(self):
        if self == BOOL:
            return "bool"
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class Array:
    elem: "FunType"
    size: int

    def __str__(self):
        return f"{_atom(self.elem)}[{self.size}]"


FunType = Union[IntT, RealT, UnitT, Prod, Sum, Array]

INT = IntT()
REAL = RealT()
UNIT = UnitT()
BOOL = Sum(UNIT, UNIT)


def record_components(t: Prod):
    """``[(name, type)]`` of a record type."""
    names = t.fields
    out = []
    for name in names[:-1]:
        out.append((name, t.left))
        t = t.right
    out.append((names[-1], t))
    return out


def record_type(items) -> FunType:
    """Record type from ``[(name, type)]`` (at least two fields)."""
    items = list(items)
    t = tuple_type([ty for _, ty in items])
    return Prod(t.left, t.right, tuple(n for n, _ in items))


def _atom(t, prod=False):
    if isinstance(t, Prod) and not t.fields:
        return f"({t})"
    return str(t)


def is_discrete(t: FunType) -> bool:
    """True iff ``real`` occurs nowhere in ``t``."""
    if isinstance(t, RealT):
        return False
    if isinstance(t, (Prod, Sum)):
        return is_discrete(t.left) and is_discrete(t.right)
    if isinstance(t, Array):
        return is_discrete(t.elem)
    return True


def is_finite(t: FunType) -> bool:
    """True iff the set of values of ``t`` is finite (no int, no real)."""
    if isinstance(t, (IntT, RealT)):
        return False
    if isinstance(t, (Prod, Sum)):
        return is_finite(t.left) and is_finite(t.right)
    if isinstance(t, Array):
        return is_finite(t.elem)
    return True


def tuple_type(items) -> FunType:
    """Right-nested product ``t1 * (t2 * ... * tn)``."""
    items = list(items)
    if not items:
        return UNIT
    out = items[-1]
    for t in reversed(items[:-1]):
        out = Prod(t, out)
    return out
