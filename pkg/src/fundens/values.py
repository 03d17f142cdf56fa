"""Closed values.

Values use plain Python data where possible: ``int`` for int, ``float`` for
real, ``()`` for unit and 2-tuples for pairs.  Sum injections are wrapped
in ``InlV`` / ``InrV`` and fixed-size arrays are ``ArrayV`` (a tuple
subclass so that it stays hashable and indexable).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .types import Array, FunType, IntT, Prod, RealT, Sum, UnitT


@dataclass(frozen=True)
class InlV:
    value: Any


@dataclass(frozen=True)
class InrV:
    value: Any


class ArrayV(tuple):
    """Fixed-size array value.

    ``numeric()`` caches an ndarray view of an array of scalars (bools become
    a numpy bool array), or ``None`` when the elements are not scalars.
    """

    def numeric(self):
        try:
            return self._np
        except AttributeError:
            pass
        import numpy as np

        if all(type(x) in (int, float) for x in self):
            cached = np.asarray(self)
        elif all(x == TRUE or x == FALSE for x in self):
            cached = np.asarray([x == TRUE for x in self], dtype=bool)
        else:
            cached = None
        self._np = cached
        return cached

    def __repr__(self):
        return "ArrayV(" + tuple.__repr__(self) + ")"


UNIT_V = ()
TRUE = InlV(())
FALSE = InrV(())


def bool_value(b) -> Any:
    return TRUE if b else FALSE


def is_true(v) -> bool:
    return isinstance(v, InlV)


def default_value(t: FunType):
    """The default value returned where an operation is otherwise undefined."""
    if isinstance(t, UnitT):
        return ()
    if isinstance(t, IntT):
        return 0
    if isinstance(t, RealT):
        return 0.0
    if isinstance(t, Prod):
        return (default_value(t.left), default_value(t.right))
    if isinstance(t, Sum):
        return InlV(default_value(t.left))
    if isinstance(t, Array):
        return ArrayV(default_value(t.elem) for _ in range(t.size))
    raise TypeError(f"not a type: {t!r}")


def value_has_type(v, t: FunType) -> bool:
    if isinstance(t, UnitT):
        return v == ()
    if isinstance(t, IntT):
        return isinstance(v, int) and not isinstance(v, bool)
    if isinstance(t, RealT):
        return isinstance(v, float)
    if isinstance(t, Prod):
        return (isinstance(v, tuple) and not isinstance(v, ArrayV) and len(v) == 2
                and value_has_type(v[0], t.left) and value_has_type(v[1], t.right))
    if isinstance(t, Sum):
        if isinstance(v, InlV):
            return value_has_type(v.value, t.left)
        if isinstance(v, InrV):
            return value_has_type(v.value, t.right)
        return False
    if isinstance(t, Array):
        return (isinstance(v, ArrayV) and len(v) == t.size
                and all(value_has_type(x, t.elem) for x in v))
    return False


def enumerate_values(t: FunType, ints=None):
    """All values of a finite type, in a fixed order.

    ``ints``, when given, is the range of integers to use for ``int``
    components.
    """
    if isinstance(t, UnitT):
        return [()]
    if isinstance(t, IntT) and ints is not None:
        return list(ints)
    if isinstance(t, Prod):
        return [(a, b) for a in enumerate_values(t.left, ints)
                for b in enumerate_values(t.right, ints)]
    if isinstance(t, Sum):
        return ([InlV(a) for a in enumerate_values(t.left, ints)]
                + [InrV(b) for b in enumerate_values(t.right, ints)])
    if isinstance(t, Array):
        out = [()]
        for _ in range(t.size):
            out = [prefix + (x,) for prefix in out for x in enumerate_values(t.elem, ints)]
        return [ArrayV(v) for v in out]
    raise ValueError(f"type {t} has infinitely many values")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v == TRUE:
        return "true"
    if v == FALSE:
        return "false"
    if isinstance(v, InlV):
        return f"inl {format_value(v.value)}"
    if isinstance(v, InrV):
        return f"inr {format_value(v.value)}"
    if isinstance(v, ArrayV):
        return "[|" + "; ".join(format_value(x) for x in v) + "|]"
    if isinstance(v, tuple):
        if v == ():
            return "()"
        return f"({format_value(v[0])}, {format_value(v[1])})"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def flatten_value(v):
    """Depth-first scalar leaves of a value (bools become 1/0)."""
    if v == TRUE:
        return [1]
    if v == FALSE:
        return [0]
    if isinstance(v, (InlV, InrV)):
        return flatten_value(v.value)
    if isinstance(v, tuple):
        out = []
        for x in v:
            out.extend(flatten_value(x))
        return out
    return [v]
