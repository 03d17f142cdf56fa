"""CSV encoding of Fun values.

A value is laid out as scalar leaf columns derived from its type: record
fields by name, tuple components as ``_1 .. _n``, nested array elements as
``name[k]``.  An array at the top level becomes one row per element, so a
dataset of records reads naturally as a table.  Columns named ``draw``
group the rows of several values; ``i`` and ``draw`` are never leaves.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from .errors import FunError
from .types import BOOL, Array, FunType, IntT, Prod, RealT, UnitT, record_components
from .values import FALSE, TRUE, ArrayV

DRAW = "draw"


class DataError(FunError):
    pass


def _components(t: Prod):
    """``[(suffix, type)]`` for a record or right-nested tuple."""
    if t.fields:
        return list(record_components(t))
    items = []
    while isinstance(t, Prod) and not t.fields:
        items.append(t.left)
        t = t.right
    items.append(t)
    return [(f"_{k + 1}", ty) for k, ty in enumerate(items)]


def leaves(t: FunType, prefix: str = "") -> List[Tuple[str, FunType]]:
    """Column names and scalar types of one row of type ``t``."""
    if isinstance(t, (IntT, RealT)) or t == BOOL:
        return [(prefix or "value", t)]
    if isinstance(t, UnitT):
        return []
    if isinstance(t, Prod):
        out = []
        for name, ty in _components(t):
            out.extend(leaves(ty, f"{prefix}.{name}" if prefix else name))
        return out
    if isinstance(t, Array):
        out = []
        for k in range(t.size):
            out.extend(leaves(t.elem, f"{prefix or 'value'}[{k}]"))
        return out
    raise DataError(f"values of type {t} have no CSV layout")


def flatten(v, t: FunType) -> list:
    """Leaf values of ``v`` in the order of :func:`leaves`."""
    if isinstance(t, (IntT, RealT)) or t == BOOL:
        return [v]
    if isinstance(t, UnitT):
        return []
    if isinstance(t, Prod):
        comps = _components(t)
        parts = _split(v, len(comps))
        out = []
        for x, (_, ty) in zip(parts, comps):
            out.extend(flatten(x, ty))
        return out
    if isinstance(t, Array):
        out = []
        for x in v:
            out.extend(flatten(x, t.elem))
        return out
    raise DataError(f"values of type {t} have no CSV layout")


def _split(v, n):
    parts = []
    for _ in range(n - 1):
        parts.append(v[0])
        v = v[1]
    parts.append(v)
    return parts


def unflatten(cells: Sequence, t: FunType):
    """Inverse of :func:`flatten`; ``cells`` are already-parsed scalars."""
    it = iter(cells)
    v = _build(it, t)
    if next(it, None) is not None:
        raise DataError("too many cells for the value type")
    return v


def _build(it, t):
    if isinstance(t, (IntT, RealT)) or t == BOOL:
        return next(it)
    if isinstance(t, UnitT):
        return ()
    if isinstance(t, Prod):
        parts = [_build(it, ty) for _, ty in _components(t)]
        v = parts[-1]
        for x in reversed(parts[:-1]):
            v = (x, v)
        return v
    if isinstance(t, Array):
        return ArrayV(_build(it, t.elem) for _ in range(t.size))
    raise DataError(f"values of type {t} have no CSV layout")


def format_cell(x) -> str:
    if x == TRUE:
        return "true"
    if x == FALSE:
        return "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def parse_cell(text: str, t: FunType, where: str = ""):
    s = text.strip()
    try:
        if t == BOOL:
            if s.lower() in ("true", "1"):
                return TRUE
            if s.lower() in ("false", "0"):
                return FALSE
            raise ValueError
        if isinstance(t, IntT):
            return int(s)
        x = float(s)
        return x
    except ValueError:
        raise DataError(f"{where}cannot read '{text}' as {t}") from None


def row_type(t: FunType) -> FunType:
    """The type of one CSV row when a value of type ``t`` is written."""
    return t.elem if isinstance(t, Array) else t


def value_rows(v, t: FunType) -> List[list]:
    rt = row_type(t)
    items = v if isinstance(t, Array) else [v]
    return [flatten(x, rt) for x in items]


def write_values(values, t: FunType, out, draw_column: bool = False):
    """Write ``values`` (each of type ``t``) as CSV to the text stream ``out``."""
    w = csv.writer(out, lineterminator="\n")
    names = [n for n, _ in leaves(row_type(t))]
    w.writerow(([DRAW] if draw_column else []) + names)
    for k, v in enumerate(values):
        for row in value_rows(v, t):
            w.writerow(([k] if draw_column else []) + [format_cell(x) for x in row])


def values_to_csv(values, t: FunType, draw_column: bool = False) -> str:
    buf = io.StringIO()
    write_values(values, t, buf, draw_column)
    return buf.getvalue()


@dataclass
class Dataset:
    """A parsed CSV table together with the value type of its rows."""
    columns: List[str]
    rows: List[list]
    type: FunType
    draws: List[int]

    def values(self) -> list:
        """The rows regrouped into values of ``type``.

        With a ``draw`` column each draw is one value; otherwise a value of
        array type takes consecutive chunks of rows.
        """
        rt = row_type(self.type)
        items = [unflatten(r, rt) for r in self.rows]
        if not isinstance(self.type, Array):
            return items
        n = self.type.size
        if self.draws:
            groups = {}
            for d, x in zip(self.draws, items):
                groups.setdefault(d, []).append(x)
            chunks = [groups[d] for d in sorted(groups)]
        else:
            if n == 0 or len(items) % n:
                raise DataError(f"expected a multiple of {n} rows for values of type "
                                f"{self.type}, found {len(items)}")
            chunks = [items[k:k + n] for k in range(0, len(items), n)]
        for c in chunks:
            if len(c) != n:
                raise DataError(f"a value of type {self.type} needs {n} rows, found {len(c)}")
        return [ArrayV(c) for c in chunks]


def read_dataset(text: str, t: FunType, source: str = "data") -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{source}: empty file") from None
    want = leaves(row_type(t))
    names = [n for n, _ in want]
    if len(names) == 1 and len(header) - (DRAW in header) - ("i" in header) == 1:
        # a single unnamed column matches a scalar row whatever its header
        names_in_file = [h for h in header if h not in (DRAW, "i")]
        index = {names_in_file[0]: header.index(names_in_file[0])}
        names = names_in_file
    else:
        missing = [n for n in names if n not in header]
        if missing:
            raise DataError(f"{source}: missing column(s) {', '.join(missing)};"
                            f" expected {', '.join(names)}")
        index = {n: header.index(n) for n in names}
    draw_at = header.index(DRAW) if DRAW in header else None
    rows, draws = [], []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise DataError(f"{source}:{lineno}: expected {len(header)} cells, found {len(rec)}")
        row = [parse_cell(rec[index[n]], ty, f"{source}:{lineno}: ")
               for n, (_, ty) in zip(names, want)]
        for x, (_, ty) in zip(row, want):
            if isinstance(ty, RealT) and not math.isfinite(x):
                raise DataError(f"{source}:{lineno}: non-finite value")
        rows.append(row)
        if draw_at is not None:
            draws.append(int(rec[draw_at]))
    return Dataset(names, rows, t, draws)


def read_values(path, t: FunType) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return read_dataset(text, t, str(path)).values()
