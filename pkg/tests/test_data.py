"""CSV layout of values and model-file elaboration."""

import pytest

from fundens.data import (DataError, leaves, parse_cell, read_dataset, values_to_csv,
                          write_values)
from fundens.errors import FunError
from fundens.model import load_model, parse_and_elaborate, parse_bindings
from fundens.parser import parse_type
from fundens.types import BOOL, INT, REAL
from fundens.values import FALSE, TRUE, ArrayV

from helpers import MODELS


def T(text):
    return parse_type(text)


def test_leaf_names():
    assert leaves(REAL) == [("value", REAL)]
    t = T("{a: real; b: int * bool; c: real[2]}")
    assert [n for n, _ in leaves(t)] == ["a", "b._1", "b._2", "c[0]", "c[1]"]


@pytest.mark.parametrize("t,values", [
    (REAL, [1.5, -2.0, 1e-300]),
    (INT, [3, -7]),
    (BOOL, [TRUE, FALSE]),
    (T("real * (int * bool)"), [(0.5, (3, TRUE)), (1.0, (-1, FALSE))]),
    (T("{x: real; ys: real[2]}"), [(1.0, ArrayV([2.0, 3.0]))]),
    (T("{t: real; y: bool}[3]"),
     [ArrayV([(0.1, TRUE), (0.2, FALSE), (0.3, TRUE)]),
      ArrayV([(1.1, FALSE), (1.2, FALSE), (1.3, TRUE)])]),
])
def test_round_trip(t, values):
    text = values_to_csv(values, t, draw_column=len(values) > 1)
    back = read_dataset(text, t).values()
    assert back == values


def test_arrays_are_rows():
    t = T("real[3]")
    text = values_to_csv([ArrayV([1.0, 2.0, 3.0])], t)
    assert text == "value\n1.0\n2.0\n3.0\n"


def test_rows_without_a_draw_column_are_chunked():
    t = T("real[2]")
    assert read_dataset("y\n1\n2\n3\n4\n", t).values() == [ArrayV([1.0, 2.0]), ArrayV([3.0, 4.0])]
    with pytest.raises(DataError):
        read_dataset("y\n1\n2\n3\n", t).values()


def test_single_column_header_is_free():
    assert read_dataset("whatever\n1.5\n", REAL).values() == [1.5]


def test_bad_data_is_reported():
    t = T("{a: real; b: real}")
    with pytest.raises(DataError, match="missing column"):
        read_dataset("a\n1\n", t)
    with pytest.raises(DataError, match="3"):
        read_dataset("a,b\n1,2\nx,4\n", t)
    with pytest.raises(DataError, match="non-finite"):
        read_dataset("a,b\n1,nan\n", t)
    with pytest.raises(DataError):
        parse_cell("maybe", BOOL)


def test_booleans_accept_digits():
    assert parse_cell("1", BOOL) == TRUE and parse_cell("false", BOOL) == FALSE


def test_write_values_with_draws():
    import io
    buf = io.StringIO()
    write_values([1.0, 2.0], REAL, buf, draw_column=True)
    assert buf.getvalue() == "draw,value\n0,1.0\n1,2.0\n"


# --- model files ------------------------------------------------------------------

@pytest.mark.parametrize("path", sorted(MODELS.glob("*.fun")), ids=lambda p: p.stem)
def test_shipped_models_elaborate(path):
    m = load_model(path)
    assert m.programs()


def test_param_defaults():
    m = load_model(MODELS / "fig1.fun")
    assert m.defaults == {"mA": 0.0, "mB": 4.0}
    assert set(m.main.free_params) == {"mA", "mB"}


def test_undeclared_variables_are_real_parameters():
    m = parse_and_elaborate("random(Gaussian(mu, 1.0))")
    assert m.main.free_params == {"mu": REAL}


def test_constants_are_evaluated():
    m = load_model(MODELS / "linreg.fun")
    xs = m.constants["xs"]
    assert len(xs) == 201 and xs[0] == -1.0 and xs[-1] == 1.0


def test_prior_and_model_types_must_agree():
    with pytest.raises(FunError):
        parse_and_elaborate("let prior () = random(Uniform(0.0, 1.0))\n"
                            "let model (w : int) = random(Poisson(real(w)))")


def test_constants_must_be_deterministic():
    with pytest.raises(FunError):
        parse_and_elaborate("let c = flip 0.5\nlet prior () = random(Uniform(0.0, 1.0))")


def test_parse_bindings():
    assert parse_bindings(["r=1.5", "k = 3"], {"r": REAL, "k": INT}) == {"r": 1.5, "k": 3}
    assert parse_bindings(["r=-2"], {"r": REAL}) == {"r": -2.0}
    with pytest.raises(FunError):
        parse_bindings(["q=1"], {"r": REAL})
    with pytest.raises(FunError):
        parse_bindings(["r"], {"r": REAL})
