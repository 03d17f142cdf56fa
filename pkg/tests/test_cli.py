"""Command-line interface: subcommands, CSV output and exit codes."""

import csv
import io
import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from fundens.cli import main, parse_grid
from fundens.errors import FunError
from fundens.types import INT, REAL

from helpers import MODELS


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_check_reports_types():
    code, out, _ = run("check", MODELS / "fig1.fun")
    assert code == 0
    assert "param mA : real = 0.0" in out and "main : real" in out
    code, out, _ = run("check", MODELS / "linreg.fun")
    assert code == 0
    assert "constant xs : real[201]" in out
    assert "model : {a: real; b: real; noise: real} -> real[201]" in out


def test_point_mass_exits_one_with_a_diagnostic():
    code, out, err = run("compile", MODELS / "point_mass.fun")
    assert code == 1 and out == ""
    assert "RealConstant" in err and "point mass" in err


def test_usage_errors_exit_one():
    assert run("compile")[0] == 1
    assert run("frobnicate", MODELS / "fig1.fun")[0] == 1
    assert run("compile", "/no/such/file.fun")[0] == 1
    assert run("--help")[0] == 0


def test_parse_errors_exit_one(tmp_path):
    p = tmp_path / "bad.fun"
    p.write_text("let x = (1.0 +\n", encoding="utf-8")
    code, _, err = run("check", p)
    assert code == 1 and "ParseError" in err


def test_compile_prints_a_density():
    code, out, _ = run("compile", MODELS / "fig1.fun")
    assert code == 0
    assert out.startswith("// density of main\nfun (z : real) ->")
    code, out, _ = run("compile", "--log", MODELS / "fig1.fun")
    assert "logsumexp" in out


def test_density_grid_with_negative_start():
    code, out, err = run("density", MODELS / "fig1.fun", "--at", "-4:0.1:8")
    assert code == 0, err
    table = rows(out)
    assert table[0] == ["z", "pdf"]
    assert len(table) == 122
    assert float(table[1][0]) == -4.0 and float(table[-1][0]) == 8.0


def test_density_grid_integrates_to_at_most_one():
    _, out, _ = run("density", MODELS / "fig1.fun", "--at", "-8:0.01:12")
    z, p = np.array([[float(a), float(b)] for a, b in rows(out)[1:]]).T
    total = trapezoid(p, z)
    assert total <= 1.0 + 1e-4 and total > 0.999


def test_density_params_and_points():
    _, out, _ = run("density", MODELS / "fig1.fun", "--params", "mA=1.0", "--at", "1.0,4.0")
    (_, a), (_, b) = [(float(x), float(y)) for x, y in rows(out)[1:]]
    g = lambda m, x: math.exp(-0.5 * (x - m) ** 2) / math.sqrt(2 * math.pi)
    assert a == pytest.approx(0.7 * g(1.0, 1.0) + 0.3 * g(4.0, 1.0), rel=1e-12)
    assert b == pytest.approx(0.7 * g(1.0, 4.0) + 0.3 * g(4.0, 4.0), rel=1e-12)


def test_density_log_column():
    _, out, _ = run("density", "--log", MODELS / "fig1.fun", "--at", "0.0")
    assert rows(out)[0] == ["z", "logpdf"]
    assert float(rows(out)[1][1]) < 0.0


def test_density_bad_grid_writes_nothing():
    code, out, err = run("density", MODELS / "fig1.fun", "--at", "x:1")
    assert code == 1 and out == "" and "lo:step:hi" in err


def test_density_of_structured_data(tmp_path):
    xs = np.linspace(-1, 1, 201)
    data = tmp_path / "y.csv"
    data.write_text("value\n" + "\n".join(repr(float(2 * x - 1)) for x in xs) + "\n")
    code, out, err = run("density", "--log", MODELS / "linreg.fun", "--program", "model",
                         "--data", data)
    assert code == 1 and "missing parameter" in err
    code, out, err = run("density", "--log", MODELS / "linreg.fun", "--program", "model",
                         "--data", data, "--params", "w={a=2.0; b=-1.0; noise=0.5}")
    assert code == 0, err
    table = rows(out)
    assert table[0] == ["index", "logpdf"] and len(table) == 2
    want = 201 * (-0.5 * math.log(2 * math.pi) - math.log(0.5))
    assert float(table[1][1]) == pytest.approx(want, rel=1e-12)


def test_unknown_parameter():
    code, _, err = run("density", MODELS / "fig1.fun", "--params", "q=1", "--at", "0")
    assert code == 1 and "unknown parameter" in err


def test_sample_is_reproducible():
    a = run("sample", MODELS / "fig1.fun", "--n", 50, "--seed", 3)
    b = run("sample", MODELS / "fig1.fun", "--n", 50, "--seed", 3)
    c = run("sample", MODELS / "fig1.fun", "--n", 50, "--seed", 4)
    assert a == b and a[1] != c[1]
    table = rows(a[1])
    assert table[0] == ["draw", "value"] and len(table) == 51


def test_sample_model_draws_its_parameter_from_the_prior():
    code, out, err = run("sample", MODELS / "linreg.fun", "--seed", 1)
    assert code == 0
    assert "drawn from the prior" in err
    assert len(rows(out)) == 202


def test_sample_rejects_zero_draws():
    assert run("sample", MODELS / "fig1.fun", "--n", 0)[0] == 1


def test_infer_round_trip(tmp_path):
    chains = tmp_path / "chains.csv"
    src = tmp_path / "coin.fun"
    src.write_text("let prior () = random(Beta(1.0, 1.0))\n"
                   "let model p = [| for i in 0..29 -> random(Bernoulli(p)) |]\n")
    data = tmp_path / "flips.csv"
    data.write_text("value\n" + "true\n" * 24 + "false\n" * 6)
    code, out, err = run("infer", src, "--data", data, "--burnin", 500, "--samples", 2000,
                         "--seed", 1, "--output", chains)
    assert code == 0, err
    assert "parameter" in out
    table = rows(chains.read_text())
    assert table[0] == ["value"] and len(table) == 2001
    mean = np.mean([float(r[0]) for r in table[1:]])
    assert abs(mean - 25.0 / 32.0) < 0.05  # Beta(25, 7) posterior


def test_infer_needs_prior_and_model():
    code, _, err = run("infer", MODELS / "fig1.fun", "--data", MODELS / "fig1.fun")
    assert code == 1 and "prior" in err


def test_parse_grid():
    assert parse_grid("0:0.5:1", REAL) == [0.0, 0.5, 1.0]
    assert parse_grid("0:1:3", INT) == [0, 1, 2, 3]
    assert parse_grid("1.5,2", REAL) == [1.5, 2.0]
    for bad in ("1:0:2", "2:1:1", "a:1:2", "1:2"):
        with pytest.raises(FunError):
            parse_grid(bad, REAL)
