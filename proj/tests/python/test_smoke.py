import math
import os
from pathlib import Path

import pytest

import equistab

DEMOS = Path(os.environ.get("EQUISTAB_DEMOS", Path(__file__).resolve().parents[2] / "demos"))


def test_expression_derivatives():
    e = equistab.Expression.parse("x1^2*x2 + sin(x2)", 2)
    assert e.eval([2.0, 0.5]) == pytest.approx(2.0 + math.sin(0.5))
    g = e.gradient([2.0, 0.5])
    assert g[0] == pytest.approx(2.0)
    assert g[1] == pytest.approx(4.0 + math.cos(0.5))
    h = e.hessian([2.0, 0.5])
    assert h[0, 1] == pytest.approx(4.0)
    assert h[1, 1] == pytest.approx(-math.sin(0.5))


def test_parse_error_is_raised():
    with pytest.raises(equistab.Error, match="ParseError"):
        equistab.Expression.parse("x1 ^", 1)


def test_kepler_model_and_verdict():
    m = equistab.load_model(str(DEMOS / "kepler.json"))
    assert m.dim == 4
    assert m.momentum_auto
    p = m.points["circular"]
    assert abs(m.momentum(p)[0]) == pytest.approx(1.0)
    v = m.verdict("circular")
    assert v["verdict"] == "StableModGmu"
    assert min(v["eigenvalues"]) == pytest.approx(0.5, rel=1e-8)


def test_commands():
    code, rep = equistab.analyze(DEMOS / "kepler.json", "circular")
    assert code == 0
    assert rep["stability"]["verdict"] == "StableModGmu"
    code, rep = equistab.analyze(DEMOS / "unstable.json", "circular")
    assert code == 2
    csv, summary = equistab.simulate(DEMOS / "oscillator.json", step=0.01, horizon=1.0)
    assert csv.splitlines()[0] == "t,x1,x2,h,phi2,inv1"
    assert len(csv.splitlines()) == 102
    assert "early_stop=false" in summary
    code, rep, witness = equistab.probe(DEMOS / "unstable.json", "circular", samples=3, horizon=20.0)
    assert code == 2
    assert rep["probe"]["verdict"] == "Escaped"
    assert witness.startswith("t,")
    ok, table = equistab.verify(DEMOS / "coupled_modes.json")
    assert ok and "momentum_property" in table


def test_unknown_flag_and_bad_file():
    with pytest.raises(TypeError):
        equistab.analyze(DEMOS / "kepler.json", bogus=1)
    with pytest.raises(equistab.Error, match="InvalidModel"):
        equistab.load_model("/nonexistent.json")
