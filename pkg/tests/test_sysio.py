import json
import pathlib

import pytest

from liemap.kernel import Expr, JetVar
from liemap.sysio import (
    DiffSys,
    ParseError,
    load_system,
    parse_system,
    print_system,
)

FIX = pathlib.Path(__file__).parent / "fixtures"


def test_unknown_identifier_error():
    with pytest.raises(ParseError) as e:
        parse_system("dep u(x,t);")
    assert "unknown identifier" in str(e.value)


def test_unknown_identifier_in_equation():
    with pytest.raises(ParseError) as e:
        parse_system("indep x, t;\ndep u(x,t);\ndiff(u,[t]) = -s;")
    assert "unknown identifier s" in str(e.value)
    assert e.value.line == 3


def test_black_scholes_parses():
    sys = load_system(FIX / "bs.dps")
    assert [v.name for v in sys.indep] == ["s", "t"]
    assert sys.dep[0].name == "v"
    assert len(sys.equations) == 1
    assert not sys.solved


def test_ckdv_solved_form():
    sys = load_system(FIX / "ckdv.dps")
    (lead, rhs), = sys.solved.items()
    u = sys.sigs["u"]
    assert lead is JetVar(u, {"x": 3})
    t = Expr.of(JetVar(sys.sigs["t"]))
    u0 = Expr.of(JetVar(u))
    ux = Expr.of(JetVar(u, {"x": 1}))
    ut = Expr.of(JetVar(u, {"t": 1}))
    assert rhs == -u0 * ux - ut - u0 / (2 * t)


def test_round_trip_all_fixtures():
    for p in sorted(FIX.glob("*.dps")):
        s1 = load_system(p)
        text = print_system(s1, "pretty")
        s2 = parse_system(text)
        assert print_system(s2, "pretty") == text, p.name
        assert s2.solved == s1.solved
        assert s2.equations == s1.equations


def test_print_deterministic():
    s = load_system(FIX / "bs.dps")
    assert print_system(s) == print_system(s)
    assert print_system(s, "json") == print_system(s, "json")


def test_empty_system_json():
    out = json.loads(print_system(DiffSys(), "json"))
    assert out["schema"] == 1
    assert out["equations"] == []


def test_json_inequations():
    text = """
    indep x, t;
    dep u(x,t);
    map psi(x,t,u);
    diff(psi,[x]) <> 0;
    """
    sys = parse_system(text)
    out = json.loads(print_system(sys, "json"))
    assert out["inequations"] == ["diff(psi,[x])"]


def test_map_and_param_declarations():
    sys = parse_system("""
    indep x;
    dep u(x);
    map psi(x,u);
    param a1;
    psi = ln(x);
    a1 = 2;
    """)
    psi = sys.sigs["psi"]
    assert psi.kind == "map-unknown"
    assert sys.sigs["a1"].kind == "parameter"
    assert JetVar(psi) in sys.solved
    assert sys.solved[JetVar(sys.sigs["a1"])] == Expr.const(2)


def test_rational_and_power_expressions():
    sys = parse_system("""
    indep x;
    dep u(x);
    3/2*u^2 - x^-1 = 0;
    """)
    (eq,) = sys.equations
    x = Expr.of(JetVar(sys.sigs["x"]))
    u = Expr.of(JetVar(sys.sigs["u"]))
    assert eq == u * u * 3 / 2 - 1 / x


def test_inconsistent_redeclaration():
    with pytest.raises(ParseError):
        parse_system("indep x; dep u(x); dep u(x,x);")


def test_comment_and_name():
    sys = parse_system("# hello\nname foo;\nindep x;\ndep u(x);\nu = 0;")
    assert sys.name == "foo"


def test_coords_inference():
    plain = parse_system("indep x, t; dep u(x,t);")
    assert plain.coords == ("x", "t")
    defining = parse_system("indep x, t; dep u(x,t); inf xi(x,t,u);")
    assert defining.coords == ("x", "t", "u")
