import pathlib

import pytest

from liemap.detsys import (
    NotSolvedForm,
    VectorField,
    apply_prolonged,
    collect_parametric,
    determining_system,
    equiv_det_sys,
    make_mapspec,
    prolong,
    substitute_field,
)
from liemap.kernel import Expr, FunctionSignature, JetVar, fn
from liemap.sysio import load_system, parse_system

FIX = pathlib.Path(__file__).parent / "fixtures"


def one_var_world():
    sys = parse_system("indep x; dep u(x);")
    x, u = sys.sigs["x"], sys.sigs["u"]
    xi = FunctionSignature("xi1", ("x", "u"), "infinitesimal")
    eta = FunctionSignature("eta1", ("x", "u"), "infinitesimal")
    return sys, x, u, xi, eta


class TestProlong:
    def test_first_prolongation_textbook(self):
        sys, x, u, xi, eta = one_var_world()
        vf = VectorField((("x", fn(xi)), ("u", fn(eta))), sys.context())
        ux = Expr.of(JetVar(u, {"x": 1}))
        got = prolong(vf, JetVar(u, {"x": 1}))
        eta_x = Expr.of(JetVar(eta, {"x": 1}))
        eta_u = Expr.of(JetVar(eta, {"u": 1}))
        xi_x = Expr.of(JetVar(xi, {"x": 1}))
        xi_u = Expr.of(JetVar(xi, {"u": 1}))
        assert got == eta_x + (eta_u - xi_x) * ux - xi_u * ux * ux

    def test_constant_translation_vanishes(self):
        # field d/dt has all prolonged coefficients zero
        sys = parse_system("indep x, t; dep u(x,t);")
        u = sys.sigs["u"]
        vf = VectorField((("x", Expr.const(0)), ("t", Expr.const(1)),
                          ("u", Expr.const(0))), sys.context())
        for mi in ({"x": 1}, {"t": 1}, {"x": 2}, {"x": 1, "t": 1}):
            assert prolong(vf, JetVar(u, mi)).is_zero()

    def test_scaling_field_first_coefficient(self):
        # field s d/ds on v(s,t): coefficient of d/dv_s is -v_s
        sys = parse_system("indep s, t; dep v(s,t);")
        s, v = sys.sigs["s"], sys.sigs["v"]
        vf = VectorField((("s", fn(s)), ("t", Expr.const(0)),
                          ("v", Expr.const(0))), sys.context())
        vs = JetVar(v, {"s": 1})
        assert prolong(vf, vs) == -Expr.of(vs)


class TestDeterminingSystem:
    def test_ux0(self):
        R = load_system(FIX / "ux0.dps")
        S = determining_system(R)
        eta = next(s for s in S.inf if s.name == "eta_u")
        assert len(S.equations) == 1
        assert S.equations[0] == Expr.of(JetVar(eta, {"x": 1}))

    def test_not_solved_form(self):
        R = load_system(FIX / "bs.dps")
        with pytest.raises(NotSolvedForm):
            determining_system(R)

    def test_black_scholes_soundness_and_linearity(self):
        R = bs_solved()
        S = determining_system(R, names={"s": "sigma", "t": "tau", "v": "eta"})
        assert S.equations
        # linearity: total degree <= 1 in infinitesimal jets
        inf_sigs = set(S.inf)
        for eq in S.equations:
            for mono, _ in eq.num.terms.items():
                deg = 0
                for vid, k in mono:
                    from liemap.poly import indeterminate_by_id
                    obj = indeterminate_by_id(vid)
                    if isinstance(obj, JetVar) and obj.sig in inf_sigs:
                        deg += k
                assert deg <= 1
        # reference symmetries d/dt and s d/ds annihilate the system
        sigs = S.sigs
        zero = Expr.const(0)
        for field in (
            {"sigma": zero, "tau": Expr.const(1), "eta": zero},
            {"sigma": fn(sigs["s"]), "tau": zero, "eta": zero},
        ):
            for eq in S.equations:
                assert substitute_field(eq, field, sigs).is_zero()

    def test_ckdv_soundness(self):
        R = load_system(FIX / "ckdv.dps")
        S = determining_system(R)
        sigs = S.sigs
        x, t, u = (fn(sigs[n]) for n in ("x", "t", "u"))
        zero = Expr.const(0)
        # x-translation is a symmetry of the cylindrical KdV
        field = {"xi_x": Expr.const(1), "xi_t": zero, "eta_u": zero}
        for eq in S.equations:
            assert substitute_field(eq, field, sigs).is_zero()
        # scaling-like symmetry: xi = x/2? use known one: xi=x, tau=3t, eta=-2u-x/t?
        # (only translation asserted here; full check via structure constants)


def bs_solved():
    """Black-Scholes in solved form for its graded leader v_ss."""
    return parse_system("""
    name blackscholes;
    indep s, t;
    dep v(s,t);
    diff(v,[s,s]) = 2*v/s^2 - 2*diff(v,[t])/s^2 - 2*diff(v,[s])/s;
    """)


class TestEquivDetSys:
    def test_one_var_translation_shape(self):
        R = load_system(FIX / "ux0.dps")
        Rh = parse_system("indep xh; dep uh(xh); diff(uh,[xh]) = 0;")
        mp = make_mapspec(R, Rh, ("psi",), ("phi",))
        out = equiv_det_sys(R, Rh, mp)
        psi, phi = mp.psi[0], mp.phi[0]
        assert list(out.equations) == [Expr.of(JetVar(phi, {"x": 1}))]
        jac = (Expr.of(JetVar(psi, {"x": 1})) * Expr.of(JetVar(phi, {"u": 1}))
               - Expr.of(JetVar(phi, {"x": 1})) * Expr.of(JetVar(psi, {"u": 1})))
        assert out.inequations[0] == jac

    def test_identity_map_between_identical_systems(self):
        R = load_system(FIX / "ux0.dps")
        Rh = parse_system("indep xh; dep uh(xh); diff(uh,[xh]) = 0;")
        mp = make_mapspec(R, Rh, ("psi",), ("phi",))
        out = equiv_det_sys(R, Rh, mp)
        # substituting the identity-shaped ansatz psi=x, phi=u kills everything
        sigs = {**R.sigs, "psi": mp.psi[0], "phi": mp.phi[0]}
        vals = {"psi": fn(R.sigs["x"]), "phi": fn(R.sigs["u"])}
        for eq in out.equations:
            assert substitute_field(eq, vals, sigs).is_zero()
        assert substitute_field(out.inequations[0], vals, sigs) == Expr.const(1)

    def test_black_scholes_log_map_residues(self):
        # sh = ln s, th = t, vh = v maps Black-Scholes to the constant
        # coefficient equation vh_th + (1/2)vh_shsh + (1/2)vh_sh - vh = 0
        # (hand chain rule: v_ss = (vh_shsh - vh_sh)/s^2)
        R = bs_solved()
        Rh = parse_system("""
        indep sh, th;
        dep vh(sh,th);
        diff(vh,[sh,sh]) = 2*vh - 2*diff(vh,[th]) - diff(vh,[sh]);
        """)
        mp = make_mapspec(R, Rh, ("p1", "p2"), ("q1",))
        out = equiv_det_sys(R, Rh, mp)
        from liemap.kernel import ln
        sigs = {**R.sigs, **{s.name: s for s in mp.all_components}}
        s = fn(R.sigs["s"])
        vals = {"p1": ln(s), "p2": fn(R.sigs["t"]), "q1": fn(R.sigs["v"])}
        for eq in out.equations:
            assert substitute_field(eq, vals, sigs).is_zero()
        assert not substitute_field(out.inequations[0], vals, sigs).is_zero()


def test_collect_parametric():
    sys = parse_system("indep x, t; dep u(x,t); inf a(x,t,u); inf b(x,t,u);")
    u, a, b = sys.sigs["u"], sys.sigs["a"], sys.sigs["b"]
    ux = Expr.of(JetVar(u, {"x": 1}))
    ea, eb = fn(a), fn(b)
    e = ea * ux * ux + (ea + eb) * ux + eb
    got = collect_parametric(e, {u})
    assert set(got) == {ea, ea + eb, eb}
