import pathlib

import pytest

from liemap.detsys import determining_system
from liemap.diffelim import (
    CaseSystem,
    ElimOptions,
    INFINITE,
    dim_equiv_test,
    hilbert_series,
    initial_data,
    reduce,
)
from liemap.kernel import Expr, JetVar, fn, reduce_expr, total_derivative
from liemap.ranking import elimination, orderly
from liemap.sysio import load_system, parse_system

FIX = pathlib.Path(__file__).parent / "fixtures"


def plain_ranking(sys_):
    return orderly(sys_.coords, tuple(s.name for s in sys_.dep))


def inf_ranking(sys_):
    return orderly(sys_.coords, tuple(s.name for s in sys_.inf),
                   kinds=("infinitesimal",))


class TestReduceBasics:
    def test_duplicate_equations_collapse(self):
        sys_ = parse_system("indep x; dep u(x); diff(u,[x]) = 0;"
                            " diff(u,[x]) - 0 = 0;")
        cases = reduce(sys_, plain_ranking(sys_))
        assert len(cases) == 1
        c = cases[0]
        u = sys_.sigs["u"]
        assert set(c.solved) == {JetVar(u, {"x": 1})}
        assert not c.constraints

    def test_integrability_spawned_and_satisfied(self):
        sys_ = parse_system(
            "indep x, t; dep u(x,t);"
            " diff(u,[x,x]) = 0; diff(u,[t]) = diff(u,[x]);")
        cases = reduce(sys_, plain_ranking(sys_))
        assert len(cases) == 1
        c = cases[0]
        idata = initial_data(c)
        assert idata.dimension == 2
        # exhaustive cross-derivative check
        ctx = c.context()
        leads = list(c.solved)
        for a in leads:
            for b in leads:
                if a.sig is not b.sig or a is b:
                    continue
                lcm = {x: max(a.count(x), b.count(x)) for x in a.sig.args}
                tgt = JetVar(a.sig, lcm)
                ea = _derive(c, a, tgt)
                eb = _derive(c, b, tgt)
                assert (ea - eb).is_zero()

    def test_inconsistent_branch_dropped(self):
        sys_ = parse_system("indep x; dep u(x); u = 1; u = 2;")
        cases = reduce(sys_, plain_ranking(sys_))
        assert cases == []

    def test_idempotence(self):
        for name in ("ckdv.dps", "kdv.dps", "heat.dps", "ux0.dps"):
            sys_ = load_system(FIX / name)
            rk = plain_ranking(sys_)
            cases = reduce(sys_, rk)
            assert len(cases) == 1
            again = reduce(cases[0].as_diffsys(), rk)
            assert len(again) == 1
            assert again[0].solved == cases[0].solved
            assert again[0].constraints == cases[0].constraints
            assert again[0].inequations == cases[0].inequations


def _derive(case, lead, target):
    e = case.solved[lead]
    ctx = case.context()
    for x, c in target.diff_from(lead):
        for _ in range(c):
            e = total_derivative(e, x, ctx)
    return e


class TestBlackScholes:
    def setup_method(self):
        R = parse_system("""
        indep s, t;
        dep v(s,t);
        diff(v,[s,s]) = 2*v/s^2 - 2*diff(v,[t])/s^2 - 2*diff(v,[s])/s;
        """)
        self.S = determining_system(
            R, names={"s": "sigma", "t": "tau", "v": "eta"})

    def homogeneity(self):
        sigs = self.S.sigs
        eta, v = sigs["eta"], sigs["v"]
        return Expr.of(JetVar(eta, {"v": 1})) * fn(v) - fn(eta)

    def test_reduction_matches_initial_data_of_the_record(self):
        # the recorded solved form eliminates eta above sigma above tau
        sys_ = self.S.replace(
            equations=self.S.equations + (self.homogeneity(),))
        rk = elimination(("s", "t", "v"), ("tau", "sigma", "eta"))
        cases = reduce(sys_, rk)
        assert len(cases) == 1
        c = cases[0]
        idata = initial_data(c)
        assert idata.finite
        assert idata.dimension == 6
        sigs = self.S.sigs
        expected = {
            JetVar(sigs["eta"]),
            JetVar(sigs["tau"]),
            JetVar(sigs["tau"], {"t": 1}),
            JetVar(sigs["tau"], {"t": 2}),
            JetVar(sigs["sigma"]),
            JetVar(sigs["sigma"], {"t": 1}),
        }
        assert {v for v, _ in idata.entries} == expected

    def test_unrestricted_algebra_is_bigger(self):
        cases = reduce(self.S, inf_ranking(self.S))
        assert len(cases) == 1
        idata = initial_data(cases[0])
        # the full Black-Scholes algebra is 6-dimensional plus superposition
        assert not idata.finite


class TestInitialData:
    def test_ckdv_arbitrary_functions(self):
        sys_ = load_system(FIX / "ckdv.dps")
        cases = reduce(sys_, plain_ranking(sys_))
        idata = initial_data(cases[0])
        assert idata.dimension == INFINITE
        assert idata.arbitrary_functions == ((1, 3),)

    def test_two_constants(self):
        sys_ = parse_system(
            "indep x, t; dep u(x,t); diff(u,[x]) = 0; diff(u,[t]) = 0;")
        cases = reduce(sys_, plain_ranking(sys_))
        idata = initial_data(cases[0])
        assert idata.dimension == 1
        assert [v.order for v, _ in idata.entries] == [0]


class TestHilbert:
    def test_ckdv(self):
        sys_ = load_system(FIX / "ckdv.dps")
        c = reduce(sys_, plain_ranking(sys_))[0]
        assert hilbert_series(c, 2) == [1, 2, 3]

    def test_free_function(self):
        sys_ = parse_system("indep x; dep u(x);")
        c = reduce(sys_, plain_ranking(sys_))[0]
        assert hilbert_series(c, 3) == [1, 1, 1, 1]

    def test_uxx(self):
        sys_ = parse_system("indep x; dep u(x); diff(u,[x,x]) = 0;")
        c = reduce(sys_, plain_ranking(sys_))[0]
        assert hilbert_series(c, 3) == [1, 1, 0, 0]


class TestDimEquivTest:
    def test_kdv_pair_passes(self):
        R = load_system(FIX / "ckdv.dps")
        Rh = load_system(FIX / "kdv.dps")
        assert dim_equiv_test(R, Rh)

    def test_dimension_mismatch(self):
        R = load_system(FIX / "ux0.dps")
        Rh = load_system(FIX / "uxx0.dps")
        res = dim_equiv_test(R, Rh)
        assert not res
        assert "dim" in res.reason

    def test_reflexive(self):
        R = load_system(FIX / "ckdv.dps")
        assert dim_equiv_test(R, R)


class TestDimensionInvariance:
    def test_bs_under_two_tiebreaks(self):
        R = parse_system("""
        indep s, t;
        dep v(s,t);
        diff(v,[s,s]) = 2*v/s^2 - 2*diff(v,[t])/s^2 - 2*diff(v,[s])/s;
        """)
        S = determining_system(R)
        det_sigs = tuple(s.name for s in S.inf)
        hom = (Expr.of(JetVar(S.sigs[det_sigs[-1]], {"v": 1})) * fn(S.sigs["v"])
               - fn(S.sigs[det_sigs[-1]]))
        sys_ = S.replace(equations=S.equations + (hom,))
        dims = []
        for prio in (det_sigs, tuple(reversed(det_sigs))):
            for var_order in (("s", "t", "v"), ("t", "s", "v")):
                rk = orderly(var_order, prio, kinds=("infinitesimal",))
                cases = reduce(sys_, rk)
                assert len(cases) == 1
                dims.append(initial_data(cases[0]).dimension)
        assert len(set(dims)) == 1
