import random

import pytest

from liemap.kernel import Expr, FunctionSignature, JetVar, fn
from liemap.ranking import ConstantExpression, LT, GT, EQ, mapde_block, orderly

X = FunctionSignature("x", ("x",), "independent")
T = FunctionSignature("t", ("t",), "independent")
U = FunctionSignature("u", ("x", "t"), "dependent")
XI = FunctionSignature("xi", ("x", "t", "u"), "infinitesimal")
ETA = FunctionSignature("eta", ("x", "t", "u"), "infinitesimal")
PSI = FunctionSignature("psi", ("x", "t", "u"), "map-unknown")
PHI = FunctionSignature("phi", ("x", "t", "u"), "map-unknown")

ORD = orderly(("x", "t"), func_priority=("u",))
DEF_ORD = orderly(("x", "t", "u"), func_priority=("xi", "eta"),
                  kinds=("infinitesimal",))
BLOCK = mapde_block(("x", "t", "u"), func_priority=("psi", "xi", "eta"))


def test_axiom_base_below_derivative():
    assert ORD.compare(JetVar(U), JetVar(U, {"x": 1})) == LT


def test_declared_tie_break():
    # graded tie at order 1: lex against var order x < t puts u_x below u_t
    assert ORD.compare(JetVar(U, {"x": 1}), JetVar(U, {"t": 1})) == LT


def test_block_order_psi_below_infinitesimals():
    psixx = JetVar(PSI, {"x": 2})
    assert BLOCK.compare(psixx, JetVar(XI)) == LT


def test_leader_graded():
    e = Expr.of(JetVar(U, {"t": 1})) - Expr.of(JetVar(U, {"x": 2}))
    assert ORD.leader(e) is JetVar(U, {"x": 2})


def test_leader_linear_defining():
    e = Expr.of(JetVar(ETA, {"u": 1})) * fn(U) - fn(ETA)
    assert DEF_ORD.leader(e) is JetVar(ETA, {"u": 1})


def test_leader_block():
    # any infinitesimal outranks every map-unknown derivative
    e = Expr.of(JetVar(PSI, {"x": 1})) * fn(XI) + fn(PHI)
    assert BLOCK.leader(e) is JetVar(XI)


def test_leader_constant_errors():
    with pytest.raises(ConstantExpression):
        ORD.leader(fn(X) + 1)


def _random_jet(rng, sigs, max_order=4):
    sig = rng.choice(sigs)
    mi = {}
    for _ in range(rng.randint(0, max_order)):
        a = rng.choice(sig.args)
        mi[a] = mi.get(a, 0) + 1
    return JetVar(sig, mi)


def test_ranking_axioms_randomized():
    """Both ranking axioms on 10^4 sampled triples (v, w, D)."""
    rng = random.Random(0)
    sigs = [XI, ETA, PSI]
    for _ in range(10_000):
        v = _random_jet(rng, sigs)
        w = _random_jet(rng, sigs)
        d = rng.choice(("x", "t", "u"))
        assert BLOCK.compare(v, v.raised(d)) == LT
        c = BLOCK.compare(v, w)
        if c == LT:
            assert BLOCK.compare(v.raised(d), w.raised(d)) == LT
        elif c == EQ:
            assert v is w


def test_antisymmetry_transitivity_sampled():
    rng = random.Random(1)
    sigs = [XI, ETA, PSI]
    jets = [_random_jet(rng, sigs) for _ in range(60)]
    for a in jets[:20]:
        for b in jets[:20]:
            assert BLOCK.compare(a, b) == -BLOCK.compare(b, a)
    for _ in range(2000):
        a, b, c = rng.sample(jets, 3)
        if BLOCK.compare(a, b) <= 0 and BLOCK.compare(b, c) <= 0:
            assert BLOCK.compare(a, c) <= 0
