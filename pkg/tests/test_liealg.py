import random

import pytest

from liemap.diffelim import initial_data, reduce
from liemap.kernel import FunctionSignature
from liemap.liealg import (
    InfiniteDimensional,
    IsoOutcome,
    StructureConstants,
    invariant_battery,
    isomorphism_search,
    structure_constants,
    transport_equal,
)
from liemap.poly import QQ
from liemap.ranking import orderly
from liemap.sysio import parse_system


def reduce_defsys(text, vf_names):
    sys_ = parse_system(text)
    vf = tuple((sys_.sigs[n], c) for n, c in vf_names)
    sys_ = sys_.replace(vector_field=vf)
    rk = orderly(sys_.coords, tuple(s.name for s in sys_.inf),
                 kinds=("infinitesimal",))
    cases = reduce(sys_, rk)
    assert len(cases) == 1
    return cases[0]


def paper_kdv_source():
    """Four-dimensional algebra with [Y1,Y4]=-1/2 Y1, [Y2,Y3]=Y1,
    [Y2,Y4]=-3/2 Y1+Y2, [Y3,Y4]=-3/2 Y3."""
    t = {}
    t[(0, 3, 0)] = QQ(-1, 2)
    t[(3, 0, 0)] = QQ(1, 2)
    t[(1, 2, 0)] = QQ(1)
    t[(2, 1, 0)] = QQ(-1)
    t[(1, 3, 0)] = QQ(-3, 2)
    t[(3, 1, 0)] = QQ(3, 2)
    t[(1, 3, 1)] = QQ(1)
    t[(3, 1, 1)] = QQ(-1)
    t[(2, 3, 2)] = QQ(-3, 2)
    t[(3, 2, 2)] = QQ(3, 2)
    return StructureConstants.from_table(4, t)


def paper_kdv_target():
    """[Yh1,Yh4]=-1/2 Yh1, [Yh2,Yh3]=Yh1, [Yh2,Yh4]=-3/2 Yh2,
    [Yh3,Yh4]=Yh3."""
    t = {}
    t[(0, 3, 0)] = QQ(-1, 2)
    t[(3, 0, 0)] = QQ(1, 2)
    t[(1, 2, 0)] = QQ(1)
    t[(2, 1, 0)] = QQ(-1)
    t[(1, 3, 1)] = QQ(-3, 2)
    t[(3, 1, 1)] = QQ(3, 2)
    t[(2, 3, 2)] = QQ(1)
    t[(3, 2, 2)] = QQ(-1)
    return StructureConstants.from_table(4, t)


class TestStructureConstants:
    def test_pure_translations_abelian(self):
        c = structure_constants(reduce_defsys(
            """
            indep x; dep u(x);
            inf xi(x,u); inf eta(x,u);
            diff(xi,[x]) = 0; diff(xi,[u]) = 0;
            diff(eta,[x]) = 0; diff(eta,[u]) = 0;
            """,
            (("xi", "x"), ("eta", "u"))))
        assert c.dim == 2
        assert all(c.c[k][i][j] == 0 for k in range(2)
                   for i in range(2) for j in range(2))

    def test_affine_line(self):
        # solutions span {d/dx, x d/dx}: [Y1, Y2] = Y1
        c = structure_constants(reduce_defsys(
            "indep x; dep u(x); inf xi(x); diff(xi,[x,x]) = 0;",
            (("xi", "x"),)))
        assert c.dim == 2
        assert c.c[0][0][1] == 1
        assert c.c[0][1][0] == -1
        assert c.c[1][0][1] == 0

    def test_antisymmetry_and_jacobi_validated(self):
        c = paper_kdv_source()
        assert c.check_antisymmetry()
        assert c.check_jacobi()
        ch = paper_kdv_target()
        assert ch.check_antisymmetry()
        assert ch.check_jacobi()

    def test_infinite_dimensional_rejected(self):
        sys_ = parse_system(
            "indep x; dep u(x); inf xi(x);")
        sys_ = sys_.replace(vector_field=((sys_.sigs["xi"], "x"),))
        rk = orderly(sys_.coords, ("xi",), kinds=("infinitesimal",))
        case = reduce(sys_, rk)[0]
        with pytest.raises(InfiniteDimensional):
            structure_constants(case)


class TestBattery:
    def test_abelian(self):
        c = StructureConstants.from_table(2, {})
        assert invariant_battery(c) == (2, (2, 0), (2, 0), 2)

    def test_affine(self):
        c = StructureConstants.from_table(
            2, {(0, 1, 0): QQ(1), (1, 0, 0): QQ(-1)})
        dim, derived, lower, center = invariant_battery(c)
        assert dim == 2
        assert derived == (2, 1, 0)
        assert lower[:3] == (2, 1, 1)
        assert center == 0

    def test_paper_pair_batteries_match(self):
        assert invariant_battery(paper_kdv_source()) == \
            invariant_battery(paper_kdv_target())

    def test_invariance_under_basis_change(self):
        rng = random.Random(42)
        c = paper_kdv_source()
        base = invariant_battery(c)
        for _ in range(100):
            B = _random_invertible(rng, 4)
            transported = _transport(c, B)
            assert invariant_battery(transported) == base


def _random_invertible(rng, d):
    from liemap.liealg import _matrix_det
    while True:
        B = [[QQ(rng.randint(-2, 2)) for _ in range(d)] for _ in range(d)]
        if _matrix_det(B) != 0:
            return B


def _transport(c: StructureConstants, B):
    """Structure constants in the new basis Z_i = sum_a B[a][i] Y_a."""
    d = c.dim
    import itertools

    # invert B
    inv = _mat_inv(B)
    table = {}
    for i in range(d):
        for j in range(d):
            u = [B[a][i] for a in range(d)]
            v = [B[a][j] for a in range(d)]
            w = c.bracket(u, v)
            z = [sum((inv[k][a] * w[a] for a in range(d)), QQ(0))
                 for k in range(d)]
            for k in range(d):
                if z[k] != 0:
                    table[(i, j, k)] = z[k]
    return StructureConstants.from_table(d, table)


def _mat_inv(B):
    d = len(B)
    aug = [row[:] + [QQ(1) if i == j else QQ(0) for j in range(d)]
           for i, row in enumerate(B)]
    for col in range(d):
        piv = next(r for r in range(col, d) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(d):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[d:] for row in aug]


class TestIsomorphism:
    def test_identity_witness(self):
        c = paper_kdv_source()
        out = isomorphism_search(c, c)
        assert out.verdict == "Isomorphic"
        assert transport_equal(c, c, [list(r) for r in out.witness])

    def test_paper_witness_accepted(self):
        # Yh1 = Y1, Yh2 = Y3, Yh3 = Y1 - Y2, Yh4 = Y4 maps the target basis
        # into the source algebra and transports the brackets exactly
        c = paper_kdv_source()
        ch = paper_kdv_target()
        C = [[QQ(1), QQ(0), QQ(1), QQ(0)],
             [QQ(0), QQ(0), QQ(-1), QQ(0)],
             [QQ(0), QQ(1), QQ(0), QQ(0)],
             [QQ(0), QQ(0), QQ(0), QQ(1)]]
        assert transport_equal(ch, c, C)

    def test_search_finds_paper_pair(self):
        c = paper_kdv_source()
        ch = paper_kdv_target()
        out = isomorphism_search(c, ch)
        assert out.verdict == "Isomorphic"
        assert transport_equal(c, ch, [list(r) for r in out.witness])

    def test_non_isomorphic_by_battery(self):
        abelian = StructureConstants.from_table(2, {})
        affine = StructureConstants.from_table(
            2, {(0, 1, 0): QQ(1), (1, 0, 0): QQ(-1)})
        out = isomorphism_search(abelian, affine)
        assert out.verdict == "NonIsomorphic"
        assert "derived" in out.detail

    def test_witness_transport_rejects_wrong_matrix(self):
        c = paper_kdv_source()
        ch = paper_kdv_target()
        identity = [[QQ(1) if i == j else QQ(0) for j in range(4)]
                    for i in range(4)]
        assert not transport_equal(c, ch, identity)


class TestJson:
    def test_round_trip(self):
        c = paper_kdv_source()
        again = StructureConstants.from_json(c.to_json())
        assert again.c == c.c
        assert again.dim == c.dim
