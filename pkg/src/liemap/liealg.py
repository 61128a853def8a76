"""Lie algebra structure from reduced defining systems, without integration.

The initial-data parameters of a finite-dimensional reduced defining system
form a basis of the symmetry algebra; commutators of two generic solution
fields reduce, through the same solved forms, to exact rational structure
constants on that basis.  Isomorphism testing is a semi-decision: sound
rejection through linear-algebra invariants, sound acceptance through an
exactly verified change-of-basis witness, honest Inconclusive otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .diffelim import CaseSystem, InitialData, initial_data
from .kernel import (
    Expr,
    FunctionSignature,
    JetVar,
    SolvedContext,
    partial,
    reduce_expr,
    rename_functions,
)
from .poly import QQ, indeterminate_by_id


class LieAlgError(Exception):
    pass


class InfiniteDimensional(LieAlgError):
    pass


class NotReduced(LieAlgError):
    """A commutator left the parametric span; the input is not reduced."""


@dataclass(frozen=True)
class StructureConstants:
    """c[k][i][j] with [Y_i, Y_j] = sum_k c^k_{ij} Y_k, exact rationals."""

    dim: int
    c: tuple          # c[k][i][j] nested tuples
    basis: tuple = () # printable labels of the initial-data basis

    @classmethod
    def from_table(cls, dim: int, table: dict, basis=()) -> "StructureConstants":
        c = [[[QQ(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j, k), val in table.items():
            c[k][i][j] = QQ(val)
        return cls(dim, tuple(tuple(tuple(r) for r in plane) for plane in c),
                   tuple(basis))

    def bracket(self, u: list, v: list) -> list:
        out = [QQ(0)] * self.dim
        for i in range(self.dim):
            if u[i] == 0:
                continue
            for j in range(self.dim):
                if v[j] == 0:
                    continue
                f = u[i] * v[j]
                for k in range(self.dim):
                    ck = self.c[k][i][j]
                    if ck != 0:
                        out[k] = out[k] + f * ck
        return out

    def check_antisymmetry(self) -> bool:
        d = self.dim
        return all(self.c[k][i][j] == -self.c[k][j][i]
                   for k in range(d) for i in range(d) for j in range(d))

    def check_jacobi(self) -> bool:
        d = self.dim
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    for l in range(d):
                        s = QQ(0)
                        for m in range(d):
                            s = s + (self.c[m][i][j] * self.c[l][m][k]
                                     + self.c[m][j][k] * self.c[l][m][i]
                                     + self.c[m][k][i] * self.c[l][m][j])
                        if s != 0:
                            return False
        return True

    def to_json(self) -> dict:
        entries = []
        d = self.dim
        for i in range(d):
            for j in range(i + 1, d):
                for k in range(d):
                    v = self.c[k][i][j]
                    if v != 0:
                        entries.append({"i": i + 1, "j": j + 1, "k": k + 1,
                                        "value": str(v)})
        return {"schema": 1, "dim": d, "basis": list(self.basis),
                "brackets": entries}

    @classmethod
    def from_json(cls, data: dict) -> "StructureConstants":
        table = {}
        for ent in data["brackets"]:
            i, j, k = ent["i"] - 1, ent["j"] - 1, ent["k"] - 1
            val = _parse_rat(ent["value"])
            table[(i, j, k)] = val
            table[(j, i, k)] = -val
        return cls.from_table(data["dim"], table, tuple(data.get("basis", ())))


def _parse_rat(s: str):
    if "/" in s:
        p, q = s.split("/")
        return QQ(int(p), int(q))
    return QQ(int(s))


# ---------------------------------------------------------------------------
# structure constants from a reduced defining system


def structure_constants(case: CaseSystem, idata: InitialData | None = None) -> StructureConstants:
    """Exact c^k_{ij} on the initial-data parameter basis of the case.

    The case must be a reduced defining system whose DiffSys carries the
    vector_field metadata (infinitesimal signature per base coordinate).
    """
    vf = case.system.vector_field
    if not vf:
        raise LieAlgError("case carries no vector-field metadata")
    idata = idata or initial_data(case)
    if not idata.finite:
        raise InfiniteDimensional("defining system has infinite-dimensional ID")
    d = idata.dimension
    if idata.constraint_rank:
        raise LieAlgError("constraints on the infinitesimal block unsupported")
    sigs = [s for s, _ in vf]
    coords = [c for _, c in vf]
    left = _clone_case(case, sigs, "_L")
    right = _clone_case(case, sigs, "_R")
    combined = dict(left.solved)
    combined.update(right.solved)
    reg = dict(case.system.sigs)
    reg.update({s.name: s for s in left.sigs})
    reg.update({s.name: s for s in right.sigs})
    ctx = SolvedContext(combined, case.system.coords, reg)

    # bracket components [V,W]^a = sum_b V^b d_b W^a - W^b d_b V^a, where
    # d_b is the coordinate derivative on the defining-system base
    def bracket_component(a_idx: int) -> Expr:
        from .kernel import total_derivative
        out = Expr.const(0)
        wa = Expr.of(JetVar(right.sigs[a_idx]))
        va = Expr.of(JetVar(left.sigs[a_idx]))
        for b_idx, cb in enumerate(coords):
            vb = Expr.of(JetVar(left.sigs[b_idx]))
            wb = Expr.of(JetVar(right.sigs[b_idx]))
            out = out + vb * total_derivative(wa, cb, ctx) \
                      - wb * total_derivative(va, cb, ctx)
        return out

    params = [v for v, _ in idata.entries]
    pos = {v: n for n, v in enumerate(params)}
    left_param = {JetVar(left.sigs[sigs.index(v.sig)], v.mi): n
                  for v, n in pos.items()}
    right_param = {JetVar(right.sigs[sigs.index(v.sig)], v.mi): n
                   for v, n in pos.items()}

    clone_sigs = set(left.sigs) | set(right.sigs)
    table = {}
    for l, (entry, _name) in enumerate(idata.entries):
        comp_idx = sigs.index(entry.sig)
        e = bracket_component(comp_idx)
        for x, cnt in entry.mi:
            from .kernel import total_derivative
            for _ in range(cnt):
                e = total_derivative(e, x, ctx)
        e = reduce_expr(e, ctx)
        _extract_bilinear(e, left_param, right_param, l, table, clone_sigs)
    sc = StructureConstants.from_table(
        d, table, tuple(repr(v) for v, _ in idata.entries))
    if not sc.check_antisymmetry() or not sc.check_jacobi():
        raise LieAlgError("extracted constants violate antisymmetry/Jacobi")
    return sc


def _clone_case(case: CaseSystem, sigs, suffix: str):
    mapping = {}
    clones = []
    for s in sigs:
        clone = FunctionSignature(s.name + suffix, s.args, s.kind)
        mapping[s] = clone
        clones.append(clone)
    solved = {}
    for lead, rhs in case.solved.items():
        if lead.sig in mapping:
            solved[JetVar(mapping[lead.sig], lead.mi)] = rename_functions(rhs, mapping)
    out = type("_Clone", (), {})()
    out.sigs = clones
    out.solved = solved
    return out


def _extract_bilinear(e: Expr, left_param: dict, right_param: dict,
                      l: int, table: dict, clone_sigs: set):
    num, den = e.num, e.den
    left_ids = {v.id: n for v, n in left_param.items()}
    right_ids = {v.id: n for v, n in right_param.items()}
    groups: dict = {}
    for mono, coef in num.terms.items():
        li = ri = None
        rest = []
        for vid, k in mono:
            if vid in left_ids:
                if li is not None or k != 1:
                    raise NotReduced("commutator not bilinear in parameters")
                li = left_ids[vid]
            elif vid in right_ids:
                if ri is not None or k != 1:
                    raise NotReduced("commutator not bilinear in parameters")
                ri = right_ids[vid]
            else:
                obj = indeterminate_by_id(vid)
                if isinstance(obj, JetVar) and obj.sig in clone_sigs:
                    raise NotReduced(
                        f"commutator involves non-parametric jet {obj!r}")
                rest.append((vid, k))
        if li is None or ri is None:
            raise NotReduced("commutator has non-bilinear residue")
        groups.setdefault((li, ri), {})[tuple(rest)] = coef
    from .poly import Poly
    for (i, j), terms in groups.items():
        coeff = Expr(Poly(terms, _own=True)) / Expr(den)
        if not coeff.is_const():
            raise NotReduced("structure constant is not constant on the base")
        val = coeff.const_value()
        if val != 0:
            table[(i, j, l)] = table.get((i, j, l), QQ(0)) + val


# ---------------------------------------------------------------------------
# invariants and isomorphism search


def _span_rank(vectors: list, dim: int) -> int:
    rows = [list(v) for v in vectors]
    rank = 0
    col_order = list(range(dim))
    r = 0
    for col in col_order:
        piv = None
        for i in range(r, len(rows)):
            if rows[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][col]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] / pv
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
    return rank


def _basis_of_span(vectors: list, dim: int) -> list:
    rows = [list(v) for v in vectors]
    out = []
    r = 0
    for col in range(dim):
        piv = None
        for i in range(r, len(rows)):
            if rows[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][col]
        rows[r] = [a / pv for a in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
    return [row for row in rows[:r]]


def _product_span(sc: StructureConstants, left: list, right: list) -> list:
    prods = []
    for u in left:
        for v in right:
            w = sc.bracket(u, v)
            if any(x != 0 for x in w):
                prods.append(w)
    return _basis_of_span(prods, sc.dim)


def derived_series_dims(sc: StructureConstants) -> list:
    cur = _basis_of_span([_unit(sc.dim, i) for i in range(sc.dim)], sc.dim)
    dims = [len(cur)]
    while True:
        nxt = _product_span(sc, cur, cur)
        dims.append(len(nxt))
        if len(nxt) == len(cur) or len(nxt) == 0:
            break
        cur = nxt
    return dims


def lower_central_dims(sc: StructureConstants) -> list:
    full = _basis_of_span([_unit(sc.dim, i) for i in range(sc.dim)], sc.dim)
    cur = full
    dims = [len(cur)]
    while True:
        nxt = _product_span(sc, full, cur)
        dims.append(len(nxt))
        if len(nxt) == len(cur) or len(nxt) == 0:
            break
        cur = nxt
    return dims


def center_dim(sc: StructureConstants) -> int:
    d = sc.dim
    rows = []
    for j in range(d):
        for k in range(d):
            rows.append([sc.c[k][i][j] for i in range(d)])
    rank = _span_rank(rows, d) if rows else 0
    return d - rank


def _unit(d: int, i: int) -> list:
    v = [QQ(0)] * d
    v[i] = QQ(1)
    return v


def invariant_battery(sc: StructureConstants) -> tuple:
    """(dim, derived-series dims, lower-central dims, center dim)."""
    return (sc.dim, tuple(derived_series_dims(sc)),
            tuple(lower_central_dims(sc)), center_dim(sc))


@dataclass(frozen=True)
class IsoOutcome:
    verdict: str              # "NonIsomorphic" | "Isomorphic" | "Inconclusive"
    detail: str = ""
    witness: tuple | None = None   # B[a][i]: Y_i -> sum_a B[a][i] Yh_a

    def __bool__(self):
        return self.verdict == "Isomorphic"


def transport_equal(c: StructureConstants, ch: StructureConstants,
                    B: list) -> bool:
    """Exact check that B carries c's brackets to ch's."""
    d = c.dim
    if _matrix_det(B) == 0:
        return False
    for i in range(d):
        for j in range(i + 1, d):
            lhs = ch.bracket([B[a][i] for a in range(d)],
                             [B[a][j] for a in range(d)])
            vec = [c.c[m][i][j] for m in range(d)]
            rhs = [sum((B[k][m] * vec[m] for m in range(d)), QQ(0))
                   for k in range(d)]
            if lhs != rhs:
                return False
    return True


def _matrix_det(B: list):
    n = len(B)
    m = [row[:] for row in B]
    det = QQ(1)
    for col in range(n):
        piv = None
        for r in range(col, n):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            return QQ(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        pv = m[col][col]
        det = det * pv
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / pv
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return det


def _flag_subspaces(sc: StructureConstants) -> list:
    """Characteristic subspaces an isomorphism must respect, as bases."""
    full = [_unit(sc.dim, i) for i in range(sc.dim)]
    flags = []
    cur = _basis_of_span(full, sc.dim)
    while True:
        nxt = _product_span(sc, cur, cur)
        if not nxt or len(nxt) == len(cur):
            if nxt:
                flags.append(nxt)
            break
        flags.append(nxt)
        cur = nxt
    full_b = _basis_of_span(full, sc.dim)
    lc = full_b
    while True:
        nxt = _product_span(sc, full_b, lc)
        if not nxt or len(nxt) == len(lc):
            break
        flags.append(nxt)
        lc = nxt
    return flags


def _membership_matrix(basis: list, dim: int):
    """Row-reduced basis rows for solving membership quickly."""
    return _basis_of_span(basis, dim)


def _in_span(vec: list, rbasis: list, dim: int) -> bool:
    v = list(vec)
    for row in rbasis:
        lead = next((c for c in range(dim) if row[c] != 0), None)
        if lead is None:
            continue
        if v[lead] != 0:
            f = v[lead] / row[lead]
            v = [a - f * b for a, b in zip(v, row)]
    return all(x == 0 for x in v)


def isomorphism_search(c: StructureConstants, ch: StructureConstants,
                       budget: int = 200000) -> IsoOutcome:
    """Search for an exact rational change of basis carrying c to ch.

    Candidate columns are drawn from the characteristic flag subspaces with
    small-height rational coordinates: permutation-like images first, then a
    bounded backtracking.  Any witness is re-verified by exact transport, so
    a positive answer is sound; exhausting the budget is Inconclusive.
    """
    if c.dim != ch.dim:
        return IsoOutcome("NonIsomorphic", "dim")
    bat_c, bat_ch = invariant_battery(c), invariant_battery(ch)
    if bat_c != bat_ch:
        for name, a, b in zip(("dim", "derived series", "lower central series",
                               "center"), bat_c, bat_ch):
            if a != b:
                return IsoOutcome("NonIsomorphic", name)
    d = c.dim
    # candidate pool per source basis vector: must respect the flags
    flags_c = [_membership_matrix(f, d) for f in _flag_subspaces(c)]
    flags_ch = [_basis_of_span(f, d) for f in _flag_subspaces(ch)]
    units = [_unit(d, i) for i in range(d)]

    coords_pool = [QQ(0), QQ(1), QQ(-1), QQ(2), QQ(-2), QQ(1, 2), QQ(-1, 2),
                   QQ(3), QQ(-3), QQ(3, 2), QQ(-3, 2)]

    def candidates_for(i: int):
        # flag profile of Y_i in c
        profile = [_in_span(units[i], fb, d) for fb in flags_c]
        pools = []
        # target vectors from matching flag subspaces of ch
        gens: list = None
        for prof, fb in zip(profile, flags_ch):
            if prof:
                gens = fb
        if gens is None:
            gens = [_unit(d, a) for a in range(d)]
        base = [list(g) for g in gens]
        # first simple unit-like candidates, then small combinations
        simple = []
        for g in base:
            for s in (QQ(1), QQ(-1), QQ(2), QQ(-2), QQ(1, 2), QQ(-1, 2)):
                simple.append([s * x for x in g])
        combos = []
        if len(base) >= 2:
            for ga, gb in itertools.combinations(base, 2):
                for sa in (QQ(1), QQ(-1)):
                    for sb in (QQ(1), QQ(-1), QQ(2), QQ(-2)):
                        combos.append([sa * a + sb * b for a, b in zip(ga, gb)])
        if len(base) >= 3:
            for gs in itertools.combinations(base, 3):
                for signs in itertools.product((QQ(1), QQ(-1)), repeat=3):
                    combos.append([sum((s * g[t] for s, g in zip(signs, gs)),
                                       QQ(0)) for t in range(d)])
        return simple + combos

    pools = [candidates_for(i) for i in range(d)]
    # verify brackets incrementally while assigning columns
    cvecs = {(i, j): [c.c[m][i][j] for m in range(d)]
             for i in range(d) for j in range(d)}

    count = 0

    def backtrack(col: int, B: list):
        nonlocal count
        if col == d:
            # B holds image columns; matrix convention is B[a][i]
            Bm = [[B[i][a] for i in range(d)] for a in range(d)]
            if transport_equal(c, ch, Bm):
                return Bm
            return None
        for cand in pools[col]:
            count += 1
            if count > budget:
                raise _Budget()
            B.append(cand)
            if _partial_ok(col, B):
                out = backtrack(col + 1, B)
                if out is not None:
                    return out
            B.pop()
        return None

    def _partial_ok(col: int, B: list) -> bool:
        # columns 0..col assigned; check brackets fully determined
        for i in range(col + 1):
            j = col
            vec = cvecs[(i, j)]
            # rhs needs every m with vec[m] != 0 assigned
            if any(vec[m] != 0 and m > col for m in range(d)):
                continue
            lhs = ch.bracket(B[i], B[j])
            rhs = [sum((vec[m] * B[m][k] for m in range(d) if vec[m] != 0),
                       QQ(0)) for k in range(d)]
            if lhs != rhs:
                return False
        return True

    class _Budget(Exception):
        pass

    try:
        found = backtrack(0, [])
    except _Budget:
        return IsoOutcome("Inconclusive", f"budget {budget} exhausted")
    if found is not None:
        return IsoOutcome("Isomorphic", witness=tuple(
            tuple(row) for row in found))
    return IsoOutcome("Inconclusive", "candidate pools exhausted")
