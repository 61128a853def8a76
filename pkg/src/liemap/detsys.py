"""Defining systems for point symmetries and for invertible maps.

determining_system builds the linear homogeneous system satisfied by the
infinitesimals of a point-symmetry vector field; equiv_det_sys builds the
polynomially nonlinear system satisfied by an invertible change of variables
between two systems, via the prolonged change of variables in adjugate form.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fracexpr import Frac
from .kernel import (
    Expr,
    FunctionSignature,
    JetVar,
    SolvedContext,
    fn,
    partial,
    reduce_expr,
    substitute,
    total_derivative,
)
from .poly import P_ONE, Poly
from .sysio import DiffSys


class DetSysError(Exception):
    pass


class NotSolvedForm(DetSysError):
    """The input system must be solved for its leading derivatives."""


class NonInvertibleAnsatz(DetSysError):
    """The change-of-variables matrix is identically singular."""


# ---------------------------------------------------------------------------
# small exact linear algebra over Expr


def det_expr(m: list) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    out = Expr.const(0)
    sign = 1
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        out = out + Expr.const(sign) * m[0][j] * det_expr(minor)
        sign = -sign
    return out


def adjugate_expr(m: list) -> list:
    n = len(m)
    if n == 1:
        return [[Expr.const(1)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:i] + row[i + 1:] for k, row in enumerate(m) if k != j]
            sign = 1 if (i + j) % 2 == 0 else -1
            adj[i][j] = Expr.const(sign) * det_expr(minor)
    return adj


# ---------------------------------------------------------------------------
# vector fields and prolongation


@dataclass(frozen=True)
class VectorField:
    """Point vector field: one infinitesimal expression per base coordinate."""

    components: tuple          # ((coord-name, Expr), ...), x's then u's
    ctx: SolvedContext         # source-system context for total derivatives

    def component(self, coord: str) -> Expr:
        for c, e in self.components:
            if c == coord:
                return e
        raise KeyError(coord)

    @property
    def indep_names(self) -> tuple:
        return tuple(c for c, _ in self.components if c in self.ctx.coords)


def prolong(vf: VectorField, v: JetVar, memo: dict | None = None) -> Expr:
    """Prolonged coefficient of d/dv for the field, modulo vf.ctx."""
    if memo is None:
        memo = {}
    hit = memo.get(v)
    if hit is not None:
        return hit
    if not v.mi:
        out = vf.component(v.sig.name)
    else:
        a = next(x for x in v.sig.args if v.count(x) > 0)
        lower = v.lowered(a)
        eta_lower = prolong(vf, lower, memo)
        out = total_derivative(eta_lower, a, vf.ctx)
        for x in vf.indep_names:
            dxi = total_derivative(vf.component(x), a, vf.ctx)
            if dxi.is_zero():
                continue
            raised = reduce_expr(Expr.of(lower.raised(x)), vf.ctx)
            out = out - raised * dxi
    memo[v] = out
    return memo[v]


def apply_prolonged(vf: VectorField, omega: Expr, memo: dict | None = None) -> Expr:
    """pr V applied to omega, then restricted to the solved locus."""
    if memo is None:
        memo = {}
    out = Expr.const(0)
    sig_by_name = vf.ctx.sigs
    for x in vf.indep_names:
        d = partial(omega, JetVar(sig_by_name[x]))
        if not d.is_zero():
            out = out + vf.component(x) * d
    for v in sorted(omega.jet_vars(deep=True),
                    key=lambda j: (j.sig._id, j.mi)):
        if v.sig.kind != "dependent":
            continue
        d = partial(omega, v)
        if d.is_zero():
            continue
        out = out + prolong(vf, v, memo) * d
    return reduce_expr(out, vf.ctx)


# ---------------------------------------------------------------------------
# coefficient collection


def collect_parametric(e: Expr, collect_sigs) -> list:
    """Coefficients of the monomials in positive-order jets of collect_sigs.

    The equation e = 0 must hold identically in those parametric derivatives;
    each coefficient of the numerator becomes its own equation.
    """
    sigset = set(collect_sigs)
    ids = {v.id for v in e.jet_vars()
           if v.sig in sigset and v.order >= 1}
    if not ids:
        return [] if e.is_zero() else [Expr(e.num.primitive())]
    groups: dict = {}
    for mono, coef in e.num.terms.items():
        key = tuple((vid, k) for vid, k in mono if vid in ids)
        rest = tuple((vid, k) for vid, k in mono if vid not in ids)
        groups.setdefault(key, {})[rest] = coef
    out = []
    seen = set()
    for key in sorted(groups):
        p = Poly(groups[key], _own=True).primitive()
        cand = Expr(p)
        if cand.is_zero() or cand in seen:
            continue
        seen.add(cand)
        out.append(cand)
    return out


# ---------------------------------------------------------------------------
# determining system for point symmetries


def infinitesimal_names(R: DiffSys, names=None) -> dict:
    """coord-name -> infinitesimal function name, defaulting to xi_*/eta_*."""
    names = dict(names or {})
    out = {}
    for v in R.indep:
        out[v.name] = names.get(v.name, f"xi_{v.name}")
    for f in R.dep:
        out[f.name] = names.get(f.name, f"eta_{f.name}")
    return out


def determining_system(R: DiffSys, names=None) -> DiffSys:
    """Linear homogeneous defining system for the point symmetries of R."""
    if R.equations or not R.solved:
        raise NotSolvedForm("determining_system needs a solved-form input")
    coord_names = tuple(v.name for v in R.indep) + tuple(f.name for f in R.dep)
    name_of = infinitesimal_names(R, names)
    inf_sigs = []
    vf_components = []
    for c in coord_names:
        sig = FunctionSignature(name_of[c], coord_names, "infinitesimal")
        inf_sigs.append(sig)
        vf_components.append((c, fn(sig)))
    ctx = R.context()
    vf = VectorField(tuple(vf_components), ctx)
    memo: dict = {}
    equations = []
    seen = set()
    for lead, rhs in sorted(R.solved.items(), key=lambda kv: (kv[0].sig._id, kv[0].mi)):
        omega = Expr.of(lead) - rhs
        applied = apply_prolonged(vf, omega, memo)
        for eq in collect_parametric(applied, set(R.dep)):
            if eq not in seen:
                seen.add(eq)
                equations.append(eq)
    return DiffSys(
        name=f"{R.name}-detsys" if R.name else None,
        indep=R.indep,
        dep=R.dep,
        inf=tuple(inf_sigs),
        equations=tuple(equations),
        vector_field=tuple((s, c) for (c, _), s in
                           zip(vf_components, inf_sigs)),
    )


# ---------------------------------------------------------------------------
# nonlinear determining system for an invertible map


@dataclass(frozen=True)
class MapSpec:
    """Unknown invertible point transformation between two jet geometries."""

    psi: tuple                 # map-unknown sigs for the target independents
    phi: tuple                 # map-unknown sigs for the target dependents
    source_coords: tuple       # (x..., u...) names in the source
    target_coords: tuple       # (xh..., uh...) names in the target

    @property
    def all_components(self) -> tuple:
        return self.psi + self.phi

    def jacobian(self) -> Expr:
        comps = self.all_components
        mat = [[Expr.of(JetVar(f, {y: 1})) for f in comps]
               for y in self.source_coords]
        return det_expr(mat)

    def target_of(self, sig: FunctionSignature) -> str:
        for s, c in zip(self.all_components, self.target_coords):
            if s is sig:
                return c
        raise KeyError(sig.name)


def make_mapspec(R: DiffSys, Rh: DiffSys, psi_names=None, phi_names=None) -> MapSpec:
    n, m = len(R.indep), len(R.dep)
    if (n, m) != (len(Rh.indep), len(Rh.dep)):
        raise DetSysError("source and target variable counts differ")
    src_coords = tuple(v.name for v in R.indep) + tuple(f.name for f in R.dep)
    psi_names = tuple(psi_names or (f"psi{j+1}" for j in range(n)))
    phi_names = tuple(phi_names or (f"phi{k+1}" for k in range(m)))
    psi = tuple(FunctionSignature(nm, src_coords, "map-unknown") for nm in psi_names)
    phi = tuple(FunctionSignature(nm, src_coords, "map-unknown") for nm in phi_names)
    tgt_coords = tuple(v.name for v in Rh.indep) + tuple(f.name for f in Rh.dep)
    return MapSpec(psi, phi, src_coords, tgt_coords)


def change_of_vars_matrix(R: DiffSys, psi_components) -> tuple:
    """Total-derivative matrix of the new independent variables, inverted.

    psi_components maps each target independent direction to an Expr in the
    source jet space (unknown map function zero-jets, or explicit closed
    forms).  Returns (inv, detA) with inv a matrix of Fracs and detA an Expr;
    the source system must make detA nonzero for the ansatz to be invertible.
    """
    ctx = R.context()
    xs = [v.name for v in R.indep]
    n = len(xs)
    A = [[Frac.from_expr(reduce_expr(total_derivative(p, xi, ctx), ctx))
          for p in psi_components] for xi in xs]
    detA = _frac_det(A)
    if detA.is_zero():
        raise NonInvertibleAnsatz("total-derivative matrix is identically singular")
    adj = _frac_adjugate(A)
    inv = [[adj[a][i] / detA for i in range(n)] for a in range(n)]
    return inv, detA.to_expr()


def _frac_det(m: list) -> Frac:
    n = len(m)
    if n == 1:
        return m[0][0]
    out = Frac(Poly())
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        piece = m[0][j] * _frac_det(minor)
        out = out + (piece if j % 2 == 0 else -piece)
    return out


def _frac_adjugate(m: list) -> list:
    n = len(m)
    if n == 1:
        return [[Frac(P_ONE)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:i] + row[i + 1:] for k, row in enumerate(m) if k != j]
            piece = _frac_det(minor)
            adj[i][j] = piece if (i + j) % 2 == 0 else -piece
    return adj


def hatted_jet_exprs(R: DiffSys, Rh: DiffSys, mapping: MapSpec,
                     max_order: int) -> dict:
    """Fracs for target jets through the map, on the source locus.

    Returns {target JetVar: Frac in source jets and map jets}; denominators
    carry the factors of the total-derivative matrix determinant.
    """
    ctx = R.context()
    xs = [v.name for v in R.indep]
    xh_names = [v.name for v in Rh.indep]
    inv, _ = change_of_vars_matrix(R, [fn(p) for p in mapping.psi])
    out: dict[JetVar, Frac] = {}

    def build(uh_sig, phi_sig, mi: tuple) -> Frac:
        v = JetVar(uh_sig, mi)
        if v in out:
            return out[v]
        if not v.mi:
            e = Frac.from_expr(fn(phi_sig))
        else:
            a = next(x for x in uh_sig.args if v.count(x) > 0)
            lower = build(uh_sig, phi_sig, v.lowered(a).mi)
            ai = xh_names.index(a)
            e = Frac(Poly())
            for i, xi in enumerate(xs):
                d = lower.derivative(xi, ctx)
                if not d.is_zero():
                    e = e + inv[ai][i] * d
        out[v] = e
        return e

    for uh_sig, phi_sig in zip(Rh.dep, mapping.phi):
        _walk_multiindices(uh_sig, phi_sig, max_order, build)
    return out


def pullback_equation(omega: Expr, bindings: dict) -> Frac:
    """Substitute Fracs for indeterminates of omega, term by term.

    bindings maps indeterminate ids to Fracs; unbound indeterminates stay.
    """
    def subst_poly(p: Poly) -> Frac:
        acc = Frac(Poly())
        for mono, coef in p.terms.items():
            term = Frac(Poly.const(coef))
            for vid, k in mono:
                base = bindings.get(vid)
                if base is None:
                    term = term * Frac(Poly.var(vid) ** k)
                else:
                    for _ in range(k):
                        term = term * base
            acc = acc + term
        return acc

    num = subst_poly(omega.num)
    if omega.den.is_const():
        return num
    return num / subst_poly(omega.den)


def _walk_multiindices(uh_sig, phi_sig, max_order, build):
    names = uh_sig.args

    def rec(prefix: dict, order: int, start: int):
        build(uh_sig, phi_sig, tuple(prefix.items()))
        if order == max_order:
            return
        for i in range(start, len(names)):
            nxt = dict(prefix)
            nxt[names[i]] = nxt.get(names[i], 0) + 1
            rec(nxt, order + 1, i)

    rec({}, 0, 0)


def pullback_bindings(R: DiffSys, Rh: DiffSys, mapping: MapSpec,
                      max_order: int) -> dict:
    """Frac bindings taking every target indeterminate to the source side."""
    hat = hatted_jet_exprs(R, Rh, mapping, max_order)
    bindings: dict = {}
    for v, mapped in zip(Rh.indep, mapping.psi):
        bindings[JetVar(v).id] = Frac.from_expr(fn(mapped))
    for f, mapped in zip(Rh.dep, mapping.phi):
        bindings[JetVar(f).id] = Frac.from_expr(fn(mapped))
    for jet, e in hat.items():
        if jet.order >= 1:
            bindings[jet.id] = e
    return bindings


def equiv_det_sys(R: DiffSys, Rh: DiffSys, mapping: MapSpec) -> DiffSys:
    """Full nonlinear determining system for the invertible map R -> Rh."""
    for sys_ in (R, Rh):
        if sys_.equations or not sys_.solved:
            raise NotSolvedForm("equiv_det_sys needs solved-form inputs")
    max_order = max(v.order for v in Rh.solved)
    bindings = pullback_bindings(R, Rh, mapping, max_order)
    equations = []
    seen = set()
    for lead, rhs in sorted(Rh.solved.items(), key=lambda kv: (kv[0].sig._id, kv[0].mi)):
        omega = Expr.of(lead) - rhs
        pulled = pullback_equation(omega, bindings)
        for eq in collect_parametric(Expr(pulled.num), set(R.dep)):
            if eq not in seen:
                seen.add(eq)
                equations.append(eq)
    jac = mapping.jacobian()
    return DiffSys(
        name="equiv-detsys",
        indep=R.indep,
        dep=R.dep,
        map_=mapping.all_components,
        equations=tuple(equations),
        inequations=(jac,),
    )


def substitute_field(e: Expr, values: dict, sigs_by_name: dict) -> Expr:
    """Evaluate e at explicit component functions.

    values maps a function name to a closed-form Expr in that function's
    arguments; every jet of that function in e is replaced by the matching
    iterated partial derivative of the closed form.
    """
    bindings = {}
    for v in e.jet_vars(deep=True):
        if v.sig.name not in values:
            continue
        val = values[v.sig.name]
        for a in v.sig.args:
            for _ in range(v.count(a)):
                val = partial(val, JetVar(sigs_by_name[a]))
        bindings[v] = val
    return substitute(e, bindings)
