"""The mapping pipelines: specific target and constant-coefficient class.

run_mapde decides whether an invertible point transformation carries the
source system to the target, driving differential elimination over the
union of the two symmetry defining systems, the linear mapping equations
relating their infinitesimals through the unknown map, and the Jacobian
inequation; run_mapde_constcoeff specializes the target side to the class
of constant-coefficient linear homogeneous equations.  Explicit maps are
produced only by restricted quadrature and are always re-verified.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .detsys import (
    MapSpec,
    NotSolvedForm,
    change_of_vars_matrix,
    collect_parametric,
    determining_system,
    equiv_det_sys,
    make_mapspec,
    pullback_equation,
)
from .diffelim import (
    CaseSystem,
    ElimOptions,
    INFINITE,
    dim_equiv_test,
    initial_data,
    reduce,
)
from .fracexpr import Frac
from .kernel import (
    Atom,
    Expr,
    FunctionSignature,
    JetVar,
    SolvedContext,
    exp as exp_atom,
    fn,
    ln as ln_atom,
    partial,
    reduce_expr,
    sqrt as sqrt_atom,
    substitute,
    total_derivative,
)
from .liealg import (
    InfiniteDimensional,
    invariant_battery,
    isomorphism_search,
    structure_constants,
)
from .poly import P_ONE, Poly, QQ, indeterminate_by_id
from .ranking import elimination, mapde_block, orderly
from .sysio import DiffSys, format_expr, format_jet


class MapDEError(Exception):
    pass


@dataclass
class ExplicitMap:
    """Closed forms for every map component plus the constants chosen."""

    components: dict              # component name -> Expr
    constants: dict               # constant label -> value (rational)
    mapping: MapSpec

    def jacobian_expr(self, sigs) -> Expr:
        names = [s.name for s in self.mapping.all_components]
        mat = []
        for y in self.mapping.source_coords:
            row = []
            for nm in names:
                row.append(partial(self.components[nm], JetVar(sigs[y])))
            mat.append(row)
        from .detsys import det_expr
        return det_expr(mat)


@dataclass
class MapResult:
    verdict: str                  # NoMap | Exists | ExistsWithExplicit | Inconclusive
    stage: str = ""
    reason: str = ""
    cases: list = field(default_factory=list)     # (CaseSystem, psi_dim)
    selected: int | None = None
    mapping: MapSpec | None = None
    explicit: ExplicitMap | None = None
    target: DiffSys | None = None
    target_coefficients: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def exists(self) -> bool:
        return self.verdict in ("Exists", "ExistsWithExplicit")

    def exit_code(self) -> int:
        return {"Exists": 0, "ExistsWithExplicit": 0,
                "NoMap": 1, "Inconclusive": 2}[self.verdict]


# ---------------------------------------------------------------------------
# BK mapping equations and pullback of the target defining system


def composite_infinitesimals(R: DiffSys, n: int, m: int) -> tuple:
    """Target infinitesimals composed with the map, as source-side unknowns."""
    coords = tuple(v.name for v in R.indep) + tuple(f.name for f in R.dep)
    xi = tuple(FunctionSignature(f"xih{j+1}", coords, "infinitesimal")
               for j in range(n))
    eta = tuple(FunctionSignature(f"etah{k+1}", coords, "infinitesimal")
                for k in range(m))
    return xi, eta


def bk_system(source_vf: tuple, composites: tuple, mapping: MapSpec) -> list:
    """The linear mapping equations, one per map component.

    source_vf pairs each source coordinate with its infinitesimal signature;
    composites are the pulled-back target infinitesimals in the same order
    as mapping.all_components.
    """
    eqs = []
    for comp, hat in zip(mapping.all_components, composites):
        e = -fn(hat)
        for sig, coord in source_vf:
            e = e + fn(sig) * Expr.of(JetVar(comp, {coord: 1}))
        eqs.append(e)
    return eqs


def pullback_defsys(Sh: CaseSystem | DiffSys, mapping: MapSpec,
                    composites: tuple, R: DiffSys) -> DiffSys:
    """The target defining system evaluated through the map.

    Every jet of a hatted infinitesimal is rewritten via the inverse point
    Jacobian chain rule into jets of the composite unknowns; hatted base
    coordinates become map-component zero-jets.  Denominators are powers of
    the Jacobian determinant, recorded as an inequation.
    """
    sh_sys = Sh.as_diffsys() if isinstance(Sh, CaseSystem) else Sh
    src_coords = mapping.source_coords
    names = {s.name: s for s in sh_sys.inf}
    hat_inf = [s for s, _ in sh_sys.vector_field] if sh_sys.vector_field else list(sh_sys.inf)
    if len(hat_inf) != len(composites):
        raise MapDEError("composite count mismatch with target infinitesimals")
    reg = dict(R.sigs)
    for s in mapping.all_components + tuple(composites):
        reg[s.name] = s
    ctx = SolvedContext({}, src_coords, reg)
    # point Jacobian: J[b][a] = d Psi_a / d y_b
    comps = mapping.all_components
    nm = len(comps)
    J = [[Frac.from_expr(Expr.of(JetVar(comps[a], {src_coords[b]: 1})))
          for a in range(nm)] for b in range(nm)]
    from .detsys import _frac_det, _frac_adjugate
    detJ = _frac_det(J)
    adj = _frac_adjugate(J)
    inv = [[adj[a][b] / detJ for b in range(nm)] for a in range(nm)]

    hat_coords = sh_sys.coords  # hatted base coordinate names
    jets: dict = {}

    def build(hsig, comp_sig, mi: tuple) -> Frac:
        v = JetVar(hsig, mi)
        if v in jets:
            return jets[v]
        if not v.mi:
            e = Frac.from_expr(fn(comp_sig))
        else:
            a = next(x for x in hsig.args if v.count(x) > 0)
            lower = build(hsig, comp_sig, v.lowered(a).mi)
            ai = hat_coords.index(a)
            e = Frac(Poly())
            for b in range(nm):
                d = lower.derivative(src_coords[b], ctx)
                if not d.is_zero():
                    e = e + inv[ai][b] * d
        jets[v] = e
        return e

    bindings: dict = {}
    for hv, comp in zip(sh_sys.indep, mapping.psi):
        bindings[JetVar(hv).id] = Frac.from_expr(fn(comp))
    for hu, comp in zip(sh_sys.dep, mapping.phi):
        bindings[JetVar(hu).id] = Frac.from_expr(fn(comp))

    all_exprs = list(sh_sys.all_equations())
    needed = set()
    for e in all_exprs + list(sh_sys.inequations):
        for v in e.jet_vars(deep=True):
            if v.sig in names.values() and v.sig.kind == "infinitesimal":
                needed.add(v)
    comp_of = {s: composites[i] for i, s in enumerate(hat_inf)}
    for v in sorted(needed, key=lambda j: (j.sig._id, j.mi)):
        bindings[v.id] = build(v.sig, comp_of[v.sig], v.mi)

    equations = []
    for e in all_exprs:
        pulled = pullback_equation(e, bindings)
        if not pulled.is_zero():
            equations.append(Expr(pulled.num.primitive()))
    ineqs = []
    for e in sh_sys.inequations:
        pulled = pullback_equation(e, bindings)
        if not pulled.is_zero():
            ineqs.append(Expr(pulled.num.primitive()))
    return DiffSys(
        name="pullback-defsys",
        indep=R.indep,
        dep=R.dep,
        inf=tuple(composites),
        map_=mapping.all_components,
        equations=tuple(equations),
        inequations=tuple(ineqs),
    )


# ---------------------------------------------------------------------------
# assembling and running Algorithm 1


def _plain_ranking(sys_: DiffSys):
    return orderly(sys_.coords, tuple(s.name for s in sys_.dep))


def _inf_ranking(sys_: DiffSys):
    return orderly(sys_.coords, tuple(s.name for s in sys_.inf),
                   kinds=("infinitesimal",))


def _reduce_single(sys_: DiffSys, ranking, opts) -> CaseSystem:
    cases = reduce(sys_, ranking, opts)
    if len(cases) != 1:
        raise MapDEError(
            f"{sys_.name or 'system'}: expected one case, got {len(cases)}")
    return cases[0]


def _block_dim(case: CaseSystem, kinds):
    return initial_data(case, kinds=kinds).dimension


def _sel_key(case: CaseSystem):
    return (len(case.assumptions), len(case.constraints), case.assumption_path())


def run_mapde(R: DiffSys, Rh: DiffSys, opts: ElimOptions | None = None,
              psi_names=None, phi_names=None,
              restrict_source: tuple = (), restrict_target: tuple = (),
              det_names_source=None, det_names_target=None) -> MapResult:
    """Algorithm 1: decide existence of an invertible map R -> Rh."""
    opts = opts or ElimOptions()
    notes: list = []
    plain_opts = ElimOptions(casesplit=opts.casesplit, mindim=None,
                             max_splits=opts.max_splits,
                             max_iter=opts.max_iter, seed=opts.seed)
    # Step 1: reduce both systems
    try:
        Rc = _reduce_single(R, _plain_ranking(R), plain_opts)
        Rhc = _reduce_single(Rh, _plain_ranking(Rh), plain_opts)
    except MapDEError as exc:
        return MapResult("Inconclusive", stage="reduce", reason=str(exc))
    Rsol, Rhsol = Rc.as_diffsys(), Rhc.as_diffsys()
    # Step 2: dimension screen on the systems themselves
    dt = dim_equiv_test(Rsol, Rhsol, plain_opts)
    if not dt:
        return MapResult("NoMap", stage="dim-R", reason=dt.reason)
    # Step 3: defining systems, reduced
    S = determining_system(Rsol, names=det_names_source)
    Sh = determining_system(Rhsol, names=det_names_target)
    if restrict_source:
        S = S.replace(equations=S.equations + tuple(restrict_source))
    if restrict_target:
        Sh = Sh.replace(equations=Sh.equations + tuple(restrict_target))
    Sc = _reduce_single(S, _inf_ranking(S), plain_opts)
    Shc = _reduce_single(Sh, _inf_ranking(Sh), plain_opts)
    # Step 4: dimension screen on the defining systems
    id_s = initial_data(Sc)
    id_sh = initial_data(Shc)
    if id_s.dimension != id_sh.dimension:
        return MapResult(
            "NoMap", stage="dim-S",
            reason=f"defining-system dims {id_s.dimension} != {id_sh.dimension}")
    d = id_s.dimension if id_s.finite else None
    # Steps 5-6: structure constants and isomorphism screen
    if d is not None:
        try:
            c = structure_constants(Sc, id_s)
            ch = structure_constants(Shc, id_sh)
        except InfiniteDimensional:  # pragma: no cover - d finite here
            c = ch = None
        if c is not None:
            if invariant_battery(c) != invariant_battery(ch):
                return MapResult("NoMap", stage="lie-structure",
                                 reason="invariant batteries differ")
            iso = isomorphism_search(c, ch)
            if iso.verdict == "NonIsomorphic":
                return MapResult("NoMap", stage="lie-structure",
                                 reason=f"non-isomorphic ({iso.detail})")
            if iso.verdict == "Inconclusive":
                notes.append(f"isomorphism search inconclusive: {iso.detail};"
                             " proceeding, elimination decides")
    else:
        notes.append("defining systems infinite-dimensional; structure "
                     "screen skipped")
    # Step 7: the mapping system M
    mapping = make_mapspec(Rsol, Rhsol, psi_names, phi_names)
    n, m = len(R.indep), len(R.dep)
    if d is not None:
        M = _assemble_connection_system(Rsol, Sc, Shc, mapping)
    else:
        xi_c, eta_c = composite_infinitesimals(Rsol, n, m)
        pulled = pullback_defsys(Shc, mapping, xi_c + eta_c, Rsol)
        bk = bk_system(S.vector_field, xi_c + eta_c, mapping)
        M = _assemble_mapping_system(Rsol, Sc, pulled, bk, mapping,
                                     xi_c + eta_c)
    ranking = mapde_block(
        M.coords,
        tuple(s.name for s in M.map_) + tuple(s.name for s in M.inf))
    mopts = ElimOptions(casesplit=opts.casesplit, mindim=d,
                        max_splits=opts.max_splits, max_iter=opts.max_iter,
                        seed=opts.seed)
    # Step 8
    cases = reduce(M, ranking, mopts)
    if not cases:
        return MapResult("NoMap", stage="elimination",
                         reason="no consistent case survives mindim pruning",
                         mapping=mapping, notes=notes)
    cases.sort(key=_sel_key)
    scored = [(cs, _block_dim(cs, ("map-unknown",))) for cs in cases]
    # Steps 9-10
    if d is not None:
        for idx, (cs, psi_dim) in enumerate(scored):
            if psi_dim == d:
                explicit = _try_frobenius(cs, mapping, Rsol, Rhsol, notes)
                return MapResult(
                    "ExistsWithExplicit" if explicit else "Exists",
                    stage="elimination", cases=scored, selected=idx,
                    mapping=mapping, explicit=explicit, notes=notes)
    # Steps 11-12: refine with the full nonlinear determining system
    equiv = equiv_det_sys(Rsol, Rhsol, mapping)
    for idx, (cs, psi_dim) in enumerate(scored):
        refined_sys = cs.as_diffsys().replace(
            equations=tuple(cs.as_diffsys().equations) + equiv.equations,
            inequations=tuple(cs.as_diffsys().inequations) + equiv.inequations)
        sub = reduce(refined_sys, ranking, mopts)
        sub.sort(key=_sel_key)
        for cs2 in sub:
            psi2 = _block_dim(cs2, ("map-unknown",))
            if d is None or psi2 == d:
                explicit = _try_frobenius(cs2, mapping, Rsol, Rhsol, notes)
                scored2 = [(cs2, psi2)]
                return MapResult(
                    "ExistsWithExplicit" if explicit else "Exists",
                    stage="equiv-refine", cases=scored2, selected=0,
                    mapping=mapping, explicit=explicit, notes=notes)
    return MapResult("NoMap", stage="equiv-refine",
                     reason="no case attains the required map dimension",
                     cases=scored, mapping=mapping, notes=notes)


def _assemble_connection_system(Rsol: DiffSys, Sc: CaseSystem, Shc: CaseSystem,
                                mapping: MapSpec) -> DiffSys:
    """Mapping system with both defining systems in connection form.

    The source algebra is presented through its initial-data parameters p,
    the target algebra through q = (target parameters) o Psi via the forward
    chain rule; the linear mapping equations couple them through the map
    jets.  Everything stays first order and linear in the p, q block.
    """
    from .connection import compose_with_map, connection_form
    conn_s = connection_form(Sc, "p")
    conn_h0 = connection_form(Shc, "ph")
    conn_h = compose_with_map(conn_h0, mapping, Rsol, "qh")
    bk = []
    src_coords = mapping.source_coords
    for k, comp in enumerate(mapping.all_components):
        e = -conn_h.components[conn_h0.coords[k]]
        for c in src_coords:
            e = e + conn_s.components[c] * Expr.of(JetVar(comp, {c: 1}))
        bk.append(e)
    solved = dict(conn_s.solved)
    solved.update(conn_h.solved)
    return DiffSys(
        name="mapping-system",
        indep=Rsol.indep,
        dep=Rsol.dep,
        inf=conn_s.sigs + conn_h.sigs,
        map_=mapping.all_components,
        equations=tuple(bk),
        solved=solved,
        inequations=(mapping.jacobian(),),
        vector_field=Sc.system.vector_field,
    )


def _assemble_mapping_system(Rsol: DiffSys, Sc: CaseSystem, pulled: DiffSys,
                             bk: list, mapping: MapSpec, composites) -> DiffSys:
    s_sys = Sc.as_diffsys()
    equations = list(s_sys.all_equations())
    equations += list(pulled.all_equations())
    equations += bk
    ineqs = list(s_sys.inequations) + list(pulled.inequations)
    jac = mapping.jacobian()
    ineqs.append(jac)
    return DiffSys(
        name="mapping-system",
        indep=Rsol.indep,
        dep=Rsol.dep,
        inf=tuple(s_sys.inf) + tuple(composites),
        map_=mapping.all_components,
        equations=tuple(equations),
        inequations=tuple(ineqs),
        vector_field=s_sys.vector_field,
    )


# ---------------------------------------------------------------------------
# Algorithm 2: TargetClass = constant-coefficient linear DE


def homogeneity_restriction(S: DiffSys, R: DiffSys) -> tuple:
    """eta_u = eta/u and xi_u = 0: keep maps of the form (f(x), g(x) u)."""
    out = []
    vf = dict((c, s) for s, c in S.vector_field)
    dep_names = [f.name for f in R.dep]
    for u in dep_names:
        eta = vf[u]
        out.append(Expr.of(JetVar(eta, {u: 1})) * fn(R.sigs[u]) - fn(eta))
        for x in (v.name for v in R.indep):
            xi = vf[x]
            out.append(Expr.of(JetVar(xi, {u: 1})))
    return tuple(out)


def _check_linear_homogeneous(Rsol: DiffSys):
    dep = set(Rsol.dep)
    for lead, rhs in Rsol.solved.items():
        e = Expr.of(lead) - rhs
        for mono, _ in e.num.terms.items():
            deg = 0
            for vid, k in mono:
                obj = indeterminate_by_id(vid)
                if isinstance(obj, JetVar) and obj.sig in dep:
                    deg += k
            if deg != 1:
                raise MapDEError("source is not linear homogeneous")


def generic_target_monomials(Rh_indep_names, order: int):
    """Hatted derivative multi-indices up to the given order, a1 first.

    Enumerated by descending total order, then lexicographically with the
    first independent variable weighing most, matching the usual display
    a1*u_xx + a2*u_xt + a3*u_tt + a4*u_x + a5*u_t + a6*u.
    """
    n = len(Rh_indep_names)
    out = []
    for q in range(order, -1, -1):
        for combo in _ordered_multiindices(n, q):
            out.append(dict(zip(Rh_indep_names, combo)))
    return out


def _ordered_multiindices(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _ordered_multiindices(n - 1, total - first):
            yield (first,) + rest


def run_mapde_constcoeff(R: DiffSys, opts: ElimOptions | None = None,
                         psi_names=None, phi_names=None,
                         det_names=None) -> MapResult:
    """Algorithm 2: map a linear homogeneous DE to constant coefficients."""
    opts = opts or ElimOptions()
    notes: list = []
    plain_opts = ElimOptions(casesplit=opts.casesplit, mindim=None,
                             max_splits=opts.max_splits,
                             max_iter=opts.max_iter, seed=opts.seed)
    Rc = _reduce_single(R, _plain_ranking(R), plain_opts)
    Rsol = Rc.as_diffsys()
    _check_linear_homogeneous(Rsol)
    n, m = len(R.indep), len(R.dep)
    # restricted defining system S'
    S = determining_system(Rsol, names=det_names)
    S = S.replace(equations=S.equations + homogeneity_restriction(S, Rsol))
    Sc = _reduce_single(S, _inf_ranking(S), plain_opts)
    id_s = initial_data(Sc)
    if id_s.finite:
        notes.append(f"restricted symmetry algebra dimension {id_s.dimension}")
    # target-side data: n commuting translations, pulled back
    hat_names = tuple(f"{v.name}h" for v in R.indep)
    mapping = _constcoeff_mapspec(Rsol, hat_names, psi_names, phi_names)
    if not id_s.finite:
        raise MapDEError("restricted symmetry algebra must be finite for "
                         "the constant-coefficient pipeline")
    from .connection import connection_form
    conn_s = connection_form(Sc, "p")
    src_coords = mapping.source_coords
    # the target parameters are the n translation strengths, constant on
    # the source side and absent from the dependent directions
    q_sigs = tuple(FunctionSignature(f"qh{j+1}", src_coords, "infinitesimal")
                   for j in range(n))
    solved = dict(conn_s.solved)
    for qs in q_sigs:
        for y in src_coords:
            solved[JetVar(qs, {y: 1})] = Expr.const(0)
    bk = []
    for k, comp in enumerate(mapping.all_components):
        e = Expr.const(0) if k >= n else -fn(q_sigs[k])
        for c in src_coords:
            e = e + conn_s.components[c] * Expr.of(JetVar(comp, {c: 1}))
        bk.append(e)
    M = DiffSys(
        name="constcoeff-mapping-system",
        indep=Rsol.indep, dep=Rsol.dep,
        inf=conn_s.sigs + q_sigs,
        map_=mapping.all_components,
        equations=tuple(bk),
        solved=solved,
        inequations=(mapping.jacobian(),),
        vector_field=Sc.system.vector_field,
    )
    ranking = mapde_block(
        M.coords,
        tuple(s.name for s in M.map_) + tuple(s.name for s in M.inf))
    mopts = ElimOptions(casesplit=opts.casesplit, mindim=n,
                        max_splits=opts.max_splits, max_iter=opts.max_iter,
                        seed=opts.seed)
    cases = reduce(M, ranking, mopts)
    if not cases:
        return MapResult("NoMap", stage="elimination",
                         reason="no consistent case", mapping=mapping,
                         notes=notes)
    cases.sort(key=_sel_key)
    scored = [(cs, _block_dim(cs, ("map-unknown",))) for cs in cases]
    chosen = None
    for idx, (cs, psi_dim) in enumerate(scored):
        if psi_dim is not INFINITE:
            chosen = idx
            break
    if chosen is None:
        return MapResult("NoMap", stage="elimination",
                         reason="map block never finite-dimensional",
                         cases=scored, mapping=mapping, notes=notes)
    case, psi_dim = scored[chosen]
    # target coefficients by elimination with the a_i ranked highest
    coeff_case, a_sigs, norm_note = _target_coefficients(
        Rsol, mapping, case, mopts)
    notes.append(norm_note)
    result = MapResult("Exists", stage="elimination", cases=scored,
                       selected=chosen, mapping=mapping, notes=notes)
    result.target_coefficients = None
    explicit = _try_frobenius(case, mapping, Rsol, None, notes)
    if explicit is None:
        return result
    # evaluate the a_i at the explicit map and emit the target
    target, coeffs = _emit_target(Rsol, mapping, coeff_case, a_sigs,
                                  explicit, hat_names, notes)
    if target is None:
        return result
    ver = verify_map(Rsol, target, explicit)
    if not ver.verified:
        notes.append("explicit map failed verification; reporting existence only")
        return result
    result.verdict = "ExistsWithExplicit"
    result.explicit = explicit
    result.target = target
    result.target_coefficients = coeffs
    return result


def _constcoeff_mapspec(Rsol: DiffSys, hat_names, psi_names, phi_names) -> MapSpec:
    n, m = len(Rsol.indep), len(Rsol.dep)
    src_coords = tuple(v.name for v in Rsol.indep) + tuple(f.name for f in Rsol.dep)
    psi_names = tuple(psi_names or (f"psi{j+1}" for j in range(n)))
    phi_names = tuple(phi_names or (f"phi{k+1}" for k in range(m)))
    psi = tuple(FunctionSignature(nm, src_coords, "map-unknown") for nm in psi_names)
    phi = tuple(FunctionSignature(nm, src_coords, "map-unknown") for nm in phi_names)
    tgt_coords = tuple(hat_names) + tuple(f"{f.name}h" for f in Rsol.dep)
    return MapSpec(psi, phi, src_coords, tgt_coords)


def _target_coefficients(Rsol: DiffSys, mapping: MapSpec, case: CaseSystem,
                         mopts: ElimOptions):
    """Append the generic-target relations and re-reduce with a_i on top."""
    order = max(v.order for v in Rsol.solved)
    hat_indep = tuple(FunctionSignature(nm, (nm,), "independent")
                      for nm in mapping.target_coords[:len(mapping.psi)])
    hat_dep = tuple(FunctionSignature(nm, tuple(v.name for v in hat_indep),
                                      "dependent")
                    for nm in mapping.target_coords[len(mapping.psi):])
    monos = generic_target_monomials([v.name for v in hat_indep], order)
    a_sigs = tuple(FunctionSignature(f"a{i+1}", (), "parameter")
                   for i in range(len(monos)))
    # generic target sum a_i K(i) = 0 as a hatted expression
    omega = Expr.const(0)
    uh = hat_dep[0]
    for a, mi in zip(a_sigs, monos):
        omega = omega + fn(a) * Expr.of(JetVar(uh, mi))
    hat_sys = DiffSys(name="generic-target", indep=hat_indep, dep=hat_dep,
                      params=a_sigs)
    bindings = _pullback_bindings_for(Rsol, hat_sys, mapping, order)
    pulled = pullback_equation(omega, bindings)
    coeff_eqs = collect_parametric(Expr(pulled.num), set(Rsol.dep))
    # normalize: the coefficient whose K(i) matches the source leader is 1
    lead = next(iter(Rsol.solved))
    lead_mi = {f"{a}h": c for a, c in lead.mi}
    norm_idx = next(i for i, mi in enumerate(monos)
                    if {k: v for k, v in mi.items() if v} == lead_mi)
    norm_eq = fn(a_sigs[norm_idx]) - Expr.const(1)
    note = (f"target normalized with coefficient of "
            f"{format_jet(JetVar(hat_dep[0], monos[norm_idx]))} set to 1")
    base = case.as_diffsys()
    sys2 = DiffSys(
        name="coefficient-system",
        indep=base.indep, dep=base.dep, inf=base.inf, map_=base.map_,
        params=a_sigs,
        equations=tuple(base.equations) + tuple(coeff_eqs) + (norm_eq,),
        solved=dict(base.solved),
        inequations=base.inequations,
        vector_field=base.vector_field,
    )
    ranking = mapde_block(
        sys2.coords,
        tuple(s.name for s in sys2.map_) + tuple(s.name for s in sys2.inf),
        params_top=True)
    sub = reduce(sys2, ranking, mopts)
    sub.sort(key=_sel_key)
    if not sub:
        raise MapDEError("coefficient elimination lost all cases")
    return sub[0], a_sigs, note


def _pullback_bindings_for(Rsol: DiffSys, hat_sys: DiffSys, mapping: MapSpec,
                           order: int) -> dict:
    from .detsys import pullback_bindings
    return pullback_bindings(Rsol, hat_sys, mapping, order)


def _emit_target(Rsol, mapping, coeff_case, a_sigs, explicit, hat_names, notes):
    values = {}
    sigs = dict(Rsol.sigs)
    comp_values = dict(explicit.components)
    ctx_sigs = {**sigs, **{s.name: s for s in mapping.all_components}}
    from .detsys import substitute_field
    coeffs = {}
    for a in a_sigs:
        jv = JetVar(a)
        rhs = coeff_case.solved.get(jv)
        if rhs is None:
            coeffs[a.name] = None   # free coefficient (underdetermined)
            continue
        val = substitute_field(rhs, comp_values, ctx_sigs)
        val = directed_rewrite(val)
        if not val.is_const():
            notes.append(f"coefficient {a.name} not constant at the explicit map")
            return None, None
        coeffs[a.name] = val.const_value()
    if any(v is None for v in coeffs.values()):
        notes.append("some target coefficients remained free; "
                     "emitting zero for them")
    hat_indep = tuple(FunctionSignature(nm, (nm,), "independent")
                      for nm in hat_names)
    hat_dep = tuple(FunctionSignature(f"{f.name}h",
                                      tuple(v.name for v in hat_indep),
                                      "dependent") for f in Rsol.dep)
    order = max(v.order for v in Rsol.solved)
    monos = generic_target_monomials(list(hat_names), order)
    e = Expr.const(0)
    for a, mi in zip(a_sigs, monos):
        v = coeffs.get(a.name)
        if v:
            e = e + Expr.const(v) * Expr.of(JetVar(hat_dep[0], mi))
    target = DiffSys(name="constcoeff-target", indep=hat_indep, dep=hat_dep,
                     equations=(e,))
    return target, {k: v for k, v in coeffs.items() if v is not None}


# ---------------------------------------------------------------------------
# restricted Frobenius quadrature


@dataclass
class Unsupported:
    reason: str

    def __bool__(self):
        return False


def frobenius_integrate(case: CaseSystem, mapping: MapSpec,
                        specialization: dict | None = None):
    """Integrate the map block of a case by restricted quadrature.

    Handles unknowns whose parametric jets have, stage by stage, either a
    pure gradient (rational in the base coordinates) or a pure log-derivative
    form.  Every result is checked against the case and the Jacobian; any
    failure returns Unsupported, never a wrong map.
    """
    spec = dict(specialization or {})
    sigs = dict(case.system.sigs)
    coords = case.system.coords
    ctx0 = SolvedContext({}, coords, sigs)
    closed: dict = {}
    constants: dict = {}
    base_ctx = case.context()

    for comp in mapping.all_components:
        leaders = case.leaders_of(comp)
        if not leaders:
            return Unsupported(f"{comp.name} is unconstrained")
        idata_cells = _finite_parametric(case, comp)
        if idata_cells is None:
            return Unsupported(f"{comp.name} has infinite-dimensional data")
        stage_values: dict = {}
        for jet in sorted(idata_cells, key=case.ranking.key, reverse=True):
            got = _integrate_stage(case, comp, jet, closed, stage_values,
                                   spec, constants, sigs, coords)
            if isinstance(got, Unsupported):
                return got
            stage_values[jet] = got
        closed[comp.name] = stage_values[JetVar(comp)]
    emap = ExplicitMap(closed, constants, mapping)
    # substitution check against the whole case
    ok = _satisfies_case(case, emap, sigs)
    if not ok:
        return Unsupported("integrated map does not satisfy its case")
    jac = directed_rewrite(emap.jacobian_expr(sigs))
    if jac.is_zero():
        return Unsupported("integrated map has vanishing Jacobian")
    return emap


def _finite_parametric(case: CaseSystem, sig) -> list | None:
    from .diffelim import _staircase_cells, _leader_tuples
    leaders = _leader_tuples(case, sig)
    cells = _staircase_cells(leaders, len(sig.args))
    out = []
    for fixed, free in cells:
        if free:
            return None
        mi = {sig.args[ax]: val for ax, val in fixed.items() if val > 0}
        out.append(JetVar(sig, mi))
    return out


def _integrate_stage(case, comp, jet, closed, stage_values, spec, constants,
                     sigs, coords):
    """Closed form for one parametric jet of one unknown."""
    ctx = case.context()
    label = f"{comp.name}:{jet!r}"
    grads = {}
    for y in coords:
        child = jet.raised(y)
        val = reduce_expr(Expr.of(child), ctx)
        val = _substitute_known(val, closed, stage_values, sigs)
        grads[y] = val
    # classify: pure gradient or log-derivative in this jet
    self_id = jet.id
    alpha = {}
    beta = {}
    for y, g in grads.items():
        if g.is_zero():
            alpha[y] = Expr.const(0)
            beta[y] = Expr.const(0)
            continue
        gv = {v for v in g.jet_vars(deep=True)
              if case.ranking.is_ranked(v)}
        if not gv:
            beta[y] = g
            alpha[y] = Expr.const(0)
            continue
        if gv == {jet}:
            quot = g / Expr.of(jet)
            if jet in quot.jet_vars(deep=True):
                return Unsupported(f"{label}: nonlinear self-dependence")
            alpha[y] = quot
            beta[y] = Expr.const(0)
            continue
        return Unsupported(f"{label}: depends on other unknowns")
    pure = all(a.is_zero() for a in alpha.values())
    logform = all(b.is_zero() for b in beta.values()) and not pure
    if not pure and not logform:
        return Unsupported(f"{label}: mixed affine form")
    field = beta if pure else alpha
    # exact compatibility: d_z field_y == d_y field_z on the base
    ctx_plain = SolvedContext({}, coords, sigs)
    for y in coords:
        for z in coords:
            lhs = total_derivative(field[y], z, ctx_plain)
            rhs = total_derivative(field[z], y, ctx_plain)
            if lhs != rhs:
                return Unsupported(f"{label}: incompatible cross-derivatives")
    potential = _potential(field, coords, sigs)
    if potential is None:
        return Unsupported(f"{label}: quadrature outside supported class")
    cname = f"c{len(constants) + 1}"
    if pure:
        # positive-order stages scale the component (default 1); the
        # zero-jet constant is a translation (default 0)
        default = QQ(1) if jet.mi else QQ(0)
        cval = QQ(spec.get(label, spec.get(cname, default)))
        constants[cname] = (label, cval)
        return potential + Expr.const(cval)
    cval = QQ(spec.get(label, spec.get(cname, QQ(1))))
    constants[cname] = (label, cval)
    return Expr.const(cval) * _exp_simplify(potential)


def _is_trivial_zero(e: Expr) -> bool:
    return e.is_zero()


def _substitute_known(e: Expr, closed: dict, stage_values: dict, sigs) -> Expr:
    bindings = {}
    for v in e.jet_vars(deep=True):
        if v.sig.name in closed:
            val = closed[v.sig.name]
            for a in v.sig.args:
                for _ in range(v.count(a)):
                    val = partial(val, JetVar(sigs[a]))
            bindings[v] = val
        elif v in stage_values:
            bindings[v] = stage_values[v]
    if not bindings:
        return e
    return substitute(e, bindings)


def _potential(field: dict, coords, sigs) -> Expr | None:
    """Antiderivative of a compatible gradient, integrating coordinate-wise."""
    acc = Expr.const(0)
    ctx_plain = SolvedContext({}, coords, sigs)
    for y in coords:
        residual = field[y] - total_derivative(acc, y, ctx_plain)
        if residual.is_zero():
            continue
        part = _integrate_coord(residual, y, sigs)
        if part is None:
            return None
        acc = acc + part
    # final check
    for y in coords:
        if total_derivative(acc, y, ctx_plain) != field[y]:
            return None
    return acc


def _integrate_coord(e: Expr, y: str, sigs) -> Expr | None:
    """Termwise antiderivative in the coordinate y of a rational expression."""
    yvar = JetVar(sigs[y])
    yid = yvar.id
    for atom in e.atoms():
        if yvar in atom.arg.jet_vars(deep=True):
            return None
    num, den = e.num, e.den
    dn = den.degree_in(yid)
    if dn == 0:
        return _integrate_poly_over_free(num, den, yvar)
    dcoeffs = den.coeffs_in(yid)
    if len(dcoeffs) == 1:
        # denominator = q * y^k
        k = next(iter(dcoeffs))
        q = dcoeffs[k]
        out = Expr.const(0)
        for mono, coef in num.terms.items():
            j = 0
            rest = []
            for vid, kk in mono:
                if vid == yid:
                    j = kk
                else:
                    rest.append((vid, kk))
            restp = Poly({tuple(rest): coef}, _own=True)
            p = j - k
            if p == -1:
                out = out + Expr(restp) / Expr(q) * ln_atom(Expr.of(yvar))
            else:
                out = out + Expr(restp) / Expr(q) * (
                    Expr.of(yvar) ** (p + 1)) / Expr.const(p + 1)
        return out
    if dn == 1:
        a = dcoeffs.get(1, Poly())
        b = dcoeffs.get(0, Poly())
        if a.degree_in(yid) or b.degree_in(yid):
            return None
        # polynomial part + residue/(a y + b)
        quo = Expr.const(0)
        rem = Expr(num)
        den_e = Expr(den)
        nd = num.degree_in(yid)
        cur = num
        while cur.degree_in(yid) >= 1:
            dcur = cur.degree_in(yid)
            lead = cur.coeffs_in(yid)[dcur]
            term = Expr(lead) / Expr(a) * Expr.of(yvar) ** (dcur - 1)
            quo = quo + term
            cur = (Expr(cur) - term * den_e).num
        r = Expr(cur)
        qpart = _integrate_poly_expr(quo, yvar)
        if qpart is None:
            return None
        return qpart + r / Expr(a) * ln_atom(den_e)
    return None


def _integrate_poly_over_free(num: Poly, den: Poly, yvar) -> Expr | None:
    out = Expr.const(0)
    yid = yvar.id
    for mono, coef in num.terms.items():
        j = 0
        rest = []
        for vid, kk in mono:
            if vid == yid:
                j = kk
            else:
                rest.append((vid, kk))
        restp = Poly({tuple(rest): coef}, _own=True)
        out = out + Expr(restp) / Expr(den) * (Expr.of(yvar) ** (j + 1)) \
            / Expr.const(j + 1)
    return out


def _integrate_poly_expr(e: Expr, yvar) -> Expr | None:
    if not e.den.is_const() and e.den.degree_in(yvar.id):
        return None
    return _integrate_poly_over_free(e.num, e.den, yvar)


def _exp_simplify(h: Expr) -> Expr:
    """exp(h) with integer/half-integer multiples of ln pulled out."""
    if h.is_zero():
        return Expr.const(1)
    if not h.den.is_const():
        return exp_atom(h)
    product = Expr.const(1)
    rest = Expr.const(0)
    for mono, coef in h.num.terms.items():
        handled = False
        if len(mono) == 1 and mono[0][1] == 1:
            obj = indeterminate_by_id(mono[0][0])
            if isinstance(obj, Atom) and obj.tag == "ln":
                q = QQ(coef)
                num_, den_ = int(q.numerator), int(q.denominator)
                if den_ == 1:
                    product = product * obj.arg ** num_
                    handled = True
                elif den_ == 2:
                    product = product * sqrt_atom(obj.arg) ** num_
                    handled = True
        if not handled:
            rest = rest + Expr(Poly({mono: coef}, _own=True))
    if rest.is_zero():
        return product
    return product * exp_atom(rest)


def _satisfies_case(case: CaseSystem, emap: ExplicitMap, sigs) -> bool:
    from .detsys import substitute_field
    reg = {**sigs, **{s.name: s for s in emap.mapping.all_components}}
    for lead, rhs in case.solved.items():
        if lead.sig not in emap.mapping.all_components:
            continue
        e = Expr.of(lead) - rhs
        got = substitute_field(e, emap.components, reg)
        if not directed_rewrite(got).is_zero():
            return False
    for cstr in case.constraints:
        ranked = {v.sig for v in cstr.jet_vars(deep=True)
                  if case.ranking.is_ranked(v)}
        if ranked and ranked <= set(emap.mapping.all_components):
            got = substitute_field(cstr, emap.components, reg)
            if not directed_rewrite(got).is_zero():
                return False
    return True


def _try_frobenius(case: CaseSystem, mapping: MapSpec, Rsol, Rhsol, notes):
    got = frobenius_integrate(case, mapping)
    if isinstance(got, Unsupported):
        notes.append(f"frobenius_integrate: {got.reason}")
        return None
    if Rhsol is not None:
        ver = verify_map(Rsol, Rhsol, got)
        if not ver.verified:
            notes.append("integrated map failed verify_map; discarded")
            return None
    return got


# ---------------------------------------------------------------------------
# directed rewriting and the independent verifier


def directed_rewrite(e: Expr, max_passes: int = 8) -> Expr:
    """Bounded rewrite: sqrt(a)^2 -> a, cos(a)^2 -> 1 - sin(a)^2,
    exp(a)*exp(b) -> exp(a+b), exp(0) -> 1.

    Used only by the verifier and map emission; the kernel itself never
    applies identities.
    """
    for _ in range(max_passes):
        out = _rewrite_once(e)
        if out == e:
            return out
        e = out
    return e


def _rewrite_once(e: Expr) -> Expr:
    num = _rewrite_poly(e.num)
    den = _rewrite_poly(e.den)
    return num / den


def _rewrite_poly(p: Poly) -> Expr:
    out = Expr.const(0)
    for mono, coef in p.terms.items():
        term = Expr.const(coef)
        exp_args = []
        for vid, k in mono:
            obj = indeterminate_by_id(vid)
            if isinstance(obj, Atom):
                arg = directed_rewrite_arg(obj)
                if obj.tag == "sqrt" and k >= 2:
                    term = term * arg ** (k // 2)
                    if k % 2:
                        term = term * sqrt_atom(arg)
                    continue
                if obj.tag == "cos" and k >= 2:
                    one_minus = Expr.const(1) - Expr.of(Atom("sin", arg)) ** 2
                    term = term * one_minus ** (k // 2)
                    if k % 2:
                        term = term * Expr.of(Atom("cos", arg))
                    continue
                if obj.tag == "exp":
                    exp_args.append(arg * k)
                    continue
                if arg != obj.arg:
                    term = term * Expr.of(Atom(obj.tag, arg)) ** k
                    continue
            term = term * Expr(Poly.var(vid)) ** k
        if exp_args:
            total = Expr.const(0)
            for a in exp_args:
                total = total + a
            if not total.is_zero():
                term = term * exp_atom(total)
        out = out + term
    return out


def directed_rewrite_arg(obj: Atom) -> Expr:
    return directed_rewrite(obj.arg)


@dataclass
class VerifyResult:
    verified: bool
    residues: list
    jacobian: Expr | None = None


def verify_map(R: DiffSys, Rh: DiffSys, emap: ExplicitMap) -> VerifyResult:
    """Independent check that the explicit map carries R's locus into Rh.

    Prolongs the map by exact total derivatives on R's jet locus, rewrites
    every target equation through the change of variables, and normalizes;
    the residues must vanish after the bounded directed rewrite.
    """
    Rc = reduce(R, _plain_ranking(R), ElimOptions(casesplit=False))
    Rsol = Rc[0].as_diffsys() if len(Rc) == 1 else R
    ctx = Rsol.context()
    mapping = emap.mapping
    n = len(Rsol.indep)
    psi_exprs = [emap.components[s.name] for s in mapping.psi]
    phi_exprs = [emap.components[s.name] for s in mapping.phi]
    xs = [v.name for v in Rsol.indep]
    A = [[Frac.from_expr(reduce_expr(total_derivative(p, xi, ctx), ctx))
          for p in psi_exprs] for xi in xs]
    from .detsys import _frac_det, _frac_adjugate
    detA = _frac_det(A)
    if directed_rewrite(detA.to_expr()).is_zero():
        return VerifyResult(False, [Expr.const(1)], None)
    adj = _frac_adjugate(A)
    inv = [[adj[a][i] / detA for i in range(n)] for a in range(n)]
    hat_sys = Rh
    max_order = 0
    for e in hat_sys.all_equations():
        for v in e.jet_vars(deep=True):
            if v.sig in set(hat_sys.dep):
                max_order = max(max_order, v.order)
    xh_names = [v.name for v in hat_sys.indep]
    jets: dict = {}

    def build(uh_sig, base_expr, mi: tuple) -> Frac:
        v = JetVar(uh_sig, mi)
        if v in jets:
            return jets[v]
        if not v.mi:
            e = Frac.from_expr(base_expr)
        else:
            a = next(x for x in uh_sig.args if v.count(x) > 0)
            lower = build(uh_sig, base_expr, v.lowered(a).mi)
            ai = xh_names.index(a)
            e = Frac(Poly())
            for i, xi in enumerate(xs):
                dfrac = lower.derivative(xi, ctx)
                if not dfrac.is_zero():
                    e = e + inv[ai][i] * dfrac
        jets[v] = e
        return e

    bindings: dict = {}
    for hv, pe in zip(hat_sys.indep, psi_exprs):
        bindings[JetVar(hv).id] = Frac.from_expr(pe)
    for hu, pe in zip(hat_sys.dep, phi_exprs):
        bindings[JetVar(hu).id] = Frac.from_expr(pe)
    for hu, pe in zip(hat_sys.dep, phi_exprs):
        for q in range(1, max_order + 1):
            for mi in _all_multiindices(tuple(hu.args), q):
                bindings[JetVar(hu, mi).id] = build(hu, pe, mi)

    residues = []
    ok = True
    for e in hat_sys.all_equations():
        pulled = pullback_equation(e, bindings)
        res = Expr(pulled.num)
        res = reduce_expr(res, ctx)
        res = directed_rewrite(res)
        residues.append(res)
        if not res.is_zero():
            ok = False
    sigs = {**Rsol.sigs, **{s.name: s for s in mapping.all_components}}
    jac = directed_rewrite(emap.jacobian_expr(Rsol.sigs))
    if jac.is_zero():
        ok = False
    return VerifyResult(ok, residues, jac)


def _all_multiindices(args: tuple, order: int):
    if len(args) == 1:
        yield {args[0]: order}
        return
    for first in range(order + 1):
        for rest in _all_multiindices(args[1:], order - first):
            d = {args[0]: first}
            d.update(rest)
            yield d
