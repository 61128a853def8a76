"""Connection-form presentation of finite-dimensional defining systems.

A reduced defining system with d-dimensional initial data determines every
jet of its unknowns as a linear combination of the d parametric derivatives,
whose own gradients close among themselves: grad p = C(base) p.  Presenting
the system through the functions p keeps every elimination step first order
and linear, which is what makes the mapping-system reduction tractable;
composing with the unknown map needs only the forward chain rule.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diffelim import CaseSystem, InitialData, initial_data
from .kernel import (
    Expr,
    FunctionSignature,
    JetVar,
    SolvedContext,
    fn,
    reduce_expr,
    substitute,
    total_derivative,
)
from .poly import Poly


class ConnectionError_(Exception):
    pass


@dataclass
class ConnectionForm:
    """First-order closed presentation of a defining system's solutions."""

    sigs: tuple                 # parameter functions p_1..p_d
    solved: dict                # JetVar(p_l, {y:1}) -> Expr linear in p's
    components: dict            # vector-field coord -> Expr linear in p's
    entries: tuple              # the initial-data jets, in basis order
    coords: tuple               # base coordinate names

    @property
    def dim(self) -> int:
        return len(self.sigs)

    def coefficients(self, coord: str) -> list:
        """Matrix C with grad_coord p_l = sum_m C[l][m] p_m."""
        out = []
        for l, sig in enumerate(self.sigs):
            rhs = self.solved[JetVar(sig, {coord: 1})]
            row = []
            for m, msig in enumerate(self.sigs):
                row.append(_linear_coeff(rhs, JetVar(msig)))
            out.append(row)
        return out


def _linear_coeff(e: Expr, v: JetVar) -> Expr:
    from .kernel import partial
    c = partial(e, v)
    if v in c.jet_vars(deep=True):
        raise ConnectionError_(f"expression not linear in {v!r}")
    return c


def connection_form(case: CaseSystem, prefix: str,
                    idata: InitialData | None = None) -> ConnectionForm:
    """Present a reduced, finite-dimensional defining system through its
    initial-data parameters."""
    sysd = case.system
    if not sysd.vector_field:
        raise ConnectionError_("case carries no vector-field metadata")
    idata = idata or initial_data(case)
    if not idata.finite:
        raise ConnectionError_("infinite-dimensional initial data")
    if idata.constraint_rank:
        raise ConnectionError_("constraints on the infinitesimal block")
    coords = sysd.coords
    entries = tuple(v for v, _ in idata.entries)
    p_sigs = tuple(FunctionSignature(f"{prefix}{l+1}", coords, "infinitesimal")
                   for l in range(len(entries)))
    to_p = {v: fn(s) for v, s in zip(entries, p_sigs)}
    ctx = case.context()

    def present(e: Expr) -> Expr:
        e = reduce_expr(e, ctx)
        bindings = {v: to_p[v] for v in e.jet_vars(deep=True) if v in to_p}
        out = substitute(e, bindings) if bindings else e
        for v in out.jet_vars(deep=True):
            if case.ranking.is_ranked(v) and v.sig not in set(p_sigs):
                raise ConnectionError_(
                    f"jet {v!r} survived presentation; case not reduced?")
        return out

    solved = {}
    for v, sig in zip(entries, p_sigs):
        for y in coords:
            d = total_derivative(Expr.of(v), y, ctx)
            solved[JetVar(sig, {y: 1})] = present(d)
    components = {}
    for vf_sig, coord in sysd.vector_field:
        components[coord] = present(Expr.of(JetVar(vf_sig)))
    return ConnectionForm(p_sigs, solved, components, entries, coords)


def compose_with_map(conn: ConnectionForm, mapping, source: "DiffSys",
                     prefix: str) -> ConnectionForm:
    """Pull a target-side connection back through the unknown map.

    The composed parameters q_l = p_l o Psi satisfy
    grad_y q_l = sum_a (d Psi_a / d y) (C_a o Psi) q, a forward chain rule
    with polynomial coefficients in the map jets.
    """
    src_coords = tuple(v.name for v in source.indep) + \
        tuple(f.name for f in source.dep)
    q_sigs = tuple(FunctionSignature(f"{prefix}{l+1}", src_coords,
                                     "infinitesimal")
                   for l in range(conn.dim))
    comps = mapping.all_components
    hat_coords = conn.coords
    if len(comps) != len(hat_coords):
        raise ConnectionError_("map component count mismatch")
    hat_sigs_by_coord = {}
    # bind hatted base coordinates to map-component zero-jets
    hat_bindings = {}
    for coord, comp in zip(hat_coords, comps):
        hat_bindings[coord] = fn(comp)

    def pull_coeff(e: Expr) -> Expr:
        vars_ = e.jet_vars(deep=True)
        bindings = {}
        for v in vars_:
            if v.sig.name in hat_bindings and not v.mi:
                bindings[v] = hat_bindings[v.sig.name]
            elif v.order:
                raise ConnectionError_(
                    f"connection coefficient contains jet {v!r}")
        return substitute(e, bindings) if bindings else e

    # connection matrices per hatted direction, pulled through the map
    Chat = {a: conn.coefficients(a) for a in hat_coords}
    Cpulled = {a: [[pull_coeff(cell) for cell in row] for row in Chat[a]]
               for a in hat_coords}
    solved = {}
    for l, qs in enumerate(q_sigs):
        for y in src_coords:
            total = Expr.const(0)
            for ai, a in enumerate(hat_coords):
                jpart = Expr.of(JetVar(comps[ai], {y: 1}))
                row = Cpulled[a][l]
                for mm, cell in enumerate(row):
                    if cell.is_zero():
                        continue
                    total = total + jpart * cell * fn(q_sigs[mm])
            solved[JetVar(qs, {y: 1})] = total
    components = {}
    for coord in hat_coords:
        e = conn.components[coord]
        out = Expr.const(0)
        for mm, sig in enumerate(conn.sigs):
            cell = pull_coeff(_linear_coeff(e, JetVar(sig)))
            if not cell.is_zero():
                out = out + cell * fn(q_sigs[mm])
        components[coord] = out
    return ConnectionForm(q_sigs, solved, components, conn.entries, src_coords)
