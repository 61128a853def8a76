"""Differential elimination to a reduced involutive (rif-like) form.

reduce() rewrites a system into solved form for its ranking leaders, spawns
and absorbs integrability conditions, splits cases on vanishing pivots, and
prunes branches below a requested initial-data dimension.  Equations that
are nonlinear in their leader are kept as algebraic constraints; they
contribute through their derivatives and through the dimension count.
"""

from __future__ import annotations

import math
import os
import random
from dataclasses import dataclass, field

from .kernel import (
    DepthExceeded,
    Expr,
    JetVar,
    SolvedContext,
    partial,
    reduce_expr,
    substitute,
)
from .poly import P_ONE, Poly, QQ, indeterminate_by_id, poly_exact_div
from .ranking import ConstantExpression, Ranking, orderly
from .sysio import DiffSys


class ElimError(Exception):
    pass


class BudgetExceeded(ElimError):
    def __init__(self, what, detail=""):
        super().__init__(f"budget exceeded: {what}" + (f" ({detail})" if detail else ""))
        self.what = what


class PivotRequired(ElimError):
    """A pivot could vanish but case splitting is disabled."""


class NonGradedRanking(ElimError):
    pass


INFINITE = math.inf


@dataclass
class ElimOptions:
    casesplit: bool = True
    mindim: int | None = None
    max_splits: int = 64
    max_iter: int = 200
    seed: int = 0


@dataclass
class CaseSystem:
    """One consistent branch of a reduced system."""

    system: DiffSys                    # signatures / metadata carrier
    ranking: Ranking
    solved: dict = field(default_factory=dict)
    constraints: list = field(default_factory=list)
    inequations: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)   # (Expr, "=0" | "<>0")
    seed: int = 0

    def context(self) -> SolvedContext:
        return SolvedContext(self.solved, self.system.coords, self.system.sigs)

    def as_diffsys(self) -> DiffSys:
        return self.system.replace(
            solved=dict(self.solved),
            equations=tuple(self.constraints),
            inequations=tuple(self.inequations),
        )

    def assumption_path(self) -> tuple:
        from .sysio import format_expr
        return tuple(f"{format_expr(e)} {tag}" for e, tag in self.assumptions)

    def unknown_sigs(self, kinds=None) -> tuple:
        out = []
        for s in self.system.unknown_sigs(
                ("dependent", "infinitesimal", "map-unknown")):
            if kinds is not None and s.kind not in kinds:
                continue
            if self.ranking.is_ranked(JetVar(s)):
                out.append(s)
        return tuple(out)

    def leaders_of(self, sig) -> list:
        return [v for v in self.solved if v.sig is sig]


# ---------------------------------------------------------------------------
# reduction of one expression


def reduce_full(e: Expr, ctx: SolvedContext) -> Expr:
    return reduce_expr(e, ctx)


def _is_generic(p: Poly, ranking: Ranking) -> bool:
    """True when p contains no ranked jet variable (base quantities only)."""
    for vid in p.vars():
        obj = indeterminate_by_id(vid)
        if isinstance(obj, JetVar) and ranking.is_ranked(obj):
            return False
        if not isinstance(obj, JetVar):  # atom: look inside
            arg = obj.arg
            for v in arg.jet_vars(deep=True):
                if ranking.is_ranked(v):
                    return False
    return True


def _pivot_factors(p: Poly, ranking: Ranking) -> list:
    """Split a pivot into its monomial variables and a primitive residue.

    The pivot is nonzero exactly when every returned factor is; generic
    (base-only) pieces are dropped since they are generically nonzero.
    """
    mono = p.common_mono()
    factors = []
    for vid, _e in mono:
        obj = indeterminate_by_id(vid)
        single = Poly.var(vid)
        if _is_generic(single, ranking):
            continue
        factors.append(single)
    if mono:
        from .poly import mono_div
        p = Poly({mono_div(m, mono): c for m, c in p.terms.items()})
    p = p.primitive()
    if not p.is_const() and not _is_generic(p, ranking):
        factors.append(p)
    return factors


def _known_nonzero_factor(f: Poly, ineqs: list) -> bool:
    prim = f.primitive()
    for q in ineqs:
        if q.num.primitive() == prim:
            return True
    return False


# ---------------------------------------------------------------------------
# the elimination engine


class _Branch:
    __slots__ = ("solved", "constraints", "ineqs", "assumptions", "queue",
                 "splits", "_ctx", "crossed", "cderived")

    def __init__(self, solved, constraints, ineqs, assumptions, queue, splits=0,
                 crossed=None, cderived=None):
        self.solved = solved
        self.constraints = constraints
        self.ineqs = ineqs
        self.assumptions = assumptions
        self.queue = queue
        self.splits = splits
        self._ctx = None
        self.crossed = crossed if crossed is not None else {}
        self.cderived = cderived if cderived is not None else set()

    def invalidate(self):
        self._ctx = None

    def clone(self):
        return _Branch(dict(self.solved), list(self.constraints),
                       list(self.ineqs), list(self.assumptions),
                       list(self.queue), self.splits,
                       dict(self.crossed), set(self.cderived))


class Inconsistent(Exception):
    pass


def reduce(system: DiffSys, ranking: Ranking, opts: ElimOptions | None = None,
           _log=None) -> list:
    """Reduce to a list of consistent CaseSystems (rif-like form)."""
    opts = opts or ElimOptions()
    base_sigs = system.sigs
    coords = system.coords
    eng = _Engine(system, ranking, opts, coords, base_sigs)
    first = _Branch(dict(system.solved), [], list(system.inequations), [],
                    list(system.equations))
    # pre-registered solved parts also need their consistency checked
    first.queue.extend(Expr.of(v) - rhs for v, rhs in system.solved.items())
    first.solved = {}
    done = eng.run(first)
    cases = [CaseSystem(system, ranking, b.solved, b.constraints, b.ineqs,
                        b.assumptions, opts.seed) for b in done]
    cases.sort(key=lambda c: (len(c.assumptions), c.assumption_path()))
    pruned = []
    if opts.mindim is not None:
        kept = []
        for c in cases:
            d = initial_data(c, kinds=("infinitesimal",)).dimension
            if d >= opts.mindim:
                kept.append(c)
            else:
                pruned.append((c, d))
        cases = kept
    if _log is not None:
        _log.extend(pruned)
    return cases


class _Engine:
    def __init__(self, system, ranking, opts, coords, sigs):
        self.system = system
        self.ranking = ranking
        self.opts = opts
        self.coords = coords
        self.sigs = sigs
        self.total_splits = 0

    def ctx(self, branch) -> SolvedContext:
        # reuse the context (and its derivative cache) until solved changes
        if branch._ctx is None:
            branch._ctx = SolvedContext(dict(branch.solved), self.coords,
                                        self.sigs)
        return branch._ctx

    def run(self, first) -> list:
        stack = [first]
        done = []
        while stack:
            branch = stack.pop()
            try:
                out = self.process(branch, stack)
            except Inconsistent:
                continue
            if out is not None:
                done.append(out)
        return done

    # -- main loop per branch ------------------------------------------

    def process(self, branch, stack):
        from .kernel import DivisionByZeroExpr
        for sweep in range(self.opts.max_iter):
            try:
                if not branch.queue:
                    new_work = self.integrability(branch)
                    new_work += self.refresh(branch)
                    if not new_work:
                        self.check_inequations(branch)
                        return branch
                self.drain(branch, stack)
            except DepthExceeded as exc:
                raise ElimError(f"reduction depth exceeded: {exc}")
            except DivisionByZeroExpr:
                # a substitution annihilated a recorded pivot denominator:
                # the branch assumptions are contradictory
                raise Inconsistent()
        raise BudgetExceeded("max_iter", f"{self.opts.max_iter} sweeps")

    def drain(self, branch, stack):
        while branch.queue:
            branch.queue.sort(key=self.queue_key, reverse=True)
            e = branch.queue.pop()
            e = reduce_full(e, self.ctx(branch))
            e = self.pseudo_reduce(branch, e)
            if e is None or e.is_zero():
                continue
            num = e.num.primitive()
            num = self.strip_known_factors(branch, stack, num, e)
            if num.is_zero():
                continue
            if _is_generic(num, self.ranking):
                raise Inconsistent()   # nonzero relation among base quantities
            try:
                lead = self.ranking.leader(Expr(num))
            except ConstantExpression:
                raise Inconsistent()
            self.handle_equation(branch, Expr(num), lead, stack)

    def strip_known_factors(self, branch, stack, num: Poly, residual: Expr) -> Poly:
        """Divide out factors known nonzero on this branch.

        Monomial variables that are generic or recorded nonzero, and recorded
        polynomial inequations, cannot vanish; an undetermined monomial
        variable triggers the usual split before it is stripped.
        """
        from .poly import mono_div
        changed = True
        while changed and not num.is_const():
            changed = False
            mono = num.common_mono()
            if mono:
                strip = tuple(
                    (vid, e) for vid, e in mono
                    if _is_generic(Poly.var(vid), self.ranking)
                    or _known_nonzero_factor(Poly.var(vid), branch.ineqs))
                if strip:
                    num = Poly({mono_div(m, strip): c
                                for m, c in num.terms.items()})
                    changed = True
            for q in branch.ineqs:
                f = q.num.primitive()
                if f.is_const() or len(f.terms) > len(num.terms):
                    continue
                quo = poly_exact_div(num, f)
                while quo is not None:
                    num = quo
                    changed = True
                    quo = poly_exact_div(num, f)
            if changed:
                num = num.primitive()
        return num

    def queue_key(self, e: Expr):
        # processed from the end: highest block and order first (small ones
        # of that class first), so low-order solved forms cannot poison the
        # reduction of everything above them
        try:
            lead = self.ranking.leader(e)
        except ConstantExpression:
            return (10 ** 9, 0, 0)
        blk = self.ranking.block_of(lead)
        return (blk, lead.order, -len(e.num.terms))

    def handle_equation(self, branch, e, lead, stack):
        num = e.num
        vid = JetVar(lead.sig, lead.mi).id
        deg = num.degree_in(vid)
        coeffs = num.coeffs_in(vid)
        if deg == 1:
            pivot = coeffs[1]
            rest = coeffs.get(0, Poly())
            if self.ensure_pivot(branch, stack, pivot, e):
                self.add_solved(branch, lead, Expr(-rest) / Expr(pivot))
            return
        # nonlinear in the leader
        if all(k == 0 for k in coeffs if k != deg):
            # pure power p * lead^deg = 0
            pivot = coeffs[deg]
            if self.ensure_pivot(branch, stack, pivot, e):
                self.add_solved(branch, lead, Expr.const(0))
            return
        self.add_constraint(branch, e)

    # -- pivots ----------------------------------------------------------

    def pivot_nonzero(self, branch, pivot: Poly) -> bool:
        if pivot.is_const():
            return True
        return not self._unknown_factors(branch, pivot)

    def _unknown_factors(self, branch, pivot: Poly) -> list:
        return [f for f in _pivot_factors(pivot, self.ranking)
                if not _known_nonzero_factor(f, branch.ineqs)]

    def ensure_pivot(self, branch, stack, pivot: Poly, residual: Expr) -> bool:
        """Make the pivot nonzero on this branch, splitting when allowed.

        Returns True when the caller may divide by the pivot; spawns one
        zero branch per undetermined factor.
        """
        unknown = self._unknown_factors(branch, pivot)
        if not unknown:
            return True
        if not self.opts.casesplit:
            from .sysio import format_expr
            raise PivotRequired(
                f"pivot {format_expr(Expr(pivot))} may vanish "
                f"(casesplit disabled)")
        for f in unknown:
            self.split(branch, stack, Expr(f), residual)
            self.record_ineq(branch, Expr(f), assume=True)
        return True

    def split(self, branch, stack, factor: Expr, residual: Expr):
        self.total_splits += 1
        branch.splits += 1
        if self.total_splits > self.opts.max_splits:
            from .sysio import format_expr
            raise BudgetExceeded("max_splits", format_expr(factor))
        zero_branch = branch.clone()
        prim = Expr(factor.num.primitive())
        zero_branch.assumptions.append((prim, "=0"))
        zero_branch.queue.append(prim)
        zero_branch.queue.append(residual)
        stack.append(zero_branch)

    def record_ineq(self, branch, factor: Expr, assume=False):
        prim = Expr(factor.num.primitive())
        if not any(q == prim for q in branch.ineqs):
            branch.ineqs.append(prim)
        if assume:
            branch.assumptions.append((prim, "<>0"))

    # -- solved set maintenance ------------------------------------------

    def add_solved(self, branch, lead: JetVar, rhs: Expr):
        rhs = reduce_full(rhs, self.ctx(branch))
        for v in rhs.jet_vars(deep=True):
            if v.derives_from(lead):
                # equation still involves derivatives of its own leader:
                # treat as constraint to avoid a substitution loop
                self.add_constraint(branch, Expr.of(lead) - rhs)
                return
        # existing leaders that derive from the new one become integrability
        # conditions
        for other in list(branch.solved):
            if other is lead:
                continue
            if other.derives_from(lead):
                old_rhs = branch.solved.pop(other)
                branch.queue.append(Expr.of(other) - old_rhs)
        branch.solved[lead] = rhs
        branch.invalidate()

    def refresh(self, branch) -> int:
        """Re-reduce all stored pieces against the current solved set."""
        changed = 0
        ctx = self.ctx(branch)
        for lead in list(branch.solved):
            rhs = branch.solved[lead]
            new = reduce_full(rhs, ctx)
            if new != rhs:
                branch.solved[lead] = new
                branch.invalidate()
                ctx = self.ctx(branch)
                changed += 1
        kept = []
        for c in branch.constraints:
            new = reduce_full(c, ctx)
            if new != c:
                branch.queue.append(new)
                changed += 1
            else:
                kept.append(c)
        branch.constraints[:] = kept
        return changed

    def check_inequations(self, branch):
        ctx = self.ctx(branch)
        kept = []
        for q in branch.ineqs:
            r = reduce_full(q, ctx)
            if r.is_zero():
                raise Inconsistent()
            if r.is_const():
                continue
            prim = Expr(r.num.primitive())
            if prim not in kept:
                kept.append(prim)
        branch.ineqs[:] = kept

    # -- integrability -----------------------------------------------------

    def integrability(self, branch) -> int:
        ctx = self.ctx(branch)
        spawned = 0
        leads = sorted(branch.solved, key=lambda v: (v.sig._id, v.mi))
        for i, a in enumerate(leads):
            for b in leads[i + 1:]:
                if a.sig is not b.sig:
                    continue
                key = (a, b)
                state = (branch.solved[a], branch.solved[b])
                if branch.crossed.get(key) == state:
                    continue
                cross = self.cross_derivative(branch, a, b, ctx)
                branch.crossed[key] = state
                if cross is not None and not cross.is_zero():
                    branch.queue.append(cross)
                    spawned += 1
        # derivatives of constraints are consequences too
        for c in list(branch.constraints):
            if c in branch.cderived:
                continue
            branch.cderived.add(c)
            for x in self.coords:
                from .kernel import total_derivative
                d = total_derivative(c, x, ctx)
                d = self.pseudo_reduce(branch, d)
                if d is not None and not d.is_zero():
                    num = d.num.primitive()
                    if not self.subsumed(branch, Expr(num)):
                        branch.queue.append(Expr(num))
                        spawned += 1
        return spawned

    def cross_derivative(self, branch, a: JetVar, b: JetVar, ctx) -> Expr | None:
        da, db = dict(a.mi), dict(b.mi)
        args = a.sig.args
        lcm = {x: max(da.get(x, 0), db.get(x, 0)) for x in args}
        target = JetVar(a.sig, lcm)
        if target is a or target is b:
            return None  # one derives from the other; handled by add_solved
        ea = self.derive_to(branch, a, target, ctx)
        eb = self.derive_to(branch, b, target, ctx)
        return ea - eb

    def derive_to(self, branch, lead: JetVar, target: JetVar, ctx) -> Expr:
        from .kernel import total_derivative
        e = branch.solved[lead]
        cur = lead
        for x, c in target.diff_from(lead):
            for _ in range(c):
                e = total_derivative(e, x, ctx)
        return e

    # -- constraints ------------------------------------------------------

    def add_constraint(self, branch, e: Expr):
        num = Expr(e.num.primitive())
        if not self.subsumed(branch, num):
            branch.constraints.append(num)
            for x in self.coords:
                from .kernel import total_derivative
                d = total_derivative(num, x, self.ctx(branch))
                d = self.pseudo_reduce(branch, d)
                if d is not None and not d.is_zero():
                    dnum = d.num.primitive()
                    if not self.subsumed(branch, Expr(dnum)):
                        branch.queue.append(Expr(dnum))

    def subsumed(self, branch, e: Expr) -> bool:
        return any(c == e for c in branch.constraints)

    def pseudo_reduce(self, branch, e: Expr) -> Expr | None:
        """Algebraic reduction of e against stored constraints.

        Only performed when the constraint's leading coefficient in its
        leader is known nonzero, so no spurious solutions are introduced.
        """
        if e.is_zero():
            return e
        changed = True
        guard = 0
        while changed and guard < 40:
            changed = False
            guard += 1
            if e.is_zero():
                return e
            for c in branch.constraints:
                try:
                    v = self.ranking.leader(c)
                except ConstantExpression:
                    continue
                vid = v.id
                dc = c.num.degree_in(vid)
                de = e.num.degree_in(vid)
                if de < dc:
                    continue
                lc_c = c.num.coeffs_in(vid)[dc]
                if not self.pivot_nonzero(branch, lc_c):
                    continue
                ce = e.num.coeffs_in(vid)
                lc_e = ce[de]
                shift = Poly.var(vid) ** (de - dc)
                newnum = e.num * lc_c - c.num * shift * lc_e
                e = Expr(newnum, e.den * lc_c)
                changed = True
                break
        return e


# ---------------------------------------------------------------------------
# initial data, Hilbert series, dimension test


@dataclass(frozen=True)
class InitialData:
    entries: tuple              # (JetVar, constant name) in ranking order
    arbitrary_functions: tuple  # (arity, count) pairs, arity descending
    constraint_rank: int
    reference_point: tuple      # coordinate names

    @property
    def dimension(self):
        if self.arbitrary_functions:
            return INFINITE
        return len(self.entries) - self.constraint_rank

    @property
    def finite(self) -> bool:
        return not self.arbitrary_functions


def _staircase_cells(leaders: list, nargs: int):
    """Decompose the complement of the leader cones into disjoint cells.

    Each cell is (fixed: dict axis->value, free: set of axes): the axes in
    `free` range over a ray, so a cell with k free axes is one arbitrary
    function of k variables in the initial data.  Recursive splitting along
    the first axis; leaders are tuples of per-axis derivative counts.
    """
    def rec(lset: list, axis: int):
        if any(not any(l) for l in lset):
            return []  # a zero multi-index leader covers everything
        if axis == nargs:
            return [({}, set())]
        d = max((l[0] for l in lset), default=0)
        cells = []
        for a in range(d):
            sub = [l[1:] for l in lset if l[0] <= a]
            for fixed, free in rec(sub, axis + 1):
                nf = dict(fixed)
                nf[axis] = a
                cells.append((nf, free))
        # axis value >= d: every leader's requirement on this axis is met
        sub = [l[1:] for l in lset]
        for fixed, free in rec(sub, axis + 1):
            cells.append((dict(fixed), set(free) | {axis}))
        return cells

    padded = [tuple(l) + (0,) * (nargs - len(l)) for l in leaders]
    return rec(padded, 0)


def _leader_tuples(case: CaseSystem, sig) -> list:
    args = sig.args
    out = []
    for v in case.solved:
        if v.sig is sig:
            out.append(tuple(v.count(a) for a in args))
    return out


def initial_data(case: CaseSystem, kinds=None) -> InitialData:
    """Parametric derivatives at a generic reference point.

    kinds restricts the unknown block (e.g. ("map-unknown",) for the map
    block); constraints whose ranked variables live entirely in that block
    reduce the finite dimension by their Jacobian rank.
    """
    sigs = case.unknown_sigs(kinds)
    entries = []
    arb: dict[int, int] = {}
    for sig in sigs:
        leaders = _leader_tuples(case, sig)
        nargs = len(sig.args)
        if not leaders:
            arb[nargs] = arb.get(nargs, 0) + 1
            continue
        cells = _staircase_cells(leaders, nargs)
        for fixed, free in cells:
            if free:
                arity = len(free)
                arb[arity] = arb.get(arity, 0) + 1
            else:
                mi = {sig.args[ax]: val for ax, val in fixed.items() if val > 0}
                entries.append(JetVar(sig, mi))
    entries.sort(key=case.ranking.key)
    named = tuple((v, f"c{i+1}") for i, v in enumerate(entries))
    arb_t = tuple(sorted(arb.items(), reverse=True))
    rank = 0
    if not arb_t:
        rank = _constraint_rank(case, sigs, [v for v, _ in named])
    ref = tuple(f"{c}0" for c in case.system.coords)
    return InitialData(named, arb_t, rank, ref)


def _constraint_rank(case: CaseSystem, sigs, parametric: list) -> int:
    sigset = set(sigs)
    rel = []
    for c in case.constraints:
        ranked = {v for v in c.jet_vars() if case.ranking.is_ranked(v)}
        if ranked and all(v.sig in sigset for v in ranked):
            rel.append(c)
    if not rel:
        return 0
    rng = random.Random(getattr(case, "seed", 0))
    best = 0
    for _ in range(4):
        rows = []
        point = {}
        for c in rel:
            row = []
            try:
                for p in parametric:
                    d = partial(c, p)
                    row.append(_eval_random(d, point, rng))
            except ZeroDivisionError:
                rows = None
                break
            rows.append(row)
        if rows is None:
            continue
        r = _rank(rows)
        best = max(best, r)
    return best


def _eval_random(e: Expr, point: dict, rng) :
    def eval_poly(p: Poly):
        tot = QQ(0)
        for mono, coef in p.terms.items():
            v = QQ(coef)
            for vid, k in mono:
                if vid not in point:
                    point[vid] = QQ(rng.randint(2, 997), rng.randint(1, 7))
                v = v * point[vid] ** k
            tot = tot + v
        return tot

    den = eval_poly(e.den)
    if den == 0:
        raise ZeroDivisionError
    return eval_poly(e.num) / den


def _rank(rows: list) -> int:
    m = [r[:] for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    row = 0
    for col in range(ncols):
        piv = None
        for r in range(row, len(m)):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        for r in range(row + 1, len(m)):
            if m[r][col] != 0:
                f = m[r][col] / pv
                m[r] = [a - f * b for a, b in zip(m[r], m[row])]
        row += 1
        rank += 1
        if row == len(m):
            break
    return rank


def hilbert_series(case: CaseSystem, up_to: int, kinds=None) -> list:
    """Coefficients h_0..h_up_to: parametric derivative counts per order.

    Rankings constructed in this package are graded within blocks, which is
    what makes these counts invariant.
    """
    sigs = case.unknown_sigs(kinds)
    counts = [0] * (up_to + 1)
    for sig in sigs:
        leaders = _leader_tuples(case, sig)
        nargs = len(sig.args)
        for k in range(up_to + 1):
            for mi in _multiindices(nargs, k):
                if not any(all(m >= l for m, l in zip(mi, lead))
                           for lead in leaders):
                    counts[k] += 1
    return counts


def _multiindices(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _multiindices(n - 1, total - first):
            yield (first,) + rest


@dataclass(frozen=True)
class DimTestResult:
    passed: bool
    reason: str = ""

    def __bool__(self):
        return self.passed


def dim_equiv_test(R: DiffSys, Rh: DiffSys, opts: ElimOptions | None = None) -> DimTestResult:
    """Quick necessary conditions: dimension and Hilbert data must agree."""
    opts = opts or ElimOptions()
    opts = ElimOptions(casesplit=opts.casesplit, mindim=None,
                       max_splits=opts.max_splits, max_iter=opts.max_iter,
                       seed=opts.seed)
    cases = []
    for sysx in (R, Rh):
        rk = orderly(sysx.coords, tuple(s.name for s in sysx.dep))
        out = reduce(sysx, rk, opts)
        if len(out) != 1:
            raise ElimError(
                f"dim test indeterminate: {sysx.name or 'system'} split into "
                f"{len(out)} cases")
        cases.append(out[0])
    id_r, id_rh = (initial_data(c) for c in cases)
    if id_r.dimension != id_rh.dimension:
        return DimTestResult(False, f"dim {id_r.dimension} != {id_rh.dimension}")
    q = 0
    for c in cases:
        if c.solved:
            q = max(q, max(v.order for v in c.solved))
    h_r = hilbert_series(cases[0], q)
    h_rh = hilbert_series(cases[1], q)
    if h_r != h_rh:
        return DimTestResult(False, f"hilbert {h_r} != {h_rh}")
    top_r = _top_arity_count(id_r)
    top_rh = _top_arity_count(id_rh)
    if top_r != top_rh:
        return DimTestResult(
            False, f"arbitrary function counts {top_r} != {top_rh}")
    return DimTestResult(True)


def _top_arity_count(idata: InitialData) -> tuple:
    if not idata.arbitrary_functions:
        return (0, 0)
    return idata.arbitrary_functions[0]
