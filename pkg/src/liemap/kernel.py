"""Exact expression kernel over jet variables.

An Expr is a canonical quotient of two sparse polynomials (poly.py) whose
indeterminates are jet variables and opaque transcendental atoms.  All
coefficients are exact rationals; the denominator is monic under grevlex and
coprime to the numerator, so structurally equal expressions compare equal.

Atoms (ln, exp, sin, cos, sqrt) are opaque: no identities are applied during
normalization, only their registered derivative rules are known here.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .poly import (
    P_ONE,
    P_ZERO,
    Poly,
    Q1,
    QQ,
    intern_indeterminate,
    mono_mul,
    poly_exact_div,
    poly_gcd,
)

KINDS = ("independent", "dependent", "infinitesimal", "map-unknown", "parameter")


class KernelError(Exception):
    pass


class DivisionByZeroExpr(KernelError):
    pass


class DepthExceeded(KernelError):
    """A recursive jet substitution exceeded the configured bound."""


#: default bound for recursive substitution through a solved context
SUBST_DEPTH = 64


class FunctionSignature:
    """A named function symbol with its dependency list and role."""

    __slots__ = ("name", "args", "kind", "_id")

    def __new__(cls, name: str, args: Iterable[str] = (), kind: str = "dependent"):
        args = tuple(args)
        if kind not in KINDS:
            raise ValueError(f"unknown kind {kind!r}")
        if kind == "parameter":
            if args:
                raise ValueError("parameters take no arguments")
        elif not args:
            raise ValueError(f"{name}: non-parameter signatures need arguments")
        key = ("sig", name, args, kind)

        def build():
            obj = object.__new__(cls)
            object.__setattr__(obj, "name", name)
            object.__setattr__(obj, "args", args)
            object.__setattr__(obj, "kind", kind)
            return obj

        sid, obj = intern_indeterminate(key, build)
        object.__setattr__(obj, "_id", sid)
        return obj

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("FunctionSignature is immutable")

    def __repr__(self):
        return f"{self.name}({','.join(self.args)}):{self.kind}"

    def __hash__(self):
        return self._id

    def __eq__(self, other):
        return self is other


class JetVar:
    """A derivative coordinate: a signature plus a multi-index over its args."""

    __slots__ = ("sig", "mi", "id")

    def __new__(cls, sig: FunctionSignature, mi: Mapping[str, int] | tuple = ()):
        if isinstance(mi, dict):
            mi = tuple((a, mi[a]) for a in sig.args if mi.get(a, 0) > 0)
        else:
            mi = tuple((a, c) for a, c in mi if c > 0)
        for a, c in mi:
            if a not in sig.args:
                raise ValueError(f"{sig.name} does not depend on {a}")
        key = ("jet", sig, mi)

        def build():
            obj = object.__new__(cls)
            object.__setattr__(obj, "sig", sig)
            object.__setattr__(obj, "mi", mi)
            return obj

        vid, obj = intern_indeterminate(key, build)
        object.__setattr__(obj, "id", vid)
        return obj

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("JetVar is immutable")

    @property
    def order(self) -> int:
        return sum(c for _, c in self.mi)

    def count(self, arg: str) -> int:
        for a, c in self.mi:
            if a == arg:
                return c
        return 0

    def raised(self, arg: str, by: int = 1) -> "JetVar":
        d = dict(self.mi)
        d[arg] = d.get(arg, 0) + by
        return JetVar(self.sig, d)

    def lowered(self, arg: str) -> "JetVar":
        d = dict(self.mi)
        d[arg] = d.get(arg, 0) - 1
        if d[arg] < 0:
            raise ValueError("cannot lower below zero")
        return JetVar(self.sig, d)

    def derives_from(self, other: "JetVar") -> bool:
        """True when self is a (possibly trivial) derivative of other."""
        if self.sig is not other.sig:
            return False
        mine = dict(self.mi)
        return all(mine.get(a, 0) >= c for a, c in other.mi)

    def diff_from(self, other: "JetVar") -> tuple:
        """Multi-index difference self - other as an (arg, count) tuple."""
        mine = dict(self.mi)
        return tuple((a, mine.get(a, 0) - c) for a, c in
                     ((x, dict(other.mi).get(x, 0)) for x in self.sig.args)
                     if mine.get(a, 0) - c > 0)

    def __hash__(self):
        return self.id

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        if not self.mi:
            return self.sig.name
        inner = ",".join(a for a, c in self.mi for _ in range(c))
        return f"{self.sig.name}[{inner}]"


ATOM_TAGS = ("ln", "exp", "sin", "cos", "sqrt")


class Atom:
    """An opaque unary transcendental applied to an Expr argument."""

    __slots__ = ("tag", "arg", "id")

    def __new__(cls, tag: str, arg: "Expr"):
        if tag not in ATOM_TAGS:
            raise ValueError(f"unknown atom tag {tag!r}")
        key = ("atom", tag, arg.num, arg.den)

        def build():
            obj = object.__new__(cls)
            object.__setattr__(obj, "tag", tag)
            object.__setattr__(obj, "arg", arg)
            return obj

        vid, obj = intern_indeterminate(key, build)
        object.__setattr__(obj, "id", vid)
        return obj

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("Atom is immutable")

    def __hash__(self):
        return self.id

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        return f"{self.tag}({self.arg!r})"


class Expr:
    """Canonical quotient num/den with gcd 1 and monic denominator."""

    __slots__ = ("num", "den", "_hash")

    def __new__(cls, num: Poly, den: Poly = P_ONE):
        if den.is_zero():
            raise DivisionByZeroExpr("zero denominator")
        if num.is_zero():
            num, den = P_ZERO, P_ONE
        elif den.is_const():
            if den.const_value() != 1:
                num = num.scale(Q1 / den.const_value())
            den = P_ONE
        else:
            g = poly_gcd(num, den)
            if not g.is_const():
                num = poly_exact_div(num, g)
                den = poly_exact_div(den, g)
            lc = den.leading()[1]
            if lc != 1:
                num = num.scale(Q1 / lc)
                den = den.scale(Q1 / lc)
        obj = object.__new__(cls)
        object.__setattr__(obj, "num", num)
        object.__setattr__(obj, "den", den)
        object.__setattr__(obj, "_hash", None)
        return obj

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("Expr is immutable")

    # -- constructors -------------------------------------------------

    @staticmethod
    def const(c) -> "Expr":
        return Expr(Poly.const(c))

    @staticmethod
    def of(v) -> "Expr":
        """Expr from a JetVar or Atom indeterminate."""
        return Expr(Poly.var(v.id))

    # -- predicates ---------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self):
        if not self.is_const():
            raise ValueError("not a constant expression")
        return self.num.const_value()

    def is_polynomial(self) -> bool:
        return self.den.is_const()

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other) -> "Expr":
        other = _coerce(other)
        if self.den == other.den:
            return Expr(self.num + other.num, self.den)
        return Expr(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr(-self.num, self.den)

    def __sub__(self, other) -> "Expr":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Expr":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "Expr":
        other = _coerce(other)
        return Expr(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Expr":
        other = _coerce(other)
        if other.num.is_zero():
            raise DivisionByZeroExpr("division by zero expression")
        return Expr(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> "Expr":
        return _coerce(other) / self

    def __pow__(self, n: int) -> "Expr":
        if n == 0:
            return Expr.const(1)
        if n < 0:
            if self.num.is_zero():
                raise DivisionByZeroExpr("zero to a negative power")
            return Expr(self.den ** (-n), self.num ** (-n))
        return Expr(self.num ** n, self.den ** n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expr):
            if isinstance(other, (int,)) or hasattr(other, "denominator"):
                other = _coerce(other)
            else:
                return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.num, self.den))
            object.__setattr__(self, "_hash", h)
        return h

    # -- structure ----------------------------------------------------

    def indeterminates(self) -> set:
        return {v for p in (self.num, self.den) for v in p.vars()}

    def jet_vars(self, deep: bool = False) -> set:
        """JetVars at the polynomial level; deep=True descends into atoms."""
        out, seen = set(), set()

        def walk(e: "Expr"):
            for vid in e.indeterminates():
                obj = _by_id(vid)
                if isinstance(obj, JetVar):
                    out.add(obj)
                elif deep and isinstance(obj, Atom) and vid not in seen:
                    seen.add(vid)
                    walk(obj.arg)

        walk(self)
        return out

    def atoms(self) -> set:
        return {o for o in map(_by_id, self.indeterminates()) if isinstance(o, Atom)}

    def __repr__(self):
        if self.den.is_const():
            return f"Expr({self.num!r})"
        return f"Expr({self.num!r} / {self.den!r})"


def _by_id(vid: int):
    from .poly import indeterminate_by_id

    return indeterminate_by_id(vid)


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    return Expr.const(QQ(x))


E_ZERO = Expr.const(0)
E_ONE = Expr.const(1)


def fn(sig: FunctionSignature) -> Expr:
    """The zero-jet of a signature as an expression."""
    return Expr.of(JetVar(sig))


def ln(e: Expr) -> Expr:
    return Expr.of(Atom("ln", e))


def exp(e: Expr) -> Expr:
    return Expr.of(Atom("exp", e))


def sin(e: Expr) -> Expr:
    return Expr.of(Atom("sin", e))


def cos(e: Expr) -> Expr:
    return Expr.of(Atom("cos", e))


def sqrt(e: Expr) -> Expr:
    return Expr.of(Atom("sqrt", e))


def _atom_derivative(atom: Atom) -> Expr:
    """d atom / d arg, from the registered rules."""
    a = atom.arg
    if atom.tag == "ln":
        return E_ONE / a
    if atom.tag == "exp":
        return Expr.of(atom)
    if atom.tag == "sin":
        return cos(a)
    if atom.tag == "cos":
        return -sin(a)
    if atom.tag == "sqrt":
        return E_ONE / (Expr.const(2) * Expr.of(atom))
    raise AssertionError(atom.tag)


def normalize(e: Expr) -> Expr:
    """Canonical quotient form; idempotent (Exprs normalize on construction)."""
    return Expr(e.num, e.den)


def _quotient_map(e: Expr, dpoly) -> Expr:
    """(num' den - num den')/den^2 given a Poly -> Expr derivation dpoly."""
    dn = dpoly(e.num)
    if e.den.is_const():
        return dn
    dd = dpoly(e.den)
    den_e = Expr(e.den)
    return (dn * den_e - Expr(e.num) * dd) / (den_e * den_e)


def partial(e: Expr, v) -> Expr:
    """Formal partial derivative by a JetVar (or Atom), chaining through atoms."""

    def dpoly(p: Poly) -> Expr:
        out = E_ZERO
        for vid in p.vars():
            obj = _by_id(vid)
            if obj is v:
                out = out + Expr(p.formal_derivative(vid))
            elif isinstance(obj, Atom):
                inner = partial(obj.arg, v)
                if not inner.is_zero():
                    out = out + Expr(p.formal_derivative(vid)) * _atom_derivative(obj) * inner
        return out

    return _quotient_map(e, dpoly)


class SolvedContext:
    """Solved substitutions (leader JetVar -> Expr) plus derivation geometry.

    `coords` lists the names acting as base coordinates: the zero-jet of a
    signature named in coords differentiates to a Kronecker delta, every
    other jet raises through its argument list (chain rule).  `sigs` resolves
    argument names to signatures so the chain rule can recurse.
    """

    __slots__ = ("solved", "coords", "sigs", "_dcache")

    def __init__(self, solved: Mapping[JetVar, Expr] | None = None,
                 coords: Iterable[str] = (),
                 sigs: Mapping[str, FunctionSignature] | None = None):
        self.solved = dict(solved or {})
        self.coords = frozenset(coords)
        self.sigs = dict(sigs or {})
        self._dcache: dict = {}

    def resolve(self, name: str) -> FunctionSignature:
        try:
            return self.sigs[name]
        except KeyError:
            raise KernelError(f"unresolved argument name {name!r} in derivation")

    def leader_for(self, v: JetVar) -> JetVar | None:
        """The solved leader that v derives from, preferring the closest one."""
        best = None
        best_gap = None
        for lead in self.solved:
            if v.derives_from(lead):
                gap = v.order - lead.order
                if best is None or gap < best_gap or (
                        gap == best_gap and lead.id < best.id):
                    best, best_gap = lead, gap
        return best


_EMPTY_CTX = SolvedContext()


def _raise_jet(v: JetVar, coord: str, ctx: SolvedContext, depth: int) -> Expr:
    """D_coord of a single jet variable, chain rule plus ctx reduction."""
    sig = v.sig
    if sig.kind == "parameter":
        return E_ZERO
    if not v.mi and sig.name in ctx.coords:
        return E_ONE if sig.name == coord else E_ZERO
    out = E_ZERO
    for a in sig.args:
        if a in ctx.coords:
            da = E_ONE if a == coord else E_ZERO
        else:
            da = _raise_jet(JetVar(ctx.resolve(a)), coord, ctx, depth)
        if da.is_zero():
            continue
        out = out + reduce_jet(v.raised(a), ctx, depth - 1) * da
    return out


def reduce_jet(v: JetVar, ctx: SolvedContext, depth: int = SUBST_DEPTH) -> Expr:
    """Rewrite v through ctx's solved forms until no principal jet remains."""
    if depth <= 0:
        raise DepthExceeded("substitution depth exceeded; context not reduced?")
    lead = ctx.leader_for(v)
    if lead is None:
        return Expr.of(v)
    cached = ctx._dcache.get(v)
    if cached is not None:
        return cached
    if lead is v:
        out = ctx.solved[lead]
    else:
        gap = v.diff_from(lead)
        a = gap[0][0]
        out = total_derivative(reduce_jet(v.lowered(a), ctx, depth - 1),
                               a, ctx, depth - 1)
    ctx._dcache[v] = out
    return out


def total_derivative(e: Expr, coord: str, ctx: SolvedContext | None = None,
                     depth: int = SUBST_DEPTH) -> Expr:
    """Total derivative D_coord, raised jets reduced through ctx."""
    ctx = ctx or _EMPTY_CTX
    if depth <= 0:
        raise DepthExceeded("substitution depth exceeded; context not reduced?")

    def dpoly(p: Poly) -> Expr:
        out = E_ZERO
        for vid in p.vars():
            obj = _by_id(vid)
            if isinstance(obj, Atom):
                inner = total_derivative(obj.arg, coord, ctx, depth - 1)
                if inner.is_zero():
                    continue
                dv = _atom_derivative(obj) * inner
            else:
                dv = _raise_jet(obj, coord, ctx, depth)
            if dv.is_zero():
                continue
            out = out + Expr(p.formal_derivative(vid)) * dv
        return out

    return _quotient_map(e, dpoly)


def reduce_expr(e: Expr, ctx: SolvedContext, depth: int = SUBST_DEPTH) -> Expr:
    """Substitute every ctx-principal jet in e by its fully reduced form."""
    if ctx is None or not ctx.solved:
        return e
    pending = {}
    for v in e.jet_vars():
        if ctx.leader_for(v) is not None:
            pending[v] = reduce_jet(v, ctx, depth)
    # atoms whose arguments contain principal jets must be rebuilt too
    for atom in e.atoms():
        red = reduce_expr(atom.arg, ctx, depth)
        if red != atom.arg:
            pending[atom] = Expr.of(Atom(atom.tag, red))
    if not pending:
        return e
    return substitute(e, pending)


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Simultaneous substitution of JetVars/Atoms by expressions, then normalize.

    Keys may be JetVar, Atom, or FunctionSignature (meaning its zero-jet).
    Substitution descends into atom arguments; bindings must be acyclic.
    """
    table: dict[int, Expr] = {}
    for k, val in bindings.items():
        if isinstance(k, FunctionSignature):
            k = JetVar(k)
        table[k.id] = _coerce(val)
    if not table:
        return e

    atom_rewrites: dict[int, Expr] = {}

    def subst_poly(p: Poly) -> Expr:
        out = E_ZERO
        for m, c in p.terms.items():
            term = Expr.const(c)
            for vid, exp_ in m:
                if vid in table:
                    base = table[vid]
                elif vid in atom_rewrites:
                    base = atom_rewrites[vid]
                else:
                    obj = _by_id(vid)
                    if isinstance(obj, Atom):
                        new_arg = substitute(obj.arg, bindings)
                        base = Expr.of(Atom(obj.tag, new_arg)) if new_arg != obj.arg else Expr.of(obj)
                        atom_rewrites[vid] = base
                    else:
                        base = Expr.of(obj)
                term = term * base ** exp_
            out = out + term
        return out

    num = subst_poly(e.num)
    den = subst_poly(e.den)
    if den.is_zero():
        raise DivisionByZeroExpr("substitution produced a zero denominator")
    return num / den


def rename_functions(e: Expr, sig_map: Mapping[FunctionSignature, FunctionSignature]) -> Expr:
    """Structurally replace signatures (keeping multi-indices) throughout e."""
    bindings = {}
    for v in e.jet_vars(deep=True):
        if v.sig in sig_map:
            bindings[v] = Expr.of(JetVar(sig_map[v.sig], v.mi))
    if not bindings:
        return e
    return substitute(e, bindings)

