"""Parsing and printing of differential polynomial systems (.dps files).

Grammar (statements end with ';', '#' starts a comment):

    indep x, t;                  independent variables
    dep u(x,t);                  dependent functions
    inf eta(x,t,u);              infinitesimal unknowns
    map psi(x,t,u);              map unknowns
    param a1;                    parameters
    name mylabel;                optional metadata
    ranking orderly;             optional ranking hint
    diff(u,[x,x]) = rhs;         solved equation
    expr = expr;   expr;         equation (= 0)
    expr <> 0;                   inequation

Expressions use infix + - * / ^ with integer exponents, derivatives written
diff(f,[x,x,t]), and the atoms ln( ), exp( ), sin( ), cos( ), sqrt( ).
Printing is deterministic; parse(print(s)) == parse-normalized s.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .kernel import (
    Atom,
    Expr,
    FunctionSignature,
    JetVar,
    SolvedContext,
)
from .poly import indeterminate_by_id


class ParseError(Exception):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f" at {line}:{col}" if line is not None else ""
        super().__init__(f"{msg}{where}")


@dataclass
class DiffSys:
    """A differential polynomial system with its signature registry."""

    name: str | None = None
    indep: tuple = ()
    dep: tuple = ()
    inf: tuple = ()
    map_: tuple = ()
    params: tuple = ()
    equations: tuple = ()           # Expr, meaning expr = 0
    solved: dict = field(default_factory=dict)   # leader JetVar -> Expr
    inequations: tuple = ()         # Expr, meaning expr != 0
    ranking_hint: str | None = None
    vector_field: tuple = ()        # ((sig, coord-name), ...) for defining systems

    def __post_init__(self):
        self._check()

    # -- registry -----------------------------------------------------

    @property
    def sigs(self) -> dict:
        out = {}
        for s in (*self.indep, *self.dep, *self.inf, *self.map_, *self.params):
            if s.name in out and out[s.name] is not s:
                raise ParseError(f"duplicate signature name {s.name}")
            out[s.name] = s
        return out

    @property
    def coords(self) -> tuple:
        """Base coordinates of the derivation for this system's jet space."""
        names = [s.name for s in self.indep]
        if self.inf or self.map_:
            names += [s.name for s in self.dep]
        return tuple(names)

    def unknown_sigs(self, kinds=("dependent", "infinitesimal", "map-unknown")) -> tuple:
        pool = {"dependent": self.dep, "infinitesimal": self.inf,
                "map-unknown": self.map_, "parameter": self.params}
        out = []
        for k in kinds:
            out.extend(pool.get(k, ()))
        return tuple(out)

    def context(self) -> SolvedContext:
        return SolvedContext(self.solved, self.coords, self.sigs)

    def all_equations(self) -> tuple:
        """Solved equations as lhs - rhs expressions plus the residual ones."""
        out = [Expr.of(lead) - rhs for lead, rhs in self.solved.items()]
        out.extend(self.equations)
        return tuple(out)

    def _check(self):
        reg = self.sigs
        for lead, rhs in self.solved.items():
            for v in rhs.jet_vars(deep=True):
                if v.derives_from(lead):
                    raise ParseError(
                        f"solved rhs for {lead!r} contains {v!r}")
        for e in (*self.equations, *self.inequations, *self.solved.values()):
            for v in e.jet_vars(deep=True):
                if reg.get(v.sig.name) is not v.sig:
                    raise ParseError(f"unregistered signature {v.sig!r}")

    def replace(self, **kw) -> "DiffSys":
        data = dict(
            name=self.name, indep=self.indep, dep=self.dep, inf=self.inf,
            map_=self.map_, params=self.params, equations=self.equations,
            solved=dict(self.solved), inequations=self.inequations,
            ranking_hint=self.ranking_hint, vector_field=self.vector_field)
        data.update(kw)
        return DiffSys(**data)


# ---------------------------------------------------------------------------
# tokenizer


_PUNCT = {";", ",", "(", ")", "[", "]", "=", "+", "-", "*", "/", "^"}
_ATOMS = {"ln", "exp", "sin", "cos", "sqrt"}
_KEYWORDS = {"indep", "dep", "inf", "map", "param", "name", "ranking", "diff"}


class _Tok:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind, self.value, self.line, self.col = kind, value, line, col

    def __repr__(self):
        return f"{self.kind}:{self.value}"


def _tokenize(text: str):
    toks = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("num", int(text[i:j]), line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch == "<" and i + 1 < n and text[i + 1] == ">":
            toks.append(_Tok("neq", "<>", line, start_col))
            i += 2
            col += 2
            continue
        if ch == "!" and i + 1 < n and text[i + 1] == "=":
            toks.append(_Tok("neq", "!=", line, start_col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            toks.append(_Tok(ch, ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, start_col)
    toks.append(_Tok("eof", None, line, col))
    return toks


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.sigs: dict[str, FunctionSignature] = {}
        self.decl: dict[str, list] = {k: [] for k in
                                      ("indep", "dep", "inf", "map", "param")}
        self.equations: list[Expr] = []
        self.solved: dict[JetVar, Expr] = {}
        self.inequations: list[Expr] = []
        self.name: str | None = None
        self.ranking_hint: str | None = None

    # token helpers

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind) -> _Tok:
        t = self.next()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, found {t.value!r}", t.line, t.col)
        return t

    def fail(self, msg):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    # statements

    def parse(self) -> DiffSys:
        while self.peek().kind != "eof":
            self.statement()
        return DiffSys(
            name=self.name,
            indep=tuple(self.decl["indep"]),
            dep=tuple(self.decl["dep"]),
            inf=tuple(self.decl["inf"]),
            map_=tuple(self.decl["map"]),
            params=tuple(self.decl["param"]),
            equations=tuple(self.equations),
            solved=self.solved,
            inequations=tuple(self.inequations),
            ranking_hint=self.ranking_hint,
        )

    def statement(self):
        t = self.peek()
        if t.kind == "ident" and t.value in ("indep", "dep", "inf", "map", "param"):
            self.declaration(self.next().value)
            return
        if t.kind == "ident" and t.value == "name":
            self.next()
            self.name = self.expect("ident").value
            self.expect(";")
            return
        if t.kind == "ident" and t.value == "ranking":
            self.next()
            self.ranking_hint = self.expect("ident").value
            self.expect(";")
            return
        self.equation()

    def declaration(self, which: str):
        kinds = {"indep": "independent", "dep": "dependent", "inf": "infinitesimal",
                 "map": "map-unknown", "param": "parameter"}
        while True:
            nm = self.expect("ident")
            args: tuple[str, ...] = ()
            if self.peek().kind == "(":
                self.next()
                lst = [self.expect("ident").value]
                while self.peek().kind == ",":
                    self.next()
                    lst.append(self.expect("ident").value)
                self.expect(")")
                args = tuple(lst)
            if which == "indep":
                if args:
                    raise ParseError("independent variables take no arguments",
                                     nm.line, nm.col)
                args = (nm.value,)
            if which == "param" and args:
                raise ParseError("parameters take no arguments", nm.line, nm.col)
            if which in ("dep", "inf", "map") and not args:
                raise ParseError(f"{nm.value}: missing dependency list",
                                 nm.line, nm.col)
            for a in args if which != "indep" else ():
                if a not in self.sigs:
                    raise ParseError(f"unknown identifier {a}", nm.line, nm.col)
            sig = FunctionSignature(nm.value, args, kinds[which])
            prev = self.sigs.get(nm.value)
            if prev is not None and prev is not sig:
                raise ParseError(f"inconsistent redeclaration of {nm.value}",
                                 nm.line, nm.col)
            if prev is None:
                self.sigs[nm.value] = sig
                self.decl[which].append(sig)
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect(";")

    def equation(self):
        lhs_tok = self.peek()
        lhs = self.expr()
        t = self.peek()
        if t.kind == "neq":
            self.next()
            zero = self.expr()
            if not zero.is_zero():
                self.fail("inequations must be written expr <> 0")
            self.expect(";")
            self.inequations.append(lhs)
            return
        if t.kind == "=":
            self.next()
            rhs = self.expr()
            self.expect(";")
            lead = self._solved_leader(lhs)
            if lead is not None and lead not in self.solved and not any(
                    v.derives_from(lead) for v in rhs.jet_vars(deep=True)):
                self.solved[lead] = rhs
            else:
                self.equations.append(lhs - rhs)
            return
        self.expect(";")
        self.equations.append(lhs)

    @staticmethod
    def _solved_leader(e: Expr):
        # a bare diff(f,[...]) or f on the left marks solved form
        if not e.den.is_const():
            return None
        if len(e.num.terms) != 1:
            return None
        (mono, coef), = e.num.terms.items()
        if coef != 1 or len(mono) != 1 or mono[0][1] != 1:
            return None
        obj = indeterminate_by_id(mono[0][0])
        return obj if isinstance(obj, JetVar) else None

    # expressions (precedence climbing)

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs.is_zero():
                    self.fail("division by zero")
                e = e / rhs
        return e

    def unary(self) -> Expr:
        t = self.peek()
        if t.kind == "-":
            self.next()
            return -self.unary()
        if t.kind == "+":
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.peek().kind == "^":
            self.next()
            sign = 1
            if self.peek().kind == "-":
                self.next()
                sign = -1
            n = self.expect("num").value * sign
            return base ** n
        return base

    def primary(self) -> Expr:
        t = self.next()
        if t.kind == "num":
            return Expr.const(t.value)
        if t.kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            if t.value == "diff":
                return self.diff_expr(t)
            if t.value in _ATOMS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Expr.of(Atom(t.value, arg))
            sig = self.sigs.get(t.value)
            if sig is None:
                raise ParseError(f"unknown identifier {t.value}", t.line, t.col)
            return Expr.of(JetVar(sig))
        raise ParseError(f"unexpected token {t.value!r}", t.line, t.col)

    def diff_expr(self, t0) -> Expr:
        self.expect("(")
        nm = self.expect("ident")
        sig = self.sigs.get(nm.value)
        if sig is None:
            raise ParseError(f"unknown identifier {nm.value}", nm.line, nm.col)
        self.expect(",")
        self.expect("[")
        mi: dict[str, int] = {}
        while True:
            var = self.expect("ident")
            if var.value not in sig.args:
                raise ParseError(f"{sig.name} does not depend on {var.value}",
                                 var.line, var.col)
            mi[var.value] = mi.get(var.value, 0) + 1
            if self.peek().kind == ",":
                self.next()
                continue
            break
        self.expect("]")
        self.expect(")")
        return Expr.of(JetVar(sig, mi))


def parse_system(text: str) -> DiffSys:
    return _Parser(text).parse()


def load_system(path) -> DiffSys:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_system(fh.read())


# ---------------------------------------------------------------------------
# printing


def format_jet(v: JetVar) -> str:
    if not v.mi:
        return v.sig.name
    inner = ",".join(a for a in v.sig.args for _ in range(v.count(a)))
    return f"diff({v.sig.name},[{inner}])"


def _format_coef(c) -> str:
    return str(c) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _format_factor(vid: int, e: int) -> str:
    obj = indeterminate_by_id(vid)
    if isinstance(obj, JetVar):
        s = format_jet(obj)
    else:
        s = f"{obj.tag}({format_expr(obj.arg)})"
    return f"{s}^{e}" if e > 1 else s


def format_poly(p) -> str:
    if p.is_zero():
        return "0"
    bits = []
    for mono, coef in p.sorted_terms():
        factors = [_format_factor(v, e) for v, e in mono]
        mag = abs(coef)
        if mag != 1 or not factors:
            factors.insert(0, _format_coef(mag))
        term = "*".join(factors)
        if not bits:
            bits.append(term if coef > 0 else f"-{term}")
        else:
            bits.append(f"+ {term}" if coef > 0 else f"- {term}")
    return " ".join(bits)


def format_expr(e: Expr) -> str:
    num = format_poly(e.num)
    if e.den.is_const():
        return num
    return f"({num})/({format_poly(e.den)})"


def _sorted_solved(solved: dict) -> list:
    return sorted(solved.items(), key=lambda kv: (kv[0].sig._id, kv[0].mi))


def print_system(s: DiffSys, style: str = "pretty") -> str:
    if style == "json":
        return json.dumps(system_json(s), indent=2, sort_keys=False) + "\n"
    if style != "pretty":
        raise ValueError(f"unknown style {style!r}")
    lines = []
    if s.name:
        lines.append(f"name {s.name};")
    if s.ranking_hint:
        lines.append(f"ranking {s.ranking_hint};")
    if s.indep:
        lines.append("indep " + ", ".join(v.name for v in s.indep) + ";")
    for kw, group in (("dep", s.dep), ("inf", s.inf), ("map", s.map_)):
        for f in group:
            lines.append(f"{kw} {f.name}({','.join(f.args)});")
    if s.params:
        lines.append("param " + ", ".join(p.name for p in s.params) + ";")
    for lead, rhs in _sorted_solved(s.solved):
        lines.append(f"{format_jet(lead)} = {format_expr(rhs)};")
    for e in s.equations:
        lines.append(f"{format_expr(e)} = 0;")
    for e in s.inequations:
        lines.append(f"{format_expr(e)} <> 0;")
    return "\n".join(lines) + "\n"


def system_json(s: DiffSys) -> dict:
    return {
        "schema": 1,
        "name": s.name,
        "indep": [v.name for v in s.indep],
        "dep": [{"name": f.name, "args": list(f.args)} for f in s.dep],
        "inf": [{"name": f.name, "args": list(f.args)} for f in s.inf],
        "map": [{"name": f.name, "args": list(f.args)} for f in s.map_],
        "param": [p.name for p in s.params],
        "solved": [{"lhs": format_jet(k), "rhs": format_expr(v)}
                   for k, v in _sorted_solved(s.solved)],
        "equations": [format_expr(e) for e in s.equations],
        "inequations": [format_expr(e) for e in s.inequations],
    }
