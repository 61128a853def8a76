"""Sparse multivariate polynomials over exact rationals.

Indeterminates are opaque interned objects (jet variables and transcendental
atoms, see kernel.py); each receives a stable integer id at first use, so the
monomial order (graded reverse lexicographic over ids) is fixed for the whole
session.  No floating point anywhere.
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Iterable, Iterator

try:
    from gmpy2 import mpq as _mpq

    def QQ(a, b=1):
        return _mpq(a, b)
except ImportError:  # pragma: no cover - gmpy2 is an optional accelerator
    from fractions import Fraction as _Fraction

    def QQ(a, b=1):
        return _Fraction(a, b)

Q0 = QQ(0)
Q1 = QQ(1)

# A monomial is a tuple of (var_id, exponent) pairs, ascending ids, exponents > 0.
Monomial = tuple


_intern_lock = threading.RLock()
_intern_table: dict = {}
_interned_objects: list = []


def intern_indeterminate(key, factory: Callable):
    """Return (id, object) for `key`, creating via `factory()` on first use.

    Ids are assigned in creation order and never change; the table is
    append-only so sharing across threads is safe.
    """
    with _intern_lock:
        hit = _intern_table.get(key)
        if hit is not None:
            return hit
        obj = factory()
        vid = len(_interned_objects)
        _interned_objects.append(obj)
        _intern_table[key] = (vid, obj)
        return vid, obj


def indeterminate_by_id(vid: int):
    return _interned_objects[vid]


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        va, ea = a[i]
        vb, eb = b[j]
        if va == vb:
            out.append((va, ea + eb))
            i += 1
            j += 1
        elif va < vb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def mono_divides(a: Monomial, b: Monomial) -> bool:
    """True when a | b."""
    db = dict(b)
    return all(db.get(v, 0) >= e for v, e in a)


def mono_div(a: Monomial, b: Monomial) -> Monomial:
    """a / b, assuming b | a."""
    out = dict(a)
    for v, e in b:
        out[v] -= e
        if out[v] == 0:
            del out[v]
    return tuple(sorted(out.items()))


def mono_gcd(a: Monomial, b: Monomial) -> Monomial:
    db = dict(b)
    out = []
    for v, e in a:
        f = db.get(v, 0)
        if f:
            out.append((v, min(e, f)))
    return tuple(out)


def mono_degree(a: Monomial) -> int:
    return sum(e for _, e in a)


def mono_cmp(a: Monomial, b: Monomial) -> int:
    """Graded reverse lexicographic comparison; returns -1, 0 or 1."""
    if a == b:
        return 0
    da, db = mono_degree(a), mono_degree(b)
    if da != db:
        return -1 if da < db else 1
    # Equal degree: scan ids from highest down; the first one where the
    # exponents differ decides, smaller exponent on that id = larger monomial.
    ea, eb = dict(a), dict(b)
    for v in sorted(set(ea) | set(eb), reverse=True):
        xa, xb = ea.get(v, 0), eb.get(v, 0)
        if xa != xb:
            return 1 if xa < xb else -1
    return 0


def _mono_sort_key(m: Monomial):
    # Total-degree first, then the grevlex tie-break encoded as a tuple that
    # sorts the same way mono_cmp orders: negate exponents scanned from the
    # highest id down.  Used only for deterministic printing/iteration.
    return (mono_degree(m), tuple(sorted(((-v, e) for v, e in m))))


class Poly:
    """Immutable sparse polynomial: dict monomial -> nonzero rational."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None, _own: bool = False):
        if terms is None:
            terms = {}
        if not _own:
            terms = {m: QQ(c) for m, c in terms.items() if c != 0}
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, *a):  # pragma: no cover - guard
        raise AttributeError("Poly is immutable")

    @classmethod
    def const(cls, c) -> "Poly":
        c = QQ(c)
        return cls({(): c} if c != 0 else {}, _own=True)

    @classmethod
    def var(cls, vid: int) -> "Poly":
        return cls({((vid, 1),): Q1}, _own=True)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def const_value(self):
        if not self.terms:
            return Q0
        return self.terms[()]

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash(frozenset(self.terms.items()))
            object.__setattr__(self, "_hash", h)
        return h

    def __add__(self, other: "Poly") -> "Poly":
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s == 0:
                    del out[m]
                else:
                    out[m] = s
        return Poly(out, _own=True)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()}, _own=True)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return Poly()
        if other.is_const():
            return self.scale(other.const_value())
        if self.is_const():
            return other.scale(self.const_value())
        out: dict = {}
        small, big = self.terms, other.terms
        if len(small) > len(big):
            small, big = big, small
        for m1, c1 in small.items():
            for m2, c2 in big.items():
                m = mono_mul(m1, m2)
                s = out.get(m)
                if s is None:
                    out[m] = c1 * c2
                else:
                    s = s + c1 * c2
                    if s == 0:
                        del out[m]
                    else:
                        out[m] = s
        return Poly(out, _own=True)

    def scale(self, c) -> "Poly":
        if c == 0:
            return Poly()
        if c == 1:
            return self
        return Poly({m: q * c for m, q in self.terms.items()}, _own=True)

    def mul_mono(self, mono: Monomial, c=Q1) -> "Poly":
        if c == 0:
            return Poly()
        return Poly({mono_mul(m, mono): q * c for m, q in self.terms.items()}, _own=True)

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        out = Poly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def vars(self) -> set:
        out: set = set()
        for m in self.terms:
            for v, _ in m:
                out.add(v)
        return out

    def leading(self) -> tuple:
        """(monomial, coefficient) maximal under grevlex."""
        if not self.terms:
            raise ValueError("leading term of zero polynomial")
        best = None
        for m in self.terms:
            if best is None or mono_cmp(m, best) > 0:
                best = m
        return best, self.terms[best]

    def total_degree(self) -> int:
        return max((mono_degree(m) for m in self.terms), default=0)

    def degree_in(self, vid: int) -> int:
        d = 0
        for m in self.terms:
            for v, e in m:
                if v == vid and e > d:
                    d = e
        return d

    def coeffs_in(self, vid: int) -> dict:
        """View as univariate in vid: degree -> Poly coefficient."""
        buckets: dict[int, dict] = {}
        for m, c in self.terms.items():
            e = 0
            rest = []
            for v, k in m:
                if v == vid:
                    e = k
                else:
                    rest.append((v, k))
            buckets.setdefault(e, {})[tuple(rest)] = c
        return {e: Poly(t, _own=True) for e, t in buckets.items()}

    @staticmethod
    def from_coeffs_in(vid: int, coeffs: dict) -> "Poly":
        out: dict = {}
        for e, p in coeffs.items():
            mono_v = ((vid, e),) if e else ()
            for m, c in p.terms.items():
                out[mono_mul(m, mono_v)] = c
        return Poly(out, _own=True)

    def formal_derivative(self, vid: int) -> "Poly":
        """Power-rule derivative treating all indeterminates as independent."""
        out: dict = {}
        for m, c in self.terms.items():
            for i, (v, e) in enumerate(m):
                if v == vid:
                    rest = m[:i] + (((v, e - 1),) if e > 1 else ()) + m[i + 1:]
                    rest = tuple(sorted(rest))
                    s = out.get(rest, Q0) + c * e
                    if s == 0:
                        out.pop(rest, None)
                    else:
                        out[rest] = s
                    break
        return Poly(out, _own=True)

    def sorted_terms(self) -> list:
        """Terms in descending grevlex order (deterministic)."""
        return sorted(self.terms.items(), key=lambda t: _mono_sort_key(t[0]), reverse=True)

    def common_mono(self) -> Monomial:
        """Greatest monomial dividing every term."""
        it = iter(self.terms)
        try:
            g = next(it)
        except StopIteration:
            return ()
        for m in it:
            g = mono_gcd(g, m)
            if not g:
                break
        return g

    def content(self):
        """Positive rational c with self/c integer-coefficient and primitive."""
        num_gcd = 0
        den_lcm = 1
        for c in self.terms.values():
            num_gcd = math.gcd(num_gcd, abs(int(c.numerator)))
            d = int(c.denominator)
            den_lcm = den_lcm * d // math.gcd(den_lcm, d)
        if num_gcd == 0:
            return Q1
        return QQ(num_gcd, den_lcm)

    def primitive(self) -> "Poly":
        """Integer-primitive scalar multiple with positive leading coefficient."""
        if not self.terms:
            return self
        c = self.content()
        p = self.scale(Q1 / c)
        if p.leading()[1] < 0:
            p = -p
        return p

    def __repr__(self) -> str:  # debug only
        if not self.terms:
            return "Poly(0)"
        bits = []
        for m, c in self.sorted_terms():
            mono = "*".join(f"v{v}^{e}" if e > 1 else f"v{v}" for v, e in m) or "1"
            bits.append(f"{c}*{mono}")
        return "Poly(" + " + ".join(bits) + ")"


P_ZERO = Poly()
P_ONE = Poly.const(1)


def poly_exact_div(a: Poly, b: Poly) -> Poly | None:
    """a / b when the division is exact, else None."""
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero():
        return P_ZERO
    if b.is_const():
        return a.scale(Q1 / b.const_value())
    bm, bc = b.leading()
    quo: dict = {}
    rem = a
    while rem.terms:
        rm, rc = rem.leading()
        if not mono_divides(bm, rm):
            return None
        qm = mono_div(rm, bm)
        qc = rc / bc
        quo[qm] = quo.get(qm, Q0) + qc
        rem = rem - b.mul_mono(qm, qc)
    return Poly(quo, _own=True)


def _pseudo_rem(f: Poly, g: Poly, vid: int) -> Poly:
    """Pseudo-remainder of f by g with respect to vid (lc(g)^k * f mod g)."""
    dg = g.degree_in(vid)
    gc = g.coeffs_in(vid)
    lcg = gc[dg]
    r = f
    e = f.degree_in(vid) - dg + 1
    while r.terms:
        dr = r.degree_in(vid)
        if dr < dg:
            break
        rc = r.coeffs_in(vid)
        lcr = rc[dr]
        shift = ((vid, dr - dg),) if dr > dg else ()
        r = r * lcg - g.mul_mono(shift) * lcr
        e -= 1
    if e > 0:
        r = r * (lcg ** e)
    return r


def _poly_content_in(p: Poly, vid: int) -> Poly:
    """GCD of the coefficients of p viewed as univariate in vid."""
    cs = list(p.coeffs_in(vid).values())
    g = cs[0]
    for c in cs[1:]:
        g = poly_gcd(g, c)
        if g.is_const():
            return P_ONE
    return g


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """GCD up to a rational unit, primitive with positive leading coefficient."""
    if a.is_zero():
        return b.primitive()
    if b.is_zero():
        return a.primitive()
    if a.is_const() or b.is_const():
        return P_ONE
    # Pull out the common monomial factor cheaply.
    ma, mb = a.common_mono(), b.common_mono()
    mc = mono_gcd(ma, mb)
    if ma:
        a = Poly({mono_div(m, ma): c for m, c in a.terms.items()}, _own=True)
    if mb:
        b = Poly({mono_div(m, mb): c for m, c in b.terms.items()}, _own=True)
    g_mono = Poly({mc: Q1}, _own=True)
    a = a.primitive()
    b = b.primitive()
    if a == b:
        return g_mono * a
    if a.is_const() or b.is_const():
        return g_mono
    va, vb = a.vars(), b.vars()
    common = va & vb
    if not common:
        return g_mono
    # cheap modular probes: skip the expensive machinery when the gcd is
    # (overwhelmingly likely) constant, which is the common case
    work_vars = [v for v in sorted(common, reverse=True)
                 if _probe_nontrivial(a, b, v)]
    if not work_vars:
        return g_mono
    core = _heugcd(a, b)
    core = core.primitive() if core is not None else None
    if core is None:
        core = _gcd_primitive(a, b, {work_vars[0]})
    return g_mono * core


_PROBE_PRIMES = (2147483647, 2305843009213693951)
_probe_cache: dict = {}


def _probe_nontrivial(a: Poly, b: Poly, vid: int) -> bool:
    """Modular univariate probe: False means gcd has degree 0 in vid.

    Points are derived deterministically from the input pair so equal pairs
    always probe identically.  A True answer is only a hint; candidates are
    still verified by exact division.  A False answer is probabilistic with
    error below ~1e-17 per call (two independent primes).
    """
    key = (hash(a), hash(b), vid)
    hit = _probe_cache.get(key)
    if hit is not None:
        return hit
    seed = hash((key, 617))
    out = True
    for p in _PROBE_PRIMES:
        ua = _specialize_mod(a, vid, p, seed)
        ub = _specialize_mod(b, vid, p, seed)
        if ua is None or ub is None:
            out = True
            break
        if _gcd_degree_mod(ua, ub, p) == 0:
            out = False
            break
        seed += 1
    if len(_probe_cache) > 200000:
        _probe_cache.clear()
    _probe_cache[key] = out
    return out


def _specialize_mod(p_: Poly, vid: int, p: int, seed: int):
    """Evaluate all variables except vid at seeded residues mod p."""
    points: dict[int, int] = {}
    powers: dict = {}
    coeffs: dict[int, int] = {}
    for m, c in p_.terms.items():
        num = int(c.numerator) % p
        den = int(c.denominator)
        val = num if den == 1 else num * pow(den % p, -1, p) % p
        e = 0
        for v, k in m:
            if v == vid:
                e = k
                continue
            pw = powers.get((v, k))
            if pw is None:
                pt = points.get(v)
                if pt is None:
                    pt = (hash((seed, v, p)) % (p - 3)) + 2
                    points[v] = pt
                pw = pow(pt, k, p)
                powers[(v, k)] = pw
            val = val * pw % p
        coeffs[e] = (coeffs.get(e, 0) + val) % p
    lst = [coeffs.get(i, 0) for i in range(max(coeffs) + 1)] if coeffs else [0]
    while lst and lst[-1] == 0:
        lst.pop()
    if not lst:
        return None  # unlucky point killed the polynomial
    return lst


def _gcd_degree_mod(ua: list, ub: list, p: int) -> int:
    a, b = ua, ub
    while b:
        # a mod b over F_p
        inv = pow(b[-1], -1, p)
        a = a[:]
        for shift in range(len(a) - len(b), -1, -1):
            q = a[len(b) - 1 + shift] * inv % p
            if q:
                for i, bc in enumerate(b):
                    a[i + shift] = (a[i + shift] - q * bc) % p
        while a and a[-1] == 0:
            a.pop()
        a, b = b, a
    return len(a) - 1


def _int_coeff_bound(p: Poly) -> int:
    return max(abs(int(c.numerator)) for c in p.terms.values())


def _eval_var(p: Poly, vid: int, x: int) -> Poly:
    """Substitute the integer x for vid (exact, other variables kept)."""
    out: dict = {}
    for m, c in p.terms.items():
        e = 0
        rest = m
        for i, (v, k) in enumerate(m):
            if v == vid:
                e = k
                rest = m[:i] + m[i + 1:]
                break
        val = c * (x ** e) if e else c
        s = out.get(rest)
        if s is None:
            out[rest] = val
        else:
            s = s + val
            if s == 0:
                del out[rest]
            else:
                out[rest] = s
    return Poly(out, _own=True)


def _smod(p: Poly, x: int) -> Poly:
    """Coefficient-wise symmetric remainder modulo x."""
    out: dict = {}
    half, xq = x // 2, QQ(x)
    for m, c in p.terms.items():
        r = int(c.numerator) % x
        if r > half:
            r -= x
        if r:
            out[m] = QQ(r)
    return Poly(out, _own=True)


def _int_content(p: Poly) -> int:
    g = 0
    for c in p.terms.values():
        g = math.gcd(g, abs(int(c.numerator)))
        if g == 1:
            break
    return g


def _heugcd(a: Poly, b: Poly, depth: int = 0) -> Poly | None:
    """Heuristic gcd over Z by integer evaluation and base-x reconstruction.

    Inputs must have integer coefficients.  Returns the true gcd over Z (up
    to sign) when the heuristic succeeds, else None and the caller falls
    back to the subresultant PRS.  Candidates are validated by trial
    division, so a non-None answer is always a verified common divisor; the
    leaf gcds are honest so it is never an under-estimate.
    """
    if depth > 16:
        return None
    if a.is_const() and b.is_const():
        return Poly.const(math.gcd(abs(int(a.const_value().numerator)),
                                   abs(int(b.const_value().numerator))))
    if a.is_const():
        return Poly.const(math.gcd(abs(int(a.const_value().numerator)),
                                   _int_content(b)))
    if b.is_const():
        return Poly.const(math.gcd(abs(int(b.const_value().numerator)),
                                   _int_content(a)))
    common = a.vars() & b.vars()
    if not common:
        return Poly.const(math.gcd(_int_content(a), _int_content(b)))
    vid = max(common)
    x = 2 * min(_int_coeff_bound(a), _int_coeff_bound(b)) + 29
    for _ in range(6):
        fa, fb = _eval_var(a, vid, x), _eval_var(b, vid, x)
        if not (fa.is_zero() or fb.is_zero()):
            h = _heugcd(fa, fb, depth + 1)
            if h is None:
                return None
            # reconstruct the vid-dependence digit by digit in base x
            digits = []
            ok = True
            while not h.is_zero():
                dig = _smod(h, x)
                digits.append(dig)
                h = (h - dig).scale(QQ(1, x))
                if len(digits) > 300:
                    ok = False
                    break
            if ok:
                cand = P_ZERO
                for e, dig in enumerate(digits):
                    if dig.terms:
                        cand = cand + dig.mul_mono(((vid, e),) if e else ())
                if cand.terms and poly_exact_div(a, cand) is not None \
                        and poly_exact_div(b, cand) is not None:
                    return cand
        x = x * 73794 // 27011 + 1
    return None


def _gcd_primitive(a: Poly, b: Poly, common: set) -> Poly:
    vid = max(common)
    da, db = a.degree_in(vid), b.degree_in(vid)
    if da == 0 or db == 0:
        return _gcd_content_fallback(a, b, vid)
    if da < db:
        a, b = b, a
    ca = _poly_content_in(a, vid)
    cb = _poly_content_in(b, vid)
    cont = poly_gcd(ca, cb)
    pa = poly_exact_div(a, ca)
    pb = poly_exact_div(b, cb)
    assert pa is not None and pb is not None
    # Subresultant polynomial remainder sequence on the primitive parts.
    r0, r1 = pa, pb
    g = P_ONE
    h = P_ONE
    while True:
        d = r0.degree_in(vid) - r1.degree_in(vid)
        rem = _pseudo_rem(r0, r1, vid)
        if rem.is_zero():
            break
        if rem.degree_in(vid) == 0:
            r1 = P_ONE
            break
        divisor = g * (h ** d)
        nxt = poly_exact_div(rem, divisor)
        assert nxt is not None, "subresultant PRS division must be exact"
        r0, r1 = r1, nxt
        g = r0.coeffs_in(vid)[r0.degree_in(vid)]
        if d > 1:
            hd = poly_exact_div(g ** d, h ** (d - 1))
            assert hd is not None
            h = hd
        else:
            h = (h ** (1 - d)) * (g ** d) if d == 0 else g
    if r1.is_const():
        return cont
    core = poly_exact_div(r1, _poly_content_in(r1, vid))
    assert core is not None
    core = core.primitive()
    # Trial division guards against any PRS corner case.
    if poly_exact_div(pa, core) is None or poly_exact_div(pb, core) is None:
        return cont
    return cont * core


def _gcd_content_fallback(a: Poly, b: Poly, vid: int) -> Poly:
    # One of a, b is free of vid: gcd divides the content of the other.
    if a.degree_in(vid) == 0:
        free, other = a, b
    else:
        free, other = b, a
    return poly_gcd(free, _poly_content_in(other, vid))
