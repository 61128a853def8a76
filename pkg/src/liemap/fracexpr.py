"""Factored-denominator fractions for change-of-variables chains.

Prolonged changes of variables stack adjugate/determinant factors; doing that
arithmetic on canonical Expr quotients would pay a multivariate gcd per
operation.  Frac keeps the denominator as a multiset of polynomial factors
and cancels only by exact trial division against those known factors, which
is all these computations ever need.  Conversion back to Expr (one real
normalization per final expression) happens at the boundary.
"""

from __future__ import annotations

from .kernel import Expr, SolvedContext, total_derivative
from .poly import P_ONE, Poly, Q1, poly_exact_div


class Frac:
    """num / prod(factor^exp); factors are primitive with positive lead."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: dict | None = None):
        self.num = num
        self.den = {} if num.is_zero() else dict(den or {})

    @classmethod
    def from_expr(cls, e: Expr) -> "Frac":
        if e.den.is_const():
            return cls(e.num)
        f = e.den.primitive()
        scale = e.den.leading()[1] / f.leading()[1]
        return cls(e.num.scale(Q1 / scale), {f: 1})

    @classmethod
    def from_poly(cls, p: Poly) -> "Frac":
        return cls(p)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def to_expr(self) -> Expr:
        den = P_ONE
        for f, e in self.den.items():
            den = den * f ** e
        return Expr(self.num, den)

    # -- helpers -------------------------------------------------------

    def _cancel(self) -> "Frac":
        """Trial-divide the numerator by each denominator factor."""
        num, den = self.num, dict(self.den)
        if num.is_zero():
            return Frac(num)
        changed = True
        while changed:
            changed = False
            for f in list(den):
                while den.get(f, 0) > 0:
                    q = poly_exact_div(num, f)
                    if q is None:
                        break
                    num = q
                    den[f] -= 1
                    changed = True
                if den.get(f) == 0:
                    del den[f]
        return Frac(num, den)

    def __add__(self, other: "Frac") -> "Frac":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        factors = set(self.den) | set(other.den)
        num_a, num_b = self.num, other.num
        den: dict = {}
        for f in factors:
            ea, eb = self.den.get(f, 0), other.den.get(f, 0)
            e = max(ea, eb)
            den[f] = e
            if e > ea:
                num_a = num_a * f ** (e - ea)
            if e > eb:
                num_b = num_b * f ** (e - eb)
        return Frac(num_a + num_b, den)._cancel()

    def __neg__(self) -> "Frac":
        return Frac(-self.num, self.den)

    def __sub__(self, other: "Frac") -> "Frac":
        return self + (-other)

    def __mul__(self, other: "Frac") -> "Frac":
        if self.is_zero() or other.is_zero():
            return Frac(Poly())
        den = dict(self.den)
        for f, e in other.den.items():
            den[f] = den.get(f, 0) + e
        return Frac(self.num * other.num, den)._cancel()

    def div_poly(self, p: Poly) -> "Frac":
        """Divide by a polynomial, keeping it as a tracked factor."""
        if p.is_zero():
            raise ZeroDivisionError("division of Frac by zero polynomial")
        if p.is_const():
            return Frac(self.num.scale(Q1 / p.const_value()), self.den)
        f = p.primitive()
        scale = p.leading()[1] / f.leading()[1]
        den = dict(self.den)
        den[f] = den.get(f, 0) + 1
        return Frac(self.num.scale(Q1 / scale), den)._cancel()

    def inverse(self) -> "Frac":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero Frac")
        num = P_ONE
        for f, e in self.den.items():
            num = num * f ** e
        out = Frac(num)
        return out.div_poly(self.num)

    def __truediv__(self, other: "Frac") -> "Frac":
        return self * other.inverse()

    def derivative(self, coord: str, ctx: SolvedContext) -> "Frac":
        """Total derivative, factor-aware quotient rule.

        Polynomial pieces are differentiated through the kernel (their
        contexts may reintroduce small denominators, which come back as
        tracked factors).
        """
        dnum = Frac.from_expr(total_derivative(Expr(self.num), coord, ctx))
        for f, e in self.den.items():
            for _ in range(e):
                dnum = dnum.div_poly(f)
        if not self.den:
            return dnum
        correction = Frac(Poly())
        for f, e in self.den.items():
            df = total_derivative(Expr(f), coord, ctx)
            if df.is_zero():
                continue
            den = dict(self.den)
            den[f] = den.get(f, 0) + 1
            piece = Frac(self.num.scale(-e), den) * Frac.from_expr(df)
            correction = correction + piece
        return dnum + correction

    def __repr__(self):
        return f"Frac({self.num!r} / {self.den!r})"


def frac_matmul_row(row, vec) -> Frac:
    """Dot product of a row of Fracs with a vector of Fracs."""
    out = Frac(Poly())
    for a, b in zip(row, vec):
        if a.is_zero() or b.is_zero():
            continue
        out = out + a * b
    return out
