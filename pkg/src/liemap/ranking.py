"""Differential rankings: total orders on jet variables.

A ranking is organized in blocks of function kinds (earlier block = lower
rank); inside a block it is graded by total derivative order, then by a
function priority list, then lexicographically on the multi-index against a
declared variable order (later variables weigh more).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import Expr, JetVar

LT, EQ, GT = -1, 0, 1


class RankingError(Exception):
    pass


class ConstantExpression(RankingError):
    """leader() was asked about an expression with no ranked jet variable."""


@dataclass(frozen=True)
class Ranking:
    """Blocks contain function kinds or individual function names.

    A name entry overrides kind membership, so elimination rankings that
    isolate one unknown above the others are expressed the same way as the
    kind-level blocks (earlier block = lower rank).
    """

    blocks: tuple[frozenset, ...]          # kinds/names per block, low to high
    var_order: tuple[str, ...]             # declared variable order
    func_priority: tuple[str, ...] = ()    # function names, low to high

    def __post_init__(self):
        seen = set()
        for b in self.blocks:
            if seen & b:
                raise RankingError("kind or name appears in two blocks")
            seen |= b

    def block_of(self, v: JetVar) -> int:
        for i, entries in enumerate(self.blocks):
            if v.sig.name in entries:
                return i
        for i, entries in enumerate(self.blocks):
            if v.sig.kind in entries:
                return i
        raise RankingError(f"{v!r} ({v.sig.kind}) is not ranked")

    def is_ranked(self, v: JetVar) -> bool:
        return any(v.sig.kind in b or v.sig.name in b for b in self.blocks)

    def _prio(self, name: str) -> int:
        try:
            return self.func_priority.index(name)
        except ValueError:
            return len(self.func_priority)

    def compare(self, a: JetVar, b: JetVar) -> int:
        if a is b:
            return EQ
        ba, bb = self.block_of(a), self.block_of(b)
        if ba != bb:
            return LT if ba < bb else GT
        if a.order != b.order:
            return LT if a.order < b.order else GT
        pa, pb = self._prio(a.sig.name), self._prio(b.sig.name)
        if pa != pb:
            return LT if pa < pb else GT
        if a.sig is not b.sig:
            # distinct functions with equal priority: fall back to id order
            return LT if a.sig._id < b.sig._id else GT
        da, db = dict(a.mi), dict(b.mi)
        for x in reversed(self.var_order):
            ca, cb = da.get(x, 0), db.get(x, 0)
            if ca != cb:
                return LT if ca < cb else GT
        return EQ

    def key(self, v: JetVar) -> "_RankKey":
        """Sort key wrapper for use with sorted()."""
        return _RankKey(self, v)

    def leader(self, e: Expr) -> JetVar:
        best = None
        for v in e.jet_vars():
            if not self.is_ranked(v):
                continue
            if best is None or self.compare(v, best) > 0:
                best = v
        if best is None:
            raise ConstantExpression("no ranked jet variable in expression")
        return best

    def ranked_vars(self, e: Expr) -> set:
        return {v for v in e.jet_vars() if self.is_ranked(v)}


class _RankKey:
    __slots__ = ("r", "v")

    def __init__(self, r: Ranking, v: JetVar):
        self.r = r
        self.v = v

    def __lt__(self, other):
        return self.r.compare(self.v, other.v) < 0

    def __eq__(self, other):
        return self.v is other.v


def compare(r: Ranking, a: JetVar, b: JetVar) -> int:
    return r.compare(a, b)


def leader(r: Ranking, e: Expr) -> JetVar:
    return r.leader(e)


def orderly(var_order, func_priority=(), kinds=("dependent",)) -> Ranking:
    """Single-block ranking graded by total order."""
    return Ranking((frozenset(kinds),), tuple(var_order), tuple(func_priority))


def mapde_block(var_order, func_priority=(), params_top: bool = False) -> Ranking:
    """Map unknowns below any derivative of the infinitesimals.

    With params_top, parameters form a third, highest block (used when target
    coefficients must be eliminated first).
    """
    blocks = [frozenset({"map-unknown"}), frozenset({"infinitesimal"})]
    if params_top:
        blocks.append(frozenset({"parameter"}))
    return Ranking(tuple(blocks), tuple(var_order), tuple(func_priority))


def elimination(var_order, func_order) -> Ranking:
    """One block per function, listed low to high; eliminates the top ones."""
    blocks = tuple(frozenset({name}) for name in func_order)
    return Ranking(blocks, tuple(var_order), tuple(func_order))
