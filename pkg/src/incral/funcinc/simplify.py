"""Algebraic simplification used by unfolding.

Scope is deliberately small: polynomial normalization of maximal arithmetic
subtrees, constant folding, list and tuple selector laws, and conditional
unfolding when the guard is decidable, either outright or from lower bounds
on variables (``assume={"n": 1}`` means n >= 1).
"""
from __future__ import annotations

import operator

from ..corelang import ast as A
from .poly import AtomTable, Poly, from_poly, is_arith, to_poly

_CMP = {
    "==": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}


def simplify(e: A.Expr, assume: dict | None = None) -> A.Expr:
    return _Simplifier(assume or {}).run(e)


class _Simplifier:
    def __init__(self, assume):
        self.assume = assume

    def run(self, e):
        if is_arith(e):
            return self.arith(e)
        if isinstance(e, (A.Comp, A.Join)):
            return e
        kids = A.children(e)
        if kids:
            e = A.rebuild(e, [self.run(k) for k in kids])
        return self.local(e)

    def arith(self, e):
        table = AtomTable()
        p = to_poly(e, table, atom_fn=self.run)
        return from_poly(p, table)

    def local(self, e):
        if isinstance(e, A.If):
            if isinstance(e.cond, A.Bool):
                return e.then if e.cond.value else e.orelse
            if e.then == e.orelse:
                return e.then
            return e
        if isinstance(e, A.Not) and isinstance(e.operand, A.Bool):
            return A.Bool(not e.operand.value)
        if isinstance(e, A.BinOp):
            if e.op in ("and", "or"):
                return self.logic(e)
            if e.op in _CMP:
                return self.compare(e)
            if e.op in ("/", "%") and isinstance(e.left, A.Int) and isinstance(e.right, A.Int) \
                    and e.right.value != 0:
                a, b = e.left.value, e.right.value
                return A.Int(a // b if e.op == "/" else a % b)
            return e
        if isinstance(e, A.Head) and isinstance(e.expr, A.Cons):
            return e.expr.head
        if isinstance(e, A.Tail) and isinstance(e.expr, A.Cons):
            return e.expr.tail
        if isinstance(e, A.IsEmpty):
            if isinstance(e.expr, A.Cons):
                return A.Bool(False)
            if isinstance(e.expr, A.Nil):
                return A.Bool(True)
            return e
        if isinstance(e, A.Proj) and isinstance(e.expr, A.Tuple) and e.index <= len(e.expr.items):
            return e.expr.items[e.index - 1]
        return e

    def logic(self, e):
        l, r = e.left, e.right
        is_and = e.op == "and"
        for a, b in ((l, r), (r, l)):
            if isinstance(a, A.Bool):
                if a.value == is_and:
                    return b
                return A.Bool(not is_and)
        return e

    def compare(self, e):
        l, r = e.left, e.right
        if isinstance(l, A.Bool) and isinstance(r, A.Bool) and e.op in ("==", "!="):
            return A.Bool(_CMP[e.op](l.value, r.value))
        if not (is_arith(l) or isinstance(l, A.Var) or is_arith(r) or isinstance(r, A.Var)):
            if e.op in ("==", "!=") and l == r:
                return A.Bool(e.op == "==")
            return e
        table = AtomTable()
        pl = to_poly(l, table)
        pr = to_poly(r, table)
        diff = pl - pr
        if diff.is_const:
            return A.Bool(_CMP[e.op](diff.const_value, 0))
        decided = self.decide(diff, e.op, table)
        if decided is not None:
            return A.Bool(decided)
        if pr.is_const and not pl.is_const and pl.const_value:
            c = pl.const_value
            return A.BinOp(e.op, from_poly(pl - Poly.const(c), table), A.Int(pr.const_value - c))
        return e

    def decide(self, diff, op, table):
        """Decide ``diff op 0`` when diff is linear in one bounded variable."""
        nonconst = [(m, c) for m, c in diff.terms.items() if m != ()]
        if len(nonconst) != 1:
            return None
        (mono, coef), = nonconst
        if len(mono) != 1 or mono[0][1] != 1:
            return None
        atom = table.atoms[mono[0][0]]
        if not isinstance(atom, A.Var) or atom.name not in self.assume:
            return None
        c0 = diff.const_value
        # diff ranges over [lo, +inf) when coef > 0, (-inf, hi] when coef < 0
        bound = coef * self.assume[atom.name] + c0
        if coef > 0:
            if op in ("<=", "==") and bound > 0:
                return False
            if op == "<" and bound >= 0:
                return False
            if op == ">" and bound > 0:
                return True
            if op in (">=",) and bound >= 0:
                return True
            if op == "!=" and bound > 0:
                return True
        else:
            if op in (">=", "==") and bound < 0:
                return False
            if op == ">" and bound <= 0:
                return False
            if op == "<" and bound < 0:
                return True
            if op == "<=" and bound <= 0:
                return True
            if op == "!=" and bound < 0:
                return True
        return None

