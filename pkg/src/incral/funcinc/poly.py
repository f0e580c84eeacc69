"""Multivariate integer polynomials over opaque atoms.

Atoms are expressions the polynomial layer cannot look into (variables,
calls, list heads, ...). They are numbered by first appearance, and that
numbering fixes the canonical term order, so normalization is deterministic
and keeps the source's left-to-right reading order where it can.
"""
from __future__ import annotations

from ..corelang import ast as A


class NotPolynomial(ValueError):
    pass


class AtomTable:
    def __init__(self):
        self.atoms = []
        self._index = {}

    def index(self, e: A.Expr) -> int:
        i = self._index.get(e)
        if i is None:
            i = self._index[e] = len(self.atoms)
            self.atoms.append(e)
        return i


class Poly:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        # monomial: tuple of (atom index, exponent) sorted by index
        self.terms = {m: c for m, c in (terms or {}).items() if c != 0}

    @classmethod
    def const(cls, c: int) -> "Poly":
        return cls({(): c})

    @classmethod
    def atom(cls, i: int) -> "Poly":
        return cls({((i, 1),): 1})

    def __add__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Poly(out)

    def __neg__(self):
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly(out)

    def __eq__(self, other):
        return isinstance(other, Poly) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    @property
    def is_const(self) -> bool:
        return all(m == () for m in self.terms)

    @property
    def const_value(self) -> int:
        return self.terms.get((), 0)

    def degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def coeff(self, mono: tuple) -> int:
        return self.terms.get(mono, 0)

    def without_const(self) -> "Poly":
        return Poly({m: c for m, c in self.terms.items() if m != ()})

    def ordered(self) -> list:
        """Terms by descending degree, then by atom appearance order."""
        return sorted(self.terms.items(), key=lambda mc: (-sum(e for _, e in mc[0]), mc[0]))

    def evaluate(self, values: list) -> int:
        total = 0
        for m, c in self.terms.items():
            t = c
            for i, e in m:
                t *= values[i] ** e
            total += t
        return total


def _mono_mul(m1, m2):
    d = dict(m1)
    for i, e in m2:
        d[i] = d.get(i, 0) + e
    return tuple(sorted(d.items()))


def is_arith(e: A.Expr) -> bool:
    return (isinstance(e, A.BinOp) and e.op in ("+", "-", "*")) or isinstance(e, (A.Neg, A.Int))


def to_poly(e: A.Expr, table: AtomTable, strict: bool = False, atom_fn=None) -> Poly:
    """Read ``e`` as a polynomial; non-arithmetic subterms become atoms.

    With ``strict`` only variables may be atoms. ``atom_fn`` may rewrite an
    atom before it is registered (the simplifier uses it to simplify inside).
    """
    if isinstance(e, A.Int):
        return Poly.const(e.value)
    if isinstance(e, A.BinOp) and e.op in ("+", "-", "*"):
        a = to_poly(e.left, table, strict, atom_fn)
        b = to_poly(e.right, table, strict, atom_fn)
        return a + b if e.op == "+" else a - b if e.op == "-" else a * b
    if isinstance(e, A.Neg):
        return -to_poly(e.operand, table, strict, atom_fn)
    if strict and not isinstance(e, A.Var):
        from ..corelang.syntax import print_expr
        raise NotPolynomial(f"not a polynomial: {print_expr(e)}")
    if atom_fn is not None:
        e = atom_fn(e)
        if is_arith(e):
            return to_poly(e, table, strict, atom_fn)
    return Poly.atom(table.index(e))


def _monomial(mono, table, out=None) -> A.Expr | None:
    for i, e in mono:
        for _ in range(e):
            f = table.atoms[i]
            out = f if out is None else A.BinOp("*", out, f)
    return out


def _term(c: int, mono, table) -> A.Expr:
    if not mono:
        return A.Int(c)
    if c == 1:
        return _monomial(mono, table)
    if c == -1:
        return A.Neg(_monomial(mono, table))
    return _monomial(mono, table, A.Int(c))


def from_poly(p: Poly, table: AtomTable) -> A.Expr:
    terms = p.ordered()
    if not terms:
        return A.Int(0)
    (m0, c0), rest = terms[0], terms[1:]
    out = _term(c0, m0, table)
    for m, c in rest:
        if c < 0:
            out = A.BinOp("-", out, _term(-c, m, table))
        else:
            out = A.BinOp("+", out, _term(c, m, table))
    return out


def format_poly(p: Poly, table: AtomTable) -> str:
    """Compact rendering, e.g. ``6*x*x + 12*x + 10``; reparses to the same value."""
    from ..corelang.syntax import print_expr

    def mono_text(mono):
        parts = []
        for i, e in mono:
            a = table.atoms[i]
            s = print_expr(a, 11)
            parts += [s] * e
        return "*".join(parts)

    terms = p.ordered()
    if not terms:
        return "0"
    out = []
    for k, (m, c) in enumerate(terms):
        mag = abs(c)
        body = mono_text(m)
        if not body:
            text = str(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{mag}*{body}"
        if k == 0:
            out.append(("-" if c < 0 else "") + text)
        else:
            out.append(("- " if c < 0 else "+ ") + text)
    return " ".join(out)
