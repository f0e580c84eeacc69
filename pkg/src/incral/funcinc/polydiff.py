"""Discrete differencing of integer polynomials (strength reduction).

Keeping ``r = p(x)`` up to date across ``x += c`` needs only ``r += Δ(x)``
where Δ has one degree less than p. Whether the update of ``r`` runs before
or after the update of ``x`` changes Δ:

    before:  Δ(x) = p(x + c) - p(x)
    after:   Δ(x) = p(x) - p(x - c)
"""
from __future__ import annotations

from dataclasses import dataclass

from ..corelang import ast as A
from ..corelang.syntax import parse_expr, print_stmt
from .poly import AtomTable, NotPolynomial, Poly, format_poly, from_poly, to_poly

MODES = ("before", "after")


@dataclass(frozen=True)
class PolyDiff:
    poly: Poly
    delta: Poly
    table: AtomTable
    step: int
    mode: str
    result: str = "r"

    @property
    def delta_expr(self) -> A.Expr:
        return from_poly(self.delta, self.table)

    @property
    def stmt(self) -> A.Assign:
        return A.Assign(self.result, A.BinOp("+", A.Var(self.result), self.delta_expr))

    @property
    def delta_text(self) -> str:
        return format_poly(self.delta, self.table)

    @property
    def text(self) -> str:
        return f"{self.result} += {self.delta_text}"

    def core_text(self) -> str:
        return "\n".join(print_stmt(self.stmt))

    def value(self, x: int) -> int:
        return self.poly.evaluate(self._args(x))

    def delta_at(self, x: int) -> int:
        return self.delta.evaluate(self._args(x))

    def _args(self, x):
        return [x] * len(self.table.atoms)

    def tabulate(self, x0: int, steps: int) -> list:
        """Values of r across a loop of ``steps`` increments from ``x0``."""
        x, r, out = x0, self.value(x0), []
        for _ in range(steps):
            if self.mode == "before":
                r += self.delta_at(x)
                x += self.step
            else:
                x += self.step
                r += self.delta_at(x)
            out.append((x, r))
        return out


def poly_diff(p, c: int, mode: str = "before", var: str = "x", result: str = "r") -> PolyDiff:
    """Difference the polynomial ``p`` (text or expression) in ``var`` by step ``c``."""
    if mode not in MODES:
        raise ValueError(f"mode must be before or after, not {mode!r}")
    if c == 0:
        raise ValueError("step must be non-zero")
    e = parse_expr(p) if isinstance(p, str) else p
    table = AtomTable()
    table.index(A.Var(var))
    base = to_poly(e, table, strict=True)
    if len(table.atoms) != 1:
        others = ", ".join(a.name for a in table.atoms[1:])
        raise NotPolynomial(f"not a polynomial in {var}: mentions {others}")
    shift = c if mode == "before" else -c
    moved = to_poly(A.substitute(e, {var: A.BinOp("+", A.Var(var), A.Int(shift))}), table, strict=True)
    delta = moved - base if mode == "before" else base - moved
    return PolyDiff(base, delta, table, c, mode, result)
