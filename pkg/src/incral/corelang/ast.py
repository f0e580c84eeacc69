"""Abstract syntax of the core language.

All nodes are frozen dataclasses, so structural equality is AST equality and
nodes can be used as dictionary keys (the simplifier relies on this).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

ARITH_OPS = ("+", "-", "*", "/", "%")
COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")
BOOL_OPS = ("and", "or")
SET_OPS = ("union", "inter", "diff")
AGG_KINDS = ("sum", "count")


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Int(Expr):
    value: int


@dataclass(frozen=True)
class Bool(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class If(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class Tuple(Expr):
    items: tuple


@dataclass(frozen=True)
class Proj(Expr):
    """1-based tuple component selection, written ``e.i``."""

    expr: Expr
    index: int


@dataclass(frozen=True)
class Nil(Expr):
    pass


@dataclass(frozen=True)
class Cons(Expr):
    head: Expr
    tail: Expr


@dataclass(frozen=True)
class Head(Expr):
    expr: Expr


@dataclass(frozen=True)
class Tail(Expr):
    expr: Expr


@dataclass(frozen=True)
class IsEmpty(Expr):
    expr: Expr


@dataclass(frozen=True)
class SetLit(Expr):
    """Set display ``{e1, ..., en}``; ``{}`` is the empty set."""

    items: tuple = ()


@dataclass(frozen=True)
class SetOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Member(Expr):
    elem: Expr
    container: Expr


@dataclass(frozen=True)
class Comp(Expr):
    """``{ image : var in source | cond }``.

    With ``key`` set, the comprehension builds a bucket map
    ``{ key -> image : ... }`` whose buckets count their values.
    """

    image: Expr
    var: str
    source: Expr
    cond: Optional[Expr] = None
    key: Optional[Expr] = None


@dataclass(frozen=True)
class Join(Expr):
    """``{ image : (a, b) in left, (c, d) in right }`` sharing one variable."""

    image: Expr
    left_vars: tuple
    left: Expr
    right_vars: tuple
    right: Expr
    key: Optional[Expr] = None

    @property
    def shared(self) -> str:
        common = [v for v in self.left_vars if v in self.right_vars]
        return common[0]


@dataclass(frozen=True)
class Agg(Expr):
    kind: str
    expr: Expr


@dataclass(frozen=True)
class MapGet(Expr):
    """Bucket lookup ``m[k]``; evaluates to the set of values under ``k``."""

    map: Expr
    key: Expr


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: tuple


# -- statements of derived maintenance code ---------------------------------


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class AddStmt(Stmt):
    target: str
    elem: Expr


@dataclass(frozen=True)
class DelStmt(Stmt):
    target: str
    elem: Expr


@dataclass(frozen=True)
class Assign(Stmt):
    target: str
    value: Expr


@dataclass(frozen=True)
class IfStmt(Stmt):
    cond: Expr
    body: tuple
    orelse: tuple = ()


@dataclass(frozen=True)
class ForStmt(Stmt):
    var: str
    source: Expr
    body: tuple


@dataclass(frozen=True)
class MapInc(Stmt):
    map: str
    key: Expr
    value: Expr


@dataclass(frozen=True)
class MapDec(Stmt):
    map: str
    key: Expr
    value: Expr


# -- declarations -----------------------------------------------------------


class Decl:
    __slots__ = ()


@dataclass(frozen=True)
class SetDecl(Decl):
    names: tuple


@dataclass(frozen=True)
class InvDecl(Decl):
    name: str
    expr: Expr


@dataclass(frozen=True)
class FuncDef(Decl):
    name: str
    params: tuple
    body: Expr


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple  # of Var | Int

    def variables(self) -> list:
        return [a.name for a in self.args if isinstance(a, Var)]


@dataclass(frozen=True)
class Rule(Decl):
    head: Atom
    body: tuple = ()

    @property
    def is_fact(self) -> bool:
        return not self.body


UPDATE_KINDS = ("add", "del", "incr", "cons")


@dataclass(frozen=True)
class UpdateOp(Decl):
    """A named input-change operation.

    ``kind`` is one of ``add``, ``del``, ``incr``, ``cons`` or the name of a
    user-defined change function ``g(x, params...)`` returning the new value.
    For ``incr`` the single parameter is the constant step.
    """

    name: str
    target: str
    kind: str
    params: tuple = ()

    @property
    def is_builtin(self) -> bool:
        return self.kind in UPDATE_KINDS


@dataclass(frozen=True)
class OnBlock(Decl):
    """Maintenance code run after ``kind`` (add/del) changes ``target``."""

    kind: str
    target: str
    param: str
    body: tuple


@dataclass(frozen=True)
class Program:
    decls: tuple = field(default_factory=tuple)

    def of_type(self, cls) -> list:
        return [d for d in self.decls if isinstance(d, cls)]

    @property
    def set_names(self) -> list:
        return [n for d in self.of_type(SetDecl) for n in d.names]

    @property
    def invariants(self) -> list:
        return self.of_type(InvDecl)

    @property
    def functions(self) -> dict:
        return {d.name: d for d in self.of_type(FuncDef)}

    @property
    def rules(self) -> list:
        return self.of_type(Rule)

    @property
    def updates(self) -> list:
        return self.of_type(UpdateOp)

    @property
    def on_blocks(self) -> list:
        return self.of_type(OnBlock)

    def function(self, name: str) -> FuncDef:
        try:
            return self.functions[name]
        except KeyError:
            raise KeyError(f"no function named {name!r}") from None


Node = Union[Expr, Stmt, Decl]


# -- generic traversal helpers ----------------------------------------------


def children(e: Expr) -> tuple:
    if isinstance(e, (Int, Bool, Var, Nil)):
        return ()
    if isinstance(e, (BinOp, SetOp)):
        return (e.left, e.right)
    if isinstance(e, (Not, Neg)):
        return (e.operand,)
    if isinstance(e, If):
        return (e.cond, e.then, e.orelse)
    if isinstance(e, (Tuple, SetLit)):
        return e.items
    if isinstance(e, Proj):
        return (e.expr,)
    if isinstance(e, Cons):
        return (e.head, e.tail)
    if isinstance(e, (Head, Tail, IsEmpty)):
        return (e.expr,)
    if isinstance(e, Member):
        return (e.elem, e.container)
    if isinstance(e, Comp):
        return tuple(x for x in (e.source, e.key, e.image, e.cond) if x is not None)
    if isinstance(e, Join):
        return tuple(x for x in (e.left, e.right, e.key, e.image) if x is not None)
    if isinstance(e, Agg):
        return (e.expr,)
    if isinstance(e, MapGet):
        return (e.map, e.key)
    if isinstance(e, Call):
        return e.args
    raise TypeError(f"not an expression: {e!r}")


def walk(e: Expr):
    """Pre-order iteration over ``e`` and all its subexpressions."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_vars(e: Expr) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Comp):
        inner = set()
        for part in (e.key, e.image, e.cond):
            if part is not None:
                inner |= free_vars(part)
        return free_vars(e.source) | (inner - {e.var})
    if isinstance(e, Join):
        inner = set()
        for part in (e.key, e.image):
            if part is not None:
                inner |= free_vars(part)
        bound = set(e.left_vars) | set(e.right_vars)
        return free_vars(e.left) | free_vars(e.right) | (inner - bound)
    out = set()
    for c in children(e):
        out |= free_vars(c)
    return out


def calls_in(e: Expr) -> list:
    return [n for n in walk(e) if isinstance(n, Call)]


def substitute(e: Expr, mapping: dict) -> Expr:
    """Capture-naive substitution of variables by expressions.

    Binders (comprehension and join variables) shadow the mapping; callers
    substitute expressions whose free variables are disjoint from binders.
    """
    if not mapping:
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, (Int, Bool, Nil)):
        return e
    if isinstance(e, Comp):
        inner = {k: v for k, v in mapping.items() if k != e.var}
        return Comp(
            _opt(e.image, inner),
            e.var,
            substitute(e.source, mapping),
            _opt(e.cond, inner),
            _opt(e.key, inner),
        )
    if isinstance(e, Join):
        bound = set(e.left_vars) | set(e.right_vars)
        inner = {k: v for k, v in mapping.items() if k not in bound}
        return Join(
            substitute(e.image, inner),
            e.left_vars,
            substitute(e.left, mapping),
            e.right_vars,
            substitute(e.right, mapping),
            _opt(e.key, inner),
        )
    return rebuild(e, [substitute(c, mapping) for c in children(e)])


def _opt(e, mapping):
    return None if e is None else substitute(e, mapping)


def rebuild(e: Expr, kids: list) -> Expr:
    """Return a copy of ``e`` with its children replaced (non-binding nodes)."""
    if isinstance(e, BinOp):
        return BinOp(e.op, kids[0], kids[1])
    if isinstance(e, SetOp):
        return SetOp(e.op, kids[0], kids[1])
    if isinstance(e, Not):
        return Not(kids[0])
    if isinstance(e, Neg):
        return Neg(kids[0])
    if isinstance(e, If):
        return If(*kids)
    if isinstance(e, Tuple):
        return Tuple(tuple(kids))
    if isinstance(e, SetLit):
        return SetLit(tuple(kids))
    if isinstance(e, Proj):
        return Proj(kids[0], e.index)
    if isinstance(e, Cons):
        return Cons(kids[0], kids[1])
    if isinstance(e, Head):
        return Head(kids[0])
    if isinstance(e, Tail):
        return Tail(kids[0])
    if isinstance(e, IsEmpty):
        return IsEmpty(kids[0])
    if isinstance(e, Member):
        return Member(kids[0], kids[1])
    if isinstance(e, Agg):
        return Agg(e.kind, kids[0])
    if isinstance(e, MapGet):
        return MapGet(kids[0], kids[1])
    if isinstance(e, Call):
        return Call(e.name, tuple(kids))
    if not kids:
        return e
    raise TypeError(f"cannot rebuild {type(e).__name__}")


def transform(e: Expr, fn) -> Expr:
    """Bottom-up rewrite of non-binding nodes with ``fn``."""
    if isinstance(e, (Comp, Join)):
        return fn(e)
    kids = children(e)
    if kids:
        e = rebuild(e, [transform(c, fn) for c in kids])
    return fn(e)
