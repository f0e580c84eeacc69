from __future__ import annotations

import re

from . import ast as A
from .syntax import KEYWORDS


def identifiers(p: A.Program) -> set:
    """Every identifier occurring anywhere in ``p``."""
    out = set()

    def expr(e):
        for n in A.walk(e):
            if isinstance(n, A.Var):
                out.add(n.name)
            elif isinstance(n, A.Call):
                out.add(n.name)
            elif isinstance(n, A.Comp):
                out.add(n.var)
            elif isinstance(n, A.Join):
                out.update(n.left_vars, n.right_vars)

    def stmt(s):
        if isinstance(s, (A.AddStmt, A.DelStmt)):
            out.add(s.target)
            expr(s.elem)
        elif isinstance(s, A.Assign):
            out.add(s.target)
            expr(s.value)
        elif isinstance(s, (A.MapInc, A.MapDec)):
            out.add(s.map)
            expr(s.key)
            expr(s.value)
        elif isinstance(s, A.IfStmt):
            expr(s.cond)
            for x in s.body + s.orelse:
                stmt(x)
        elif isinstance(s, A.ForStmt):
            out.add(s.var)
            expr(s.source)
            for x in s.body:
                stmt(x)

    for d in p.decls:
        if isinstance(d, A.SetDecl):
            out.update(d.names)
        elif isinstance(d, A.InvDecl):
            out.add(d.name)
            expr(d.expr)
        elif isinstance(d, A.FuncDef):
            out.add(d.name)
            out.update(d.params)
            expr(d.body)
        elif isinstance(d, A.Rule):
            for a in (d.head,) + d.body:
                out.add(a.pred)
                out.update(a.variables())
        elif isinstance(d, A.UpdateOp):
            out.update((d.name, d.target))
            out.update(x for x in d.params if isinstance(x, str))
        elif isinstance(d, A.OnBlock):
            out.update((d.target, d.param))
            for s in d.body:
                stmt(s)
    return out


class NameSupply:
    """Deterministic generator of identifiers absent from a program."""

    def __init__(self, taken: set, prefix: str):
        if prefix in KEYWORDS or not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", prefix):
            prefix = re.sub(r"[^A-Za-z_0-9]", "_", prefix) + "_"
            if prefix[0].isdigit():
                prefix = "_" + prefix
        self.prefix = prefix
        self.taken = set(taken)
        pattern = re.compile(re.escape(prefix) + r"(\d+)$")
        used = [int(m.group(1)) for n in self.taken if (m := pattern.match(n))]
        self.counter = max(used, default=0)

    def next(self) -> str:
        while True:
            self.counter += 1
            name = f"{self.prefix}{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return name

    def named(self, base: str) -> str:
        """``base`` itself if free, else ``base_2``, ``base_3``, ..."""
        if base in KEYWORDS:
            base += "_"
        name, i = base, 1
        while name in self.taken:
            i += 1
            name = f"{base}_{i}"
        self.taken.add(name)
        return name

    def __iter__(self):
        return self

    def __next__(self) -> str:
        return self.next()


def fresh_names(p: A.Program, prefix: str = "v") -> NameSupply:
    return NameSupply(identifiers(p), prefix)
