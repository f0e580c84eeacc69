"""Well-formedness checking.

``check`` returns diagnostics instead of raising; an empty list means every
structural precondition assumed by the transformations holds.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import ast as A

MAX_BODY_ATOMS = 3
MAX_ARITY = 4


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    where: str

    def __str__(self) -> str:
        return f"{self.where}: {self.message}"


class _Checker:
    def __init__(self, p: A.Program):
        self.p = p
        self.out = []
        self.funcs = {}
        self.sets = []
        self.invs = []

    def diag(self, code, msg, where):
        self.out.append(Diagnostic(code, msg, where))

    def run(self):
        p = self.p
        for d in p.of_type(A.FuncDef):
            if d.name in self.funcs:
                self.diag("duplicate-function", f"function {d.name} defined twice", f"def {d.name}")
            self.funcs[d.name] = d
        globals_ = set()
        for d in p.decls:
            if isinstance(d, A.SetDecl):
                for n in d.names:
                    if n in globals_:
                        self.diag("redeclared", f"variable {n} declared twice", f"set {n}")
                    globals_.add(n)
                    self.sets.append(n)
        self.impure = self._impure_functions(globals_ | {d.name for d in p.invariants})

        # invariants: in order, operands must be declared before use
        known = set(self.sets)
        for d in p.invariants:
            where = f"inv {d.name}"
            if d.name in known or d.name in self.funcs:
                self.diag("reassigned", f"invariant variable {d.name} already defined", where)
            self.expr(d.expr, known, where, globals_=known)
            self._elementary_dupes(d.expr, where)
            known.add(d.name)
            self.invs.append(d.name)
        globals_ |= set(self.invs)
        for d in p.of_type(A.FuncDef):
            where = f"def {d.name}"
            if len(set(d.params)) != len(d.params):
                self.diag("duplicate-param", "duplicate parameter name", where)
            self.expr(d.body, set(d.params) | globals_, where, globals_=globals_)
        self.rules()
        for d in p.updates:
            self.update(d, globals_)
        for d in p.on_blocks:
            where = f"on {d.kind}({d.target})"
            if d.target not in globals_:
                self.diag("unbound", f"variable {d.target} unbound", where)
            self.stmts(d.body, globals_ | {d.param}, where, globals_)
        return self.out

    def _impure_functions(self, globals_):
        # functions whose bodies reach a declared variable, directly or via calls
        reach = {}
        for name, f in self.funcs.items():
            fv = A.free_vars(f.body) - set(f.params)
            reach[name] = (bool(fv & globals_), {c.name for c in A.calls_in(f.body)})
        impure = {n for n, (direct, _) in reach.items() if direct}
        changed = True
        while changed:
            changed = False
            for n, (_, callees) in reach.items():
                if n not in impure and callees & impure:
                    impure.add(n)
                    changed = True
        return impure

    def expr(self, e, scope, where, globals_):
        for node in A.walk(e):
            if isinstance(node, A.Call):
                f = self.funcs.get(node.name)
                if f is None:
                    self.diag("unknown-function", f"call to undefined function {node.name}", where)
                elif len(f.params) != len(node.args):
                    self.diag("arity", f"{node.name} expects {len(f.params)} arguments, got {len(node.args)}", where)
            elif isinstance(node, A.Comp):
                for part in (node.image, node.cond, node.key):
                    if part is not None:
                        self._pure(part, {node.var}, where, globals_)
            elif isinstance(node, A.Join):
                self._join(node, where, globals_)
        for name in sorted(self._free(e, scope)):
            self.diag("unbound", f"variable {name} unbound", where)

    def _free(self, e, scope):
        return A.free_vars(e) - scope

    def _pure(self, e, bound, where, globals_):
        bad = (A.free_vars(e) - bound) & globals_
        for name in sorted(bad):
            self.diag("impure", f"filter/image references declared variable {name}", where)
        for c in A.calls_in(e):
            if c.name in self.impure:
                self.diag("impure", f"filter/image calls {c.name}, which reaches a declared variable", where)

    def _join(self, j, where, globals_):
        for vars_ in (j.left_vars, j.right_vars):
            if len(set(vars_)) != len(vars_):
                self.diag("join-pattern", "repeated variable inside a join pattern", where)
        shared = set(j.left_vars) & set(j.right_vars)
        if len(shared) != 1:
            self.diag("join-shared", f"join generators must share exactly one variable, found {len(shared)}", where)
        bound = set(j.left_vars) | set(j.right_vars)
        for part in (j.image, j.key):
            if part is not None:
                self._pure(part, bound, where, globals_)

    def _elementary_dupes(self, e, where):
        for node in A.walk(e):
            pair = None
            if isinstance(node, A.SetOp):
                pair = (node.left, node.right)
            elif isinstance(node, A.Join):
                pair = (node.left, node.right)
            if pair and isinstance(pair[0], A.Var) and pair[0] == pair[1]:
                self.diag("duplicate-operand", "duplicate operand variable in elementary expression", where)

    def stmts(self, body, scope, where, globals_):
        for s in body:
            if isinstance(s, (A.AddStmt, A.DelStmt)):
                if s.target not in globals_:
                    self.diag("unbound", f"variable {s.target} unbound", where)
                self.expr(s.elem, scope, where, globals_)
            elif isinstance(s, A.Assign):
                if s.target not in globals_:
                    self.diag("unbound", f"variable {s.target} unbound", where)
                self.expr(s.value, scope, where, globals_)
            elif isinstance(s, (A.MapInc, A.MapDec)):
                if s.map not in globals_:
                    self.diag("unbound", f"variable {s.map} unbound", where)
                self.expr(s.key, scope, where, globals_)
                self.expr(s.value, scope, where, globals_)
            elif isinstance(s, A.IfStmt):
                self.expr(s.cond, scope, where, globals_)
                self.stmts(s.body, scope, where, globals_)
                self.stmts(s.orelse, scope, where, globals_)
            elif isinstance(s, A.ForStmt):
                self.expr(s.source, scope, where, globals_)
                self.stmts(s.body, scope | {s.var}, where, globals_)

    def rules(self):
        arities = {}
        for i, r in enumerate(self.p.rules, 1):
            where = f"rule {i} ({r.head.pred})"
            for a in (r.head,) + r.body:
                n = len(a.args)
                if not 1 <= n <= MAX_ARITY:
                    self.diag("arity", f"predicate {a.pred} has arity {n}, supported 1..{MAX_ARITY}", where)
                if arities.setdefault(a.pred, n) != n:
                    self.diag("arity", f"predicate {a.pred} used with arities {arities[a.pred]} and {n}", where)
            if len(r.body) > MAX_BODY_ATOMS:
                self.diag("body-size", f"rule body has {len(r.body)} atoms, at most {MAX_BODY_ATOMS} supported", where)
            body_vars = {v for a in r.body for v in a.variables()}
            for v in r.head.variables():
                if v not in body_vars:
                    self.diag("unsafe", f"head variable {v} unbound", where)

    def update(self, d, globals_):
        where = f"update {d.name}"
        if d.target not in globals_ and not self._is_param_target(d):
            self.diag("unbound", f"update target {d.target} is not a declared variable", where)
        if d.kind == "incr":
            if len(d.params) != 1 or not isinstance(d.params[0], int):
                self.diag("update-kind", "incr takes one integer constant", where)
        elif d.kind in ("add", "del", "cons"):
            if len(d.params) != 1:
                self.diag("update-kind", f"{d.kind} takes one parameter", where)
        elif d.kind not in self.funcs:
            self.diag("update-kind", f"unknown change function {d.kind}", where)
        elif len(self.funcs[d.kind].params) != 1 + len(d.params):
            self.diag("arity", f"change function {d.kind} must take the target plus {len(d.params)} parameters", where)

    def _is_param_target(self, d):
        # updates may also target the parameter of a function (funcinc inputs)
        return any(d.target in f.params for f in self.funcs.values())


def check(p: A.Program) -> list:
    return _Checker(p).run()
