"""Finite differencing of set expressions.

A nested invariant is first flattened into a chain of elementary invariants
(one operator each over distinct variables). Each (form, operand, change)
triple then has a rule producing maintenance statements that run after the
operand changed. Changes emitted by one invariant's maintenance are the input
changes of the invariants that read it, so the chain is maintained by event
propagation in the interpreter.

Images and joins keep bucket maps: a count map from each result element to
its witnesses (so deletion knows when the last witness goes), and for joins
an index per operand keyed on the shared column.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .corelang import ast as A
from .corelang.names import identifiers, NameSupply
from .corelang.syntax import print_decl, print_expr, print_program

FORMS = ("union", "inter", "diff", "copy", "filter", "image", "join", "sum", "count")
KINDS = ("add", "del")


class DerivationError(Exception):
    pass


class NoRuleError(DerivationError):
    def __init__(self, form, kind, detail=""):
        msg = f"no rule for ({form}, {kind})"
        super().__init__(msg + (f": {detail}" if detail else ""))
        self.form = form
        self.kind = kind


def form_of(e: A.Expr) -> str | None:
    """Elementary form of ``e``, or None if ``e`` is not elementary."""
    if isinstance(e, A.Var):
        return "copy"
    if isinstance(e, A.SetOp) and _vars(e.left, e.right):
        return e.op
    if isinstance(e, A.Comp) and e.key is None and isinstance(e.source, A.Var):
        return "filter" if e.image == A.Var(e.var) else "image"
    if isinstance(e, A.Join) and e.key is None and _vars(e.left, e.right):
        return "join"
    if isinstance(e, A.Agg) and isinstance(e.expr, A.Var):
        return e.kind
    return None


def _vars(*es) -> bool:
    return all(isinstance(x, A.Var) for x in es)


@dataclass(frozen=True)
class Invariant:
    name: str
    expr: A.Expr
    rank: int

    @property
    def form(self) -> str:
        return form_of(self.expr)

    @property
    def operands(self) -> tuple:
        e = self.expr
        if isinstance(e, A.Var):
            return (e.name,)
        if isinstance(e, (A.SetOp, A.Join)):
            return (e.left.name, e.right.name)
        if isinstance(e, A.Comp):
            return (e.source.name,)
        if isinstance(e, A.Agg):
            return (e.expr.name,)
        return ()

    @property
    def decl(self) -> A.InvDecl:
        return A.InvDecl(self.name, self.expr)

    def __str__(self) -> str:
        return f"{self.name} = {print_expr(self.expr)}"


@dataclass(frozen=True)
class AuxIndex:
    kind: str       # "index" or "count"
    name: str
    keyed_on: str
    owner: str
    expr: A.Expr    # from-scratch definition (a bucket-map comprehension)

    @property
    def decl(self) -> A.InvDecl:
        return A.InvDecl(self.name, self.expr)


@dataclass
class MaintenanceCode:
    """Statements per (operand, change kind), run after the operand changed."""

    param: str = "y"
    blocks: dict = field(default_factory=dict)
    aux: tuple = ()
    applied: list = field(default_factory=list)  # (invariant, form, kind, operand, rule id)

    def add(self, operand: str, kind: str, stmts) -> None:
        key = (operand, kind)
        self.blocks[key] = self.blocks.get(key, ()) + tuple(stmts)

    def merge(self, other: "MaintenanceCode") -> "MaintenanceCode":
        for (operand, kind), stmts in other.blocks.items():
            self.add(operand, kind, stmts)
        self.aux = self.aux + tuple(a for a in other.aux if a not in self.aux)
        self.applied.extend(other.applied)
        return self

    def on_blocks(self) -> list:
        return [A.OnBlock(kind, operand, self.param, stmts)
                for (operand, kind), stmts in self.blocks.items() if stmts]

    def statements(self):
        for stmts in self.blocks.values():
            yield from _walk_stmts(stmts)

    def __str__(self) -> str:
        return "\n".join(print_decl(b) for b in self.on_blocks())


def _walk_stmts(stmts):
    for s in stmts:
        yield s
        if isinstance(s, A.IfStmt):
            yield from _walk_stmts(s.body + s.orelse)
        elif isinstance(s, A.ForStmt):
            yield from _walk_stmts(s.body)


class Deriver:
    """Carries naming state so derived identifiers never collide with the program."""

    def __init__(self, program: A.Program | None = None, taken=()):
        taken = set(taken) | (identifiers(program) if program is not None else set())
        self.supply = NameSupply(taken, "v")
        self.param = self.supply.named("y")
        self.loop = self.supply.named("e")
        self._aux = {}
        self._emitted = set()
        # ranks are shared across declarations so an invariant used as an
        # operand of a later one still ranks below it
        self._ranks = {}

    # -- chain rule --
    def decompose(self, decl: A.InvDecl) -> list:
        chain = []
        ranks = self._ranks

        def flat(e, name=None):
            if isinstance(e, A.Var) and name is None:
                return e.name
            if isinstance(e, A.SetOp):
                if isinstance(e.left, A.Var) and e.left == e.right:
                    raise DerivationError("duplicate operand variable in elementary expression")
                node = A.SetOp(e.op, A.Var(flat(e.left)), A.Var(flat(e.right)))
            elif isinstance(e, A.Comp) and e.key is None:
                node = A.Comp(e.image, e.var, A.Var(flat(e.source)), e.cond)
            elif isinstance(e, A.Join) and e.key is None:
                if isinstance(e.left, A.Var) and e.left == e.right:
                    raise DerivationError("duplicate operand variable in elementary expression")
                node = A.Join(e.image, e.left_vars, A.Var(flat(e.left)),
                              e.right_vars, A.Var(flat(e.right)))
            elif isinstance(e, A.Agg):
                node = A.Agg(e.kind, A.Var(flat(e.expr)))
            elif isinstance(e, A.Var):
                node = e
            else:
                raise DerivationError(
                    f"cannot maintain {type(e).__name__} expression {print_expr(e)}")
            target = name or self.supply.next()
            ops = [o for o in Invariant(target, node, 0).operands]
            rank = 1 + max((ranks.get(o, 0) for o in ops), default=0)
            ranks[target] = rank
            chain.append(Invariant(target, node, rank))
            return target

        flat(decl.expr, decl.name)
        return chain

    # -- auxiliaries --
    def _index(self, rel: str, col: int, owner: str) -> AuxIndex:
        key = ("index", rel, col)
        if key not in self._aux:
            name = self.supply.named(f"{rel}_by_{col}")
            e = A.Var(self.loop)
            expr = A.Comp(e, self.loop, A.Var(rel), None, A.Proj(e, col))
            self._aux[key] = AuxIndex("index", name, f"{rel} column {col}", owner, expr)
        return self._aux[key]

    def _counts(self, inv: Invariant) -> AuxIndex:
        key = ("count", inv.name)
        if key not in self._aux:
            name = self.supply.named(f"cnt_{inv.name}")
            e = inv.expr
            if isinstance(e, A.Comp):
                expr = A.Comp(A.Var(e.var), e.var, e.source, e.cond, e.image)
                keyed = f"image of {e.source.name}"
            else:
                witness = A.Tuple((_pattern(e.left_vars), _pattern(e.right_vars)))
                expr = A.Join(witness, e.left_vars, e.left, e.right_vars, e.right, e.image)
                keyed = f"join result of {e.left.name}, {e.right.name}"
            self._aux[key] = AuxIndex("count", name, keyed, inv.name, expr)
        return self._aux[key]

    def introduce_aux(self, inv: Invariant):
        """Auxiliary maps for ``inv`` plus the code keeping join indexes current."""
        code = MaintenanceCode(self.param)
        form = inv.form
        if form == "image":
            cnt = self._counts(inv)
            code.aux = (cnt.name,)
            return [cnt], code
        if form == "join":
            e = inv.expr
            left_ix, right_ix, cnt = self._join_aux(inv)
            y = A.Var(self.param)
            for ix, rel in ((left_ix, e.left.name), (right_ix, e.right.name)):
                # an index shared by several joins is maintained once
                if ix.name in self._emitted:
                    continue
                self._emitted.add(ix.name)
                col = ix.expr.key.index
                code.add(rel, "add", [A.MapInc(ix.name, A.Proj(y, col), y)])
                code.add(rel, "del", [A.MapDec(ix.name, A.Proj(y, col), y)])
            code.aux = (left_ix.name, right_ix.name, cnt.name)
            return [left_ix, right_ix, cnt], code
        return [], code

    def _join_aux(self, inv: Invariant):
        e = inv.expr
        li = e.left_vars.index(e.shared) + 1
        ri = e.right_vars.index(e.shared) + 1
        return (self._index(e.left.name, li, inv.name),
                self._index(e.right.name, ri, inv.name),
                self._counts(inv))

    # -- rule base --
    def gen_maintenance(self, inv: Invariant, operand: str, kind: str) -> MaintenanceCode:
        if kind not in KINDS:
            raise NoRuleError(inv.form, kind, "only add-element and delete-element changes")
        form = inv.form
        if form is None:
            raise NoRuleError(type(inv.expr).__name__, kind, "expression is not elementary")
        if operand not in inv.operands:
            raise DerivationError(f"{operand} is not an operand of {inv.name}")
        code = MaintenanceCode(self.param)
        y = A.Var(self.param)
        u = inv.name
        e = inv.expr
        change = A.AddStmt if kind == "add" else A.DelStmt
        side = "left" if inv.operands.index(operand) == 0 else "right"
        rule_id = f"{form}/{kind}" + (f"/{side}" if len(inv.operands) == 2 else "")

        if form in ("union", "inter", "diff"):
            other = A.Var(inv.operands[1] if side == "left" else inv.operands[0])
            inside = A.Member(y, other)
            if form == "union":
                stmts = [A.IfStmt(A.Not(inside), (change(u, y),))]
            elif form == "inter":
                stmts = [A.IfStmt(inside, (change(u, y),))]
            elif side == "left":
                stmts = [A.IfStmt(A.Not(inside), (change(u, y),))]
            else:
                # a change to the subtracted operand flips membership in u
                flipped = A.DelStmt if kind == "add" else A.AddStmt
                stmts = [A.IfStmt(inside, (flipped(u, y),))]
        elif form == "copy":
            stmts = [change(u, y)]
        elif form == "filter":
            body = (change(u, y),)
            stmts = list(body) if e.cond is None else [
                A.IfStmt(A.substitute(e.cond, {e.var: y}), body)]
        elif form == "image":
            cnt = self._counts(inv).name
            img = A.substitute(e.image, {e.var: y})
            absent = A.Not(A.Member(img, A.Var(cnt)))
            if kind == "add":
                body = (A.IfStmt(absent, (A.AddStmt(u, img),)), A.MapInc(cnt, img, y))
            else:
                body = (A.MapDec(cnt, img, y), A.IfStmt(absent, (A.DelStmt(u, img),)))
            stmts = list(body) if e.cond is None else [
                A.IfStmt(A.substitute(e.cond, {e.var: y}), body)]
            code.aux = (cnt,)
        elif form == "join":
            left_ix, right_ix, cnt_ix = self._join_aux(inv)
            cnt = cnt_ix.name
            w = A.Var(self.loop)
            if side == "left":
                mine, theirs, probe = e.left_vars, e.right_vars, right_ix
                col = e.left_vars.index(e.shared) + 1
                witness = A.Tuple((y, w))
            else:
                mine, theirs, probe = e.right_vars, e.left_vars, left_ix
                col = e.right_vars.index(e.shared) + 1
                witness = A.Tuple((w, y))
            binding = {v: A.Proj(w, i + 1) for i, v in enumerate(theirs)}
            binding.update({v: A.Proj(y, i + 1) for i, v in enumerate(mine)})
            img = A.substitute(e.image, binding)
            absent = A.Not(A.Member(img, A.Var(cnt)))
            if kind == "add":
                body = (A.IfStmt(absent, (A.AddStmt(u, img),)), A.MapInc(cnt, img, witness))
            else:
                body = (A.MapDec(cnt, img, witness), A.IfStmt(absent, (A.DelStmt(u, img),)))
            stmts = [A.ForStmt(self.loop, A.MapGet(A.Var(probe.name), A.Proj(y, col)), body)]
            code.aux = (probe.name, cnt)
        elif form == "sum":
            op = "+" if kind == "add" else "-"
            stmts = [A.Assign(u, A.BinOp(op, A.Var(u), y))]
        elif form == "count":
            op = "+" if kind == "add" else "-"
            stmts = [A.Assign(u, A.BinOp(op, A.Var(u), A.Int(1)))]
        else:
            raise NoRuleError(form, kind)
        code.add(operand, kind, stmts)
        code.applied.append((inv.name, form, kind, operand, rule_id))
        return code

    def maintain(self, inv: Invariant) -> MaintenanceCode:
        """All maintenance for ``inv``: aux indexes first, then per-operand rules."""
        aux, code = self.introduce_aux(inv)
        for operand in inv.operands:
            for kind in KINDS:
                code.merge(self.gen_maintenance(inv, operand, kind))
        return code

    @property
    def auxiliaries(self) -> list:
        return list(self._aux.values())


def _pattern(names):
    if len(names) == 1:
        return A.Var(names[0])
    return A.Tuple(tuple(A.Var(n) for n in names))


# -- module-level conveniences ----------------------------------------------


def decompose(decl: A.InvDecl, program: A.Program | None = None) -> list:
    return Deriver(program, taken={decl.name}).decompose(decl)


def gen_maintenance(inv: Invariant, op, program: A.Program | None = None) -> MaintenanceCode:
    """Maintenance of ``inv`` under ``op`` (an ``UpdateOp`` or ``(kind, operand)``)."""
    kind, operand = (op.kind, op.target) if isinstance(op, A.UpdateOp) else op
    d = Deriver(program, taken=_inv_names(inv))
    return d.gen_maintenance(inv, operand, kind)


def introduce_aux(inv: Invariant, program: A.Program | None = None):
    return Deriver(program, taken=_inv_names(inv)).introduce_aux(inv)


def _inv_names(inv):
    return identifiers(A.Program((inv.decl,)))


# -- representation planning ------------------------------------------------


@dataclass(frozen=True)
class ReprChoice:
    variable: str
    choice: str
    why: str


HASH_SET = "hash set"
BUCKET_MAP = "association map of buckets"
SEQUENCE = "sequence alongside set"
SCALAR = "scalar"


@dataclass
class ReprPlan:
    choices: dict = field(default_factory=dict)

    def __getitem__(self, name) -> ReprChoice:
        return self.choices[name]

    def __contains__(self, name) -> bool:
        return name in self.choices

    def lines(self) -> list:
        return [f"{c.variable}: {c.choice} ({c.why})" for c in self.choices.values()]

    def as_json(self) -> list:
        return [{"variable": c.variable, "choice": c.choice, "why": c.why}
                for c in self.choices.values()]


def plan_representations(p: A.Program, codes) -> ReprPlan:
    """Choose a representation per variable from how maintenance code uses it."""
    if isinstance(codes, MaintenanceCode):
        codes = [codes]
    member, iterated, keyed, written, assigned = set(), set(), set(), set(), set()
    maps = set()
    for code in codes:
        for s in code.statements():
            exprs = []
            if isinstance(s, (A.AddStmt, A.DelStmt)):
                written.add(s.target)
                exprs.append(s.elem)
            elif isinstance(s, A.Assign):
                assigned.add(s.target)
                exprs.append(s.value)
            elif isinstance(s, (A.MapInc, A.MapDec)):
                maps.add(s.map)
                exprs += [s.key, s.value]
            elif isinstance(s, A.IfStmt):
                exprs.append(s.cond)
            elif isinstance(s, A.ForStmt):
                exprs.append(s.source)
                if isinstance(s.source, A.Var):
                    iterated.add(s.source.name)
            for e in exprs:
                for n in A.walk(e):
                    if isinstance(n, A.Member) and isinstance(n.container, A.Var):
                        member.add(n.container.name)
                    elif isinstance(n, A.MapGet) and isinstance(n.map, A.Var):
                        keyed.add(n.map.name)
    maps |= keyed
    plan = ReprPlan()
    order = list(p.set_names) + [d.name for d in p.invariants]
    seen = set(order)
    for code in codes:
        for name in list(code.aux) + [t for (t, _k) in code.blocks]:
            if name not in seen:
                seen.add(name)
                order.append(name)
    for name in sorted((member | iterated | maps | written | assigned) - seen):
        order.append(name)
    for name in order:
        if name in maps:
            plan.choices[name] = ReprChoice(name, BUCKET_MAP, "keyed access to buckets by key")
        elif name in member:
            plan.choices[name] = ReprChoice(name, HASH_SET, "membership-tested in a guard")
        elif name in iterated:
            plan.choices[name] = ReprChoice(name, SEQUENCE, "iterated only")
        elif name in assigned:
            plan.choices[name] = ReprChoice(name, SCALAR, "aggregate updated by assignment")
        elif name in written:
            plan.choices[name] = ReprChoice(name, HASH_SET, "target of strict element add/delete")
        elif name in {t for c in codes for (t, _k) in c.blocks}:
            plan.choices[name] = ReprChoice(name, HASH_SET, "changed element-wise by updates")
    return plan


# -- whole-program derivation -----------------------------------------------


@dataclass
class SetDerivation:
    source: A.Program
    chain: list
    code: MaintenanceCode
    auxiliaries: list
    plan: ReprPlan
    program: A.Program

    @property
    def invariants(self) -> list:
        return self.chain

    def report_text(self) -> str:
        out = ["decomposition:"]
        for inv in self.chain:
            out.append(f"  [{inv.rank}] {inv}")
        out.append("rules:")
        for name, form, kind, operand, rule_id in self.code.applied:
            out.append(f"  {name} <- {kind}({operand}): {rule_id}")
        out.append("auxiliaries:")
        if not self.auxiliaries:
            out.append("  (none)")
        for a in self.auxiliaries:
            out.append(f"  {a.name}: {a.kind} map on {a.keyed_on} (for {a.owner}) = {print_expr(a.expr)}")
        out.append("representation plan:")
        out += [f"  {line}" for line in self.plan.lines()]
        out.append("derived program:")
        out += [f"  {line}" if line else "" for line in print_program(self.program).splitlines()]
        return "\n".join(out) + "\n"

    def report_json(self) -> dict:
        return {
            "schema": 1,
            "kind": "set-derivation",
            "decomposition": [{"name": i.name, "expr": print_expr(i.expr), "rank": i.rank,
                               "form": i.form} for i in self.chain],
            "rules": [{"invariant": n, "form": f, "update": k, "operand": o, "rule": r}
                      for n, f, k, o, r in self.code.applied],
            "auxiliaries": [{"name": a.name, "kind": a.kind, "keyed_on": a.keyed_on,
                             "owner": a.owner, "expr": print_expr(a.expr)}
                            for a in self.auxiliaries],
            "plan": self.plan.as_json(),
            "program": print_program(self.program),
        }


def derive(p: A.Program) -> SetDerivation:
    """Decompose every invariant of ``p`` and generate its maintenance code."""
    d = Deriver(p)
    chain = []
    for decl in p.invariants:
        chain += d.decompose(decl)
    codes = [d.maintain(inv) for inv in chain]
    aux = d.auxiliaries
    code = _schedule(chain, codes, d.param, {a.name for a in aux if a.kind == "index"})
    decls = []
    emitted_chain = False
    for decl in p.decls:
        if isinstance(decl, A.InvDecl):
            if not emitted_chain:
                decls += [inv.decl for inv in chain] + [a.decl for a in aux]
                emitted_chain = True
        elif not isinstance(decl, A.OnBlock):
            decls.append(decl)
    decls += code.on_blocks()
    program = A.Program(tuple(decls))
    plan = plan_representations(program, [code])
    return SetDerivation(p, chain, code, aux, plan, program)


def _schedule(chain, codes, param, indexes) -> MaintenanceCode:
    """Merge per-invariant code so that each change runs safely when one
    source reaches an invariant along two paths.

    Within one (operand, kind) block, index upkeep comes first and the rules
    follow in decreasing rank: an invariant reacts to a change before any of
    its lower-ranked operands do, so it sees those operands unchanged, and the
    cascade from its own changes only reaches invariants that already
    reacted.
    """
    out = MaintenanceCode(param)
    for c in codes:
        for key in c.blocks:
            out.blocks.setdefault(key, ())
    def upkeep(st):
        return isinstance(st, (A.MapInc, A.MapDec)) and st.map in indexes

    for c in codes:
        for key, stmts in c.blocks.items():
            out.add(*key, [st for st in stmts if upkeep(st)])
    for i in sorted(range(len(chain)), key=lambda i: -chain[i].rank):
        for key, stmts in codes[i].blocks.items():
            out.add(*key, [st for st in stmts if not upkeep(st)])
    for c in codes:
        out.aux = out.aux + tuple(a for a in c.aux if a not in out.aux)
        out.applied.extend(c.applied)
    return out


def report_json_text(d: SetDerivation) -> str:
    return json.dumps(d.report_json(), indent=2) + "\n"
