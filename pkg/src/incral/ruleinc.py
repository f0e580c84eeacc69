"""Positive Datalog as fixed-point loops over sets of tuples.

Rules compile to a naive fixpoint (re-run every rule body until nothing new
appears) and, incrementally, to a semi-naive worklist where each newly
inferred fact is joined only against indexed counterparts. The semi-naive
form is also rendered as a derived-code program (index invariants plus
``on add`` blocks) that the reference interpreter can run.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .corelang import ast as A
from .corelang.check import check
from .corelang.syntax import parse, parse_facts, print_atom, print_decl, print_program, print_stmt
from .corelang.values import VSet, format_value, sort_key
from .interp.cost import CostReport
from .interp.machine import EvalError, StrictChangeError


class RuleError(ValueError):
    pass


# -- rule sets -------------------------------------------------------------------


@dataclass(frozen=True)
class RuleSet:
    rules: tuple  # Rules with a body
    seeds: tuple = ()  # ground facts written in the program

    @classmethod
    def from_program(cls, p: A.Program | str) -> "RuleSet":
        if isinstance(p, str):
            p = parse(p)
        rule_diags = [d for d in check(A.Program(tuple(p.rules)))]
        if rule_diags:
            raise RuleError("; ".join(f"{d.where}: {d.message}" for d in rule_diags))
        rules = tuple(r for r in p.rules if not r.is_fact)
        seeds = tuple(r.head for r in p.rules if r.is_fact)
        for a in seeds:
            if not all(isinstance(x, A.Int) for x in a.args):
                raise RuleError(f"fact {print_atom(a)} must be ground")
        return cls(rules, seeds)

    @property
    def idb(self) -> list:
        return _unique(r.head.pred for r in self.rules)

    @property
    def edb(self) -> list:
        heads = set(self.idb)
        preds = [a.pred for r in self.rules for a in r.body] + [a.pred for a in self.seeds]
        return [q for q in _unique(preds) if q not in heads]

    @property
    def predicates(self) -> list:
        return _unique(self.edb + self.idb)

    @property
    def arity(self) -> dict:
        out = {}
        for r in self.rules:
            for a in (r.head,) + r.body:
                out.setdefault(a.pred, len(a.args))
        for a in self.seeds:
            out.setdefault(a.pred, len(a.args))
        return out

    def seed_facts(self) -> dict:
        out = {}
        for a in self.seeds:
            out.setdefault(a.pred, VSet()).add(tuple(x.value for x in a.args))
        return out


def _unique(xs):
    seen, out = set(), []
    for x in xs:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


# -- join plans ------------------------------------------------------------------


@dataclass(frozen=True)
class Scan:
    """One body atom: look up ``pred`` by the bound columns, then filter and bind.

    ``key`` holds (column, term) pairs known before the scan; ``checks`` are
    (column, term) pairs compared after it (repeated variables within the
    atom); ``binds`` are (column, var) first occurrences.
    """

    atom: A.Atom
    position: int
    key: tuple
    checks: tuple
    binds: tuple

    @property
    def key_cols(self) -> tuple:
        return tuple(c for c, _ in self.key)


@dataclass(frozen=True)
class Plan:
    rule: A.Rule
    index: int  # rule number, 1-based
    delta: int | None  # body position bound to the delta fact, None for a full scan
    scans: tuple


def _scan(atom, position, bound):
    key, checks, binds, local = [], [], [], set()
    for col, t in enumerate(atom.args):
        if isinstance(t, A.Int) or t.name in bound:
            key.append((col, t))
        elif t.name in local:
            checks.append((col, t))
        else:
            binds.append((col, t.name))
            local.add(t.name)
    return Scan(atom, position, tuple(key), tuple(checks), tuple(binds)), bound | local


def make_plan(rule: A.Rule, index: int, delta: int | None) -> Plan:
    order = list(range(len(rule.body)))
    if delta is not None:
        order.remove(delta)
        order.insert(0, delta)
    bound, scans = frozenset(), []
    for i, pos in enumerate(order):
        s, bound = _scan(rule.body[pos], pos, bound)
        if i == 0 and delta is not None:
            # the delta fact is given, so all of its columns are checks or binds
            s = Scan(s.atom, pos, (), tuple((c, t) for c, t in s.key) + s.checks, s.binds)
        scans.append(s)
    return Plan(rule, index, delta, tuple(scans))


# -- fixpoint programs -----------------------------------------------------------


@dataclass
class FixpointProgram:
    rules: RuleSet
    mode: str  # "naive" | "seminaive"
    plans: dict = field(default_factory=dict)  # pred -> [Plan] (delta plans), or None -> [Plan]

    @property
    def indexes(self) -> list:
        """(pred, columns) pairs the plans look up by."""
        out = []
        for plans in self.plans.values():
            for pl in plans:
                for s in pl.scans:
                    if s.key and (s.atom.pred, s.key_cols) not in out:
                        out.append((s.atom.pred, s.key_cols))
        return out

    def to_text(self) -> str:
        return render_naive(self) if self.mode == "naive" else print_program(self.derived_program())

    def derived_program(self) -> A.Program:
        if self.mode != "seminaive":
            raise RuleError("only the semi-naive form is a derived-code program")
        return render_seminaive(self)

    def as_dict(self) -> dict:
        return {
            "schema": 1,
            "mode": self.mode,
            "edb": self.rules.edb,
            "idb": self.rules.idb,
            "indexes": [f"{p}_by_{'_'.join(str(c + 1) for c in cols)}" for p, cols in self.indexes],
            "program": self.to_text(),
        }


def compile_fixpoint(rs: RuleSet | A.Program | str) -> FixpointProgram:
    if not isinstance(rs, RuleSet):
        rs = RuleSet.from_program(rs)
    plans = [make_plan(r, i, None) for i, r in enumerate(rs.rules, 1)]
    return FixpointProgram(rs, "naive", {None: plans})


def seminaive(fp: FixpointProgram) -> FixpointProgram:
    rs = fp.rules
    plans = {}
    for i, r in enumerate(rs.rules, 1):
        for pos, a in enumerate(r.body):
            plans.setdefault(a.pred, []).append(make_plan(r, i, pos))
    return FixpointProgram(rs, "seminaive", plans)


# -- evaluation -----------------------------------------------------------------


@dataclass
class EvalStats:
    instantiations: int = 0
    facts_derived: int = 0
    iterations: int = 0
    cost: CostReport = field(default_factory=CostReport)

    def as_dict(self) -> dict:
        return {
            "instantiations": self.instantiations,
            "facts_derived": self.facts_derived,
            "iterations": self.iterations,
            "cost": self.cost.as_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


class RuleState:
    """Facts per predicate plus the lookup indexes the plans need."""

    def __init__(self, fp: FixpointProgram, order: str = "fifo"):
        if order not in ("fifo", "lifo"):
            raise ValueError("order must be fifo or lifo")
        self.fp = fp
        self.order = order
        self.arity = fp.rules.arity
        # known: every fact inferred so far; facts: those already joined
        # against (in semi-naive mode a fact waits in the worklist between)
        self.known = {q: VSet() for q in fp.rules.predicates}
        self.facts = {q: VSet() for q in fp.rules.predicates}
        self.index = {(q, cols): {} for q, cols in fp.indexes}
        self._by_pred = {}
        for q, cols in self.index:
            self._by_pred.setdefault(q, []).append(cols)

    def idb(self) -> dict:
        return {q: self.facts[q] for q in self.fp.rules.idb}

    def edb(self) -> dict:
        return {q: self.facts[q] for q in self.fp.rules.edb}

    def _store(self, pred, t, cost):
        self._know(pred, t, cost)
        self._activate(pred, t, cost)

    def _know(self, pred, t, cost):
        self.known.setdefault(pred, VSet()).add(t)
        cost.set_add += 1

    def _activate(self, pred, t, cost):
        self.facts.setdefault(pred, VSet()).add(t)
        for cols in self._by_pred.get(pred, ()):
            key = tuple(t[c] for c in cols)
            self.index[(pred, cols)].setdefault(key, []).append(t)
            cost.map_put += 1

    def _candidates(self, scan, env, cost):
        if not scan.key:
            return self.facts.get(scan.atom.pred, ())
        key = tuple(t.value if isinstance(t, A.Int) else env[t.name] for _, t in scan.key)
        cost.map_get += 1
        return self.index[(scan.atom.pred, scan.key_cols)].get(key, ())

    def _matches(self, plan, start, env, cost, exclude=None):
        """Yield environments for the scans of ``plan`` from ``start`` on."""
        if start == len(plan.scans):
            yield env
            return
        scan = plan.scans[start]
        for t in list(self._candidates(scan, env, cost)):
            cost.iter_step += 1
            if exclude is not None and scan.position < exclude[0] and t == exclude[1] \
                    and scan.atom.pred == exclude[2]:
                continue
            env2 = _bind(scan, t, env, cost)
            if env2 is not None:
                yield from self._matches(plan, start + 1, env2, cost, exclude)

    def check_fact(self, pred, t):
        n = self.arity.get(pred)
        if not isinstance(t, tuple) or (n is not None and len(t) != n):
            raise EvalError(f"arity mismatch: {pred}{format_value(t)} but {pred} has arity {n}")


def _bind(scan, t, env, cost):
    env = dict(env)
    for col, var in scan.binds:
        env[var] = t[col]
    for col, term in scan.checks:
        cost.compare += 1
        want = term.value if isinstance(term, A.Int) else env[term.name]
        if t[col] != want:
            return None
    return env


def _head(rule, env):
    return tuple(x.value if isinstance(x, A.Int) else env[x.name] for x in rule.head.args)


def evaluate_state(fp: FixpointProgram, facts: dict | None = None, order: str = "fifo"):
    """Least fixpoint of ``fp`` over extensional ``facts``; returns ``(RuleState, EvalStats)``."""
    st = RuleState(fp, order)
    stats = EvalStats()
    given = {q: VSet(ts) for q, ts in fp.rules.seed_facts().items()}
    for q, ts in (facts or {}).items():
        if q in fp.rules.idb:
            raise RuleError(f"{q} is derived by rules and cannot be given as facts")
        for t in ts:
            st.check_fact(q, t)
            given.setdefault(q, VSet()).add(t)
    if fp.mode == "naive":
        for q, ts in given.items():
            for t in ts:
                if t not in st.known.get(q, ()):
                    st._store(q, t, stats.cost)
        _naive(st, stats)
    else:
        work = deque()
        for q, ts in given.items():
            for t in ts:
                if t not in st.known.get(q, ()):
                    st._know(q, t, stats.cost)
                    work.append((q, t))
        _propagate(st, work, stats)
    stats.facts_derived = sum(len(st.facts[q]) for q in fp.rules.idb)
    return st, stats


def eval_rules(fp: FixpointProgram, facts: dict | None = None, order: str = "fifo"):
    """Returns ``(intensional facts, EvalStats)``."""
    st, stats = evaluate_state(fp, facts, order)
    return st.idb(), stats


def _naive(st: RuleState, stats: EvalStats):
    plans = st.fp.plans[None]
    while True:
        stats.iterations += 1
        new = []
        seen = set()
        for pl in plans:
            for env in st._matches(pl, 0, {}, stats.cost):
                stats.instantiations += 1
                h = _head(pl.rule, env)
                q = pl.rule.head.pred
                stats.cost.membership += 1
                if h not in st.facts[q] and (q, h) not in seen:
                    seen.add((q, h))
                    new.append((q, h))
        if not new:
            return
        for q, h in new:
            st._store(q, h, stats.cost)


def _propagate(st: RuleState, work: deque, stats: EvalStats):
    plans = st.fp.plans
    pop = work.popleft if st.order == "fifo" else work.pop
    while work:
        q, t = pop()
        stats.iterations += 1
        st._activate(q, t, stats.cost)
        for pl in plans.get(q, ()):
            first = pl.scans[0]
            env = _bind(first, t, {}, stats.cost)
            if env is None:
                continue
            # an instantiation using t at several positions is counted once:
            # earlier positions may not reuse t itself
            for env2 in st._matches(pl, 1, env, stats.cost, (pl.delta, t, q)):
                stats.instantiations += 1
                h = _head(pl.rule, env2)
                hq = pl.rule.head.pred
                stats.cost.membership += 1
                if h not in st.known[hq]:
                    st._know(hq, h, stats.cost)
                    work.append((hq, h))


def insert_fact(st: RuleState, fact, pred: str | None = None):
    """Add one extensional fact and propagate; returns ``(st, EvalStats)``.

    ``fact`` is ``(pred, tuple)``, text like ``"edge(3, 1)"``, or a tuple
    together with ``pred``.
    """
    if isinstance(fact, str):
        parsed = parse_facts(fact if fact.rstrip().endswith(".") else fact + ".")
        ((pred, ts),) = parsed.items()
        (t,) = list(ts)
    elif pred is None:
        pred, t = fact
    else:
        t = fact
    if pred in st.fp.rules.idb:
        raise RuleError(f"{pred} is derived by rules; only extensional facts can be inserted")
    st.check_fact(pred, t)
    if t in st.known.get(pred, ()):
        raise StrictChangeError(f"{pred}{format_value(t)} already present")
    if st.fp.mode != "seminaive":
        _convert(st)
    stats = EvalStats()
    before = sum(len(st.facts[q]) for q in st.fp.rules.idb)
    st._know(pred, t, stats.cost)
    _propagate(st, deque([(pred, t)]), stats)
    stats.facts_derived = sum(len(st.facts[q]) for q in st.fp.rules.idb) - before
    return st, stats


def _convert(st: RuleState):
    """Switch a naively evaluated state to semi-naive plans and indexes."""
    fresh = RuleState(seminaive(st.fp), st.order)
    scratch = CostReport()
    for q, ts in st.facts.items():
        for t in ts:
            fresh._store(q, t, scratch)
    st.__dict__.update(fresh.__dict__)


# -- rendering -------------------------------------------------------------------


def _index_name(pred, cols):
    return f"{pred}_by_{'_'.join(str(c + 1) for c in cols)}"


def _key_expr(items):
    return items[0] if len(items) == 1 else A.Tuple(tuple(items))


def _term_expr(t, env):
    return A.Int(t.value) if isinstance(t, A.Int) else env[t.name]


def _plan_stmts(pl: Plan, delta_var: str | None, names) -> list:
    """Nested loops for ``pl``; the innermost statement adds the head strictly."""
    env = {}

    def go(i):
        if i == len(pl.scans):
            head = A.Tuple(tuple(_term_expr(x, env) for x in pl.rule.head.args))
            q = pl.rule.head.pred
            return [A.IfStmt(A.Not(A.Member(head, A.Var(q))), (A.AddStmt(q, head),))]
        s = pl.scans[i]
        if i == 0 and delta_var is not None:
            var = delta_var
            conds_from = s.checks
            source = None
        else:
            var = next(names)
            conds_from = s.checks
            if s.key:
                key = _key_expr([_term_expr(t, env) for _, t in s.key])
                source = A.MapGet(A.Var(_index_name(s.atom.pred, s.key_cols)), key)
            else:
                source = A.Var(s.atom.pred)
        conds = []
        for col, t in conds_from:
            want = A.Int(t.value) if isinstance(t, A.Int) else env.get(t.name)
            if want is None:  # repeated variable first bound in this atom
                first = next(c for c, v in s.binds if v == t.name)
                want = A.Proj(A.Var(var), first + 1)
            conds.append(A.BinOp("==", A.Proj(A.Var(var), col + 1), want))
        for col, v in s.binds:
            env[v] = A.Proj(A.Var(var), col + 1)
        body = go(i + 1)
        if conds:
            c = conds[0]
            for more in conds[1:]:
                c = A.BinOp("and", c, more)
            body = [A.IfStmt(c, tuple(body))]
        if source is None:
            return body
        return [A.ForStmt(var, source, tuple(body))]

    return go(0)


def _names(prefix="e"):
    i = 0
    while True:
        i += 1
        yield f"{prefix}{i}"


def _header(fp: FixpointProgram) -> list:
    """Set declarations, seed facts and the index invariants the plans read."""
    rs = fp.rules
    decls = [A.SetDecl(tuple(rs.predicates))] if rs.predicates else []
    decls += [A.Rule(a) for a in rs.seeds]
    for q, cols in fp.indexes:
        key = _key_expr([A.Proj(A.Var("e"), c + 1) for c in cols])
        decls.append(A.InvDecl(_index_name(q, cols), A.Comp(A.Var("e"), "e", A.Var(q), None, key)))
    return decls


def render_seminaive(fp: FixpointProgram) -> A.Program:
    rs = fp.rules
    decls = _header(fp)
    for q in rs.predicates:
        body = []
        for cols in [c for p, c in fp.indexes if p == q]:
            key = _key_expr([A.Proj(A.Var("d"), c + 1) for c in cols])
            body.append(A.MapInc(_index_name(q, cols), key, A.Var("d")))
        for pl in fp.plans.get(q, ()):
            body.extend(_plan_stmts(pl, "d", _names()))
        if body:
            decls.append(A.OnBlock("add", q, "d", tuple(body)))
    return A.Program(tuple(decls))


def render_naive(fp: FixpointProgram) -> str:
    lines = [print_decl(d) for d in _header(fp)]
    lines.append("repeat {")
    for pl in fp.plans.get(None, ()):
        lines.append(f"  # rule {pl.index}: {print_decl(pl.rule)}")
        for s in _plan_stmts(pl, None, _names()):
            lines.extend(print_stmt(s, 1))
    lines.append("} until no fact is added;")
    return "\n".join(lines) + "\n"


def format_idb(idb: dict) -> str:
    lines = []
    for q in sorted(idb):
        items = sorted(idb[q], key=sort_key)
        lines.append(f"{q} = {{{', '.join(format_value(t) for t in items)}}}")
    return "\n".join(lines) + ("\n" if lines else "")
