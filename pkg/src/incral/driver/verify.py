"""Replay seeded update streams and compare maintained values with recomputation."""
from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field

from ..corelang import ast as A
from ..corelang.values import LList, VSet, format_value
from ..interp.machine import EvalError, apply_update, eval_expr, evaluate, init_state, recompute_with_cost
from .. import ruleinc
from .config import Config
from .programs import Derived, FuncBundle, derive_all


@dataclass
class StepVerdict:
    index: int
    part: str
    op: str
    ok: bool
    inc_cost: int = 0
    scratch_cost: int = 0

    def as_dict(self) -> dict:
        return {"step": self.index, "part": self.part, "op": self.op, "ok": self.ok,
                "inc_cost": self.inc_cost, "scratch_cost": self.scratch_cost}


@dataclass
class VerifyReport:
    program: str
    seed: int
    ops: int
    steps: list = field(default_factory=list)
    divergence: dict | None = None
    costs: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.divergence is None and all(s.ok for s in self.steps)

    def record(self, part, op, ok, inc_cost=0, scratch_cost=0) -> StepVerdict:
        v = StepVerdict(len(self.steps) + 1, part, op, ok, inc_cost, scratch_cost)
        self.steps.append(v)
        c = self.costs.setdefault(part, {"steps": 0, "incremental_total": 0,
                                         "incremental_max": 0, "scratch_total": 0})
        c["steps"] += 1
        c["incremental_total"] += inc_cost
        c["incremental_max"] = max(c["incremental_max"], inc_cost)
        c["scratch_total"] += scratch_cost
        return v

    def diverge(self, verdict: StepVerdict, mismatches: dict, snapshot: dict):
        if self.divergence is None:
            self.divergence = {"step": verdict.index, "part": verdict.part, "op": verdict.op,
                               "mismatches": mismatches, "snapshot": snapshot}

    def as_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "verify",
            "program": self.program,
            "seed": self.seed,
            "ops": self.ops,
            "passed": self.passed,
            "costs": self.costs,
            "divergence": self.divergence,
            "steps": [s.as_dict() for s in self.steps],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"

    def to_text(self) -> str:
        lines = [f"verify {self.program}: seed {self.seed}, {self.ops} ops, "
                 f"{len(self.steps)} checks: {'PASS' if self.passed else 'FAIL'}"]
        for part, c in self.costs.items():
            n = max(c["steps"], 1)
            lines.append(
                f"  {part}: {c['steps']} checks, incremental cost total {c['incremental_total']} "
                f"(max {c['incremental_max']}, mean {c['incremental_total'] / n:.2f}), "
                f"from-scratch total {c['scratch_total']}")
        d = self.divergence
        if d:
            lines.append(f"  first divergence at step {d['step']} ({d['part']}): {d['op']}")
            for name, (got, want) in d["mismatches"].items():
                lines.append(f"    {name}: maintained {got}, recomputed {want}")
            lines.append("  state:")
            for name, val in d["snapshot"].items():
                lines.append(f"    {name} = {val}")
        return "\n".join(lines) + "\n"


# -- set programs ------------------------------------------------------------


def element_shapes(p: A.Program) -> dict:
    """Tuple arity of each declared set (0 for plain integers), read from joins."""
    shapes = {n: 0 for n in p.set_names}
    for inv in p.invariants:
        for node in A.walk(inv.expr):
            if isinstance(node, A.Join):
                for side, pattern in ((node.left, node.left_vars), (node.right, node.right_vars)):
                    if isinstance(side, A.Var) and side.name in shapes:
                        shapes[side.name] = len(pattern)
    return shapes


class ElementSpace:
    """Finite universe of candidate elements for one set."""

    def __init__(self, arity: int, universe: int):
        self.arity = arity
        if arity == 0:
            self.width, self.size = universe, universe
        else:
            self.width = max(2, round(universe ** (1 / arity)))
            self.size = self.width ** arity

    def draw(self, rng):
        if self.arity == 0:
            return rng.randrange(self.size)
        return tuple(rng.randrange(self.width) for _ in range(self.arity))

    def all(self):
        if self.arity == 0:
            return range(self.size)
        return itertools.product(range(self.width), repeat=self.arity)

    def absent(self, rng, current):
        if len(current) >= self.size:
            return None
        for _ in range(32):
            x = self.draw(rng)
            if x not in current:
                return x
        rest = [x for x in self.all() if x not in current]
        return rng.choice(rest) if rest else None


def random_base(p: A.Program, size: int, rng, universe: int | None = None) -> dict:
    """Random initial contents with about ``size`` elements per declared set."""
    shapes = element_shapes(p)
    out = {}
    for n, arity in shapes.items():
        space = ElementSpace(arity, universe or max(2 * size, 1))
        s = VSet()
        while len(s) < min(size, space.size):
            s.add(space.draw(rng))
        out[n] = s
    return out


def set_stream(p: A.Program, cfg: Config, rng, state_of):
    """Yield strict ``(kind, target, element)`` changes; ``state_of(name)`` gives
    the current contents so adds come from the complement and deletes from the set."""
    shapes = element_shapes(p)
    spaces = {n: ElementSpace(a, cfg.universe) for n, a in shapes.items()}
    names = list(shapes)
    if not names:
        return
    for _ in range(cfg.ops):
        target = rng.choice(names)
        cur = state_of(target)
        kind = "add" if (not cur or rng.random() < 0.5) else "del"
        if kind == "add":
            x = spaces[target].absent(rng, cur)
            if x is None:
                kind, x = "del", rng.choice(list(cur))
        else:
            x = rng.choice(list(cur))
        yield kind, target, x


def _updates(names):
    return {(k, n): A.UpdateOp(f"{k}_{n}", n, k, ("y",)) for n in names for k in ("add", "del")}


def verify_sets(p: A.Program, derived: A.Program, cfg: Config, report: VerifyReport,
                rng, base: dict | None = None, check: str = "all"):
    """Check every maintained invariant of ``derived`` (and each original
    invariant of ``p``) against recomputation after each strict change."""
    st = init_state(derived, base, cfg.step_limit)
    ops = _updates(p.set_names)
    originals = [(d.name, d.expr) for d in p.invariants]
    maintained = [d for d in derived.invariants]
    for i, (kind, target, x) in enumerate(set_stream(p, cfg, rng, st.value), 1):
        label = f"{kind}({target}, {format_value(x)})"
        try:
            _, cost = apply_update(st, ops[(kind, target)], [x], derived)
        except EvalError as exc:
            v = report.record("sets", label, False)
            report.diverge(v, {"error": (str(exc), "")}, st.snapshot())
            return
        if i % cfg.check_every and i != cfg.ops:
            report.record("sets", label, True, cost.total)
            continue
        mismatches, scratch = {}, 0
        for name, expr in originals:
            want, c = eval_expr(expr, st, step_limit=cfg.step_limit)
            scratch += c.total
            got = st.value(name)
            if got != want:
                mismatches[name] = (format_value(got), format_value(want))
        if check == "all":
            for inv in maintained:
                want, _ = recompute_with_cost(st, inv)
                got = st.value(inv.name)
                if got != want:
                    mismatches[inv.name] = (format_value(got), format_value(want))
        v = report.record("sets", label, not mismatches, cost.total, scratch)
        if mismatches:
            report.diverge(v, mismatches, st.snapshot())
            return


# -- rules --------------------------------------------------------------------


def verify_rules(naive: ruleinc.FixpointProgram, semi: ruleinc.FixpointProgram, cfg: Config,
                 report: VerifyReport, rng, facts: dict | None = None):
    rs = semi.rules
    facts = {q: VSet(ts) for q, ts in (facts or {}).items()}
    st, stats = ruleinc.evaluate_state(semi, facts)
    want, wstats = ruleinc.eval_rules(naive, facts)
    v = report.record("rules", "initial evaluation", st.idb() == want,
                      stats.instantiations, wstats.instantiations)
    if not v.ok:
        report.diverge(v, _rule_mismatch(st.idb(), want), _rule_snapshot(st))
        return
    edb = rs.edb
    if not edb:
        return
    arity = rs.arity
    width = max(2, cfg.universe)
    for i in range(1, cfg.ops + 1):
        q = rng.choice(edb)
        current = st.known[q]
        n = arity[q]
        if len(current) >= width ** n:
            continue
        while True:
            t = tuple(rng.randrange(width) for _ in range(n))
            if t not in current:
                break
        label = f"insert {q}{format_value(t)}"
        st, stats = ruleinc.insert_fact(st, (q, t))
        facts.setdefault(q, VSet()).add(t)
        if i % cfg.check_every and i != cfg.ops:
            report.record("rules", label, True, stats.instantiations)
            continue
        want, wstats = ruleinc.eval_rules(naive, facts)
        got = st.idb()
        v = report.record("rules", label, got == want, stats.instantiations, wstats.instantiations)
        if not v.ok:
            report.diverge(v, _rule_mismatch(got, want), _rule_snapshot(st))
            return


def _rule_mismatch(got, want):
    return {q: (format_value(got.get(q, VSet())), format_value(want.get(q, VSet())))
            for q in sorted(set(got) | set(want)) if got.get(q) != want.get(q)}


def _rule_snapshot(st):
    return {q: format_value(ts) for q, ts in st.facts.items()}


# -- functions ------------------------------------------------------------------


def all_lists(values: int, max_len: int):
    for n in range(max_len + 1):
        for items in itertools.product(range(values), repeat=n):
            yield LList.of(items)


def verify_function(p: A.Program, b: FuncBundle, cfg: Config, report: VerifyReport, rng):
    """Check f'(x, y, f(x)) = f(x ⊕ y) over small exhaustive domains."""
    f, inc = b.func, b.inc
    fprime, _ = b.p1
    prog = A.Program(tuple(p.of_type(A.FuncDef)) + (fprime,))
    part = f"func {f.name}"
    limit = cfg.step_limit

    def call(name, args, program=prog):
        return evaluate(program, (name, list(args)), limit)

    def check(label, got, want, inc_cost, scratch_cost):
        v = report.record(part, label, got == want, inc_cost, scratch_cost)
        if not v.ok:
            report.diverge(v, {label: (format_value(got), format_value(want))}, {})
        return v.ok

    if inc.kind == "int":
        k = inc.step
        for n in range(cfg.int_max + 1):
            r, _ = call(f.name, [n])
            got, c = call(fprime.name, [n, r])
            want, w = call(f.name, [n + k])
            if not check(f"{fprime.name}({n}, {f.name}({n}))", got, want, c.total, w.total):
                return
    elif inc.kind == "cons":
        for xs in all_lists(cfg.list_values, cfg.list_len):
            r, _ = call(f.name, [xs])
            for y in range(cfg.list_values):
                got, c = call(fprime.name, [xs, y, r])
                want, w = call(f.name, [LList(y, xs)])
                if not check(f"{fprime.name}({format_value(xs)}, {y}, r)", got, want, c.total, w.total):
                    return
    else:
        g = inc.change
        extra = len(g.params) - 1
        inputs = range(cfg.int_max + 1) if _int_input(p, f) else all_lists(cfg.list_values, cfg.list_len)
        for x in inputs:
            r, _ = call(f.name, [x])
            for ys in itertools.product(range(cfg.list_values), repeat=extra):
                got, c = call(fprime.name, [x, *ys, r])
                new, _ = call(g.name, [x, *ys])
                want, w = call(f.name, [new])
                if not check(f"{fprime.name}({format_value(x)}, ...)", got, want, c.total, w.total):
                    return

    if b.cached is not None:
        cf = b.cached[0]
        cprog = A.Program(tuple(p.of_type(A.FuncDef)) + ((cf.ext,) if cf.tupled else ()) + (cf.inc,))
        for n in range(cf.valid_from, cfg.int_max + 1):
            old, _ = call(cf.ext.name, [n], cprog)
            got, c = call(cf.inc.name, [n, old], cprog)
            want, w = call(cf.ext.name, [n + cf.step], cprog)
            first = want[0] if cf.tupled else want
            base, _ = call(f.name, [n + cf.step], cprog)
            if not check(f"{cf.inc.name}({n}, {cf.ext.name}({n}))", got, want, c.total, w.total):
                return
            if not check(f"first slot of {cf.ext.name}({n + cf.step})", first, base, 0, 0):
                return
    if b.iterative is not None:
        it = b.iterative
        iprog = A.Program(tuple(p.of_type(A.FuncDef)) + it.functions)
        for n in range(cfg.int_max + 1):
            got, c = call(it.main.name, [n], iprog)
            want, w = call(f.name, [n], iprog)
            if not check(f"{it.main.name}({n})", got, want, c.total, w.total):
                return


def _int_input(p, f):
    return not any(isinstance(e, (A.Head, A.Tail, A.IsEmpty)) for e in A.walk(f.body))


# -- entry point --------------------------------------------------------------


def verify_equiv(p: A.Program, derived=None, cfg: Config | None = None,
                 program_id: str = "<program>", facts: dict | None = None) -> VerifyReport:
    """Replay a seeded strict-change stream against every derivation of ``p``.

    ``derived`` is a :class:`Derived` bundle (computed when absent) or a
    derived set program to check in its place.
    """
    cfg = cfg or Config()
    if derived is None:
        derived = derive_all(p, cfg.cache_depth)
    elif isinstance(derived, A.Program):
        derived = Derived(p, sets=_Wrapped(derived))
    report = VerifyReport(program_id, cfg.seed, cfg.ops)
    rng = random.Random(cfg.seed)
    if derived.sets is not None:
        verify_sets(p, derived.sets.program, cfg, report, rng)
    if derived.rules is not None and report.passed:
        verify_rules(derived.naive, derived.rules, cfg, report, rng, facts)
    for b in derived.functions.values():
        if report.passed:
            verify_function(p, b, cfg, report, rng)
    return report


@dataclass
class _Wrapped:
    program: A.Program

