"""Charged-cost tables: from-scratch versus derived, per input size."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from ..corelang import ast as A
from ..interp.machine import StepLimitExceeded, apply_update, eval_expr, evaluate, init_state
from .. import ruleinc
from .config import Config
from .programs import Derived, derive_all
from .verify import ElementSpace, _updates, random_base, set_stream


@dataclass
class BenchRow:
    size: int
    naive: int | None
    derived: int | None
    note: str = ""

    def as_dict(self) -> dict:
        return {"size": self.size, "naive": self.naive, "derived": self.derived, "note": self.note}


@dataclass
class BenchTable:
    title: str
    metric: str
    rows: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"title": self.title, "metric": self.metric, "rows": [r.as_dict() for r in self.rows]}

    def to_text(self) -> str:
        lines = [f"{self.title} ({self.metric})",
                 f"{'size':>8}  {'naive':>14}  {'derived':>10}  note"]
        for r in self.rows:
            naive = "limit" if r.naive is None else str(r.naive)
            der = "limit" if r.derived is None else str(r.derived)
            lines.append(f"{r.size:>8}  {naive:>14}  {der:>10}  {r.note}".rstrip())
        return "\n".join(lines) + "\n"


def tables_json(tables) -> str:
    return json.dumps({"schema": 1, "kind": "bench", "tables": [t.as_dict() for t in tables]},
                      indent=2) + "\n"


def _cost_or_none(fn):
    try:
        return fn(), ""
    except StepLimitExceeded:
        return None, "step limit exceeded"


def bench_function(p: A.Program, b, sizes, cfg: Config) -> BenchTable:
    """Total charged cost of ``f(n)`` naive versus its iterative form."""
    f = b.func
    it = b.iterative
    iprog = A.Program(tuple(p.of_type(A.FuncDef)) + (it.functions if it else ()))
    t = BenchTable(f"{f.name}: naive recursion vs iterative", "total charged units")
    for n in sizes:
        naive, note1 = _cost_or_none(lambda: evaluate(p, (f.name, [n]), cfg.step_limit)[1].total)
        der, note2 = (None, "no iterative form") if it is None else _cost_or_none(
            lambda: evaluate(iprog, (it.main.name, [n]), cfg.step_limit)[1].total)
        t.rows.append(BenchRow(n, naive, der, "; ".join(x for x in (note1, note2) if x)))
    return t


def bench_sets(p: A.Program, derived: A.Program, sizes, cfg: Config) -> BenchTable:
    """Recompute cost of the original invariants versus the largest charged
    cost of one maintained update, at each operand size."""
    t = BenchTable("set invariants: recompute vs maintained update",
                   "recompute units / max units per update")
    ops = _updates(p.set_names)
    for size in sizes:
        rng = random.Random(cfg.seed + size)
        base = random_base(p, size, rng)
        st = init_state(derived, base, cfg.step_limit)
        scratch = 0
        for inv in p.invariants:
            scratch += eval_expr(inv.expr, st, step_limit=cfg.step_limit)[1].total
        worst = 0
        stream_cfg = cfg.with_(ops=min(cfg.ops, 200), universe=max(4 * size, 8))
        for kind, target, x in set_stream(p, stream_cfg, rng, st.value):
            _, c = apply_update(st, ops[(kind, target)], [x], derived)
            worst = max(worst, c.total)
        t.rows.append(BenchRow(size, scratch, worst))
    return t


def random_graph(nodes: int, edges: int, rng) -> set:
    edges = min(edges, nodes * nodes)
    out = set()
    while len(out) < edges:
        out.add((rng.randrange(nodes), rng.randrange(nodes)))
    return out


def bench_rules(naive, semi, sizes, cfg: Config) -> BenchTable:
    """Body instantiations, naive versus semi-naive, on random graphs of
    ``size`` nodes and ``4 * size`` edges for every binary extensional predicate."""
    t = BenchTable("rules: naive vs semi-naive", "body instantiations")
    rs = semi.rules
    for size in sizes:
        rng = random.Random(cfg.seed + size)
        facts = {}
        for q in rs.edb:
            if rs.arity[q] == 2:
                facts[q] = random_graph(size, 4 * size, rng)
            else:
                space = ElementSpace(rs.arity[q], size)
                facts[q] = {space.draw(rng) for _ in range(size)}
        a, sa = ruleinc.eval_rules(naive, facts)
        b, sb = ruleinc.eval_rules(semi, facts)
        note = "" if a == b else "RESULTS DIFFER"
        t.rows.append(BenchRow(size, sa.instantiations, sb.instantiations, note))
    return t


def bench(p: A.Program, derived: Derived | None = None, sizes=(), cfg: Config | None = None,
          func: str | None = None) -> list:
    """Cost tables for every derivation of ``p`` (one function if ``func``)."""
    cfg = cfg or Config()
    sizes = sorted(set(sizes))
    if derived is None:
        derived = derive_all(p, cfg.cache_depth)
    tables = []
    for name, b in derived.functions.items():
        if (func is None or func == name) and b.inc.kind == "int":
            tables.append(bench_function(p, b, sizes, cfg))
    if derived.sets is not None and func is None:
        tables.append(bench_sets(p, derived.sets.program, sizes, cfg))
    if derived.rules is not None and func is None:
        tables.append(bench_rules(derived.naive, derived.rules, sizes, cfg))
    return tables
